#include "egcm/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_set>

#include "egcm/error.hpp"
#include "egcm/log.hpp"

namespace egcm {

void ContrastiveConfig::validate() const {
  if (gamma < 1) throw InputError("contrastive gamma must be at least 1");
  if (!(theta >= 0.0)) throw InputError("contrastive theta must be non-negative");
}

namespace {

// k distinct values from [0, n) (Floyd's algorithm), in draw order.
std::vector<std::size_t> distinct_sample(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  std::unordered_set<std::size_t> seen;
  for (std::size_t j = n - k; j < n; ++j) {
    std::uniform_int_distribution<std::size_t> pick(0, j);
    const std::size_t t = pick(rng);
    const std::size_t v = seen.contains(t) ? j : t;
    seen.insert(v);
    out.push_back(v);
  }
  return out;
}

double dot(const double* a, const double* b, std::size_t d) {
  double s = 0.0;
  for (std::size_t i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

ContrastiveSets build_contrastive_sets(const TrafficGraph& g, const ContrastiveConfig& cfg, Rng& rng) {
  cfg.validate();
  std::vector<std::size_t> real_attack, benign, virtual_pos;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& ed = g.edge(e);
    if (ed.is_virtual) {
      if (ed.label == kAttack) virtual_pos.push_back(e);
    } else {
      (ed.label == kAttack ? real_attack : benign).push_back(e);
    }
  }
  if (real_attack.empty()) throw InputError("contrastive: no attack edges to anchor on");
  if (benign.empty()) throw InputError("contrastive: no benign edges to use as negatives");

  // Candidate pool: real attack edges first, so anchor k sits at index k.
  std::vector<std::size_t> pool = real_attack;
  pool.insert(pool.end(), virtual_pos.begin(), virtual_pos.end());
  if (pool.size() < 2) throw InputError("contrastive: the only attack edge has no positive candidate");

  ContrastiveSets sets;
  sets.gamma = cfg.gamma;
  sets.anchors = real_attack;
  const bool with_replacement = benign.size() < cfg.gamma;
  if (with_replacement)
    warn("contrastive: " + std::to_string(benign.size()) + " benign edges for gamma = " + std::to_string(cfg.gamma) +
         "; sampling negatives with replacement");
  std::uniform_int_distribution<std::size_t> pick_pos(0, pool.size() - 2);
  std::uniform_int_distribution<std::size_t> pick_neg(0, benign.size() - 1);
  for (std::size_t k = 0; k < real_attack.size(); ++k) {
    std::size_t r = pick_pos(rng);
    if (r >= k) ++r;  // skip the anchor itself
    sets.positives.push_back(pool[r]);
    if (with_replacement) {
      for (std::size_t j = 0; j < cfg.gamma; ++j) sets.negatives.push_back(benign[pick_neg(rng)]);
    } else {
      for (std::size_t idx : distinct_sample(benign.size(), cfg.gamma, rng)) sets.negatives.push_back(benign[idx]);
    }
  }
  return sets;
}

double infonce_loss(const Tensor2& anchors, const Tensor2& positives, std::span<const Tensor2> negatives) {
  const std::size_t n = anchors.rows();
  if (n == 0) throw std::invalid_argument("InfoNCE over zero anchors");
  if (!positives.same_shape(anchors) || negatives.size() != n) throw ShapeError("InfoNCE: inconsistent inputs");
  const std::size_t d = anchors.cols();
  double total = 0.0;
  std::vector<double> s;
  for (std::size_t a = 0; a < n; ++a) {
    if (negatives[a].cols() != d) throw ShapeError("InfoNCE: negative embedding width");
    const double* za = anchors.row(a).data();
    s.assign(1, dot(positives.row(a).data(), za, d));
    for (std::size_t j = 0; j < negatives[a].rows(); ++j) s.push_back(dot(negatives[a].row(j).data(), za, d));
    const double mx = *std::max_element(s.begin(), s.end());
    double acc = 0.0;
    for (double v : s) acc += std::exp(v - mx);
    total += (mx + std::log(acc)) - s[0];
  }
  return total / static_cast<double>(n);
}

ad::Var infonce_on_tape(ad::Tape& tape, ad::Var edge_embeddings, const ContrastiveSets& sets) {
  const Tensor2& z = tape.value(edge_embeddings);
  const std::size_t n = sets.anchors.size();
  if (n == 0) throw std::invalid_argument("InfoNCE over zero anchors");
  if (sets.positives.size() != n || sets.negatives.size() != n * sets.gamma)
    throw ShapeError("InfoNCE: inconsistent contrastive sets");
  const std::size_t d = z.cols();
  const std::size_t k = sets.gamma + 1;

  // Softmax weights over (positive, negatives) per anchor, kept for backward.
  auto weights = std::make_shared<std::vector<double>>(n * k);
  double total = 0.0;
  for (std::size_t a = 0; a < n; ++a) {
    const double* za = z.row(sets.anchors[a]).data();
    double* w = weights->data() + a * k;
    w[0] = dot(z.row(sets.positives[a]).data(), za, d);
    const auto neg = sets.negatives_of(a);
    for (std::size_t j = 0; j < neg.size(); ++j) w[j + 1] = dot(z.row(neg[j]).data(), za, d);
    const double sp = w[0];
    const double mx = *std::max_element(w, w + k);
    double acc = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      w[j] = std::exp(w[j] - mx);
      acc += w[j];
    }
    for (std::size_t j = 0; j < k; ++j) w[j] /= acc;
    total += (mx + std::log(acc)) - sp;
  }
  const ad::Var in[] = {edge_embeddings};
  return tape.record(Tensor2(1, 1, total / static_cast<double>(n)), in,
                     [edge_embeddings, sets, weights, d, k, n](ad::Tape& tp, const Tensor2& g) {
                       const Tensor2& z = tp.value(edge_embeddings);
                       Tensor2& gz = tp.grad_buffer(edge_embeddings);
                       const double scale = g(0, 0) / static_cast<double>(n);
                       for (std::size_t a = 0; a < n; ++a) {
                         const double* w = weights->data() + a * k;
                         const std::size_t ia = sets.anchors[a];
                         const double* za = z.row(ia).data();
                         double* ga = gz.row(ia).data();
                         // d/ds+ = w0 - 1, d/ds-_j = w_j.
                         const double cp = (w[0] - 1.0) * scale;
                         const std::size_t ip = sets.positives[a];
                         const double* zp = z.row(ip).data();
                         double* gp = gz.row(ip).data();
                         for (std::size_t c = 0; c < d; ++c) {
                           ga[c] += cp * zp[c];
                           gp[c] += cp * za[c];
                         }
                         const auto neg = sets.negatives_of(a);
                         for (std::size_t j = 0; j < neg.size(); ++j) {
                           const double cn = w[j + 1] * scale;
                           const double* zn = z.row(neg[j]).data();
                           double* gn = gz.row(neg[j]).data();
                           for (std::size_t c = 0; c < d; ++c) {
                             ga[c] += cn * zn[c];
                             gn[c] += cn * za[c];
                           }
                         }
                       }
                     });
}

}  // namespace egcm
