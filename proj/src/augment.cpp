#include "egcm/augment.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>

#include "egcm/error.hpp"

namespace egcm {

void MixupConfig::validate() const {
  if (!(alpha > 0.0)) throw InputError("mixup alpha must be positive");
  if (!(beta > 0.0)) throw InputError("mixup beta must be positive");
}

std::string_view to_string(MixPattern p) { return p == MixPattern::kHarmfulHarmful ? "HH" : "HU"; }

Tensor2 MixupBatch::features() const {
  Tensor2 x(entries.size(), dim);
  for (std::size_t i = 0; i < entries.size(); ++i) std::copy(entries[i].features.begin(), entries[i].features.end(), x.row(i).begin());
  return x;
}

std::vector<int> MixupBatch::labels() const {
  std::vector<int> y;
  y.reserve(entries.size());
  for (const auto& e : entries) y.push_back(e.label);
  return y;
}

double sample_beta(double a, Rng& rng) {
  if (!(a > 0.0)) throw std::invalid_argument("Beta parameter must be positive");
  std::gamma_distribution<double> gamma(a, 1.0);
  for (;;) {
    const double x = gamma(rng);
    const double y = gamma(rng);
    const double s = x + y;
    if (s > 0.0) return x / s;
  }
}

int mixed_label(MixPattern pattern, double lambda) {
  if (pattern == MixPattern::kHarmfulHarmful) return kAttack;
  return (lambda > 0.0 && lambda < MixupConfig::kLabelThreshold) ? kAttack : kBenign;
}

std::pair<std::vector<double>, int> mix_pair(std::span<const double> x_i, std::span<const double> x_j, double lambda,
                                             MixPattern pattern) {
  if (x_i.size() != x_j.size()) throw ShapeError("mix_pair: feature dimensions differ");
  std::vector<double> x(x_i.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double lo = std::min(x_i[k], x_j[k]);
    const double hi = std::max(x_i[k], x_j[k]);
    x[k] = std::clamp(lambda * x_i[k] + (1.0 - lambda) * x_j[k], lo, hi);
  }
  return {std::move(x), mixed_label(pattern, lambda)};
}

MixupBatch mp_mixup(const Tensor2& edge_features, std::span<const int> labels, const MixupConfig& cfg, Rng& rng) {
  cfg.validate();
  if (labels.size() != edge_features.rows()) throw ShapeError("mp_mixup: label count does not match edges");
  MixupBatch batch;
  batch.dim = edge_features.cols();
  if (cfg.sigma == 0) return batch;

  std::vector<std::size_t> harmful, unharmful;
  for (std::size_t e = 0; e < labels.size(); ++e) (labels[e] == kAttack ? harmful : unharmful).push_back(e);
  if (harmful.empty()) throw InputError("cannot augment: no minority samples");
  if (unharmful.empty()) throw InputError("cannot augment: no unharmful samples to pair with");

  std::uniform_int_distribution<std::size_t> pick_h(0, harmful.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_u(0, unharmful.size() - 1);
  batch.entries.reserve(2 * cfg.sigma);
  auto emit = [&](std::size_t i, std::size_t j, double lambda, MixPattern pattern) {
    auto [x, y] = mix_pair(edge_features.row(i), edge_features.row(j), lambda, pattern);
    batch.entries.push_back(MixupEntry{std::move(x), y, pattern, lambda, i, j});
  };
  for (std::size_t s = 0; s < cfg.sigma; ++s) {
    const std::size_t i = unharmful[pick_u(rng)];
    const std::size_t j = harmful[pick_h(rng)];
    emit(i, j, sample_beta(cfg.alpha, rng), MixPattern::kHarmfulUnharmful);
  }
  for (std::size_t s = 0; s < cfg.sigma; ++s) {
    const std::size_t i = harmful[pick_h(rng)];
    const std::size_t j = harmful[pick_h(rng)];
    emit(i, j, sample_beta(cfg.beta, rng), MixPattern::kHarmfulHarmful);
  }
  return batch;
}

MixupBatch mp_mixup(const TrafficGraph& g, const MixupConfig& cfg, Rng& rng) {
  std::vector<int> labels = g.labels();
  std::vector<std::size_t> real;
  for (std::size_t e = 0; e < g.num_edges(); ++e)
    if (!g.edge(e).is_virtual) real.push_back(e);
  if (real.size() == g.num_edges()) return mp_mixup(g.edge_features(), labels, cfg, rng);

  Tensor2 feats(real.size(), g.feature_dim());
  std::vector<int> lab;
  for (std::size_t k = 0; k < real.size(); ++k) {
    std::copy(g.edge_features().row(real[k]).begin(), g.edge_features().row(real[k]).end(), feats.row(k).begin());
    lab.push_back(labels[real[k]]);
  }
  MixupBatch b = mp_mixup(feats, lab, cfg, rng);
  for (auto& e : b.entries) {
    e.source_i = real[e.source_i];
    e.source_j = real[e.source_j];
  }
  return b;
}

TrafficGraph add_virtual_edges(const TrafficGraph& g, const MixupBatch& batch) {
  return add_virtual_edges(g, batch.features(), batch.labels());
}

namespace {
std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}
double parse_num(const std::string& s) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw FormatError("mixup batch: bad number '" + s + "'");
  return v;
}
}  // namespace

void save_mixup_batch(std::ostream& out, const MixupBatch& batch) {
  out << "egcm-mixup 1\n" << "dim " << batch.dim << "\ncount " << batch.size() << '\n';
  for (const auto& e : batch.entries) {
    out << to_string(e.pattern) << ' ' << e.label << ' ' << fmt(e.lambda) << ' ' << e.source_i << ' ' << e.source_j;
    for (double x : e.features) out << ' ' << fmt(x);
    out << '\n';
  }
}

MixupBatch load_mixup_batch(std::istream& in) {
  std::string magic, key;
  int version = 0;
  if (!(in >> magic >> version) || magic != "egcm-mixup" || version != 1) throw FormatError("not a mixup batch file");
  MixupBatch b;
  std::size_t count = 0;
  if (!(in >> key >> b.dim) || key != "dim") throw FormatError("mixup batch: missing dim");
  if (!(in >> key >> count) || key != "count") throw FormatError("mixup batch: missing count");
  for (std::size_t n = 0; n < count; ++n) {
    MixupEntry e;
    std::string pattern, lambda;
    if (!(in >> pattern >> e.label >> lambda >> e.source_i >> e.source_j)) throw FormatError("mixup batch: truncated");
    if (pattern == "HH") e.pattern = MixPattern::kHarmfulHarmful;
    else if (pattern == "HU") e.pattern = MixPattern::kHarmfulUnharmful;
    else throw FormatError("mixup batch: unknown pattern " + pattern);
    e.lambda = parse_num(lambda);
    e.features.resize(b.dim);
    for (double& x : e.features) {
      std::string s;
      if (!(in >> s)) throw FormatError("mixup batch: truncated features");
      x = parse_num(s);
    }
    b.entries.push_back(std::move(e));
  }
  return b;
}

}  // namespace egcm
