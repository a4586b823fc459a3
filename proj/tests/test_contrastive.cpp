#include <doctest.h>

#include <set>

#include "egcm/augment.hpp"
#include "egcm/contrastive.hpp"
#include "egcm/gradcheck.hpp"
#include "oracles.hpp"

using namespace egcm;

TEST_CASE("equal similarities give ln(gamma + 1)") {
  const Tensor2 anchors{{1.0, 0.0}, {0.0, 2.0}};
  const Tensor2 positives{{0.5, 7.0}, {3.0, 0.25}};
  std::vector<Tensor2> negatives;
  for (std::size_t a = 0; a < 2; ++a) {
    Tensor2 n(10, 2);
    for (std::size_t j = 0; j < 10; ++j) n.row(j)[0] = positives.row(a)[0], n.row(j)[1] = positives.row(a)[1];
    negatives.push_back(n);
  }
  CHECK(std::abs(infonce_loss(anchors, positives, negatives) - std::log(11.0)) < 1e-10);
}

TEST_CASE("InfoNCE matches the naive oracle, including large scores") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 1 + rng() % 5, d = 1 + rng() % 6, gamma = 1 + rng() % 10;
    const double scale = trial < 20 ? 1.0 : 6.0;
    const Tensor2 a = oracle::random_tensor(n, d, rng, -scale, scale), p = oracle::random_tensor(n, d, rng, -scale, scale);
    std::vector<Tensor2> negs;
    for (std::size_t i = 0; i < n; ++i) negs.push_back(oracle::random_tensor(gamma, d, rng, -scale, scale));
    const double ref = oracle::infonce(a, p, negs);
    CHECK(std::abs(infonce_loss(a, p, negs) - ref) < 1e-10 * std::max(1.0, std::abs(ref)));
  }
  Tensor2 far{{1000.0}};
  CHECK(std::isfinite(infonce_loss(far, Tensor2{{-1000.0}}, std::vector<Tensor2>{Tensor2{{1000.0}}})));
}

namespace {

TrafficGraph labelled_graph(std::size_t n_attack, std::size_t n_benign) {
  std::vector<FlowRecord> rs;
  for (std::uint32_t i = 0; i < n_attack + n_benign; ++i)
    rs.push_back({{Ipv4{i}, 1}, {Ipv4{i + 1000}, 1}, {double(i)}, i < n_attack ? kAttack : kBenign});
  return build_graph(rs);
}

}  // namespace

TEST_CASE("contrastive sets") {
  TrafficGraph g = labelled_graph(4, 30);
  g = add_virtual_edges(g, Tensor2{{0.5}, {0.6}, {0.7}}, std::vector<int>{1, 0, 1});
  Rng rng = make_rng(1, Stream::kContrastive);
  const ContrastiveSets s = build_contrastive_sets(g, {}, rng);
  CHECK(s.anchors == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(s.gamma == 10);
  const std::size_t virt1 = g.num_edges() - 3, virt0 = g.num_edges() - 2, virt2 = g.num_edges() - 1;
  for (std::size_t a = 0; a < s.anchors.size(); ++a) {
    const std::size_t p = s.positives[a];
    CHECK(p != s.anchors[a]);
    CHECK(p != virt0);
    CHECK((p < 4 || p == virt1 || p == virt2));
    const auto negs = s.negatives_of(a);
    CHECK(std::set<std::size_t>(negs.begin(), negs.end()).size() == 10);
    for (auto e : negs) {
      CHECK(g.edge(e).label == kBenign);
      CHECK_FALSE(g.edge(e).is_virtual);
    }
  }
  Rng again = make_rng(1, Stream::kContrastive);
  CHECK(build_contrastive_sets(g, {}, again).negatives == s.negatives);
}

TEST_CASE("contrastive set errors and fallbacks") {
  Rng rng = make_rng(1, Stream::kContrastive);
  CHECK_THROWS_AS(build_contrastive_sets(labelled_graph(0, 5), {}, rng), InputError);
  CHECK_THROWS_AS(build_contrastive_sets(labelled_graph(3, 0), {}, rng), InputError);
  CHECK_THROWS_AS(build_contrastive_sets(labelled_graph(1, 5), {}, rng), InputError);
  const ContrastiveSets s = build_contrastive_sets(labelled_graph(2, 3), {}, rng);  // 3 benign < gamma
  CHECK(s.negatives.size() == 20);
}

TEST_CASE("taped InfoNCE equals the plain loss and has correct gradients") {
  std::mt19937_64 r(4);
  TrafficGraph g = labelled_graph(3, 12);
  Rng rng = make_rng(2, Stream::kContrastive);
  ContrastiveConfig cfg;
  cfg.gamma = 4;
  const ContrastiveSets s = build_contrastive_sets(g, cfg, rng);
  const Tensor2 emb = oracle::random_tensor(g.num_edges(), 5, r);
  auto plain = [&](const Tensor2& z) {
    Tensor2 a(s.anchors.size(), 5), p(s.anchors.size(), 5);
    std::vector<Tensor2> negs;
    for (std::size_t i = 0; i < s.anchors.size(); ++i) {
      for (std::size_t d = 0; d < 5; ++d) a(i, d) = z(s.anchors[i], d), p(i, d) = z(s.positives[i], d);
      Tensor2 n(cfg.gamma, 5);
      for (std::size_t j = 0; j < cfg.gamma; ++j)
        for (std::size_t d = 0; d < 5; ++d) n(j, d) = z(s.negatives_of(i)[j], d);
      negs.push_back(n);
    }
    return infonce_loss(a, p, negs);
  };
  ad::Tape t;
  const ad::Var z = t.parameter(emb);
  const ad::Var loss = infonce_on_tape(t, z, s);
  CHECK(std::abs(t.value(loss)(0, 0) - plain(emb)) < 1e-12);
  t.backward(loss);
  const std::vector<Tensor2> grads{t.grad(z)};
  const auto rep = grad_check([&](std::span<const Tensor2> ps) { return plain(ps[0]); }, {emb}, grads);
  CHECK(rep.passed);
  CHECK(rep.checked == emb.size());
}
