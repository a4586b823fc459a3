#include <doctest.h>

#include <sstream>

#include "egcm/augment.hpp"
#include "oracles.hpp"

using namespace egcm;

TEST_CASE("Beta draws have the right mean and variance") {
  Rng rng = make_rng(1, Stream::kMixup);
  const int n = 200000;
  for (double a : {0.3, 0.2, 2.0}) {
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = sample_beta(a, rng);
      REQUIRE(x >= 0.0);
      REQUIRE(x <= 1.0);
      s += x;
      s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    CHECK(std::abs(mean - 0.5) < 0.005);
    CHECK(std::abs(var - 1.0 / (4.0 * (2.0 * a + 1.0))) < 0.01);  // 0.15625 at a = 0.3
  }
  CHECK_THROWS_AS(sample_beta(0.0, rng), std::invalid_argument);
}

TEST_CASE("mixed labels") {
  CHECK(mixed_label(MixPattern::kHarmfulUnharmful, 0.3) == 1);
  CHECK(mixed_label(MixPattern::kHarmfulUnharmful, 0.5) == 0);
  CHECK(mixed_label(MixPattern::kHarmfulUnharmful, 0.7) == 0);
  CHECK(mixed_label(MixPattern::kHarmfulUnharmful, 0.0) == 0);
  CHECK(mixed_label(MixPattern::kHarmfulHarmful, 0.9) == 1);
}

TEST_CASE("mix_pair") {
  const std::vector<double> xi{0.0, 1.0}, xj{1.0, 1.0};
  auto [x, y] = mix_pair(xi, xj, 0.25, MixPattern::kHarmfulUnharmful);
  CHECK(x == std::vector<double>{0.75, 1.0});
  CHECK(y == 1);
  auto [x0, y0] = mix_pair(xi, xj, 1.0, MixPattern::kHarmfulUnharmful);
  CHECK(x0 == xi);
  CHECK(y0 == 0);
  // Identical endpoints stay exactly put for any lambda.
  auto [x1, y1] = mix_pair(std::vector<double>{0.1, 0.3}, std::vector<double>{0.1, 0.3}, 0.37, MixPattern::kHarmfulHarmful);
  CHECK(x1 == std::vector<double>{0.1, 0.3});
  CHECK(y1 == 1);
}

TEST_CASE("mp_mixup batch invariants") {
  std::mt19937_64 g(1);
  const Tensor2 f = oracle::random_tensor(60, 3, g);
  std::vector<int> labels(60, 0);
  for (int i = 0; i < 60; i += 6) labels[i] = 1;
  MixupConfig cfg;
  cfg.sigma = 300;
  Rng rng = make_rng(3, Stream::kMixup);
  const MixupBatch b = mp_mixup(f, labels, cfg, rng);
  REQUIRE(b.size() == 600);
  CHECK(b.dim == 3);
  for (std::size_t k = 0; k < b.size(); ++k) {
    const auto& e = b.entries[k];
    CHECK(e.pattern == (k < 300 ? MixPattern::kHarmfulUnharmful : MixPattern::kHarmfulHarmful));
    CHECK(labels[e.source_j] == 1);
    CHECK(labels[e.source_i] == (k < 300 ? 0 : 1));
    CHECK(e.label == mixed_label(e.pattern, e.lambda));
    for (std::size_t d = 0; d < 3; ++d) {
      const double lo = std::min(f(e.source_i, d), f(e.source_j, d)), hi = std::max(f(e.source_i, d), f(e.source_j, d));
      CHECK(e.features[d] >= lo);
      CHECK(e.features[d] <= hi);
    }
  }
  Rng again = make_rng(3, Stream::kMixup);
  CHECK(mp_mixup(f, labels, cfg, again) == b);

  cfg.sigma = 0;
  Rng r0 = make_rng(3, Stream::kMixup);
  CHECK(mp_mixup(f, labels, cfg, r0).size() == 0);
  CHECK(r0 == make_rng(3, Stream::kMixup));  // no draws consumed

  cfg.sigma = 5;
  try {
    mp_mixup(f, std::vector<int>(60, 0), cfg, rng);
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("no minority samples") != std::string::npos);
  }
}

TEST_CASE("mixup batch serialization") {
  std::mt19937_64 g(2);
  const Tensor2 f = oracle::random_tensor(10, 2, g);
  const std::vector<int> labels{1, 0, 1, 0, 0, 0, 1, 0, 0, 0};
  MixupConfig cfg;
  cfg.sigma = 7;
  Rng rng = make_rng(1, Stream::kMixup);
  const MixupBatch b = mp_mixup(f, labels, cfg, rng);
  std::stringstream ss;
  save_mixup_batch(ss, b);
  CHECK(load_mixup_batch(ss) == b);
  std::stringstream bad("garbage");
  CHECK_THROWS_AS(load_mixup_batch(bad), FormatError);
}

TEST_CASE("config validation") {
  MixupConfig c;
  CHECK_NOTHROW(c.validate());
  c.alpha = 0;
  CHECK_THROWS(c.validate());
}
