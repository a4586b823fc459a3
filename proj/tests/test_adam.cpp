#include <doctest.h>

#include <cmath>

#include "egcm/adam.hpp"
#include "egcm/error.hpp"
#include "oracles.hpp"

using namespace egcm;

TEST_CASE("first Adam step moves each coordinate by lr against the gradient sign") {
  std::vector<Tensor2> p{Tensor2{{1.0, -2.0, 0.5}}};
  const std::vector<Tensor2> g{Tensor2{{0.3, -4.0, 1e-3}}};
  AdamState s = AdamState::for_params(p);
  adam_step(p, g, s, 0.01);
  CHECK(p[0](0, 0) == doctest::Approx(1.0 - 0.01).epsilon(1e-7));
  CHECK(p[0](0, 1) == doctest::Approx(-2.0 + 0.01).epsilon(1e-7));
  CHECK(p[0](0, 2) == doctest::Approx(0.5 - 0.01).epsilon(1e-4));
  CHECK(s.step == 1);
}

TEST_CASE("zero gradients leave parameters unchanged") {
  std::vector<Tensor2> p{Tensor2{{1.0, 2.0}}};
  const std::vector<Tensor2> g{Tensor2(1, 2)};
  AdamState s = AdamState::for_params(p);
  for (int i = 0; i < 5; ++i) adam_step(p, g, s);
  CHECK(p[0] == Tensor2{{1.0, 2.0}});
}

TEST_CASE("Adam matches a scalar reference over several steps") {
  std::mt19937_64 rng(2);
  std::vector<Tensor2> p{oracle::random_tensor(3, 4, rng)};
  std::vector<double> ref(p[0].data().begin(), p[0].data().end()), m(12, 0), v(12, 0);
  AdamState s = AdamState::for_params(p);
  for (int t = 1; t <= 7; ++t) {
    const std::vector<Tensor2> g{oracle::random_tensor(3, 4, rng)};
    adam_step(p, g, s, 0.05);
    for (std::size_t i = 0; i < 12; ++i) {
      const double gi = g[0].data()[i];
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      ref[i] -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    }
  }
  for (std::size_t i = 0; i < 12; ++i) CHECK(p[0].data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("shape mismatch throws") {
  std::vector<Tensor2> p{Tensor2(2, 2)};
  AdamState s = AdamState::for_params(p);
  const std::vector<Tensor2> g{Tensor2(2, 3)};
  CHECK_THROWS_AS(adam_step(p, g, s), ShapeError);
}
