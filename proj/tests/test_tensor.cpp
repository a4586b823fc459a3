#include <doctest.h>

#include <cmath>
#include <numeric>

#include "egcm/error.hpp"
#include "egcm/rng.hpp"
#include "egcm/tensor.hpp"
#include "oracles.hpp"

using namespace egcm;

TEST_CASE("matmul matches the naive triple loop") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + rng() % 13, k = 1 + rng() % 11, n = 1 + rng() % 17;
    Tensor2 a = oracle::random_tensor(m, k, rng);
    const Tensor2 b = oracle::random_tensor(k, n, rng);
    for (auto& v : a.data())
      if (rng() % 3 == 0) v = 0.0;  // exercise the zero skip
    CHECK(oracle::max_abs_diff(matmul(a, b), oracle::matmul(a, b)) < 1e-12);
    CHECK(oracle::max_abs_diff(matmul_tn(transpose(a), b), oracle::matmul(a, b)) < 1e-12);
    const Tensor2 bt = transpose(b);
    CHECK(oracle::max_abs_diff(matmul_nt(a, bt), oracle::matmul(a, b)) < 1e-12);
  }
}

TEST_CASE("matmul rows do not depend on their position") {
  std::mt19937_64 rng(3);
  const Tensor2 a = oracle::random_tensor(11, 9, rng);
  const Tensor2 b = oracle::random_tensor(9, 6, rng);
  const Tensor2 c = matmul(a, b);
  std::vector<std::size_t> perm(11);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Tensor2 pa(11, 9);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t j = 0; j < 9; ++j) pa(perm[i], j) = a(i, j);
  const Tensor2 pc = matmul(pa, b);
  for (std::size_t i = 0; i < 11; ++i)
    for (std::size_t j = 0; j < 6; ++j) CHECK(pc(perm[i], j) == c(i, j));
}

TEST_CASE("shape errors") {
  CHECK_THROWS_AS(matmul(Tensor2(2, 3), Tensor2(2, 3)), ShapeError);
  CHECK_THROWS_AS(Tensor2(2, 2, std::vector<double>{1, 2, 3}), ShapeError);
  CHECK_THROWS_AS(hconcat(Tensor2(2, 1), Tensor2(3, 1)), ShapeError);
}

TEST_CASE("softmax rows") {
  const Tensor2 s = softmax_rows(Tensor2{{0.0, std::log(3.0)}, {1000.0, 1000.0}, {-1000.0, 0.0}});
  CHECK(s(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
  CHECK(s(0, 1) == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(s(1, 0) == 0.5);
  CHECK(s(1, 1) == 0.5);
  CHECK(s(2, 1) == 1.0);
  CHECK(all_finite(s));
  std::mt19937_64 rng(1);
  const Tensor2 x = oracle::random_tensor(40, 5, rng, -30, 30);
  const Tensor2 y = softmax_rows(x);
  for (std::size_t r = 0; r < 40; ++r) {
    double sum = 0;
    for (double v : y.row(r)) sum += v;
    CHECK(std::abs(sum - 1.0) < 1e-12);
    const auto ref = oracle::softmax({x.row(r).begin(), x.row(r).end()});
    for (std::size_t c = 0; c < 5; ++c) CHECK(std::abs(ref[c] - y(r, c)) < 1e-15);
  }
}

TEST_CASE("relu and hconcat") {
  const Tensor2 r = relu(Tensor2{{-1.0, 0.0, 2.0}});
  CHECK(r == Tensor2{{0.0, 0.0, 2.0}});
  CHECK(hconcat(Tensor2{{1.0}, {2.0}}, Tensor2{{3.0, 4.0}, {5.0, 6.0}}) == Tensor2{{1.0, 3.0, 4.0}, {2.0, 5.0, 6.0}});
}

TEST_CASE("dropout keeps about 1-p of the entries and rescales them") {
  Rng rng = make_rng(5, Stream::kDropout);
  const Tensor2 x(1000, 100, 1.0);
  const Tensor2 y = dropout(x, 0.2, true, rng);
  std::size_t kept = 0;
  for (double v : y.data()) {
    if (v != 0.0) {
      ++kept;
      CHECK(v == doctest::Approx(1.25));
    }
  }
  CHECK(std::abs(static_cast<double>(kept) / x.size() - 0.8) < 0.01);
  CHECK(dropout(x, 0.2, false, rng) == x);
  CHECK(dropout(x, 0.0, true, rng) == x);
  CHECK_THROWS_AS(dropout(x, 1.0, true, rng), std::invalid_argument);
  CHECK_THROWS_AS(dropout(x, -0.1, true, rng), std::invalid_argument);
}

TEST_CASE("all_finite") {
  CHECK(all_finite(Tensor2{{1.0, 2.0}}));
  CHECK_FALSE(all_finite(Tensor2{{1.0, std::nan("")}}));
  CHECK_FALSE(all_finite(Tensor2{{INFINITY}}));
}
