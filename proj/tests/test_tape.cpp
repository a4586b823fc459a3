#include <doctest.h>

#include <functional>

#include "egcm/error.hpp"
#include "egcm/gradcheck.hpp"
#include "egcm/rng.hpp"
#include "egcm/tape.hpp"
#include "oracles.hpp"

using namespace egcm;
using ad::Tape;
using ad::Var;

namespace {

using Build = std::function<Var(Tape&, const std::vector<Var>&)>;

// Scalarizes `build` with a fixed random weighting and compares its tape
// gradients with central differences.
GradCheckReport check(const std::vector<Tensor2>& params, const Build& build, GradCheckOptions opts = {}) {
  auto scalar = [&](Tape& t, const std::vector<Var>& vars) {
    const Var out = build(t, vars);
    const Tensor2& v = t.value(out);
    if (v.rows() == 1 && v.cols() == 1) return out;
    std::mt19937_64 rng(99);
    return ad::sum(t, ad::mul_mask(t, out, oracle::random_tensor(v.rows(), v.cols(), rng)));
  };
  auto f = [&](std::span<const Tensor2> ps) {
    Tape t;
    std::vector<Var> vars;
    for (const auto& p : ps) vars.push_back(t.parameter(p));
    return t.value(scalar(t, vars))(0, 0);
  };
  Tape t;
  std::vector<Var> vars;
  for (const auto& p : params) vars.push_back(t.parameter(p));
  t.backward(scalar(t, vars));
  std::vector<Tensor2> grads;
  for (auto v : vars) grads.push_back(t.grad(v));
  return grad_check(f, params, grads, opts);
}

}  // namespace

TEST_CASE("gradients of every primitive match finite differences") {
  std::mt19937_64 rng(11);
  const Tensor2 a = oracle::random_tensor(5, 4, rng), b = oracle::random_tensor(4, 3, rng),
                c = oracle::random_tensor(5, 3, rng), bias = oracle::random_tensor(1, 3, rng);

  SUBCASE("matmul") { CHECK(check({a, b}, [](Tape& t, auto& v) { return ad::matmul(t, v[0], v[1]); }).passed); }
  SUBCASE("add_row_bias") {
    CHECK(check({c, bias}, [](Tape& t, auto& v) { return ad::add_row_bias(t, v[0], v[1]); }).passed);
  }
  SUBCASE("relu") {
    GradCheckOptions o;
    o.skip_near_zero = true;
    CHECK(check({c}, [](Tape& t, auto& v) { return ad::relu(t, v[0]); }, o).passed);
  }
  SUBCASE("mul_mask") {
    const Tensor2 m = oracle::random_tensor(5, 3, rng);
    CHECK(check({c}, [m](Tape& t, auto& v) { return ad::mul_mask(t, v[0], m); }).passed);
  }
  SUBCASE("hconcat") { CHECK(check({a, c}, [](Tape& t, auto& v) { return ad::hconcat(t, v[0], v[1]); }).passed); }
  SUBCASE("softmax_rows") { CHECK(check({c}, [](Tape& t, auto& v) { return ad::softmax_rows(t, v[0]); }).passed); }
  SUBCASE("add and scale") {
    CHECK(check({c, c}, [](Tape& t, auto& v) { return ad::add(t, v[0], ad::scale(t, v[1], -2.5)); }).passed);
  }
  SUBCASE("sum") { CHECK(check({a}, [](Tape& t, auto& v) { return ad::sum(t, v[0]); }).passed); }
  SUBCASE("gather_concat_rows") {
    const std::vector<std::size_t> l{0, 2, 2, 4}, r{1, 1, 3, 0};
    CHECK(check({a}, [&](Tape& t, auto& v) { return ad::gather_concat_rows(t, v[0], l, r); }).passed);
  }
  SUBCASE("binary_cross_entropy through softmax") {
    const std::vector<int> labels{1, 0, 0, 1, 1};
    const std::vector<std::size_t> rows{0, 1, 3, 4};
    const Tensor2 logits = oracle::random_tensor(5, 2, rng, -3, 3);
    CHECK(check({logits}, [&](Tape& t, auto& v) {
            return ad::binary_cross_entropy(t, ad::softmax_rows(t, v[0]), labels, rows);
          }).passed);
  }
  SUBCASE("dropout with a fixed stream") {
    CHECK(check({c}, [](Tape& t, auto& v) {
            Rng r = make_rng(1, Stream::kDropout);
            return ad::dropout(t, v[0], 0.3, true, r);
          }).passed);
  }
}

TEST_CASE("a value used twice accumulates both gradient paths") {
  Tape t;
  const Var x = t.parameter(Tensor2{{3.0}});
  const Var y = ad::add(t, ad::scale(t, x, 2.0), ad::matmul(t, x, x));  // 2x + x^2
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(8.0));
}

TEST_CASE("constants get no gradient and non-scalar losses are rejected") {
  Tape t;
  const Var c = t.constant(Tensor2{{1.0, 2.0}});
  const Var p = t.parameter(Tensor2{{1.0}, {1.0}});
  const Var y = ad::matmul(t, c, p);
  CHECK_FALSE(t.requires_grad(c));
  CHECK(t.requires_grad(y));
  t.backward(y);
  CHECK(t.grad(c) == Tensor2(1, 2));
  CHECK(t.grad(p) == Tensor2{{1.0}, {2.0}});
  CHECK_THROWS_AS(t.backward(c), ShapeError);
  CHECK(t.parameters().size() == 1);
}

TEST_CASE("cross-entropy values") {
  Tape t;
  const Var probs = t.constant(Tensor2{{0.5, 0.5}, {0.5, 0.5}});
  const std::vector<int> y{0, 1};
  const std::vector<std::size_t> rows{0, 1};
  CHECK(t.value(ad::binary_cross_entropy(t, probs, y, rows))(0, 0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const Var sure = t.constant(Tensor2{{1.0, 0.0}, {0.0, 1.0}});
  const double floor = t.value(ad::binary_cross_entropy(t, sure, y, rows))(0, 0);
  CHECK(floor == doctest::Approx(-std::log1p(-1e-12)).epsilon(1e-6));
  CHECK_THROWS_AS(ad::binary_cross_entropy(t, sure, y, std::vector<std::size_t>{}), std::invalid_argument);
}
