#include "egcm/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "egcm/error.hpp"

namespace egcm {

namespace {

std::string shape_str(const Tensor2& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

// Four output rows at a time; a zero multiplier adds +-0, which leaves a
// finite sum unchanged, so every row is bitwise the same as the one-row loop.
void axpy4(double* __restrict c0, double* __restrict c1, double* __restrict c2, double* __restrict c3, double a0,
           double a1, double a2, double a3, const double* __restrict b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    const double bj = b[j];
    c0[j] += a0 * bj;
    c1[j] += a1 * bj;
    c2[j] += a2 * bj;
    c3[j] += a3 * bj;
  }
}

// c[i,:] += a_ik * b[k,:], accumulated in ascending k for every output element.
void gemm_rows(const double* a, std::size_t a_stride, const double* b, double* c, std::size_t m,
               std::size_t k, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    const double* a0 = a + i * a_stride;
    double* c0 = c + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[a_stride + p], x2 = a0[2 * a_stride + p], x3 = a0[3 * a_stride + p];
      if (x0 == 0.0 && x1 == 0.0 && x2 == 0.0 && x3 == 0.0) continue;
      axpy4(c0, c0 + n, c0 + 2 * n, c0 + 3 * n, x0, x1, x2, x3, b + p * n, n);
    }
  }
  for (; i < m; ++i) {
    double* __restrict crow = c + i * n;
    const double* arow = a + i * a_stride;
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = arow[p];
      if (aip == 0.0) continue;
      const double* __restrict brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
    }
  }
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) throw ShapeError("tensor data length does not match shape");
}

Tensor2::Tensor2(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw ShapeError("ragged initializer");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor2 matmul(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.rows()) throw ShapeError("matmul " + shape_str(a) + " by " + shape_str(b));
  Tensor2 c(a.rows(), b.cols());
  gemm_rows(a.data().data(), a.cols(), b.data().data(), c.data().data(), a.rows(), a.cols(), b.cols());
  return c;
}

Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) throw ShapeError("matmul_tn " + shape_str(a) + " by " + shape_str(b));
  const std::size_t m = a.cols();
  const std::size_t n = b.cols();
  Tensor2 c(m, n);
  // c[i,:] accumulates a[r,i] * b[r,:] in ascending r.
  std::size_t i = 0;
  for (; i + 4 <= m; i += 4) {
    double* c0 = c.row(i).data();
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double* ar = a.row(r).data() + i;
      if (ar[0] == 0.0 && ar[1] == 0.0 && ar[2] == 0.0 && ar[3] == 0.0) continue;
      axpy4(c0, c0 + n, c0 + 2 * n, c0 + 3 * n, ar[0], ar[1], ar[2], ar[3], b.row(r).data(), n);
    }
  }
  for (; i < m; ++i) {
    double* __restrict crow = c.row(i).data();
    for (std::size_t r = 0; r < a.rows(); ++r) {
      const double ai = a(r, i);
      if (ai == 0.0) continue;
      const double* __restrict brow = b.row(r).data();
      for (std::size_t j = 0; j < n; ++j) crow[j] += ai * brow[j];
    }
  }
  return c;
}

Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b) {
  if (a.cols() != b.cols()) throw ShapeError("matmul_nt " + shape_str(a) + " by " + shape_str(b));
  if (b.rows() >= 8) return matmul(a, transpose(b));
  Tensor2 c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto arow = a.row(i);
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const auto brow = b.row(j);
      double s = 0.0;
      for (std::size_t p = 0; p < a.cols(); ++p) s += arow[p] * brow[p];
      c(i, j) = s;
    }
  }
  return c;
}

Tensor2 transpose(const Tensor2& a) {
  Tensor2 t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Tensor2 relu(const Tensor2& x) {
  Tensor2 y = x;
  for (double& v : y.data()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor2 softmax_rows(const Tensor2& x) {
  Tensor2 y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto out = y.row(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < in.size(); ++c) {
      out[c] = std::exp(in[c] - mx);
      sum += out[c];
    }
    for (double& v : out) v /= sum;
  }
  return y;
}

Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
  Tensor2 mask(rows, cols, 1.0);
  if (p == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double& m : mask.data()) m = u(rng) < p ? 0.0 : keep_scale;
  return mask;
}

Tensor2 dropout(const Tensor2& x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout probability must be in [0, 1)");
  if (!training || p == 0.0) return x;
  const Tensor2 mask = dropout_mask(x.rows(), x.cols(), p, rng);
  Tensor2 y = x;
  auto yd = y.data();
  auto md = mask.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] *= md[i];
  return y;
}

Tensor2 hconcat(const Tensor2& a, const Tensor2& b) {
  if (a.rows() != b.rows()) throw ShapeError("hconcat " + shape_str(a) + " with " + shape_str(b));
  Tensor2 c(a.rows(), a.cols() + b.cols());
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto out = c.row(r);
    std::copy(a.row(r).begin(), a.row(r).end(), out.begin());
    std::copy(b.row(r).begin(), b.row(r).end(), out.begin() + static_cast<std::ptrdiff_t>(a.cols()));
  }
  return c;
}

bool all_finite(const Tensor2& x) noexcept {
  return std::all_of(x.data().begin(), x.data().end(), [](double v) { return std::isfinite(v); });
}

}  // namespace egcm
