#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "egcm/rng.hpp"

namespace egcm {

/// Dense row-major matrix of doubles.
class Tensor2 {
 public:
  Tensor2() = default;
  Tensor2(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data);
  Tensor2(std::initializer_list<std::initializer_list<double>> rows);

  static Tensor2 row_vector(std::span<const double> values);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  bool same_shape(const Tensor2& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v);

  // Bitwise equality of shape and contents.
  friend bool operator==(const Tensor2&, const Tensor2&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Plain (non-recording) kernels. All of them are sequential and
// deterministic: every output element is reduced in a fixed index order.

Tensor2 matmul(const Tensor2& a, const Tensor2& b);
// a^T * b without materializing the transpose.
Tensor2 matmul_tn(const Tensor2& a, const Tensor2& b);
// a * b^T without materializing the transpose.
Tensor2 matmul_nt(const Tensor2& a, const Tensor2& b);
Tensor2 transpose(const Tensor2& a);

Tensor2 relu(const Tensor2& x);
Tensor2 softmax_rows(const Tensor2& x);

// Inverted dropout: survivors are scaled by 1/(1-p). Identity when not
// training or when p == 0. Throws std::invalid_argument unless 0 <= p < 1.
Tensor2 dropout(const Tensor2& x, double p, bool training, Rng& rng);
// The mask dropout() would apply (entries 0 or 1/(1-p)).
Tensor2 dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng);

Tensor2 hconcat(const Tensor2& a, const Tensor2& b);

bool all_finite(const Tensor2& x) noexcept;

}  // namespace egcm
