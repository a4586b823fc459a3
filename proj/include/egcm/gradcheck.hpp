#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "egcm/tensor.hpp"

namespace egcm {

struct GradCheckOptions {
  double h = 1e-5;
  double tol = 1e-4;
  // Check at most this many coordinates, sampled uniformly; nullopt = all.
  std::optional<std::size_t> max_coords;
  std::uint64_t seed = 0;
  // Skip coordinates with |theta_i| < 10h (kinks of piecewise-linear f at 0).
  bool skip_near_zero = false;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  // (tensor index, flat offset) of the worst coordinate.
  std::size_t worst_tensor = 0;
  std::size_t worst_offset = 0;
  bool passed = false;
};

using ScalarFn = std::function<double(std::span<const Tensor2>)>;

/// Compares `analytic` gradients against central differences of `f` at
/// `params`. rel_err = |g - g_fd| / max(1, |g|, |g_fd|).
GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor2> params, std::span<const Tensor2> analytic,
                           const GradCheckOptions& opts = {});

}  // namespace egcm
