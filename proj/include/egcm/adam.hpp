#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "egcm/tensor.hpp"

namespace egcm {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t step = 0;
  std::vector<Tensor2> m;
  std::vector<Tensor2> v;

  // Zeroed accumulators shaped like `params`.
  static AdamState for_params(std::span<const Tensor2> params);
};

/// One bias-corrected Adam update, in place. `grads[i]` must match
/// `params[i]` in shape; throws ShapeError otherwise.
void adam_step(std::span<Tensor2> params, std::span<const Tensor2> grads, AdamState& state, double lr = 0.01);

}  // namespace egcm
