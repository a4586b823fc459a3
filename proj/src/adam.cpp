#include "egcm/adam.hpp"

#include <cmath>

#include "egcm/error.hpp"

namespace egcm {

AdamState AdamState::for_params(std::span<const Tensor2> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.rows(), p.cols());
    s.v.emplace_back(p.rows(), p.cols());
  }
  return s;
}

void adam_step(std::span<Tensor2> params, std::span<const Tensor2> grads, AdamState& state, double lr) {
  if (params.size() != grads.size() || params.size() != state.m.size() || params.size() != state.v.size())
    throw ShapeError("adam: parameter, gradient and state counts differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].same_shape(grads[i]) || !params[i].same_shape(state.m[i]))
      throw ShapeError("adam: shape mismatch for parameter " + std::to_string(i));
    auto p = params[i].data();
    auto g = grads[i].data();
    auto m = state.m[i].data();
    auto v = state.v[i].data();
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

}  // namespace egcm
