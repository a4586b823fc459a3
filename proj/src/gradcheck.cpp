#include "egcm/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "egcm/error.hpp"
#include "egcm/rng.hpp"

namespace egcm {

GradCheckReport grad_check(const ScalarFn& f, std::vector<Tensor2> params, std::span<const Tensor2> analytic,
                           const GradCheckOptions& opts) {
  if (analytic.size() != params.size()) throw ShapeError("grad_check: gradient count mismatch");
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].same_shape(analytic[t])) throw ShapeError("grad_check: gradient shape mismatch");
    for (std::size_t i = 0; i < params[t].size(); ++i) coords.emplace_back(t, i);
  }
  if (opts.max_coords && coords.size() > *opts.max_coords) {
    Rng rng = make_rng(opts.seed, Stream::kSampling);
    std::shuffle(coords.begin(), coords.end(), rng);
    coords.resize(*opts.max_coords);
    std::sort(coords.begin(), coords.end());
  }

  GradCheckReport rep;
  for (const auto& [t, i] : coords) {
    double& x = params[t].data()[i];
    if (opts.skip_near_zero && std::abs(x) < 10.0 * opts.h) {
      ++rep.skipped;
      continue;
    }
    const double saved = x;
    x = saved + opts.h;
    const double fp = f(params);
    x = saved - opts.h;
    const double fm = f(params);
    x = saved;
    const double fd = (fp - fm) / (2.0 * opts.h);
    const double g = analytic[t].data()[i];
    const double err = std::abs(g - fd) / std::max({1.0, std::abs(g), std::abs(fd)});
    ++rep.checked;
    if (err > rep.max_rel_error || std::isnan(err)) {
      rep.max_rel_error = std::isnan(err) ? INFINITY : err;
      rep.worst_tensor = t;
      rep.worst_offset = i;
    }
  }
  rep.passed = rep.max_rel_error < opts.tol;
  return rep;
}

}  // namespace egcm
