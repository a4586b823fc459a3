#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "egcm/graph.hpp"
#include "egcm/rng.hpp"
#include "egcm/tensor.hpp"

namespace egcm {

struct MixupConfig {
  double alpha = 0.3;  // Beta(alpha, alpha) for harmful/unharmful pairs
  double beta = 0.2;   // Beta(beta, beta) for harmful/harmful pairs
  std::size_t sigma = 200;  // pairs drawn per pattern
  static constexpr double kLabelThreshold = 0.5;

  void validate() const;
};

enum class MixPattern { kHarmfulHarmful, kHarmfulUnharmful };
std::string_view to_string(MixPattern p);

struct MixupEntry {
  std::vector<double> features;
  int label = kAttack;
  MixPattern pattern = MixPattern::kHarmfulHarmful;
  double lambda = 0.0;
  std::size_t source_i = 0;  // for HU: the unharmful edge
  std::size_t source_j = 0;  // always a harmful edge
  friend bool operator==(const MixupEntry&, const MixupEntry&) = default;
};

struct MixupBatch {
  std::size_t dim = 0;
  std::vector<MixupEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }
  Tensor2 features() const;
  std::vector<int> labels() const;
  friend bool operator==(const MixupBatch&, const MixupBatch&) = default;
};

// Symmetric Beta(a, a) draw as X / (X + Y) with X, Y ~ Gamma(a, 1).
// Throws std::invalid_argument for a <= 0.
double sample_beta(double a, Rng& rng);

// Indicator label of a mixed sample: HH always harmful; HU harmful iff
// 0 < lambda < 0.5 (lambda == 0.5 is unharmful).
int mixed_label(MixPattern pattern, double lambda);

// x = lambda * x_i + (1 - lambda) * x_j, kept inside [min, max] elementwise
// against rounding.
std::pair<std::vector<double>, int> mix_pair(std::span<const double> x_i, std::span<const double> x_j, double lambda,
                                             MixPattern pattern);

/// sigma harmful/unharmful pairs with lambda ~ Beta(alpha, alpha), then sigma
/// harmful/harmful pairs with lambda ~ Beta(beta, beta), sources drawn
/// uniformly with replacement from the label pools of `labels`. Only
/// non-virtual edges should be passed in.
MixupBatch mp_mixup(const Tensor2& edge_features, std::span<const int> labels, const MixupConfig& cfg, Rng& rng);

// Same, over the real (non-virtual) edges of `g`. Source ids are edge ids of g.
MixupBatch mp_mixup(const TrafficGraph& g, const MixupConfig& cfg, Rng& rng);

TrafficGraph add_virtual_edges(const TrafficGraph& g, const MixupBatch& batch);

void save_mixup_batch(std::ostream& out, const MixupBatch& batch);
MixupBatch load_mixup_batch(std::istream& in);

}  // namespace egcm
