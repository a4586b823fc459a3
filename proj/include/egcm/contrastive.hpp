#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "egcm/graph.hpp"
#include "egcm/rng.hpp"
#include "egcm/tape.hpp"
#include "egcm/tensor.hpp"

namespace egcm {

struct ContrastiveConfig {
  std::size_t gamma = 10;  // negatives per anchor
  double theta = 1.0;      // weight of the contrastive term in the total loss

  void validate() const;
};

// Edge ids into one graph. negatives is anchors.size() x gamma, row-major.
struct ContrastiveSets {
  std::vector<std::size_t> anchors;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;
  std::size_t gamma = 0;

  std::span<const std::size_t> negatives_of(std::size_t a) const { return {negatives.data() + a * gamma, gamma}; }
};

/// Anchors are all real attack edges of `g`. Each gets one positive drawn
/// uniformly from (virtual attack-labelled edges + the other real attack
/// edges) and `gamma` distinct negatives from the real benign edges. With
/// fewer than gamma benign edges the negatives are drawn with replacement and
/// a warning is issued. Throws InputError when an anchor has no positive
/// candidate or either pool is empty.
ContrastiveSets build_contrastive_sets(const TrafficGraph& g, const ContrastiveConfig& cfg, Rng& rng);

/// -1/N sum_a log(exp(s+) / (exp(s+) + sum_j exp(s-_j))) with dot-product
/// scores, evaluated in log-sum-exp form. `negatives[a]` is gamma x D.
double infonce_loss(const Tensor2& anchors, const Tensor2& positives, std::span<const Tensor2> negatives);

// The same loss recorded on a tape over the rows of an edge-embedding matrix.
ad::Var infonce_on_tape(ad::Tape& tape, ad::Var edge_embeddings, const ContrastiveSets& sets);

}  // namespace egcm
