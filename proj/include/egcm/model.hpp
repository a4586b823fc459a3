#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "egcm/graph.hpp"
#include "egcm/rng.hpp"
#include "egcm/tape.hpp"
#include "egcm/tensor.hpp"

namespace egcm {

struct ModelConfig {
  std::size_t num_layers = 2;
  std::size_t hidden_dim = 128;
  double dropout = 0.2;
  // Neighbors sampled per node and layer; nullopt aggregates over all of them.
  std::optional<std::size_t> fanout;
  static constexpr std::size_t kNumClasses = 2;

  void validate() const;
};

struct LayerParams {
  Tensor2 weight;  // (in x hidden), in = width(h_self) + width(h_neigh)
  Tensor2 bias;    // (1 x hidden)
  friend bool operator==(const LayerParams&, const LayerParams&) = default;
};

/// Trainable weights: one linear map per aggregation layer plus the edge
/// classifier (2*hidden -> 2).
struct ParameterSet {
  std::vector<LayerParams> layers;
  Tensor2 cls_weight;
  Tensor2 cls_bias;

  // Flat view in a fixed order: layer weights and biases, then the classifier.
  std::vector<Tensor2> tensors() const;
  static ParameterSet from_tensors(std::span<const Tensor2> flat, std::size_t num_layers);
  std::size_t count() const;
  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

// Input width of layer k (1-based) for edge feature width `edge_dim`.
std::size_t layer_input_dim(const ModelConfig& cfg, std::size_t edge_dim, std::size_t k);

// Glorot-uniform weights, zero biases, drawn from `seed`.
ParameterSet init_parameters(const ModelConfig& cfg, std::size_t edge_dim, std::uint64_t seed);

// Mean over the neighborhood of concat(h_u, e_uv). Zero vector for an empty
// neighborhood. Single-node reference form of what forward() computes.
std::vector<double> aggregate_neighbors(const Neighborhood& nbh, const Tensor2& node_states, const Tensor2& edge_features);

// relu(concat(h_self, h_neigh) * W + b), then dropout when `apply_dropout`.
std::vector<double> node_update(std::span<const double> h_self, std::span<const double> h_neigh,
                                const LayerParams& layer, double dropout_p, bool apply_dropout, Rng& rng);

// concat(z_u, z_v) per edge in edge-id order, with (u, v) in storage order.
Tensor2 embed_edges(const Tensor2& node_states, const TrafficGraph& graph);

struct ForwardResult {
  Tensor2 node_states;      // z^K, num_nodes x hidden
  Tensor2 edge_embeddings;  // num_edges x 2*hidden
  Tensor2 probs;            // num_edges x 2, column 1 = attack
};

// Parameters registered on a tape, in ParameterSet::tensors() order.
struct ParamVars {
  std::vector<ad::Var> all;
  ad::Var layer_weight(std::size_t k) const { return all[2 * k]; }
  ad::Var layer_bias(std::size_t k) const { return all[2 * k + 1]; }
  ad::Var cls_weight() const { return all[all.size() - 2]; }
  ad::Var cls_bias() const { return all[all.size() - 1]; }
};

ParamVars register_parameters(ad::Tape& tape, const ParameterSet& params);

struct TapedForward {
  ad::Var node_states;
  ad::Var edge_embeddings;
  ad::Var probs;
};

/// Records the full forward pass on `tape`. Layer 0 states are the all-ones
/// node features; each layer aggregates concat(h_u, e_uv) by mean over the
/// (optionally sampled) neighborhood, then applies node_update. Dropout sits
/// between layers only. Throws InputError on an empty graph.
TapedForward forward_on_tape(ad::Tape& tape, const ParamVars& vars, const TrafficGraph& graph,
                             const ModelConfig& cfg, bool training, Rng& rng);

ForwardResult forward(const TrafficGraph& graph, const ParameterSet& params, const ModelConfig& cfg, bool training,
                      Rng& rng);

// Inference-mode class-1 probability per edge.
std::vector<double> predict_attack_prob(const TrafficGraph& graph, const ParameterSet& params, const ModelConfig& cfg);

}  // namespace egcm
