#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "egcm/flow.hpp"
#include "egcm/rng.hpp"
#include "egcm/tensor.hpp"

namespace egcm {

struct GraphEdge {
  std::size_t u = 0;  // source endpoint (storage order)
  std::size_t v = 0;  // destination endpoint
  int label = kBenign;
  bool is_virtual = false;
};

// An incident edge as seen from one endpoint.
struct Incidence {
  std::size_t neighbor = 0;
  std::size_t edge = 0;
  friend bool operator==(const Incidence&, const Incidence&) = default;
};

/// Endpoint/flow multigraph.
///
/// Nodes are (IP, port) endpoints whose feature vectors are all ones, with
/// width equal to the edge feature width. Every flow is its own edge, so
/// parallel edges are normal. For message passing the graph is undirected:
/// each node's incidence list holds every edge it touches, in ascending edge
/// id. A self-loop appears twice.
///
/// Values are immutable once built; add_virtual_edges() returns a new graph.
class TrafficGraph {
 public:
  TrafficGraph() = default;

  std::size_t num_nodes() const noexcept { return endpoints_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::size_t feature_dim() const noexcept { return edge_features_.cols(); }
  std::size_t node_feature_dim() const noexcept { return feature_dim(); }

  const Endpoint& endpoint(std::size_t node) const { return endpoints_.at(node); }
  bool node_is_virtual(std::size_t node) const { return node_virtual_.at(node); }
  const GraphEdge& edge(std::size_t e) const { return edges_.at(e); }
  std::span<const GraphEdge> edges() const noexcept { return edges_; }
  const Tensor2& edge_features() const noexcept { return edge_features_; }

  std::span<const Incidence> incident(std::size_t node) const;
  std::size_t degree(std::size_t node) const { return incident(node).size(); }

  // All-ones node feature matrix (num_nodes x node_feature_dim).
  Tensor2 node_features() const;
  std::optional<std::size_t> find_node(const Endpoint& ep) const;

  std::vector<int> labels() const;
  std::size_t num_virtual_edges() const;

  // Recomputes the incidence index from the edge list and compares.
  bool incidence_consistent() const;

  friend TrafficGraph build_graph(const std::vector<FlowRecord>& records);
  friend TrafficGraph add_virtual_edges(const TrafficGraph& g, const Tensor2& features, std::span<const int> labels);
  friend TrafficGraph load_graph(std::istream& in);
  friend TrafficGraph permute_nodes(const TrafficGraph& g, std::span<const std::size_t> perm);

 private:
  void rebuild_incidence();
  static void compute_incidence(std::size_t n, std::span<const GraphEdge> edges, std::vector<std::size_t>& offsets,
                                std::vector<Incidence>& entries);

  std::vector<Endpoint> endpoints_;
  std::vector<bool> node_virtual_;
  std::vector<GraphEdge> edges_;
  Tensor2 edge_features_;
  std::vector<std::size_t> offsets_;  // CSR over nodes
  std::vector<Incidence> entries_;
};

TrafficGraph build_graph(const std::vector<FlowRecord>& records);

// Appends one isolated virtual dyad (two fresh all-ones nodes joined by one
// virtual edge) per row of `features`.
TrafficGraph add_virtual_edges(const TrafficGraph& g, const Tensor2& features, std::span<const int> labels);

// Relabels node i as perm[i]. Edge order and storage direction are unchanged.
TrafficGraph permute_nodes(const TrafficGraph& g, std::span<const std::size_t> perm);

struct Neighborhood {
  std::size_t center = 0;
  std::vector<Incidence> members;  // ascending edge id
};

// fanout nullopt means the whole neighborhood.
Neighborhood neighborhood(const TrafficGraph& g, std::size_t v, std::optional<std::size_t> fanout, Rng& rng);

struct GraphSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t benign_edges = 0;
  std::size_t attack_edges = 0;
  std::size_t isolated_nodes = 0;
  std::size_t max_degree = 0;
};
GraphSummary summarize(const TrafficGraph& g);

// Binary container: "EGCG", u32 version, node table, edge table with f64
// features. The incidence index is rebuilt on load.
void save_graph(std::ostream& out, const TrafficGraph& g);
TrafficGraph load_graph(std::istream& in);

}  // namespace egcm
