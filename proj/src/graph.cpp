#include "egcm/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "egcm/binio.hpp"
#include "egcm/error.hpp"

namespace egcm {

namespace {
constexpr std::uint32_t kGraphVersion = 1;
}

std::span<const Incidence> TrafficGraph::incident(std::size_t node) const {
  if (node >= num_nodes()) throw std::out_of_range("node id " + std::to_string(node) + " out of range");
  return {entries_.data() + offsets_[node], offsets_[node + 1] - offsets_[node]};
}

Tensor2 TrafficGraph::node_features() const { return Tensor2(num_nodes(), node_feature_dim(), 1.0); }

std::optional<std::size_t> TrafficGraph::find_node(const Endpoint& ep) const {
  for (std::size_t i = 0; i < endpoints_.size(); ++i)
    if (!node_virtual_[i] && endpoints_[i] == ep) return i;
  return std::nullopt;
}

std::vector<int> TrafficGraph::labels() const {
  std::vector<int> out;
  out.reserve(edges_.size());
  for (const auto& e : edges_) out.push_back(e.label);
  return out;
}

std::size_t TrafficGraph::num_virtual_edges() const {
  return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [](const GraphEdge& e) { return e.is_virtual; }));
}

void TrafficGraph::compute_incidence(std::size_t n, std::span<const GraphEdge> edges, std::vector<std::size_t>& offsets,
                                     std::vector<Incidence>& entries) {
  offsets.assign(n + 1, 0);
  for (const auto& e : edges) {
    ++offsets[e.u + 1];
    ++offsets[e.v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  entries.assign(offsets[n], Incidence{});
  std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
  // Edge ids are visited in ascending order, so each list comes out sorted.
  for (std::size_t id = 0; id < edges.size(); ++id) {
    const auto& e = edges[id];
    entries[cursor[e.u]++] = Incidence{e.v, id};
    entries[cursor[e.v]++] = Incidence{e.u, id};
  }
}

void TrafficGraph::rebuild_incidence() { compute_incidence(num_nodes(), edges_, offsets_, entries_); }

bool TrafficGraph::incidence_consistent() const {
  std::vector<std::size_t> off;
  std::vector<Incidence> ent;
  compute_incidence(num_nodes(), edges_, off, ent);
  return off == offsets_ && ent == entries_;
}

TrafficGraph build_graph(const std::vector<FlowRecord>& records) {
  TrafficGraph g;
  const std::size_t dim = records.empty() ? 0 : records.front().features.size();
  std::map<Endpoint, std::size_t> ids;
  auto node_of = [&](const Endpoint& ep) {
    auto [it, inserted] = ids.emplace(ep, g.endpoints_.size());
    if (inserted) {
      g.endpoints_.push_back(ep);
      g.node_virtual_.push_back(false);
    }
    return it->second;
  };
  std::vector<double> feats;
  feats.reserve(records.size() * dim);
  for (const auto& r : records) {
    if (r.features.size() != dim) throw ShapeError("records disagree on feature dimension");
    const std::size_t u = node_of(r.src);
    const std::size_t v = node_of(r.dst);
    g.edges_.push_back(GraphEdge{u, v, r.label, false});
    feats.insert(feats.end(), r.features.begin(), r.features.end());
  }
  g.edge_features_ = Tensor2(records.size(), dim, std::move(feats));
  g.rebuild_incidence();
  return g;
}

TrafficGraph add_virtual_edges(const TrafficGraph& g, const Tensor2& features, std::span<const int> labels) {
  if (features.rows() != labels.size()) throw ShapeError("virtual edge features and labels differ in count");
  if (features.rows() == 0) return g;
  if (g.num_edges() > 0 && features.cols() != g.feature_dim())
    throw ShapeError("virtual edge feature dimension " + std::to_string(features.cols()) +
                     " does not match graph edge dimension " + std::to_string(g.feature_dim()));
  TrafficGraph out = g;
  const std::size_t dim = features.cols();
  std::vector<double> feats(g.edge_features_.storage());
  feats.insert(feats.end(), features.storage().begin(), features.storage().end());
  for (std::size_t i = 0; i < features.rows(); ++i) {
    const std::size_t a = out.endpoints_.size();
    out.endpoints_.push_back(Endpoint{});
    out.endpoints_.push_back(Endpoint{});
    out.node_virtual_.push_back(true);
    out.node_virtual_.push_back(true);
    out.edges_.push_back(GraphEdge{a, a + 1, labels[i], true});
  }
  out.edge_features_ = Tensor2(out.edges_.size(), dim, std::move(feats));
  out.rebuild_incidence();
  return out;
}

TrafficGraph permute_nodes(const TrafficGraph& g, std::span<const std::size_t> perm) {
  if (perm.size() != g.num_nodes()) throw std::invalid_argument("permutation size does not match node count");
  TrafficGraph out;
  out.endpoints_.resize(g.num_nodes());
  out.node_virtual_.resize(g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    out.endpoints_.at(perm[i]) = g.endpoints_[i];
    out.node_virtual_.at(perm[i]) = g.node_virtual_[i];
  }
  out.edges_ = g.edges_;
  for (auto& e : out.edges_) {
    e.u = perm[e.u];
    e.v = perm[e.v];
  }
  out.edge_features_ = g.edge_features_;
  out.rebuild_incidence();
  return out;
}

Neighborhood neighborhood(const TrafficGraph& g, std::size_t v, std::optional<std::size_t> fanout, Rng& rng) {
  const auto inc = g.incident(v);
  Neighborhood n{v, {inc.begin(), inc.end()}};
  if (!fanout || inc.size() <= *fanout) return n;
  std::vector<std::size_t> idx(inc.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Partial Fisher-Yates for the first `fanout` picks.
  for (std::size_t i = 0; i < *fanout; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(*fanout);
  std::sort(idx.begin(), idx.end());
  n.members.clear();
  for (std::size_t i : idx) n.members.push_back(inc[i]);
  return n;
}

GraphSummary summarize(const TrafficGraph& g) {
  GraphSummary s;
  s.nodes = g.num_nodes();
  s.edges = g.num_edges();
  for (const auto& e : g.edges()) (e.label == kAttack ? s.attack_edges : s.benign_edges)++;
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    const std::size_t d = g.degree(v);
    if (d == 0) ++s.isolated_nodes;
    s.max_degree = std::max(s.max_degree, d);
  }
  return s;
}

void save_graph(std::ostream& out, const TrafficGraph& g) {
  out.write("EGCG", 4);
  binio::put_u32(out, kGraphVersion);
  binio::put_u64(out, g.num_nodes());
  for (std::size_t i = 0; i < g.num_nodes(); ++i) {
    binio::put_u32(out, g.endpoint(i).ip.value);
    binio::put_u32(out, g.endpoint(i).port);
    binio::put_u8(out, g.node_is_virtual(i) ? 1 : 0);
  }
  binio::put_u64(out, g.num_edges());
  binio::put_u64(out, g.feature_dim());
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const auto& ed = g.edge(e);
    binio::put_u64(out, ed.u);
    binio::put_u64(out, ed.v);
    binio::put_u8(out, static_cast<std::uint8_t>(ed.label));
    binio::put_u8(out, ed.is_virtual ? 1 : 0);
    for (double x : g.edge_features().row(e)) binio::put_f64(out, x);
  }
}

TrafficGraph load_graph(std::istream& in) {
  binio::expect_magic(in, "EGCG");
  const auto version = binio::get_u32(in);
  if (version != kGraphVersion) throw FormatError("unsupported graph version " + std::to_string(version));
  TrafficGraph g;
  const auto n = binio::get_u64(in);
  if (n > (1ull << 40)) throw FormatError("graph node count out of range");
  for (std::uint64_t i = 0; i < n; ++i) {
    Endpoint ep;
    ep.ip.value = binio::get_u32(in);
    const auto port = binio::get_u32(in);
    if (port > 65535) throw FormatError("graph: port out of range");
    ep.port = static_cast<std::uint16_t>(port);
    g.endpoints_.push_back(ep);
    g.node_virtual_.push_back(binio::get_u8(in) != 0);
  }
  const auto m = binio::get_u64(in);
  const auto dim = binio::get_u64(in);
  if (m > (1ull << 40) || dim > (1ull << 20)) throw FormatError("graph edge table out of range");
  std::vector<double> feats;
  for (std::uint64_t e = 0; e < m; ++e) {
    GraphEdge ed;
    ed.u = binio::get_u64(in);
    ed.v = binio::get_u64(in);
    if (ed.u >= n || ed.v >= n) throw FormatError("graph: edge references a missing node");
    ed.label = binio::get_u8(in);
    if (ed.label > 1) throw FormatError("graph: label out of range");
    ed.is_virtual = binio::get_u8(in) != 0;
    g.edges_.push_back(ed);
    for (std::uint64_t j = 0; j < dim; ++j) feats.push_back(binio::get_f64(in));
  }
  g.edge_features_ = Tensor2(m, dim, std::move(feats));
  g.rebuild_incidence();
  return g;
}

}  // namespace egcm
