#include "egcm/model.hpp"

#include <cmath>

#include "egcm/error.hpp"

namespace egcm {

void ModelConfig::validate() const {
  if (num_layers < 1) throw InputError("model needs at least one layer");
  if (hidden_dim < 1) throw InputError("hidden_dim must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InputError("dropout must lie in [0, 1)");
  if (fanout && *fanout == 0) throw InputError("fanout must be positive");
}

std::vector<Tensor2> ParameterSet::tensors() const {
  std::vector<Tensor2> out;
  for (const auto& l : layers) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  }
  out.push_back(cls_weight);
  out.push_back(cls_bias);
  return out;
}

ParameterSet ParameterSet::from_tensors(std::span<const Tensor2> flat, std::size_t num_layers) {
  if (flat.size() != 2 * num_layers + 2) throw ShapeError("parameter tensor count does not match layer count");
  ParameterSet p;
  for (std::size_t k = 0; k < num_layers; ++k) p.layers.push_back({flat[2 * k], flat[2 * k + 1]});
  p.cls_weight = flat[2 * num_layers];
  p.cls_bias = flat[2 * num_layers + 1];
  return p;
}

std::size_t ParameterSet::count() const {
  std::size_t n = cls_weight.size() + cls_bias.size();
  for (const auto& l : layers) n += l.weight.size() + l.bias.size();
  return n;
}

std::size_t layer_input_dim(const ModelConfig& cfg, std::size_t edge_dim, std::size_t k) {
  // Layer-0 node states are all-ones vectors as wide as the edge features.
  const std::size_t prev = k == 1 ? edge_dim : cfg.hidden_dim;
  return prev + prev + edge_dim;
}

ParameterSet init_parameters(const ModelConfig& cfg, std::size_t edge_dim, std::uint64_t seed) {
  cfg.validate();
  Rng rng = make_rng(seed, Stream::kInit);
  auto glorot = [&rng](std::size_t fan_in, std::size_t fan_out) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    Tensor2 w(fan_in, fan_out);
    for (double& x : w.data()) x = u(rng);
    return w;
  };
  ParameterSet p;
  for (std::size_t k = 1; k <= cfg.num_layers; ++k) {
    const std::size_t in = layer_input_dim(cfg, edge_dim, k);
    p.layers.push_back({glorot(in, cfg.hidden_dim), Tensor2(1, cfg.hidden_dim)});
  }
  p.cls_weight = glorot(2 * cfg.hidden_dim, ModelConfig::kNumClasses);
  p.cls_bias = Tensor2(1, ModelConfig::kNumClasses);
  return p;
}

std::vector<double> aggregate_neighbors(const Neighborhood& nbh, const Tensor2& node_states,
                                        const Tensor2& edge_features) {
  const std::size_t d = node_states.cols();
  const std::size_t f = edge_features.cols();
  std::vector<double> out(d + f, 0.0);
  if (nbh.members.empty()) return out;
  for (const auto& m : nbh.members) {
    if (m.neighbor >= node_states.rows() || m.edge >= edge_features.rows())
      throw ShapeError("neighborhood refers outside the node or edge tables");
    const auto h = node_states.row(m.neighbor);
    const auto e = edge_features.row(m.edge);
    for (std::size_t j = 0; j < d; ++j) out[j] += h[j];
    for (std::size_t j = 0; j < f; ++j) out[d + j] += e[j];
  }
  const double n = static_cast<double>(nbh.members.size());
  for (double& x : out) x /= n;
  return out;
}

std::vector<double> node_update(std::span<const double> h_self, std::span<const double> h_neigh,
                                const LayerParams& layer, double dropout_p, bool apply_dropout, Rng& rng) {
  const std::size_t in = h_self.size() + h_neigh.size();
  if (layer.weight.rows() != in) throw ShapeError("node_update: input width does not match the layer weight");
  Tensor2 x(1, in);
  std::copy(h_self.begin(), h_self.end(), x.data().begin());
  std::copy(h_neigh.begin(), h_neigh.end(), x.data().begin() + static_cast<std::ptrdiff_t>(h_self.size()));
  Tensor2 y = matmul(x, layer.weight);
  for (std::size_t j = 0; j < y.cols(); ++j) y(0, j) += layer.bias(0, j);
  y = relu(y);
  if (apply_dropout) y = dropout(y, dropout_p, true, rng);
  return {y.data().begin(), y.data().end()};
}

Tensor2 embed_edges(const Tensor2& node_states, const TrafficGraph& graph) {
  const std::size_t d = node_states.cols();
  if (node_states.rows() != graph.num_nodes()) throw ShapeError("node states do not cover the graph");
  Tensor2 z(graph.num_edges(), 2 * d);
  for (std::size_t e = 0; e < graph.num_edges(); ++e) {
    const auto& ed = graph.edge(e);
    auto out = z.row(e);
    std::copy(node_states.row(ed.u).begin(), node_states.row(ed.u).end(), out.begin());
    std::copy(node_states.row(ed.v).begin(), node_states.row(ed.v).end(), out.begin() + static_cast<std::ptrdiff_t>(d));
  }
  return z;
}

ParamVars register_parameters(ad::Tape& tape, const ParameterSet& params) {
  ParamVars vars;
  for (auto& t : params.tensors()) vars.all.push_back(tape.parameter(std::move(t)));
  return vars;
}

namespace {

// CSR list of (neighbor, edge) pairs per node, ascending edge id.
struct AggPlan {
  std::vector<std::size_t> offsets;
  std::vector<Incidence> entries;
};

std::shared_ptr<const AggPlan> make_plan(const TrafficGraph& g, const std::optional<std::size_t>& fanout, Rng& rng) {
  auto plan = std::make_shared<AggPlan>();
  plan->offsets.reserve(g.num_nodes() + 1);
  plan->offsets.push_back(0);
  for (std::size_t v = 0; v < g.num_nodes(); ++v) {
    if (!fanout || g.degree(v) <= *fanout) {
      const auto inc = g.incident(v);
      plan->entries.insert(plan->entries.end(), inc.begin(), inc.end());
    } else {
      const auto nb = neighborhood(g, v, fanout, rng);
      plan->entries.insert(plan->entries.end(), nb.members.begin(), nb.members.end());
    }
    plan->offsets.push_back(plan->entries.size());
  }
  return plan;
}

// out[v] = mean over plan[v] of concat(h[u], e[edge]); e is constant.
ad::Var neighbor_mean(ad::Tape& t, ad::Var h, const Tensor2& edge_features, std::shared_ptr<const AggPlan> plan) {
  const Tensor2& hv = t.value(h);
  const std::size_t n = plan->offsets.size() - 1;
  const std::size_t d = hv.cols();
  const std::size_t f = edge_features.cols();
  if (hv.rows() != n) throw ShapeError("node states do not cover the graph");
  Tensor2 out(n, d + f);
  for (std::size_t v = 0; v < n; ++v) {
    const std::size_t lo = plan->offsets[v];
    const std::size_t hi = plan->offsets[v + 1];
    if (lo == hi) continue;  // isolated: zeros
    auto row = out.row(v);
    for (std::size_t k = lo; k < hi; ++k) {
      const auto& m = plan->entries[k];
      const double* hu = hv.row(m.neighbor).data();
      const double* e = edge_features.row(m.edge).data();
      for (std::size_t j = 0; j < d; ++j) row[j] += hu[j];
      for (std::size_t j = 0; j < f; ++j) row[d + j] += e[j];
    }
    const double cnt = static_cast<double>(hi - lo);
    for (double& x : row) x /= cnt;
  }
  const ad::Var in[] = {h};
  return t.record(std::move(out), in, [h, d, plan = std::move(plan)](ad::Tape& tp, const Tensor2& g) {
    Tensor2& gh = tp.grad_buffer(h);
    const std::size_t n = plan->offsets.size() - 1;
    for (std::size_t v = 0; v < n; ++v) {
      const std::size_t lo = plan->offsets[v];
      const std::size_t hi = plan->offsets[v + 1];
      if (lo == hi) continue;
      const double inv = 1.0 / static_cast<double>(hi - lo);
      const double* gv = g.row(v).data();
      for (std::size_t k = lo; k < hi; ++k) {
        double* gu = gh.row(plan->entries[k].neighbor).data();
        for (std::size_t j = 0; j < d; ++j) gu[j] += gv[j] * inv;
      }
    }
  });
}

}  // namespace

TapedForward forward_on_tape(ad::Tape& tape, const ParamVars& vars, const TrafficGraph& graph,
                             const ModelConfig& cfg, bool training, Rng& rng) {
  cfg.validate();
  if (graph.num_nodes() == 0 || graph.num_edges() == 0) throw InputError("forward on an empty graph");
  if (vars.all.size() != 2 * cfg.num_layers + 2) throw ShapeError("parameter set does not match the layer count");

  std::shared_ptr<const AggPlan> full;
  if (!cfg.fanout) full = make_plan(graph, std::nullopt, rng);

  ad::Var h = tape.constant(graph.node_features());
  for (std::size_t k = 0; k < cfg.num_layers; ++k) {
    auto plan = full ? full : make_plan(graph, cfg.fanout, rng);
    const ad::Var agg = neighbor_mean(tape, h, graph.edge_features(), std::move(plan));
    const ad::Var x = ad::hconcat(tape, h, agg);
    if (tape.value(x).cols() != tape.value(vars.layer_weight(k)).rows())
      throw ShapeError("layer " + std::to_string(k + 1) + " expects input width " +
                       std::to_string(tape.value(vars.layer_weight(k)).rows()) + ", got " +
                       std::to_string(tape.value(x).cols()));
    h = ad::relu(tape, ad::add_row_bias(tape, ad::matmul(tape, x, vars.layer_weight(k)), vars.layer_bias(k)));
    if (k + 1 < cfg.num_layers) h = ad::dropout(tape, h, cfg.dropout, training, rng);
  }

  std::vector<std::size_t> us, vs;
  us.reserve(graph.num_edges());
  vs.reserve(graph.num_edges());
  for (const auto& e : graph.edges()) {
    us.push_back(e.u);
    vs.push_back(e.v);
  }
  const ad::Var z = ad::gather_concat_rows(tape, h, us, vs);
  const ad::Var logits = ad::add_row_bias(tape, ad::matmul(tape, z, vars.cls_weight()), vars.cls_bias());
  return {h, z, ad::softmax_rows(tape, logits)};
}

ForwardResult forward(const TrafficGraph& graph, const ParameterSet& params, const ModelConfig& cfg, bool training,
                      Rng& rng) {
  ad::Tape tape;
  std::vector<ad::Var> all;
  for (auto& t : params.tensors()) all.push_back(tape.constant(std::move(t)));
  const auto out = forward_on_tape(tape, ParamVars{std::move(all)}, graph, cfg, training, rng);
  return {tape.value(out.node_states), tape.value(out.edge_embeddings), tape.value(out.probs)};
}

std::vector<double> predict_attack_prob(const TrafficGraph& graph, const ParameterSet& params,
                                        const ModelConfig& cfg) {
  Rng unused(0);
  const auto res = forward(graph, params, cfg, false, unused);
  std::vector<double> p(graph.num_edges());
  for (std::size_t e = 0; e < p.size(); ++e) p[e] = res.probs(e, 1);
  return p;
}

}  // namespace egcm
