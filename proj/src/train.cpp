#include "egcm/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>
#include <sstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "egcm/adam.hpp"
#include "egcm/error.hpp"
#include "egcm/log.hpp"

namespace egcm {

void TrainConfig::validate() const {
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (!(lr > 0.0)) throw InputError("learning rate must be positive");
  if (seeds.empty()) throw InputError("at least one seed is required");
  if (!(train_fraction > 0.0 && train_fraction <= 1.0)) throw InputError("train fraction must lie in (0, 1]");
  model.validate();
  mixup.validate();
  contrastive.validate();
}

std::string TrainConfig::variant() const {
  if (enable_mixup && enable_contrastive) return "EG-ConMix";
  if (enable_contrastive) return "EG-Con";
  if (enable_mixup) return "EG-Mix";
  return "E-GraphSAGE";
}

namespace {

std::string fingerprint(const TrainConfig& c) {
  std::ostringstream os;
  os.precision(17);
  os << c.epochs << '|' << c.lr << '|' << c.model.num_layers << '|' << c.model.hidden_dim << '|' << c.model.dropout
     << '|' << (c.model.fanout ? *c.model.fanout : 0) << '|' << c.mixup.alpha << '|' << c.mixup.beta << '|'
     << c.mixup.sigma << '|' << c.contrastive.gamma << '|' << c.contrastive.theta << '|' << c.enable_mixup << '|'
     << c.enable_contrastive << '|' << c.train_fraction;
  for (auto s : c.seeds) os << '|' << s;
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : os.str()) h = (h ^ ch) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Every epoch allocates and frees the same multi-megabyte tensors; keeping
// them on the heap instead of fresh mmaps avoids repeated page faults.
void tune_allocator() {
#if defined(__GLIBC__)
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

bool has_both_classes(const std::vector<FlowRecord>& rs) {
  bool b = false, a = false;
  for (const auto& r : rs) (r.label == kAttack ? a : b) = true;
  return a && b;
}

std::vector<FlowRecord> concat(const std::vector<FlowRecord>& a, const std::vector<FlowRecord>& b) {
  std::vector<FlowRecord> out;
  out.reserve(a.size() + b.size());
  out.insert(out.end(), a.begin(), a.end());
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::vector<int> argmax_scored(const std::vector<double>& p_attack, std::size_t first) {
  std::vector<int> pred;
  pred.reserve(p_attack.size() - first);
  for (std::size_t e = first; e < p_attack.size(); ++e) pred.push_back(p_attack[e] > 0.5 ? kAttack : kBenign);
  return pred;
}

}  // namespace

double cross_entropy(std::span<const double> p, std::span<const int> labels, std::span<const std::size_t> rows,
                     double clamp) {
  if (rows.empty()) throw std::invalid_argument("cross-entropy over an empty edge mask");
  if (p.size() != labels.size()) throw ShapeError("probability and label counts differ");
  double total = 0.0;
  for (std::size_t r : rows) {
    const double pi = std::clamp(p[r], clamp, 1.0 - clamp);
    const double y = labels[r];
    total += -(y * std::log(pi) + (1.0 - y) * std::log(1.0 - pi));
  }
  return total / static_cast<double>(rows.size());
}

TrainResult train(const std::vector<FlowRecord>& train_records, const std::vector<FlowRecord>& val_records,
                  const TrainConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_records.empty()) throw InputError("training split is empty");
  tune_allocator();
  bool use_mixup = cfg.enable_mixup;
  bool use_contrastive = cfg.enable_contrastive;
  if ((use_mixup || use_contrastive) && !has_both_classes(train_records)) {
    warn("training split lacks one class; mixup and contrastive terms disabled");
    use_mixup = use_contrastive = false;
  }
  const auto n_attack = std::count_if(train_records.begin(), train_records.end(),
                                      [](const FlowRecord& r) { return r.label == kAttack; });
  if (use_contrastive && n_attack < 2 && !(use_mixup && cfg.mixup.sigma > 0)) {
    warn("a single attack flow has no positive partner; contrastive term disabled");
    use_contrastive = false;
  }

  const TrafficGraph train_graph = build_graph(train_records);
  const std::size_t edge_dim = train_graph.feature_dim();
  const std::vector<FlowRecord> val_union = concat(train_records, val_records);
  const TrafficGraph val_graph = val_records.empty() ? TrafficGraph{} : build_graph(val_union);
  std::vector<int> val_labels;
  for (const auto& r : val_records) val_labels.push_back(r.label);

  TrainResult result;
  result.edge_dim = edge_dim;
  ParameterSet params = init_parameters(cfg.model, edge_dim, seed);
  std::vector<Tensor2> flat = params.tensors();
  AdamState adam = AdamState::for_params(flat);
  double best_f1 = -1.0;

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng mix_rng = make_rng(seed, Stream::kMixup, epoch);
    Rng con_rng = make_rng(seed, Stream::kContrastive, epoch);
    Rng drop_rng = make_rng(seed, Stream::kDropout, epoch);

    const TrafficGraph g =
        use_mixup ? add_virtual_edges(train_graph, mp_mixup(train_graph, cfg.mixup, mix_rng)) : train_graph;
    const std::vector<int> labels = g.labels();
    std::vector<std::size_t> mask(g.num_edges());
    for (std::size_t e = 0; e < mask.size(); ++e) mask[e] = e;

    ad::Tape tape;
    ParamVars vars;
    for (const auto& t : flat) vars.all.push_back(tape.parameter(t));
    const auto fwd = forward_on_tape(tape, vars, g, cfg.model, true, drop_rng);
    const ad::Var loss_c = ad::binary_cross_entropy(tape, fwd.probs, labels, mask);
    ad::Var loss = loss_c;
    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss_c = tape.value(loss_c)(0, 0);
    if (!std::isfinite(rec.loss_c))
      throw NumericalError("epoch " + std::to_string(epoch) + ": cross-entropy term L_c is not finite");
    if (use_contrastive) {
      const ContrastiveSets sets = build_contrastive_sets(g, cfg.contrastive, con_rng);
      const ad::Var loss_k = infonce_on_tape(tape, fwd.edge_embeddings, sets);
      rec.loss_k = tape.value(loss_k)(0, 0);
      if (!std::isfinite(rec.loss_k))
        throw NumericalError("epoch " + std::to_string(epoch) + ": contrastive term L_k is not finite");
      loss = ad::add(tape, loss_c, ad::scale(tape, loss_k, cfg.contrastive.theta));
    }
    rec.loss = tape.value(loss)(0, 0);
    if (!std::isfinite(rec.loss)) throw NumericalError("epoch " + std::to_string(epoch) + ": total loss is not finite");

    tape.backward(loss);
    std::vector<Tensor2> grads;
    grads.reserve(flat.size());
    for (const auto& v : vars.all) grads.push_back(tape.grad(v));
    adam_step(flat, grads, adam, cfg.lr);
    for (const auto& t : flat)
      if (!all_finite(t)) throw NumericalError("epoch " + std::to_string(epoch) + ": parameters became non-finite");

    params = ParameterSet::from_tensors(flat, cfg.model.num_layers);
    if (!val_records.empty()) {
      const auto p = predict_attack_prob(val_graph, params, cfg.model);
      rec.val_macro_f1 = compute_metrics(val_labels, argmax_scored(p, train_records.size())).macro_f1;
    } else {
      rec.val_macro_f1 = std::nan("");
    }
    // The latest of equally good epochs wins; without validation the last epoch is kept.
    if (val_records.empty() || rec.val_macro_f1 >= best_f1) {
      best_f1 = rec.val_macro_f1;
      result.params = params;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
    if (on_epoch && !on_epoch(rec)) break;
  }
  return result;
}

std::vector<int> predict(const ParameterSet& params, const ModelConfig& cfg, const std::vector<FlowRecord>& context,
                         const std::vector<FlowRecord>& scored) {
  if (scored.empty()) return {};
  const TrafficGraph g = build_graph(concat(context, scored));
  return argmax_scored(predict_attack_prob(g, params, cfg), context.size());
}

MetricsReport evaluate(const ParameterSet& params, const ModelConfig& cfg, const std::vector<FlowRecord>& context,
                       const std::vector<FlowRecord>& scored) {
  if (scored.empty()) throw InputError("nothing to evaluate");
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> pred = predict(params, cfg, context, scored);
  std::vector<int> labels;
  for (const auto& r : scored) labels.push_back(r.label);
  MetricsReport rep = compute_metrics(labels, pred);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

PreparedData prepare_dataset(const std::vector<FlowRecord>& records, std::vector<std::string> feature_names,
                             const DataOptions& opts) {
  PreparedData d;
  d.fractions = opts.fractions;
  d.feature_names = std::move(feature_names);
  const auto remapped = remap_ips(records, opts.range, opts.seed);
  Split raw = stratified_split(remapped, opts.fractions, opts.seed);
  if (raw.train.empty()) throw InputError("training split is empty");
  d.norm = fit_normalizer(raw.train, opts.norm);
  d.split.train = apply_normalizer(std::move(raw.train), d.norm);
  d.split.val = apply_normalizer(std::move(raw.val), d.norm);
  d.split.test = apply_normalizer(std::move(raw.test), d.norm);
  return d;
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("EGCM_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n >= 1) return static_cast<std::size_t>(n);
  }
  return 1;
}

namespace {

// Runs fn(i) for i in [0, n) on up to worker_threads() threads. The first
// exception is rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min(worker_threads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::mutex mu;
  std::size_t next = 0;
  std::exception_ptr err;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        std::size_t i;
        {
          std::lock_guard lock(mu);
          if (next >= n || err) return;
          i = next++;
        }
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!err) err = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

SeedRuns run_seeds(const PreparedData& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.split.test.empty()) throw InputError("test split is empty");
  const double keep = std::min(1.0, cfg.train_fraction / data.fractions.train);
  SeedRuns out;
  out.per_seed.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), [&](std::size_t i) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::uint64_t seed = cfg.seeds[i];
    const std::vector<FlowRecord> train_set =
        keep >= 1.0 ? data.split.train : stratified_subsample(data.split.train, keep, seed);
    const TrainResult tr = train(train_set, data.split.val, cfg, seed);
    MetricsReport rep = evaluate(tr.params, cfg.model, train_set, data.split.test);
    rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rep.variant = cfg.variant();
    rep.config_fingerprint = fingerprint(cfg);
    out.per_seed[i] = std::move(rep);
  });
  out.aggregate = aggregate_reports(out.per_seed);
  return out;
}

std::vector<double> default_fraction_grid() { return {0.01, 0.05, 0.10, 0.20, 0.30, 0.40, 0.50, 0.60, 0.70}; }

std::vector<std::size_t> default_sigma_grid() { return {100, 200, 300, 400, 500, 1000, 2000}; }

std::vector<SweepRow> fraction_sweep(const PreparedData& data, const TrainConfig& cfg, std::span<const double> fractions) {
  std::vector<SweepRow> rows;
  for (double f : fractions) {
    TrainConfig c = cfg;
    c.train_fraction = f;
    const auto t0 = std::chrono::steady_clock::now();
    const SeedRuns r = run_seeds(data, c);
    rows.push_back({f, c.seeds.size(), r.aggregate.macro_f1, r.aggregate.macro_f1_std,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }
  return rows;
}

std::vector<SweepRow> mixup_count_sweep(const PreparedData& data, const TrainConfig& cfg,
                                        std::span<const std::size_t> sigmas) {
  std::vector<SweepRow> rows;
  for (std::size_t s : sigmas) {
    TrainConfig c = cfg;
    c.mixup.sigma = s;
    const auto t0 = std::chrono::steady_clock::now();
    const SeedRuns r = run_seeds(data, c);
    rows.push_back({static_cast<double>(s), c.seeds.size(), r.aggregate.macro_f1, r.aggregate.macro_f1_std,
                    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  }
  return rows;
}

std::string sweep_to_csv(std::span<const SweepRow> rows) {
  std::ostringstream os;
  os.precision(17);
  os << "fraction_or_sigma,seed_count,macro_f1_mean,macro_f1_std,wall_seconds\n";
  for (const auto& r : rows)
    os << r.value << ',' << r.seed_count << ',' << r.macro_f1_mean << ',' << r.macro_f1_std << ',' << r.wall_seconds
       << '\n';
  return os.str();
}

}  // namespace egcm
