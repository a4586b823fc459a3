#include "egcm/commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "egcm/checkpoint.hpp"
#include "egcm/graph.hpp"
#include "egcm/train.hpp"

namespace egcm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double to_double(const std::string& s) {
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw InputError("not a number: '" + s + "'");
  return v;
}

std::size_t to_size(const std::string& s) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) throw InputError("not an integer: '" + s + "'");
  return v;
}

// Collects outputs and writes the manifest at the end of a command.
class Run {
 public:
  Run(std::string command, const RunConfig& cfg) : cfg_(cfg) {
    m_.command = std::move(command);
    m_.config_ini = to_ini(cfg);
    m_.started_at = utc_timestamp();
    try {
      fs::create_directories(cfg.out_dir);
    } catch (const fs::filesystem_error& e) {
      throw InputError("cannot create output directory " + cfg.out_dir + ": " + e.what());
    }
  }

  RunManifest& manifest() { return m_; }

  void input(const std::string& path) { m_.inputs.push_back({path, file_sha256(path), file_sha256(path)}); }

  std::string path(const std::string& name) const { return (fs::path(cfg_.out_dir) / name).string(); }

  void write(const std::string& name, const std::string& content) {
    const std::string p = path(name);
    std::ofstream out(p, std::ios::binary);
    if (!out || !out.write(content.data(), static_cast<std::streamsize>(content.size())))
      throw InputError("cannot write " + p);
    out.close();
    added(name);
  }

  void added(const std::string& name) {
    const std::string p = path(name);
    m_.outputs.push_back({name, file_sha256(p), reproducible_digest(p)});
  }

  RunManifest finish() {
    m_.finished_at = utc_timestamp();
    const std::string p = path("manifest.json");
    std::ofstream out(p, std::ios::binary);
    out << manifest_to_json(m_);
    if (!out) throw InputError("cannot write " + p);
    return m_;
  }

 private:
  const RunConfig& cfg_;
  RunManifest m_;
};

ParsedFlows load_input(const RunConfig& cfg, Run& run) {
  if (cfg.input.empty()) throw InputError("no input CSV given (set [data] input or --data)");
  ParsedFlows parsed = parse_flow_csv_file(cfg.input, cfg.schema);
  if (parsed.records.empty()) throw InputError("input " + cfg.input + " has no flow records");
  run.input(cfg.input);
  return parsed;
}

json summary_json(const GraphSummary& s) {
  return {{"nodes", s.nodes},          {"edges", s.edges},           {"benign_edges", s.benign_edges},
          {"attack_edges", s.attack_edges}, {"isolated_nodes", s.isolated_nodes}, {"max_degree", s.max_degree}};
}

void print_summary(std::ostream& out, const std::string& name, const GraphSummary& s) {
  out << std::left << std::setw(6) << name << " nodes=" << s.nodes << " edges=" << s.edges
      << " benign=" << s.benign_edges << " attack=" << s.attack_edges << '\n';
}

std::string history_csv(const std::vector<EpochRecord>& h) {
  std::ostringstream os;
  os << "epoch,loss_c,loss_k,loss,val_macro_f1\n";
  for (const auto& r : h)
    os << r.epoch << ',' << fmt(r.loss_c) << ',' << fmt(r.loss_k) << ',' << fmt(r.loss) << ','
       << (std::isnan(r.val_macro_f1) ? std::string("nan") : fmt(r.val_macro_f1)) << '\n';
  return os.str();
}

void print_report(std::ostream& out, const MetricsReport& r) {
  out << std::fixed << std::setprecision(4);
  out << "macro-F1 " << r.macro_f1 << '\n';
  const char* names[] = {"benign", "attack"};
  for (int k = 0; k < 2; ++k) {
    const auto& m = r.per_class[k];
    out << "  " << std::left << std::setw(7) << names[k] << " precision " << m.precision << "  recall " << m.recall
        << "  F1 " << m.f1 << "  support " << m.support << '\n';
  }
  out << std::defaultfloat;
}

std::vector<FlowRecord> concat(const std::vector<FlowRecord>& a, const std::vector<FlowRecord>& b) {
  std::vector<FlowRecord> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

std::string_view to_string(EvalSplit s) {
  switch (s) {
    case EvalSplit::kAll: return "all";
    case EvalSplit::kTrain: return "train";
    case EvalSplit::kVal: return "val";
    case EvalSplit::kTest: return "test";
  }
  return "test";
}

std::string_view to_string(SweepKind k) { return k == SweepKind::kFraction ? "fraction" : "sigma"; }

std::vector<FlowRecord> training_subset(const PreparedData& data, const TrainConfig& t, std::uint64_t seed) {
  const double keep = std::min(1.0, t.train_fraction / data.fractions.train);
  return keep >= 1.0 ? data.split.train : stratified_subsample(data.split.train, keep, seed);
}

}  // namespace

EvalSplit parse_eval_split(std::string_view s) {
  if (s == "all") return EvalSplit::kAll;
  if (s == "train") return EvalSplit::kTrain;
  if (s == "val") return EvalSplit::kVal;
  if (s == "test") return EvalSplit::kTest;
  throw InputError("unknown split '" + std::string(s) + "' (all|train|val|test)");
}

SweepKind parse_sweep_kind(std::string_view s) {
  if (s == "fraction") return SweepKind::kFraction;
  if (s == "sigma") return SweepKind::kSigma;
  throw InputError("unknown sweep kind '" + std::string(s) + "' (fraction|sigma)");
}

RunManifest cmd_build_graph(const RunConfig& cfg, std::ostream& out) {
  cfg.validate();
  Run run("build-graph", cfg);
  const ParsedFlows parsed = load_input(cfg, run);
  const PreparedData data = prepare_dataset(parsed.records, parsed.feature_names, cfg.data_options());
  const TrafficGraph g = build_graph(concat(concat(data.split.train, data.split.val), data.split.test));

  {
    std::ofstream gf(run.path("graph.egcg"), std::ios::binary);
    save_graph(gf, g);
    if (!gf) throw InputError("cannot write " + run.path("graph.egcg"));
  }
  run.added("graph.egcg");
  std::ostringstream ns;
  save_norm_stats(ns, data.norm);
  run.write("norm_stats.txt", ns.str());

  json j;
  j["features"] = parsed.feature_names;
  j["graph"] = summary_json(summarize(g));
  j["splits"]["train"] = summary_json(summarize(build_graph(data.split.train)));
  j["splits"]["val"] = data.split.val.empty() ? json() : summary_json(summarize(build_graph(data.split.val)));
  j["splits"]["test"] = summary_json(summarize(build_graph(data.split.test)));
  run.write("summary.json", j.dump(2) + "\n");

  out << "features " << parsed.feature_names.size() << '\n';
  print_summary(out, "all", summarize(g));
  print_summary(out, "train", summarize(build_graph(data.split.train)));
  if (!data.split.val.empty()) print_summary(out, "val", summarize(build_graph(data.split.val)));
  print_summary(out, "test", summarize(build_graph(data.split.test)));
  return run.finish();
}

RunManifest cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream* progress) {
  cfg.validate();
  Run run("train", cfg);
  run.manifest().variant = cfg.train.variant();
  const ParsedFlows parsed = load_input(cfg, run);
  const PreparedData data = prepare_dataset(parsed.records, parsed.feature_names, cfg.data_options());
  const std::vector<FlowRecord> train_set = training_subset(data, cfg.train, cfg.seed);

  const TrainResult tr = train(train_set, data.split.val, cfg.train, cfg.seed, [&](const EpochRecord& r) {
    if (progress && (r.epoch % 10 == 0 || r.epoch == 1))
      *progress << "epoch " << r.epoch << " L=" << fmt(r.loss) << " L_c=" << fmt(r.loss_c) << " L_k=" << fmt(r.loss_k)
                << " val_f1=" << fmt(r.val_macro_f1) << '\n';
    return true;
  });

  Checkpoint ckpt;
  ckpt.config = cfg;
  ckpt.config.schema = parsed.schema;
  ckpt.config.out_dir = RunConfig{}.out_dir;  // keeps checkpoint bytes independent of where they are written
  ckpt.edge_dim = tr.edge_dim;
  ckpt.params = tr.params;
  ckpt.norm = data.norm;
  ckpt.train_seed = cfg.seed;
  ckpt.best_epoch = tr.best_epoch;
  save_checkpoint_file(run.path("checkpoint.egcm"), ckpt);
  run.added("checkpoint.egcm");
  run.write("history.csv", history_csv(tr.history));
  std::ostringstream ns;
  save_norm_stats(ns, data.norm);
  run.write("norm_stats.txt", ns.str());

  MetricsReport rep = evaluate(tr.params, cfg.train.model, train_set, data.split.test);
  rep.variant = cfg.train.variant();
  run.write("metrics.json", report_to_json(rep) + "\n");

  out << cfg.train.variant() << ": " << tr.history.size() << " epochs, best validation epoch " << tr.best_epoch << '\n';
  out << "test ";
  print_report(out, rep);
  return run.finish();
}

RunManifest cmd_evaluate(const RunConfig& cfg, const EvaluateOptions& opts, std::ostream& out) {
  Run run("evaluate", cfg);
  run.manifest().params = {{"checkpoint", opts.checkpoint}, {"data", opts.data}, {"split", std::string(to_string(opts.split))}};
  const Checkpoint ckpt = load_checkpoint_file(opts.checkpoint);
  run.input(opts.checkpoint);
  run.manifest().variant = ckpt.config.train.variant();
  const std::string data_path = opts.data.empty() ? ckpt.config.input : opts.data;
  const RunConfig& c = ckpt.config;
  RunConfig data_cfg = c;
  data_cfg.input = data_path;
  ParsedFlows parsed = load_input(data_cfg, run);
  if (parsed.feature_names.size() != ckpt.edge_dim)
    throw InputError("data has " + std::to_string(parsed.feature_names.size()) + " features, checkpoint expects " +
                     std::to_string(ckpt.edge_dim));

  const auto remapped = remap_ips(parsed.records, c.range, c.seed);
  std::vector<FlowRecord> context, scored;
  if (opts.split == EvalSplit::kAll) {
    scored = apply_normalizer(remapped, ckpt.norm);
  } else {
    Split s = stratified_split(remapped, c.fractions, c.seed);
    if (opts.split == EvalSplit::kTrain) {
      scored = apply_normalizer(std::move(s.train), ckpt.norm);
    } else {
      context = apply_normalizer(std::move(s.train), ckpt.norm);
      scored = apply_normalizer(opts.split == EvalSplit::kVal ? std::move(s.val) : std::move(s.test), ckpt.norm);
    }
  }
  MetricsReport rep = evaluate(ckpt.params, c.train.model, context, scored);
  rep.variant = c.train.variant();
  run.write("metrics.json", report_to_json(rep) + "\n");
  run.write("metrics.csv", report_to_csv(rep));
  out << to_string(opts.split) << " (" << scored.size() << " flows) ";
  print_report(out, rep);
  return run.finish();
}

RunManifest cmd_sweep(const RunConfig& cfg, const SweepOptions& opts, std::ostream& out) {
  cfg.validate();
  Run run("sweep", cfg);
  run.manifest().variant = cfg.train.variant();
  std::string grid_text;
  for (std::size_t i = 0; i < opts.grid.size(); ++i) grid_text += (i ? "," : "") + fmt(opts.grid[i]);
  run.manifest().params = {{"kind", std::string(to_string(opts.kind))}, {"grid", grid_text}};
  const ParsedFlows parsed = load_input(cfg, run);
  const PreparedData data = prepare_dataset(parsed.records, parsed.feature_names, cfg.data_options());

  std::vector<SweepRow> rows;
  if (opts.kind == SweepKind::kFraction) {
    const std::vector<double> grid = opts.grid.empty() ? default_fraction_grid() : opts.grid;
    for (double f : grid)
      if (!(f > 0.0 && f <= 1.0)) throw InputError("fraction grid values must lie in (0, 1]");
    rows = fraction_sweep(data, cfg.train, grid);
  } else {
    std::vector<std::size_t> grid = default_sigma_grid();
    if (!opts.grid.empty()) {
      grid.clear();
      for (double s : opts.grid) {
        if (s < 0 || s != std::floor(s)) throw InputError("sigma grid values must be non-negative integers");
        grid.push_back(static_cast<std::size_t>(s));
      }
    }
    rows = mixup_count_sweep(data, cfg.train, grid);
  }
  const std::string name = "sweep_" + std::string(to_string(opts.kind)) + ".csv";
  run.write(name, sweep_to_csv(rows));
  for (const auto& r : rows)
    out << to_string(opts.kind) << '=' << fmt(r.value) << "  macro-F1 " << fmt(r.macro_f1_mean) << " +/- "
        << fmt(r.macro_f1_std) << "  (" << r.seed_count << " seeds)\n";
  return run.finish();
}

RunManifest cmd_synth(const RunConfig& cfg, const SyntheticSpec& spec, std::ostream& out) {
  Run run("synth", cfg);
  run.manifest().params = {{"flows", std::to_string(spec.n_flows)},
                           {"endpoints", std::to_string(spec.n_endpoints)},
                           {"attack_ratio", fmt(spec.attack_ratio)},
                           {"separation", fmt(spec.separation)},
                           {"dim", std::to_string(spec.feature_dim)},
                           {"seed", std::to_string(spec.seed)}};
  const auto records = generate_synthetic(spec);
  std::ostringstream os;
  write_flow_csv(os, records, synthetic_feature_names(spec.feature_dim));
  run.write("flows.csv", os.str());
  std::size_t attacks = 0;
  for (const auto& r : records) attacks += r.label == kAttack;
  out << "wrote " << run.path("flows.csv") << ": " << records.size() << " flows, " << attacks << " attack\n";
  return run.finish();
}

ReplayReport cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out) {
  std::ifstream in(manifest_path, std::ios::binary);
  if (!in) throw InputError("cannot open " + manifest_path);
  std::stringstream ss;
  ss << in.rdbuf();
  ReplayReport rep;
  rep.original = manifest_from_json(ss.str());
  const RunManifest& m = rep.original;
  for (const auto& d : m.inputs)
    if (file_sha256(d.path) != d.sha256) throw InputError("input changed since the recorded run: " + d.path);

  RunConfig cfg;
  try {
    cfg = parse_ini(m.config_ini);
  } catch (const InputError& e) {
    throw FormatError(std::string("manifest config: ") + e.what());
  }
  cfg.out_dir = out_dir;
  auto param = [&](const std::string& k) {
    const auto it = m.params.find(k);
    if (it == m.params.end()) throw FormatError("manifest: missing parameter " + k);
    return it->second;
  };

  if (m.command == "build-graph") {
    rep.rerun = cmd_build_graph(cfg, out);
  } else if (m.command == "train") {
    rep.rerun = cmd_train(cfg, out);
  } else if (m.command == "evaluate") {
    rep.rerun = cmd_evaluate(cfg, {param("checkpoint"), param("data"), parse_eval_split(param("split"))}, out);
  } else if (m.command == "sweep") {
    SweepOptions o;
    o.kind = parse_sweep_kind(param("kind"));
    std::istringstream g(param("grid"));
    for (std::string tok; std::getline(g, tok, ',');) o.grid.push_back(to_double(tok));
    rep.rerun = cmd_sweep(cfg, o, out);
  } else if (m.command == "synth") {
    SyntheticSpec s;
    s.n_flows = to_size(param("flows"));
    s.n_endpoints = to_size(param("endpoints"));
    s.attack_ratio = to_double(param("attack_ratio"));
    s.separation = to_double(param("separation"));
    s.feature_dim = to_size(param("dim"));
    s.seed = to_size(param("seed"));
    rep.rerun = cmd_synth(cfg, s, out);
  } else {
    throw FormatError("manifest: unknown command '" + m.command + "'");
  }

  for (const auto& d : m.outputs) {
    const auto it = std::find_if(rep.rerun.outputs.begin(), rep.rerun.outputs.end(),
                                 [&](const FileDigest& r) { return r.path == d.path; });
    if (it == rep.rerun.outputs.end() || it->stable_sha256 != d.stable_sha256) rep.mismatched.push_back(d.path);
  }
  for (const auto& d : m.outputs)
    out << (std::find(rep.mismatched.begin(), rep.mismatched.end(), d.path) == rep.mismatched.end() ? "same    "
                                                                                                     : "DIFFERS ")
        << d.path << '\n';
  return rep;
}

}  // namespace egcm
