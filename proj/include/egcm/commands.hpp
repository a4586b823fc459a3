#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "egcm/config.hpp"
#include "egcm/manifest.hpp"

// CLI subcommands. Each writes its outputs and a manifest.json into
// cfg.out_dir and returns the manifest.
namespace egcm {

RunManifest cmd_build_graph(const RunConfig& cfg, std::ostream& out);

// Writes checkpoint.egcm, history.csv, norm_stats.txt and metrics.json
// (test split). The training seed is cfg.seed.
RunManifest cmd_train(const RunConfig& cfg, std::ostream& out, std::ostream* progress = nullptr);

enum class EvalSplit { kAll, kTrain, kVal, kTest };

struct EvaluateOptions {
  std::string checkpoint;
  std::string data;  // empty: the checkpoint's training input
  EvalSplit split = EvalSplit::kTest;
};

// Writes metrics.json and metrics.csv. Only cfg.out_dir is used.
RunManifest cmd_evaluate(const RunConfig& cfg, const EvaluateOptions& opts, std::ostream& out);

enum class SweepKind { kFraction, kSigma };

struct SweepOptions {
  SweepKind kind = SweepKind::kFraction;
  std::vector<double> grid;  // empty: paper grid for the kind
};

// Writes sweep_<kind>.csv.
RunManifest cmd_sweep(const RunConfig& cfg, const SweepOptions& opts, std::ostream& out);

// Writes flows.csv.
RunManifest cmd_synth(const RunConfig& cfg, const SyntheticSpec& spec, std::ostream& out);

struct ReplayReport {
  RunManifest original;
  RunManifest rerun;
  std::vector<std::string> mismatched;  // output paths whose stable digest differs
  bool identical() const { return mismatched.empty(); }
};

// Re-runs a manifest into `out_dir` after checking the input digests.
ReplayReport cmd_replay(const std::string& manifest_path, const std::string& out_dir, std::ostream& out);

EvalSplit parse_eval_split(std::string_view s);
SweepKind parse_sweep_kind(std::string_view s);

}  // namespace egcm
