#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "egcm/augment.hpp"
#include "egcm/contrastive.hpp"
#include "egcm/flow.hpp"
#include "egcm/metrics.hpp"
#include "egcm/model.hpp"

namespace egcm {

struct TrainConfig {
  std::size_t epochs = 200;
  double lr = 0.01;
  ModelConfig model;
  MixupConfig mixup;
  ContrastiveConfig contrastive;
  bool enable_mixup = true;
  bool enable_contrastive = true;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  // Share of the whole dataset used for training (the train split holds
  // `SplitFractions::train` of it); values at or above that use all of it.
  double train_fraction = 1.0;

  void validate() const;
  // "EG-ConMix", "EG-Con", "EG-Mix" or "E-GraphSAGE".
  std::string variant() const;
};

// Mean binary cross-entropy of attack probabilities `p` over `rows`,
// p clamped to [clamp, 1 - clamp]. Throws on an empty mask.
double cross_entropy(std::span<const double> p, std::span<const int> labels, std::span<const std::size_t> rows,
                     double clamp = 1e-12);

inline double total_loss(double loss_c, double loss_k, double theta) { return loss_c + theta * loss_k; }

struct EpochRecord {
  std::size_t epoch = 0;
  double loss_c = 0.0;
  double loss_k = 0.0;  // 0 when the contrastive term is off
  double loss = 0.0;
  double val_macro_f1 = 0.0;  // NaN without a validation split
  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  ParameterSet params;  // best validation epoch
  std::size_t best_epoch = 0;
  std::size_t edge_dim = 0;
  std::vector<EpochRecord> history;
};

// Called after every epoch; returning false stops training early.
using EpochCallback = std::function<bool(const EpochRecord&)>;

/// Full-graph training on the graph built from `train_records`.
///
/// Each epoch draws a fresh MP-Mixup batch (when enabled) and injects it as
/// virtual dyads, runs the forward pass with dropout, takes cross-entropy
/// over all real and virtual edges plus theta * InfoNCE (when enabled), and
/// applies one Adam step. Validation edges are scored on the train+val
/// union graph; the returned parameters are those of the best validation
/// epoch (latest on ties). Throws NumericalError on a non-finite loss.
TrainResult train(const std::vector<FlowRecord>& train_records, const std::vector<FlowRecord>& val_records,
                  const TrainConfig& cfg, std::uint64_t seed, const EpochCallback& on_epoch = {});

// Class predictions (argmax) for `scored`, using `context` as the rest of
// the graph. Only the scored edges' predictions are returned.
std::vector<int> predict(const ParameterSet& params, const ModelConfig& cfg, const std::vector<FlowRecord>& context,
                         const std::vector<FlowRecord>& scored);

MetricsReport evaluate(const ParameterSet& params, const ModelConfig& cfg, const std::vector<FlowRecord>& context,
                       const std::vector<FlowRecord>& scored);

// Normalized, remapped, split data ready for training.
struct PreparedData {
  Split split;
  NormStats norm;
  std::vector<std::string> feature_names;
  SplitFractions fractions;
};

struct DataOptions {
  IpRange range;
  SplitFractions fractions;
  NormMethod norm = NormMethod::kZScore;
  std::uint64_t seed = 1;  // split and remap
};

// remap -> split -> fit normalizer on train -> normalize every split.
PreparedData prepare_dataset(const std::vector<FlowRecord>& records, std::vector<std::string> feature_names,
                             const DataOptions& opts);

struct SeedRuns {
  MetricsReport aggregate;
  std::vector<MetricsReport> per_seed;
};

// Train on the (sub-sampled) train split and test on the test split once per
// seed. Seeds run on up to EGCM_THREADS workers; results are keyed by seed.
SeedRuns run_seeds(const PreparedData& data, const TrainConfig& cfg);

struct SweepRow {
  double value = 0.0;  // training fraction or sigma
  std::size_t seed_count = 0;
  double macro_f1_mean = 0.0;
  double macro_f1_std = 0.0;
  double wall_seconds = 0.0;
};

std::vector<double> default_fraction_grid();
std::vector<std::size_t> default_sigma_grid();

std::vector<SweepRow> fraction_sweep(const PreparedData& data, const TrainConfig& cfg, std::span<const double> fractions);
std::vector<SweepRow> mixup_count_sweep(const PreparedData& data, const TrainConfig& cfg,
                                        std::span<const std::size_t> sigmas);

// CSV with header fraction_or_sigma,seed_count,macro_f1_mean,macro_f1_std,wall_seconds.
std::string sweep_to_csv(std::span<const SweepRow> rows);

// Worker count from EGCM_THREADS (default 1).
std::size_t worker_threads();

}  // namespace egcm
