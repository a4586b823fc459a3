#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "egcm/flow.hpp"
#include "egcm/train.hpp"

namespace egcm {

/// Everything one CLI run needs. Defaults are the paper's settings.
///
/// Text form is INI with sections [data], [schema], [model], [mixup],
/// [contrastive], [train] and [run]. Unknown sections or keys are errors.
struct RunConfig {
  std::string input;  // flow CSV
  std::string out_dir = "egcm_out";
  std::uint64_t seed = 1;  // remap and split
  FlowSchema schema;
  IpRange range;
  SplitFractions fractions;
  NormMethod norm = NormMethod::kZScore;
  TrainConfig train;

  DataOptions data_options() const { return {range, fractions, norm, seed}; }
  // Throws InputError on out-of-range values.
  void validate() const;
};

std::string to_ini(const RunConfig& cfg);
// Throws InputError with the offending key on any problem.
RunConfig parse_ini(std::string_view text);
RunConfig load_config(const std::string& path);

// "name", "name:categorical" or "name:categorical(a|b)" per feature column.
std::string format_feature_column(const FeatureColumn& c);
FeatureColumn parse_feature_column(std::string_view spec);

}  // namespace egcm
