#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "egcm/flow.hpp"

namespace egcm {

struct ClassMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

// counts[actual][predicted]
struct Confusion {
  std::array<std::array<std::size_t, 2>, 2> counts{};
  std::size_t total() const { return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1]; }
};

struct MetricsReport {
  std::array<ClassMetrics, 2> per_class{};
  double macro_f1 = 0.0;
  // Across seeds; a single run has std 0.
  double macro_f1_std = 0.0;
  std::vector<double> seed_macro_f1;
  Confusion confusion;
  std::string config_fingerprint;
  std::string variant;
  double wall_seconds = 0.0;
};

Confusion confusion_matrix(std::span<const int> labels, std::span<const int> predictions);

// Per-class precision/recall/F1 (0 where undefined) and their unweighted
// mean. Warns when a class has no true members.
MetricsReport compute_metrics(const Confusion& c);
MetricsReport compute_metrics(std::span<const int> labels, std::span<const int> predictions);

// Mean of per-seed reports; macro_f1_std is the population std of the
// per-seed macro-F1 values. Confusion counts are summed.
MetricsReport aggregate_reports(std::span<const MetricsReport> runs);

std::string report_to_json(const MetricsReport& r);
MetricsReport report_from_json(const std::string& text);
// One header line and one data line.
std::string report_to_csv(const MetricsReport& r);

}  // namespace egcm
