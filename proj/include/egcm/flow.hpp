#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "egcm/error.hpp"
#include "egcm/log.hpp"

namespace egcm {

inline constexpr int kBenign = 0;
inline constexpr int kAttack = 1;

struct Ipv4 {
  std::uint32_t value = 0;

  // Strict dotted-quad parse; nullopt on anything else.
  static std::optional<Ipv4> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const Ipv4&, const Ipv4&) = default;
};

struct Endpoint {
  Ipv4 ip;
  std::uint16_t port = 0;

  friend auto operator<=>(const Endpoint&, const Endpoint&) = default;
};

struct FlowRecord {
  Endpoint src;
  Endpoint dst;
  std::vector<double> features;
  int label = kBenign;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

enum class ColumnKind { kNumeric, kCategorical, kIgnored };

struct FeatureColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // One-hot vocabulary for categorical columns. Left empty, it is filled from
  // the data (sorted) when parsing. Values outside it encode as all zeros.
  std::vector<std::string> categories;
};

/// Column layout of a flow CSV.
///
/// With `features` empty, every header column other than the endpoint and
/// label columns (and those in `ignored`) is taken as a numeric feature in
/// header order.
struct FlowSchema {
  std::string src_ip = "src_ip";
  std::string src_port = "src_port";
  std::string dst_ip = "dst_ip";
  std::string dst_port = "dst_port";
  std::string label = "label";
  std::vector<FeatureColumn> features;
  std::vector<std::string> ignored;

  // Throws InputError when endpoint/label columns overlap the features.
  void validate() const;
};

struct RowError : InputError {
  RowError(std::size_t row, const std::string& what)
      : InputError("row " + std::to_string(row) + ": " + what), row(row) {}
  std::size_t row;  // 1-based data row index (header excluded)
};

struct ParsedFlows {
  std::vector<FlowRecord> records;
  FlowSchema schema;                       // features explicit, vocabularies filled
  std::vector<std::string> feature_names;  // after one-hot expansion
};

ParsedFlows parse_flow_csv(std::istream& in, const FlowSchema& schema);
ParsedFlows parse_flow_csv_file(const std::string& path, const FlowSchema& schema);

// Writes src_ip,src_port,dst_ip,dst_port,<feature_names...>,label with
// shortest round-trip number formatting.
void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records,
                    const std::vector<std::string>& feature_names);

struct IpRange {
  Ipv4 lo{0xAC100001u};  // 172.16.0.1
  Ipv4 hi{0xAC1F0001u};  // 172.31.0.1
  std::uint64_t size() const { return std::uint64_t{hi.value} - lo.value + 1; }
};

struct CapacityError : InputError {
  CapacityError(std::uint64_t needed, std::uint64_t available)
      : InputError("IP remap range too small: need " + std::to_string(needed) + " addresses, have " +
                   std::to_string(available)),
        needed(needed),
        available(available) {}
  std::uint64_t needed;
  std::uint64_t available;
};

/// Replaces every IP with a random address from `range`.
///
/// Distinct source IPs get distinct addresses drawn without replacement;
/// destination IPs reuse the source table when present there, otherwise
/// they take further draws from the same pool. Assignment follows the sorted
/// original addresses, so the result does not depend on record order.
std::vector<FlowRecord> remap_ips(const std::vector<FlowRecord>& records, const IpRange& range, std::uint64_t seed);

enum class NormMethod { kZScore, kMinMax };

struct NormStats {
  NormMethod method = NormMethod::kZScore;
  // zscore: (mean, stddev); minmax: (min, max).
  std::vector<double> first;
  std::vector<double> second;
  std::size_t dim() const { return first.size(); }
};

NormStats fit_normalizer(const std::vector<FlowRecord>& records, NormMethod method = NormMethod::kZScore);
std::vector<FlowRecord> apply_normalizer(std::vector<FlowRecord> records, const NormStats& stats);
void save_norm_stats(std::ostream& out, const NormStats& stats);
NormStats load_norm_stats(std::istream& in);
std::string_view to_string(NormMethod m);
NormMethod parse_norm_method(std::string_view s);

struct SplitFractions {
  double train = 0.7;
  double val = 0.1;
  double test = 0.2;
};

struct Split {
  std::vector<FlowRecord> train;
  std::vector<FlowRecord> val;
  std::vector<FlowRecord> test;
};

/// Per-class shuffle and proportional allocation. Each split keeps the
/// original record order. Floor rounding; remainders stay in train.
Split stratified_split(const std::vector<FlowRecord>& records, const SplitFractions& fractions, std::uint64_t seed);

// Keeps round(keep * n_c) records of each class c, chosen at random.
std::vector<FlowRecord> stratified_subsample(const std::vector<FlowRecord>& records, double keep, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t n_endpoints = 5000;
  std::size_t n_flows = 5000;
  double attack_ratio = 0.05;
  double separation = 6.0;
  std::size_t feature_dim = 8;
  std::uint64_t seed = 1;
};

// Gaussian blobs at -separation/2 (benign) and +separation/2 (attack); exactly
// round(n_flows * attack_ratio) attack flows.
std::vector<FlowRecord> generate_synthetic(const SyntheticSpec& spec);
std::vector<std::string> synthetic_feature_names(std::size_t dim);

}  // namespace egcm
