#include "egcm/flow.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "egcm/csv.hpp"
#include "egcm/rng.hpp"

namespace egcm {

std::optional<Ipv4> Ipv4::parse(std::string_view text) {
  std::uint32_t value = 0;
  const char* p = text.data();
  const char* end = p + text.size();
  for (int octet = 0; octet < 4; ++octet) {
    if (octet > 0) {
      if (p == end || *p != '.') return std::nullopt;
      ++p;
    }
    unsigned v = 0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc{} || next == p || next - p > 3 || v > 255) return std::nullopt;
    p = next;
    value = (value << 8) | v;
  }
  if (p != end) return std::nullopt;
  return Ipv4{value};
}

std::string Ipv4::to_string() const {
  return std::to_string(value >> 24) + '.' + std::to_string((value >> 16) & 0xff) + '.' +
         std::to_string((value >> 8) & 0xff) + '.' + std::to_string(value & 0xff);
}

void FlowSchema::validate() const {
  const std::string reserved[] = {src_ip, src_port, dst_ip, dst_port, label};
  std::set<std::string> seen;
  for (const auto& r : reserved) {
    if (!seen.insert(r).second) throw InputError("schema column used twice: " + r);
  }
  for (const auto& f : features) {
    if (f.kind == ColumnKind::kIgnored) continue;
    if (!seen.insert(f.name).second)
      throw InputError("feature column overlaps an endpoint/label column or repeats: " + f.name);
  }
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::uint16_t parse_port(std::size_t row, std::string_view s, const std::string& col) {
  s = trim(s);
  unsigned long v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc{} && p == s.data() + s.size() && !s.empty() && v <= 65535)
    return static_cast<std::uint16_t>(v);
  // Some NetFlow exports write ports as floats ("80.0").
  if (auto d = parse_double(s); d && *d >= 0 && *d <= 65535 && std::floor(*d) == *d)
    return static_cast<std::uint16_t>(*d);
  throw RowError(row, "column " + col + ": invalid port '" + std::string(s) + "'");
}

Ipv4 parse_ip(std::size_t row, std::string_view s, const std::string& col) {
  if (auto ip = Ipv4::parse(trim(s))) return *ip;
  throw RowError(row, "column " + col + ": invalid IPv4 address '" + std::string(s) + "'");
}

int parse_label(std::size_t row, std::string_view s, const std::string& col) {
  auto d = parse_double(s);
  if (d && (*d == 0.0 || *d == 1.0)) return static_cast<int>(*d);
  throw RowError(row, "column " + col + ": label must be 0 or 1, got '" + std::string(s) + "'");
}

std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

ParsedFlows parse_flow_csv(std::istream& in, const FlowSchema& schema) {
  schema.validate();
  ParsedFlows out;
  out.schema = schema;
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next(header)) return out;  // empty input

  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col.emplace(std::string(trim(header[i])), i);
  auto require = [&](const std::string& name) {
    auto it = col.find(name);
    if (it == col.end()) throw SchemaError(name);
    return it->second;
  };
  const std::size_t c_sip = require(schema.src_ip);
  const std::size_t c_sport = require(schema.src_port);
  const std::size_t c_dip = require(schema.dst_ip);
  const std::size_t c_dport = require(schema.dst_port);
  const std::size_t c_label = require(schema.label);

  auto& features = out.schema.features;
  if (features.empty()) {
    const std::set<std::string> reserved{schema.src_ip, schema.src_port, schema.dst_ip, schema.dst_port,
                                         schema.label};
    for (const auto& h : header) {
      std::string name(trim(h));
      if (reserved.contains(name) || std::find(schema.ignored.begin(), schema.ignored.end(), name) != schema.ignored.end())
        continue;
      features.push_back(FeatureColumn{name, ColumnKind::kNumeric, {}});
    }
  }
  std::vector<std::size_t> fcol;
  for (const auto& f : features) fcol.push_back(f.kind == ColumnKind::kIgnored ? 0 : require(f.name));

  // Rows are kept as text until categorical vocabularies are known.
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  while (reader.next(row)) {
    if (row.size() == 1 && trim(row[0]).empty()) continue;  // blank line
    if (row.size() != header.size())
      throw RowError(rows.size() + 1, "expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(row.size()));
    rows.push_back(row);
  }

  for (std::size_t k = 0; k < features.size(); ++k) {
    auto& f = features[k];
    if (f.kind != ColumnKind::kCategorical || !f.categories.empty()) continue;
    std::set<std::string> vocab;
    for (const auto& r : rows) vocab.insert(std::string(trim(r[fcol[k]])));
    f.categories.assign(vocab.begin(), vocab.end());
  }
  for (const auto& f : features) {
    if (f.kind == ColumnKind::kNumeric) out.feature_names.push_back(f.name);
    if (f.kind == ColumnKind::kCategorical)
      for (const auto& c : f.categories) out.feature_names.push_back(f.name + "=" + c);
  }

  out.records.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const std::size_t rowno = i + 1;
    FlowRecord rec;
    rec.src = {parse_ip(rowno, r[c_sip], schema.src_ip), parse_port(rowno, r[c_sport], schema.src_port)};
    rec.dst = {parse_ip(rowno, r[c_dip], schema.dst_ip), parse_port(rowno, r[c_dport], schema.dst_port)};
    rec.label = parse_label(rowno, r[c_label], schema.label);
    rec.features.reserve(out.feature_names.size());
    for (std::size_t k = 0; k < features.size(); ++k) {
      const auto& f = features[k];
      const std::string_view cell = trim(r[fcol[k]]);
      if (f.kind == ColumnKind::kNumeric) {
        auto v = parse_double(cell);
        if (!v) throw RowError(rowno, "column " + f.name + ": cannot parse '" + std::string(cell) + "' as a number");
        rec.features.push_back(*v);
      } else if (f.kind == ColumnKind::kCategorical) {
        for (const auto& c : f.categories) rec.features.push_back(cell == c ? 1.0 : 0.0);
      }
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

ParsedFlows parse_flow_csv_file(const std::string& path, const FlowSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return parse_flow_csv(in, schema);
}

void write_flow_csv(std::ostream& out, const std::vector<FlowRecord>& records,
                    const std::vector<std::string>& feature_names) {
  CsvWriter w(out);
  std::vector<std::string> fields{"src_ip", "src_port", "dst_ip", "dst_port"};
  fields.insert(fields.end(), feature_names.begin(), feature_names.end());
  fields.emplace_back("label");
  w.write(fields);
  for (const auto& r : records) {
    if (r.features.size() != feature_names.size())
      throw ShapeError("record feature count does not match the feature names");
    fields.clear();
    fields.push_back(r.src.ip.to_string());
    fields.push_back(std::to_string(r.src.port));
    fields.push_back(r.dst.ip.to_string());
    fields.push_back(std::to_string(r.dst.port));
    for (double v : r.features) fields.push_back(format_double(v));
    fields.push_back(std::to_string(r.label));
    w.write(fields);
  }
}

namespace {

// Draws `count` distinct offsets in [0, n) without replacement (sparse
// Fisher-Yates, so n can be large).
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::size_t count, Rng& rng) {
  std::unordered_map<std::uint64_t, std::uint64_t> swapped;
  std::vector<std::uint64_t> out;
  out.reserve(count);
  auto at = [&](std::uint64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  for (std::size_t k = 0; k < count; ++k) {
    std::uniform_int_distribution<std::uint64_t> pick(k, n - 1);
    const std::uint64_t j = pick(rng);
    const std::uint64_t vj = at(j);
    swapped[j] = at(k);
    out.push_back(vj);
  }
  return out;
}

}  // namespace

std::vector<FlowRecord> remap_ips(const std::vector<FlowRecord>& records, const IpRange& range, std::uint64_t seed) {
  if (range.hi < range.lo) throw InputError("IP remap range is empty");
  std::set<Ipv4> sources;
  std::set<Ipv4> dest_only;
  for (const auto& r : records) sources.insert(r.src.ip);
  for (const auto& r : records)
    if (!sources.contains(r.dst.ip)) dest_only.insert(r.dst.ip);

  const std::uint64_t needed = sources.size() + dest_only.size();
  if (needed > range.size()) throw CapacityError(needed, range.size());

  Rng rng = make_rng(seed, Stream::kRemap);
  const auto offsets = sample_without_replacement(range.size(), needed, rng);
  std::map<Ipv4, Ipv4> table;
  std::size_t k = 0;
  for (const auto& ip : sources) table[ip] = Ipv4{static_cast<std::uint32_t>(range.lo.value + offsets[k++])};
  for (const auto& ip : dest_only) table[ip] = Ipv4{static_cast<std::uint32_t>(range.lo.value + offsets[k++])};

  std::vector<FlowRecord> out = records;
  for (auto& r : out) {
    r.src.ip = table.at(r.src.ip);
    r.dst.ip = table.at(r.dst.ip);
  }
  return out;
}

std::string_view to_string(NormMethod m) { return m == NormMethod::kZScore ? "zscore" : "minmax"; }

NormMethod parse_norm_method(std::string_view s) {
  if (s == "zscore") return NormMethod::kZScore;
  if (s == "minmax") return NormMethod::kMinMax;
  throw InputError("unknown normalization method: " + std::string(s));
}

NormStats fit_normalizer(const std::vector<FlowRecord>& records, NormMethod method) {
  if (records.empty()) throw InputError("cannot fit a normalizer on zero records");
  const std::size_t d = records.front().features.size();
  for (const auto& r : records)
    if (r.features.size() != d) throw ShapeError("records disagree on feature dimension");
  NormStats s;
  s.method = method;
  if (method == NormMethod::kZScore) {
    s.first.assign(d, 0.0);
    s.second.assign(d, 0.0);
    const double n = static_cast<double>(records.size());
    for (const auto& r : records)
      for (std::size_t j = 0; j < d; ++j) s.first[j] += r.features[j];
    for (double& m : s.first) m /= n;
    for (const auto& r : records)
      for (std::size_t j = 0; j < d; ++j) {
        const double dv = r.features[j] - s.first[j];
        s.second[j] += dv * dv;
      }
    for (double& v : s.second) {
      v = std::sqrt(v / n);
      if (v == 0.0) v = 1.0;
    }
  } else {
    s.first.assign(d, INFINITY);
    s.second.assign(d, -INFINITY);
    for (const auto& r : records)
      for (std::size_t j = 0; j < d; ++j) {
        s.first[j] = std::min(s.first[j], r.features[j]);
        s.second[j] = std::max(s.second[j], r.features[j]);
      }
  }
  return s;
}

std::vector<FlowRecord> apply_normalizer(std::vector<FlowRecord> records, const NormStats& stats) {
  for (auto& r : records) {
    if (r.features.size() != stats.dim())
      throw ShapeError("normalizer has " + std::to_string(stats.dim()) + " features, record has " +
                       std::to_string(r.features.size()));
    for (std::size_t j = 0; j < r.features.size(); ++j) {
      double& x = r.features[j];
      if (stats.method == NormMethod::kZScore) {
        x = (x - stats.first[j]) / stats.second[j];
      } else {
        const double range = stats.second[j] - stats.first[j];
        x = range == 0.0 ? 0.0 : (x - stats.first[j]) / range;
      }
    }
  }
  return records;
}

void save_norm_stats(std::ostream& out, const NormStats& stats) {
  out << "egcm-normstats 1\n";
  out << "method " << to_string(stats.method) << '\n';
  out << "dim " << stats.dim() << '\n';
  for (std::size_t j = 0; j < stats.dim(); ++j)
    out << format_double(stats.first[j]) << ' ' << format_double(stats.second[j]) << '\n';
}

NormStats load_norm_stats(std::istream& in) {
  std::string magic, key, method;
  int version = 0;
  std::size_t dim = 0;
  if (!(in >> magic >> version) || magic != "egcm-normstats") throw FormatError("not a normalizer stats file");
  if (version != 1) throw FormatError("unsupported normalizer stats version " + std::to_string(version));
  if (!(in >> key >> method) || key != "method") throw FormatError("normalizer stats: missing method");
  if (!(in >> key >> dim) || key != "dim") throw FormatError("normalizer stats: missing dim");
  NormStats s;
  try {
    s.method = parse_norm_method(method);
  } catch (const InputError& e) {
    throw FormatError(e.what());
  }
  s.first.resize(dim);
  s.second.resize(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    std::string a, b;
    if (!(in >> a >> b)) throw FormatError("normalizer stats: truncated");
    auto va = parse_double(a);
    auto vb = parse_double(b);
    if (!va || !vb) throw FormatError("normalizer stats: bad number");
    s.first[j] = *va;
    s.second[j] = *vb;
  }
  return s;
}

Split stratified_split(const std::vector<FlowRecord>& records, const SplitFractions& fr, std::uint64_t seed) {
  if (!(fr.train > 0 && fr.val > 0 && fr.test > 0) || std::abs(fr.train + fr.val + fr.test - 1.0) > 1e-9)
    throw InputError("split fractions must be positive and sum to 1");
  Rng rng = make_rng(seed, Stream::kSplit);
  std::vector<int> which(records.size(), 0);  // 0 train, 1 val, 2 test
  for (int cls : {kBenign, kAttack}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].label == cls) idx.push_back(i);
    if (idx.empty()) continue;
    if (idx.size() < 3) {
      warn("class " + std::to_string(cls) + " has " + std::to_string(idx.size()) +
           " records, fewer than the number of splits; all go to train");
      continue;
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const double n = static_cast<double>(idx.size());
    const auto n_val = static_cast<std::size_t>(std::floor(n * fr.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * fr.test + 1e-9));
    for (std::size_t k = 0; k < n_val; ++k) which[idx[k]] = 1;
    for (std::size_t k = n_val; k < n_val + n_test; ++k) which[idx[k]] = 2;
  }
  Split s;
  for (std::size_t i = 0; i < records.size(); ++i) {
    auto& dst = which[i] == 0 ? s.train : which[i] == 1 ? s.val : s.test;
    dst.push_back(records[i]);
  }
  return s;
}

std::vector<FlowRecord> stratified_subsample(const std::vector<FlowRecord>& records, double keep, std::uint64_t seed) {
  if (!(keep > 0.0 && keep <= 1.0)) throw InputError("subsample fraction must be in (0, 1]");
  if (keep == 1.0) return records;
  Rng rng = make_rng(seed, Stream::kSampling);
  std::vector<bool> chosen(records.size(), false);
  for (int cls : {kBenign, kAttack}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < records.size(); ++i)
      if (records[i].label == cls) idx.push_back(i);
    if (idx.empty()) continue;
    std::shuffle(idx.begin(), idx.end(), rng);
    auto n_keep = static_cast<std::size_t>(std::llround(keep * static_cast<double>(idx.size())));
    n_keep = std::clamp<std::size_t>(n_keep, 1, idx.size());
    for (std::size_t k = 0; k < n_keep; ++k) chosen[idx[k]] = true;
  }
  std::vector<FlowRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (chosen[i]) out.push_back(records[i]);
  return out;
}

std::vector<std::string> synthetic_feature_names(std::size_t dim) {
  std::vector<std::string> names;
  for (std::size_t j = 0; j < dim; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

std::vector<FlowRecord> generate_synthetic(const SyntheticSpec& spec) {
  if (!(spec.attack_ratio > 0.0 && spec.attack_ratio < 1.0)) throw InputError("attack_ratio must lie in (0, 1)");
  if (spec.n_endpoints < 2) throw InputError("need at least two endpoints");
  if (spec.feature_dim == 0) throw InputError("feature_dim must be positive");
  Rng rng = make_rng(spec.seed, Stream::kSynth);

  std::set<Endpoint> pool_set;
  std::vector<Endpoint> pool;
  std::uniform_int_distribution<std::uint32_t> host(1, 0x00FFFFFE);
  std::uniform_int_distribution<std::uint32_t> port(1, 65535);
  while (pool.size() < spec.n_endpoints) {
    Endpoint e{Ipv4{0x0A000000u | host(rng)}, static_cast<std::uint16_t>(port(rng))};
    if (pool_set.insert(e).second) pool.push_back(e);
  }

  const auto n_attack = static_cast<std::size_t>(std::llround(spec.attack_ratio * static_cast<double>(spec.n_flows)));
  std::vector<int> labels(spec.n_flows, kBenign);
  std::fill_n(labels.begin(), std::min(n_attack, spec.n_flows), kAttack);
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<FlowRecord> out;
  out.reserve(spec.n_flows);
  for (std::size_t i = 0; i < spec.n_flows; ++i) {
    FlowRecord r;
    const std::size_t a = pick(rng);
    std::size_t b = pick(rng);
    while (b == a) b = pick(rng);
    r.src = pool[a];
    r.dst = pool[b];
    r.label = labels[i];
    const double mean = (r.label == kAttack ? 0.5 : -0.5) * spec.separation;
    r.features.resize(spec.feature_dim);
    for (double& x : r.features) x = mean + noise(rng);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace egcm
