#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "egcm/csv.hpp"
#include "egcm/flow.hpp"
#include "egcm/metrics.hpp"

using namespace egcm;

namespace {

FlowRecord rec(const char* sip, std::uint16_t sp, const char* dip, std::uint16_t dp, std::vector<double> f, int y) {
  return {{*Ipv4::parse(sip), sp}, {*Ipv4::parse(dip), dp}, std::move(f), y};
}

ParsedFlows parse(const std::string& text, const FlowSchema& schema = {}) {
  std::istringstream in(text);
  return parse_flow_csv(in, schema);
}

}  // namespace

TEST_CASE("IPv4 parsing is strict") {
  CHECK(Ipv4::parse("10.0.0.1")->value == 0x0A000001u);
  CHECK(Ipv4::parse("255.255.255.255")->to_string() == "255.255.255.255");
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.1.1.1", "a.b.c.d", "1..2.3", " 1.2.3.4x", "1.2.3.4 "})
    CHECK_FALSE(Ipv4::parse(bad).has_value());
}

TEST_CASE("CSV reader handles quotes, CRLF and BOM") {
  std::istringstream in("\xEF\xBB\xBF" "a,\"b,c\",\"d\"\"e\"\r\n\"multi\nline\",,x\n");
  CsvReader r(in);
  std::vector<std::string> f;
  REQUIRE(r.next(f));
  CHECK(f == std::vector<std::string>{"a", "b,c", "d\"e"});
  REQUIRE(r.next(f));
  CHECK(f == std::vector<std::string>{"multi\nline", "", "x"});
  CHECK_FALSE(r.next(f));
}

TEST_CASE("CSV writer output parses back to the same fields") {
  const std::vector<std::string> fields{"plain", "with,comma", "with\"quote", "line\nbreak", ""};
  std::ostringstream out;
  CsvWriter(out).write(fields);
  std::istringstream in(out.str());
  CsvReader r(in);
  std::vector<std::string> back;
  REQUIRE(r.next(back));
  CHECK(back == fields);
}

TEST_CASE("flow CSV parsing") {
  FlowSchema skip_proto;
  skip_proto.ignored = {"proto"};
  const auto p = parse(
      "src_ip,src_port,dst_ip,dst_port,bytes,proto,label\n"
      "10.0.0.1,80,10.0.0.2,443.0,12.5,tcp,0\n"
      "10.0.0.3,1,10.0.0.1,80,3,udp,1\n",
      skip_proto);
  REQUIRE(p.records.size() == 2);
  CHECK(p.records[0].dst.port == 443);
  CHECK(p.records[1].label == kAttack);
  SUBCASE("all other columns numeric by default fails on text") {
    CHECK_THROWS_AS(parse("src_ip,src_port,dst_ip,dst_port,proto,label\n1.1.1.1,1,2.2.2.2,2,tcp,0\n"), RowError);
  }
  SUBCASE("categorical one-hot with sorted vocabulary") {
    FlowSchema s;
    s.features = {{"bytes", ColumnKind::kNumeric, {}}, {"proto", ColumnKind::kCategorical, {}}};
    const auto q = parse("src_ip,src_port,dst_ip,dst_port,bytes,proto,label\n"
                         "10.0.0.1,80,10.0.0.2,443,12.5,udp,0\n"
                         "10.0.0.3,1,10.0.0.1,80,3,tcp,1\n",
                         s);
    CHECK(q.feature_names == std::vector<std::string>{"bytes", "proto=tcp", "proto=udp"});
    CHECK(q.records[0].features == std::vector<double>{12.5, 0.0, 1.0});
    CHECK(q.schema.features[1].categories == std::vector<std::string>{"tcp", "udp"});
  }
  SUBCASE("ignored columns") {
    FlowSchema s;
    s.ignored = {"proto"};
    const auto q = parse("src_ip,src_port,dst_ip,dst_port,bytes,proto,label\n1.1.1.1,1,2.2.2.2,2,5,tcp,0\n", s);
    CHECK(q.feature_names == std::vector<std::string>{"bytes"});
  }
}

TEST_CASE("flow CSV errors") {
  try {
    parse("src_ip,src_port,dst_ip,dst_port,x\n1.1.1.1,1,2.2.2.2,2,0\n");
    FAIL("expected SchemaError");
  } catch (const SchemaError& e) {
    CHECK(e.column() == "label");
    CHECK(std::string(e.what()).find("label") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("src_ip,src_port,dst_ip,dst_port,label\n1.1.1,1,2.2.2.2,2,0\n"), RowError);
  CHECK_THROWS_AS(parse("src_ip,src_port,dst_ip,dst_port,label\n1.1.1.1,70000,2.2.2.2,2,0\n"), RowError);
  CHECK_THROWS_AS(parse("src_ip,src_port,dst_ip,dst_port,label\n1.1.1.1,1,2.2.2.2,2,2\n"), RowError);
  CHECK_THROWS_AS(parse("src_ip,src_port,dst_ip,dst_port,label\n1.1.1.1,1,2.2.2.2\n"), RowError);
  try {
    parse("src_ip,src_port,dst_ip,dst_port,label\n1.1.1.1,1,2.2.2.2,2,0\n1.1.1.1,1,2.2.2.2,2,x\n");
  } catch (const RowError& e) {
    CHECK(e.row == 2);
  }
  CHECK(parse("").records.empty());
}

TEST_CASE("write then parse round-trips records exactly") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  std::vector<FlowRecord> rs;
  for (int i = 0; i < 200; ++i) {
    FlowRecord r;
    r.src = {Ipv4{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng())};
    r.dst = {Ipv4{static_cast<std::uint32_t>(rng())}, static_cast<std::uint16_t>(rng())};
    r.features = {u(rng), u(rng) * 1e-300, 0.1, -0.0 + i};
    r.label = static_cast<int>(rng() % 2);
    rs.push_back(r);
  }
  std::ostringstream out;
  write_flow_csv(out, rs, {"a", "b", "c", "d"});
  CHECK(parse(out.str()).records == rs);
}

TEST_CASE("IP remapping") {
  const std::vector<FlowRecord> rs{rec("1.1.1.1", 1, "2.2.2.2", 2, {}, 0), rec("2.2.2.2", 3, "3.3.3.3", 4, {}, 1),
                                   rec("1.1.1.1", 5, "4.4.4.4", 6, {}, 0)};
  const auto a = remap_ips(rs, {}, 42);
  CHECK(a == remap_ips(rs, {}, 42));
  CHECK(a != remap_ips(rs, {}, 43));
  // The same original address maps to the same new one, everywhere.
  CHECK(a[0].src.ip == a[2].src.ip);
  CHECK(a[0].dst.ip == a[1].src.ip);
  std::set<std::uint32_t> distinct;
  for (const auto& r : a) {
    distinct.insert(r.src.ip.value);
    distinct.insert(r.dst.ip.value);
    CHECK(r.src.ip.value >= IpRange{}.lo.value);
    CHECK(r.dst.ip.value <= IpRange{}.hi.value);
  }
  CHECK(distinct.size() == 4);
  CHECK(a[1].src.port == 3);
  // Independent of record order.
  std::vector<FlowRecord> rev(rs.rbegin(), rs.rend());
  const auto b = remap_ips(rev, {}, 42);
  CHECK(b[0].src.ip == a[2].src.ip);
  const IpRange tiny{*Ipv4::parse("10.0.0.1"), *Ipv4::parse("10.0.0.3")};
  CHECK_THROWS_AS(remap_ips(rs, tiny, 1), CapacityError);
}

TEST_CASE("normalization") {
  const std::vector<FlowRecord> rs{rec("1.1.1.1", 1, "2.2.2.2", 2, {0.0, 5.0}, 0),
                                   rec("1.1.1.1", 1, "2.2.2.2", 2, {2.0, 5.0}, 0)};
  const NormStats z = fit_normalizer(rs);
  CHECK(z.first == std::vector<double>{1.0, 5.0});
  CHECK(z.second == std::vector<double>{1.0, 1.0});  // constant column: std 0 -> 1
  const auto n = apply_normalizer(rs, z);
  CHECK(n[0].features == std::vector<double>{-1.0, 0.0});
  CHECK(n[1].features == std::vector<double>{1.0, 0.0});
  const NormStats mm = fit_normalizer(rs, NormMethod::kMinMax);
  CHECK(apply_normalizer(rs, mm)[1].features == std::vector<double>{1.0, 0.0});
  std::stringstream ss;
  save_norm_stats(ss, z);
  const NormStats back = load_norm_stats(ss);
  CHECK(back.first == z.first);
  CHECK(back.second == z.second);
  std::istringstream bad("nonsense");
  CHECK_THROWS_AS(load_norm_stats(bad), FormatError);
  CHECK_THROWS_AS(apply_normalizer({rec("1.1.1.1", 1, "2.2.2.2", 2, {1.0}, 0)}, z), ShapeError);
}

TEST_CASE("stratified split") {
  std::vector<FlowRecord> rs;
  for (int i = 0; i < 100; ++i) rs.push_back(rec("1.1.1.1", static_cast<std::uint16_t>(i), "2.2.2.2", 2, {double(i)}, i < 10));
  const Split s = stratified_split(rs, {}, 3);
  auto count = [](const std::vector<FlowRecord>& v, int y) {
    return std::count_if(v.begin(), v.end(), [y](const FlowRecord& r) { return r.label == y; });
  };
  CHECK(count(s.train, 1) == 7);
  CHECK(count(s.train, 0) == 63);
  CHECK(count(s.val, 1) == 1);
  CHECK(count(s.test, 1) == 2);
  CHECK(s.train.size() + s.val.size() + s.test.size() == 100);
  // Each split keeps the original relative order.
  for (std::size_t i = 1; i < s.train.size(); ++i) CHECK(s.train[i - 1].src.port < s.train[i].src.port);
  CHECK_THROWS(stratified_split(rs, {0.5, 0.1, 0.1}, 1));
  const auto sub = stratified_subsample(rs, 0.5, 1);
  CHECK(count(sub, 1) == 5);
  CHECK(count(sub, 0) == 45);
  const auto tiny = stratified_subsample(rs, 0.01, 1);
  CHECK(count(tiny, 1) == 1);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.n_flows = 1000;
  spec.n_endpoints = 300;
  spec.attack_ratio = 0.1;
  const auto rs = generate_synthetic(spec);
  CHECK(rs.size() == 1000);
  CHECK(std::count_if(rs.begin(), rs.end(), [](const FlowRecord& r) { return r.label == kAttack; }) == 100);
  CHECK(rs == generate_synthetic(spec));
  for (const auto& r : rs) CHECK(r.src != r.dst);
  // A linear rule on the feature sum separates the classes.
  std::vector<int> y, pred;
  for (const auto& r : rs) {
    double s = 0;
    for (double v : r.features) s += v;
    y.push_back(r.label);
    pred.push_back(s > 0 ? 1 : 0);
  }
  CHECK(compute_metrics(y, pred).macro_f1 > 0.99);
  CHECK(synthetic_feature_names(3) == std::vector<std::string>{"f0", "f1", "f2"});
}
