#include "egcm/manifest.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "egcm/csv.hpp"
#include "egcm/error.hpp"

namespace egcm {

using nlohmann::json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void drop_key(json& j, const std::string& key) {
  if (j.is_object()) {
    j.erase(key);
    for (auto& [k, v] : j.items()) drop_key(v, key);
  } else if (j.is_array()) {
    for (auto& v : j) drop_key(v, key);
  }
}

}  // namespace

std::string file_sha256(const std::string& path) { return sha256_hex(read_file(path)); }

std::string reproducible_digest(const std::string& path) {
  const std::string text = read_file(path);
  if (path.ends_with(".json")) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) return sha256_hex(text);
    drop_key(j, "wall_seconds");
    return sha256_hex(j.dump());
  }
  if (path.ends_with(".csv")) {
    std::istringstream in(text);
    CsvReader reader(in);
    std::vector<std::string> row;
    if (!reader.next(row)) return sha256_hex(text);
    std::size_t skip = row.size();
    for (std::size_t i = 0; i < row.size(); ++i)
      if (row[i] == "wall_seconds") skip = i;
    std::ostringstream canon;
    CsvWriter w(canon);
    do {
      if (skip < row.size()) row.erase(row.begin() + static_cast<std::ptrdiff_t>(skip));
      w.write(row);
    } while (reader.next(row));
    return sha256_hex(canon.str());
  }
  return sha256_hex(text);
}

std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

namespace {

json digests_to_json(const std::vector<FileDigest>& ds) {
  json a = json::array();
  for (const auto& d : ds) a.push_back({{"path", d.path}, {"sha256", d.sha256}, {"stable_sha256", d.stable_sha256}});
  return a;
}

std::vector<FileDigest> digests_from_json(const json& a) {
  std::vector<FileDigest> out;
  for (const auto& d : a) out.push_back({d.at("path").get<std::string>(), d.at("sha256").get<std::string>(),
                   d.at("stable_sha256").get<std::string>()});
  return out;
}

}  // namespace

std::string manifest_to_json(const RunManifest& m) {
  json j;
  j["command"] = m.command;
  j["params"] = m.params;
  j["variant"] = m.variant;
  j["config"] = m.config_ini;
  j["inputs"] = digests_to_json(m.inputs);
  j["outputs"] = digests_to_json(m.outputs);
  j["version"] = m.version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  return j.dump(2) + "\n";
}

RunManifest manifest_from_json(const std::string& text) {
  RunManifest m;
  try {
    const json j = json::parse(text);
    m.command = j.at("command").get<std::string>();
    m.params = j.at("params").get<std::map<std::string, std::string>>();
    m.variant = j.value("variant", "");
    m.config_ini = j.at("config").get<std::string>();
    m.inputs = digests_from_json(j.at("inputs"));
    m.outputs = digests_from_json(j.at("outputs"));
    m.version = j.at("version").get<std::string>();
    m.started_at = j.value("started_at", "");
    m.finished_at = j.value("finished_at", "");
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
  return m;
}

}  // namespace egcm
