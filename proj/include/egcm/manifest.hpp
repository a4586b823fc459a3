#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace egcm {

inline constexpr std::string_view kVersion = "1.0.0";

struct FileDigest {
  std::string path;
  std::string sha256;
  std::string stable_sha256;  // reproducible_digest
  friend bool operator==(const FileDigest&, const FileDigest&) = default;
};

/// Record of one CLI run: the command, its full configuration and the
/// digests of what it read and wrote. Re-running `command` with
/// `config_ini` and `params` reproduces the output digests.
struct RunManifest {
  std::string command;
  std::map<std::string, std::string> params;  // command options outside the config
  std::string config_ini;
  std::vector<FileDigest> inputs;
  std::vector<FileDigest> outputs;
  std::string variant;
  std::string version{kVersion};
  std::string started_at;
  std::string finished_at;
};

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::string& path);
// Digest that ignores wall-clock fields: the "wall_seconds" column of CSV
// files and "wall_seconds" keys of JSON files. Other files hash as-is.
std::string reproducible_digest(const std::string& path);

std::string utc_timestamp();

std::string manifest_to_json(const RunManifest& m);
// Throws FormatError.
RunManifest manifest_from_json(const std::string& text);

}  // namespace egcm
