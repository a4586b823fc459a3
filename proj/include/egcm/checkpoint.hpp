#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "egcm/config.hpp"
#include "egcm/flow.hpp"
#include "egcm/model.hpp"

namespace egcm {

/// Trained model plus everything needed to score new flows the same way.
/// `config.schema` holds the resolved feature layout (vocabularies filled);
/// `config.seed` is the IP remap seed.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  RunConfig config;
  std::size_t edge_dim = 0;
  ParameterSet params;
  NormStats norm;
  std::uint64_t train_seed = 0;
  std::size_t best_epoch = 0;
};

// "EGCM", u32 version, u64 payload length, payload. The payload is the
// config and norm stats as text followed by named f64 arrays.
void save_checkpoint(std::ostream& out, const Checkpoint& ckpt);
// Throws FormatError on a bad magic, version, or truncated payload.
Checkpoint load_checkpoint(std::istream& in);

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint_file(const std::string& path);

}  // namespace egcm
