#include "egcm/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "egcm/binio.hpp"

namespace egcm {

namespace {

std::string array_name(std::size_t i, std::size_t num_layers) {
  if (i < 2 * num_layers) return "layer" + std::to_string(i / 2 + 1) + (i % 2 ? ".bias" : ".weight");
  return i == 2 * num_layers ? "classifier.weight" : "classifier.bias";
}

std::string meta_text(const Checkpoint& c) {
  std::ostringstream os;
  os << "edge_dim=" << c.edge_dim << '\n'
     << "train_seed=" << c.train_seed << '\n'
     << "best_epoch=" << c.best_epoch << '\n';
  return os.str();
}

std::map<std::string, std::uint64_t> parse_meta(const std::string& text) {
  std::map<std::string, std::uint64_t> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("checkpoint: bad metadata line '" + line + "'");
    try {
      out[line.substr(0, eq)] = std::stoull(line.substr(eq + 1));
    } catch (const std::exception&) {
      throw FormatError("checkpoint: bad metadata value '" + line + "'");
    }
  }
  for (const char* k : {"edge_dim", "train_seed", "best_epoch"})
    if (!out.contains(k)) throw FormatError(std::string("checkpoint: missing ") + k);
  return out;
}

}  // namespace

void save_checkpoint(std::ostream& out, const Checkpoint& c) {
  std::ostringstream payload;
  binio::put_bytes(payload, meta_text(c));
  binio::put_bytes(payload, to_ini(c.config));
  std::ostringstream norm;
  save_norm_stats(norm, c.norm);
  binio::put_bytes(payload, norm.str());
  const auto arrays = c.params.tensors();
  const std::size_t layers = c.params.layers.size();
  binio::put_u64(payload, arrays.size());
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    binio::put_bytes(payload, array_name(i, layers));
    binio::put_u64(payload, arrays[i].rows());
    binio::put_u64(payload, arrays[i].cols());
    for (double v : arrays[i].storage()) binio::put_f64(payload, v);
  }
  const std::string body = payload.str();
  out.write("EGCM", 4);
  binio::put_u32(out, Checkpoint::kVersion);
  binio::put_bytes(out, body);
  if (!out) throw FormatError("checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  binio::expect_magic(in, "EGCM");
  const std::uint32_t version = binio::get_u32(in);
  if (version != Checkpoint::kVersion)
    throw FormatError("checkpoint: unsupported format version " + std::to_string(version));
  std::istringstream payload(binio::get_bytes(in));

  Checkpoint c;
  const auto meta = parse_meta(binio::get_bytes(payload, 1 << 20));
  c.edge_dim = meta.at("edge_dim");
  c.train_seed = meta.at("train_seed");
  c.best_epoch = meta.at("best_epoch");
  try {
    c.config = parse_ini(binio::get_bytes(payload, 1 << 24));
    std::istringstream norm(binio::get_bytes(payload, 1 << 30));
    c.norm = load_norm_stats(norm);
  } catch (const InputError& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }

  const std::size_t layers = c.config.train.model.num_layers;
  const std::uint64_t count = binio::get_u64(payload);
  if (count != 2 * layers + 2) throw FormatError("checkpoint: expected " + std::to_string(2 * layers + 2) + " arrays");
  std::vector<Tensor2> arrays;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string name = binio::get_bytes(payload, 256);
    if (name != array_name(i, layers)) throw FormatError("checkpoint: unexpected array '" + name + "'");
    const std::uint64_t rows = binio::get_u64(payload);
    const std::uint64_t cols = binio::get_u64(payload);
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24) || rows * cols > (1ull << 31))
      throw FormatError("checkpoint: bad shape for " + name);
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = binio::get_f64(payload);
    arrays.emplace_back(rows, cols, std::move(data));
  }
  try {
    c.params = ParameterSet::from_tensors(arrays, layers);
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  if (c.params.layers.front().weight.rows() != layer_input_dim(c.config.train.model, c.edge_dim, 1) ||
      c.norm.dim() != c.edge_dim)
    throw FormatError("checkpoint: array shapes do not match the stored config");
  return c;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  save_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace egcm
