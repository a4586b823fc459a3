#include <doctest.h>

#include <sstream>

#include "egcm/checkpoint.hpp"
#include "oracles.hpp"

using namespace egcm;

namespace {

Checkpoint sample() {
  Checkpoint c;
  c.config.train.model.hidden_dim = 5;
  c.config.seed = 99;
  c.config.schema.features = {{"a", ColumnKind::kNumeric, {}}, {"b", ColumnKind::kCategorical, {"x", "y"}}};
  c.edge_dim = 3;
  c.params = init_parameters(c.config.train.model, 3, 4);
  c.norm.first = {0.5, -1e-300, 3.0};
  c.norm.second = {1.0, 2.0, 0.1};
  c.train_seed = 7;
  c.best_epoch = 12;
  return c;
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  const Checkpoint c = sample();
  std::stringstream ss;
  save_checkpoint(ss, c);
  const std::string bytes = ss.str();
  CHECK(bytes.substr(0, 4) == "EGCM");
  const Checkpoint back = load_checkpoint(ss);
  CHECK(back.params == c.params);
  CHECK(back.norm.first == c.norm.first);
  CHECK(back.norm.second == c.norm.second);
  CHECK(back.edge_dim == 3);
  CHECK(back.train_seed == 7);
  CHECK(back.best_epoch == 12);
  CHECK(back.config.seed == 99);
  CHECK(to_ini(back.config) == to_ini(c.config));
  std::stringstream again;
  save_checkpoint(again, back);
  CHECK(again.str() == bytes);

  std::vector<FlowRecord> rs;
  std::mt19937_64 rng(1);
  for (std::uint32_t i = 0; i < 12; ++i)
    rs.push_back({{Ipv4{i % 5}, 1}, {Ipv4{i % 3 + 10}, 2}, {double(i), 0.5, -1.0}, int(i % 2)});
  const TrafficGraph g = build_graph(rs);
  CHECK(predict_attack_prob(g, back.params, back.config.train.model) ==
        predict_attack_prob(g, c.params, c.config.train.model));
}

TEST_CASE("damaged checkpoints are format errors") {
  std::stringstream ss;
  save_checkpoint(ss, sample());
  const std::string bytes = ss.str();
  auto load = [](std::string b) {
    std::istringstream in(b);
    return load_checkpoint(in);
  };
  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(load(magic), FormatError);
  std::string version = bytes;
  version[4] = 9;
  CHECK_THROWS_AS(load(version), FormatError);
  CHECK_THROWS_AS(load(bytes.substr(0, bytes.size() - 9)), FormatError);
  CHECK_THROWS_AS(load(""), FormatError);
  CHECK_THROWS_AS(load_checkpoint_file("/nonexistent.egcm"), InputError);
}
