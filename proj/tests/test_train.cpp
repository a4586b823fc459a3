#include <doctest.h>

#include "egcm/train.hpp"
#include "oracles.hpp"

using namespace egcm;

namespace {

PreparedData small_data(std::size_t flows = 600, double ratio = 0.1) {
  SyntheticSpec spec;
  spec.n_flows = flows;
  spec.n_endpoints = flows;
  spec.attack_ratio = ratio;
  spec.feature_dim = 4;
  return prepare_dataset(generate_synthetic(spec), synthetic_feature_names(4), {});
}

TrainConfig small_config(std::size_t epochs = 10) {
  TrainConfig c;
  c.epochs = epochs;
  c.model.hidden_dim = 16;
  c.mixup.sigma = 40;
  return c;
}

}  // namespace

TEST_CASE("cross-entropy") {
  const std::vector<int> y{1, 0, 1};
  const std::vector<std::size_t> all{0, 1, 2};
  CHECK(cross_entropy(std::vector<double>{0.5, 0.5, 0.5}, y, all) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  const double floor = cross_entropy(std::vector<double>{1.0, 0.0, 1.0}, y, all);
  CHECK(floor > 0.0);
  CHECK(floor < 1.1e-12);
  const std::vector<double> p{0.9, 0.2, 0.35};
  CHECK(std::abs(cross_entropy(p, y, all) - oracle::cross_entropy(p, {1, 0, 1})) < 1e-12);
  CHECK(cross_entropy(p, y, std::vector<std::size_t>{1}) == doctest::Approx(-std::log(0.8)));
  CHECK_THROWS(cross_entropy(p, y, std::vector<std::size_t>{}));
}

TEST_CASE("total loss") {
  CHECK(total_loss(0.5, 2.0, 1.0) == 2.5);
  CHECK(total_loss(0.5, 2.0, 0.0) == 0.5);
  for (double t : {0.0, 0.5, 3.0}) CHECK(total_loss(0.5, 2.0, t) == doctest::Approx(0.5 + 2.0 * t));
}

TEST_CASE("variant names") {
  TrainConfig c;
  CHECK(c.variant() == "EG-ConMix");
  c.enable_mixup = false;
  CHECK(c.variant() == "EG-Con");
  c.enable_contrastive = false;
  CHECK(c.variant() == "E-GraphSAGE");
  c.enable_mixup = true;
  CHECK(c.variant() == "EG-Mix");
}

TEST_CASE("paper defaults") {
  const TrainConfig c;
  CHECK(c.epochs == 200);
  CHECK(c.lr == 0.01);
  CHECK(c.model.num_layers == 2);
  CHECK(c.model.hidden_dim == 128);
  CHECK(c.model.dropout == 0.2);
  CHECK(c.mixup.alpha == 0.3);
  CHECK(c.mixup.beta == 0.2);
  CHECK(c.mixup.sigma == 200);
  CHECK(c.contrastive.gamma == 10);
}

TEST_CASE("training is deterministic and the loss falls early on") {
  const PreparedData d = small_data();
  const TrainConfig c = small_config();
  const TrainResult a = train(d.split.train, d.split.val, c, 1);
  const TrainResult b = train(d.split.train, d.split.val, c, 1);
  CHECK(a.history == b.history);
  CHECK(a.params == b.params);
  REQUIRE(a.history.size() == 10);
  CHECK(a.history.back().loss_c < a.history.front().loss_c);
  CHECK_FALSE(train(d.split.train, d.split.val, c, 2).params == a.params);
  for (const auto& r : a.history) CHECK(r.loss == doctest::Approx(r.loss_c + r.loss_k));

  TrainConfig base = small_config();
  base.enable_mixup = base.enable_contrastive = false;
  const TrainResult plain = train(d.split.train, d.split.val, base, 1);
  for (std::size_t e = 1; e < plain.history.size(); ++e) CHECK(plain.history[e].loss < plain.history[e - 1].loss);
}

TEST_CASE("switched-off components reproduce the baseline exactly") {
  const PreparedData d = small_data();
  TrainConfig base = small_config(5);
  base.enable_mixup = base.enable_contrastive = false;
  TrainConfig off = small_config(5);
  off.mixup.sigma = 0;
  off.contrastive.theta = 0.0;
  const TrainResult a = train(d.split.train, d.split.val, base, 3);
  const TrainResult b = train(d.split.train, d.split.val, off, 3);
  CHECK(a.params == b.params);
  for (std::size_t e = 0; e < a.history.size(); ++e) CHECK(a.history[e].loss_c == b.history[e].loss_c);
}

TEST_CASE("test labels never influence training") {
  const PreparedData d = small_data();
  const TrainConfig c = small_config(5);
  const TrainResult a = train(d.split.train, d.split.val, c, 1);
  std::vector<FlowRecord> flipped = d.split.test;
  for (auto& r : flipped) r.label = 1 - r.label;
  // run_seeds only hands the test split to evaluate(); its score changes,
  // the trained model does not.
  const auto pa = predict(a.params, c.model, d.split.train, d.split.test);
  const auto pb = predict(a.params, c.model, d.split.train, flipped);
  CHECK(pa == pb);
  CHECK(evaluate(a.params, c.model, d.split.train, d.split.test).macro_f1 !=
        evaluate(a.params, c.model, d.split.train, flipped).macro_f1);
}

TEST_CASE("best validation epoch is kept") {
  const PreparedData d = small_data();
  const TrainResult r = train(d.split.train, d.split.val, small_config(8), 1);
  double best = -1;
  std::size_t best_epoch = 0;
  for (const auto& h : r.history)
    if (h.val_macro_f1 >= best) best = h.val_macro_f1, best_epoch = h.epoch;
  CHECK(r.best_epoch == best_epoch);
  const TrainResult no_val = train(d.split.train, {}, small_config(3), 1);
  CHECK(no_val.best_epoch == 3);
  CHECK(std::isnan(no_val.history[0].val_macro_f1));
}

TEST_CASE("non-finite losses abort with the epoch and term") {
  const PreparedData d = small_data(200);
  TrainConfig c = small_config(3);
  c.lr = 1e300;
  try {
    train(d.split.train, d.split.val, c, 1);
    FAIL("expected NumericalError");
  } catch (const NumericalError& e) {
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("single-class training data falls back to the plain model") {
  PreparedData d = small_data(200);
  std::vector<FlowRecord> benign;
  for (const auto& r : d.split.train)
    if (r.label == kBenign) benign.push_back(r);
  CHECK_NOTHROW(train(benign, {}, small_config(2), 1));
}

TEST_CASE("prepare_dataset fits normalization on the training split only") {
  const PreparedData d = small_data();
  const NormStats s = fit_normalizer(d.split.train);
  for (std::size_t k = 0; k < s.dim(); ++k) {
    CHECK(std::abs(s.first[k]) < 1e-12);
    CHECK(std::abs(s.second[k] - 1.0) < 1e-12);
  }
  CHECK(d.split.train.size() + d.split.val.size() + d.split.test.size() == 600);
}

TEST_CASE("seed runs and sweeps") {
  const PreparedData d = small_data(300);
  TrainConfig c = small_config(3);
  c.seeds = {1, 2};
  const SeedRuns r = run_seeds(d, c);
  CHECK(r.per_seed.size() == 2);
  CHECK(r.aggregate.seed_macro_f1.size() == 2);
  CHECK(r.aggregate.variant == "EG-ConMix");
  const std::vector<double> fr{0.1, 0.7};
  const auto rows = fraction_sweep(d, c, fr);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].value == 0.1);
  CHECK(rows[1].macro_f1_mean == doctest::Approx(r.aggregate.macro_f1).epsilon(1e-15));
  const std::string csv = sweep_to_csv(rows);
  CHECK(csv.find("fraction_or_sigma,seed_count,macro_f1_mean,macro_f1_std,wall_seconds\n") == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
  CHECK(default_fraction_grid().size() == 9);
  CHECK(default_sigma_grid() == std::vector<std::size_t>{100, 200, 300, 400, 500, 1000, 2000});
}
