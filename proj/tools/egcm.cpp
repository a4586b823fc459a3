#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "egcm/commands.hpp"
#include "egcm/config.hpp"
#include "egcm/error.hpp"

namespace {

// Flag values that override the config file when given.
struct Overrides {
  std::string config;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  bool no_mixup = false;
  bool no_contrastive = false;
  double theta = 0, alpha = 0, beta = 0, fraction = 0;
  std::size_t sigma = 0, gamma = 0, epochs = 0;
  std::vector<std::uint64_t> seeds;
  bool show_config = false;
};

void add_config_flags(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "INI config file")->check(CLI::ExistingFile);
  app->add_option("--data", o.data, "input flow CSV (overrides [data] input)");
  app->add_option("--out", o.out, "output directory");
  app->add_option("--seed", o.seed, "global seed: IP remap, split, training");
  app->add_flag("--no-mixup", o.no_mixup, "disable MP-Mixup augmentation");
  app->add_flag("--no-contrastive", o.no_contrastive, "disable the contrastive term");
  app->add_option("--theta", o.theta, "contrastive loss weight");
  app->add_option("--sigma", o.sigma, "mixed samples per pattern and epoch");
  app->add_option("--gamma", o.gamma, "negatives per anchor");
  app->add_option("--alpha", o.alpha, "Beta parameter for benign/attack pairs");
  app->add_option("--beta", o.beta, "Beta parameter for attack/attack pairs");
  app->add_option("--fraction", o.fraction, "share of the dataset used for training");
  app->add_option("--epochs", o.epochs, "training epochs");
  app->add_option("--seeds", o.seeds, "training seeds for sweeps")->delimiter(',');
  app->add_flag("--show-config", o.show_config, "print the effective config and exit");
}

egcm::RunConfig resolve(const CLI::App* app, const Overrides& o) {
  egcm::RunConfig c = o.config.empty() ? egcm::RunConfig{} : egcm::load_config(o.config);
  auto given = [&](const char* flag) { return app->count(flag) > 0; };
  if (given("--data")) c.input = o.data;
  if (given("--out")) c.out_dir = o.out;
  if (given("--seed")) c.seed = o.seed;
  if (o.no_mixup) c.train.enable_mixup = false;
  if (o.no_contrastive) c.train.enable_contrastive = false;
  if (given("--theta")) c.train.contrastive.theta = o.theta;
  if (given("--sigma")) c.train.mixup.sigma = o.sigma;
  if (given("--gamma")) c.train.contrastive.gamma = o.gamma;
  if (given("--alpha")) c.train.mixup.alpha = o.alpha;
  if (given("--beta")) c.train.mixup.beta = o.beta;
  if (given("--fraction")) c.train.train_fraction = o.fraction;
  if (given("--epochs")) c.train.epochs = o.epochs;
  if (given("--seeds")) c.train.seeds = o.seeds;
  c.validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EG-ConMix flow-graph intrusion detection"};
  app.require_subcommand(1);

  Overrides o;
  auto* build = app.add_subcommand("build-graph", "parse, remap, split, normalize and serialize the flow graph");
  auto* train = app.add_subcommand("train", "train one model and write a checkpoint");
  auto* evaluate = app.add_subcommand("evaluate", "score flows with a checkpoint");
  auto* sweep = app.add_subcommand("sweep", "training-fraction or mixup-count sweep");
  auto* synth = app.add_subcommand("synth", "write a synthetic flow CSV");
  auto* replay = app.add_subcommand("replay", "re-run a manifest and compare output digests");
  for (auto* sub : {build, train, evaluate, sweep, synth}) add_config_flags(sub, o);

  egcm::EvaluateOptions eval_opts;
  std::string split = "test";
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint file")->required();
  evaluate->add_option("--split", split, "all | train | val | test")->check(CLI::IsMember({"all", "train", "val", "test"}));

  std::string kind = "fraction";
  std::vector<double> grid;
  sweep->add_option("--kind", kind, "fraction | sigma")->check(CLI::IsMember({"fraction", "sigma"}));
  sweep->add_option("--grid", grid, "grid values (default: the paper grid)")->delimiter(',');

  egcm::SyntheticSpec spec;
  synth->add_option("--flows", spec.n_flows, "number of flows");
  synth->add_option("--endpoints", spec.n_endpoints, "endpoint pool size");
  synth->add_option("--attack-ratio", spec.attack_ratio, "share of attack flows");
  synth->add_option("--separation", spec.separation, "distance between class means");
  synth->add_option("--dim", spec.feature_dim, "feature count");

  std::string manifest_path, replay_out = "egcm_replay";
  replay->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replay_out, "output directory for the re-run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (replay->parsed()) {
      const auto rep = egcm::cmd_replay(manifest_path, replay_out, std::cout);
      if (!rep.identical()) {
        std::cerr << "error: " << rep.mismatched.size() << " output(s) differ from the manifest\n";
        return 3;
      }
      return 0;
    }
    CLI::App* sub = app.get_subcommands().front();
    egcm::RunConfig cfg = resolve(sub, o);
    if (o.show_config) {
      std::cout << egcm::to_ini(cfg);
      return 0;
    }
    if (build->parsed()) egcm::cmd_build_graph(cfg, std::cout);
    if (train->parsed()) egcm::cmd_train(cfg, std::cout, &std::cerr);
    if (evaluate->parsed()) {
      eval_opts.data = o.data;
      eval_opts.split = egcm::parse_eval_split(split);
      egcm::cmd_evaluate(cfg, eval_opts, std::cout);
    }
    if (sweep->parsed()) egcm::cmd_sweep(cfg, {egcm::parse_sweep_kind(kind), grid}, std::cout);
    if (synth->parsed()) {
      if (synth->count("--seed")) spec.seed = o.seed;
      egcm::cmd_synth(cfg, spec, std::cout);
    }
  } catch (const egcm::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const egcm::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const egcm::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
