// Command-line driver: synthetic cohort generation, autoencoder training,
// encoding, and the regression/report pipeline.
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "anthro/config.hpp"
#include "anthro/pipeline.hpp"

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir;
  std::int64_t seed = -1;
  bool seed_given = false;
};

anthro::RunConfig resolve_config(const CommonOptions& opt) {
  anthro::RunConfig cfg;
  if (!opt.config_path.empty()) cfg = anthro::parse_run_config(opt.config_path);
  if (opt.seed_given) {
    cfg.seed = std::uint64_t(opt.seed);
    cfg.seed_set = true;
    cfg.train.seed = cfg.seed;
  }
  if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
  if (cfg.out_dir.empty())
    throw anthro::ConfigError("output directory required (--out or config key 'out')");
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* sub, CommonOptions& opt) {
  sub->add_option("--config", opt.config_path, "key=value config file");
  sub->add_option("--out", opt.out_dir, "output directory");
  sub->add_option("--seed", opt.seed, "master seed (overrides config)")
      ->each([&opt](const std::string&) { opt.seed_given = true; });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic body-shape cohorts, mesh autoencoder, income regressions"};
  app.require_subcommand(1);

  CommonOptions opt;
  auto* synth = app.add_subcommand("synth", "generate a cohort: CSV, meshes, summaries");
  auto* train = app.add_subcommand("train", "train autoencoders on an existing cohort");
  auto* encode = app.add_subcommand("encode", "export embeddings from trained models");
  auto* regress = app.add_subcommand("regress", "run the regression/report analyses");
  auto* replicate = app.add_subcommand("replicate", "full pipeline: synth through regress");
  for (auto* sub : {synth, train, encode, regress, replicate}) add_common(sub, opt);

  CLI11_PARSE(app, argc, argv);

  try {
    anthro::RunConfig cfg = resolve_config(opt);
    if (synth->parsed()) anthro::cmd_synth(cfg);
    if (train->parsed()) anthro::cmd_train(cfg);
    if (encode->parsed()) anthro::cmd_encode(cfg);
    if (regress->parsed()) anthro::cmd_regress(cfg);
    if (replicate->parsed()) anthro::cmd_replicate(cfg);
  } catch (const anthro::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const anthro::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const anthro::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
