#include <exception>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "gman/cli.hpp"
#include "gman/error.hpp"

namespace {

// Every flag funnels into the same key = value channel the config file uses,
// so both layers share one parser and one set of messages. Overrides collect
// in command-line order and apply after the file loads (flags win).
void add_keyed_option(CLI::App* cmd, const std::string& flag, std::string key,
                      std::vector<std::pair<std::string, std::string>>* overrides,
                      const std::string& help) {
  cmd->add_option_function<std::string>(
      flag,
      [overrides, key = std::move(key)](const std::string& v) { overrides->emplace_back(key, v); },
      help);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"single-image dehazing: synthesize haze, train, restore, evaluate"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::pair<std::string, std::string>> overrides;

  CLI::App* synth = app.add_subcommand("synth", "synthesize hazy images over an (A, beta) grid");
  CLI::App* train = app.add_subcommand("train", "train a dehazing network from a synth manifest");
  CLI::App* dehaze = app.add_subcommand("dehaze", "restore hazy images with a trained checkpoint");
  CLI::App* eval_cmd = app.add_subcommand("eval", "score restored images against ground truth");

  for (CLI::App* cmd : {synth, train, dehaze, eval_cmd}) {
    cmd->add_option("--config", config_path, "key = value settings file; flags override it");
    add_keyed_option(cmd, "--seed", "seed", &overrides,
                     "seed for init, dataset split and shuffling");
    add_keyed_option(cmd, "--input", "input", &overrides, "input directory");
    add_keyed_option(cmd, "--output", "output", &overrides,
                     "output directory (eval: metrics CSV path)");
  }

  add_keyed_option(synth, "--manifest", "manifest", &overrides,
                   "manifest CSV path (default: <output>/manifest.csv)");
  add_keyed_option(synth, "--grid-a", "grid_a", &overrides, "comma-separated atmosphere lights");
  add_keyed_option(synth, "--grid-beta", "grid_beta", &overrides,
                   "comma-separated scattering coefficients");
  add_keyed_option(synth, "--depth", "depth", &overrides, "depth map: constant|ramp|radial");
  add_keyed_option(synth, "--depth-constant", "depth_constant", &overrides,
                   "depth value used by --depth constant");

  add_keyed_option(train, "--manifest", "manifest", &overrides,
                   "manifest CSV from synth (default: <input>/manifest.csv)");
  add_keyed_option(train, "--checkpoint", "checkpoint", &overrides, "checkpoint output path");
  add_keyed_option(train, "--epochs", "epochs", &overrides, "training epochs");
  add_keyed_option(train, "--batch", "batch_size", &overrides, "batch size");
  add_keyed_option(train, "--crop", "crop", &overrides, "square training crop side");
  add_keyed_option(train, "--lambda", "lambda", &overrides, "perceptual loss weight");
  add_keyed_option(train, "--test-fraction", "test_fraction", &overrides,
                   "fraction of clear images held out of training");
  add_keyed_option(train, "--checkpoint-every", "checkpoint_every", &overrides,
                   "epochs between checkpoint writes (0: final only)");
  add_keyed_option(train, "--loss-log", "loss_log", &overrides, "per-epoch loss CSV path");
  add_keyed_option(train, "--extractor-file", "extractor_file", &overrides,
                   "frozen feature extractor to load instead of seeding one");
  add_keyed_option(train, "--extractor-seed", "extractor_seed", &overrides,
                   "seed for the default random feature extractor");
  add_keyed_option(train, "--base-channels", "base_channels", &overrides,
                   "encoder/decoder channel width");
  add_keyed_option(train, "--down-channels", "down_channels", &overrides,
                   "downsampled channel width");
  add_keyed_option(train, "--residual-convs", "residual_convs", &overrides,
                   "convs per residual block, comma-separated");

  add_keyed_option(dehaze, "--checkpoint", "checkpoint", &overrides,
                   "trained checkpoint to load");

  add_keyed_option(eval_cmd, "--manifest", "manifest", &overrides,
                   "score images against their manifest clear sources");
  add_keyed_option(eval_cmd, "--truth", "truth", &overrides,
                   "pair --input with this directory by filename");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  gman::cli::RunConfig cfg;
  for (const CLI::App* sub : app.get_subcommands()) cfg.command = sub->get_name();
  try {
    if (!config_path.empty()) gman::cli::load_config_file(cfg, config_path);
    for (const auto& [key, value] : overrides) {
      try {
        gman::cli::apply_config_entry(cfg, key, value);
      } catch (const gman::ArgumentError& e) {
        throw gman::cli::UsageError(e.what());
      }
    }
    return gman::cli::run(cfg);
  } catch (const gman::cli::UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const gman::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
