#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gman/error.hpp"
#include "gman/haze.hpp"
#include "gman/nn.hpp"
#include "gman/train.hpp"

namespace gman::cli {

// Missing/contradictory command-line settings; the launcher maps this to
// exit code 1 (data and format problems exit with 2).
class UsageError : public Error {
 public:
  using Error::Error;
};

// Everything a command needs, merged from defaults, then the config file,
// then command-line flags (later wins).
struct RunConfig {
  std::string command;  // synth | train | dehaze | eval

  std::filesystem::path input_dir;
  std::filesystem::path output_dir;  // for eval: the metrics CSV path
  std::filesystem::path checkpoint;
  std::filesystem::path manifest;
  std::filesystem::path truth_dir;   // eval: ground-truth images paired by filename
  std::filesystem::path loss_log;    // train: defaults next to the checkpoint

  std::vector<double> grid_a = {0.8, 0.9, 1.0};
  std::vector<double> grid_beta = {0.5, 1.0, 1.5, 2.0};
  haze::DepthKind depth_kind = haze::DepthKind::kRamp;
  double depth_constant = 0.5;

  std::uint64_t seed = 0;
  double test_fraction = 0.2;

  nn::NetworkConfig network;
  train::TrainConfig train;
  std::uint64_t extractor_seed = 1;
  std::filesystem::path extractor_file;  // overrides the seeded extractor
};

// One `key = value` assignment; shared by the config file parser and the flag
// layer. Unknown keys throw ArgumentError.
void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value);

// Plain `key = value` lines, '#' comments, blank lines ignored. Malformed
// lines and unknown keys throw FormatError with the line's byte offset.
void load_config_file(RunConfig& cfg, const std::filesystem::path& path);

// One manifest row: a hazy image, its clear source, and the haze parameters
// it was synthesized with.
struct ManifestRow {
  std::string clear;
  std::string hazy;
  double a = 0.0;
  double beta = 0.0;
  std::string depth_kind;
};

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path);
train::DatasetIndex index_from_manifest(const std::vector<ManifestRow>& rows);

const char* depth_kind_name(haze::DepthKind kind);
haze::DepthKind parse_depth_kind(const std::string& name);

int run_synth(const RunConfig& cfg);
int run_train(const RunConfig& cfg);
int run_dehaze(const RunConfig& cfg);
int run_eval(const RunConfig& cfg);
// Dispatch on cfg.command.
int run(const RunConfig& cfg);

}  // namespace gman::cli
