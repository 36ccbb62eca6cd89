#include "gman/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gman/checkpoint.hpp"
#include "gman/image_io.hpp"
#include "gman/imageops.hpp"
#include "gman/loss.hpp"

namespace fs = std::filesystem;

namespace gman::cli {

namespace {

std::string trimmed(std::string_view s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const std::size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_double(const std::string& text, const std::string& key) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (text.empty() || end != begin + text.size() || errno == ERANGE)
    throw ArgumentError(key + ": expected a number, got \"" + text + "\"");
  return v;
}

std::uint64_t parse_u64(const std::string& text, const std::string& key) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(begin, &end, 10);
  if (text.empty() || text[0] == '-' || end != begin + text.size() || errno == ERANGE)
    throw ArgumentError(key + ": expected a nonnegative integer, got \"" + text + "\"");
  return v;
}

int parse_int(const std::string& text, const std::string& key) {
  const char* begin = text.c_str();
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(begin, &end, 10);
  if (text.empty() || end != begin + text.size() || errno == ERANGE || v < INT_MIN || v > INT_MAX)
    throw ArgumentError(key + ": expected an integer, got \"" + text + "\"");
  return static_cast<int>(v);
}

std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t next = line.find(sep, pos);
    out.push_back(line.substr(pos, next - pos));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return out;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& key) {
  std::vector<double> out;
  for (const std::string& field : split_fields(text, ','))
    out.push_back(parse_double(trimmed(field), key));
  return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& key) {
  std::vector<int> out;
  for (const std::string& field : split_fields(text, ','))
    out.push_back(parse_int(trimmed(field), key));
  return out;
}

std::string format_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string format_full(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string read_text_file(const fs::path& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(std::string("cannot open ") + what + " " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// All .ppm files directly inside `dir`, sorted by filename so every run
// visits them in the same order regardless of directory enumeration order.
std::vector<fs::path> sorted_ppm_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm")
      files.push_back(entry.path());
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return files;
}

std::string join(const std::vector<std::string>& names) {
  std::string out;
  for (const std::string& n : names) {
    if (!out.empty()) out += ", ";
    out += n;
  }
  return out;
}

}  // namespace

const char* depth_kind_name(haze::DepthKind kind) {
  switch (kind) {
    case haze::DepthKind::kConstant: return "constant";
    case haze::DepthKind::kRamp: return "ramp";
    case haze::DepthKind::kRadial: return "radial";
  }
  return "?";
}

haze::DepthKind parse_depth_kind(const std::string& name) {
  if (name == "constant") return haze::DepthKind::kConstant;
  if (name == "ramp") return haze::DepthKind::kRamp;
  if (name == "radial") return haze::DepthKind::kRadial;
  throw ArgumentError("unknown depth kind \"" + name + "\" (expected constant, ramp or radial)");
}

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "input") {
    cfg.input_dir = value;
  } else if (key == "output") {
    cfg.output_dir = value;
  } else if (key == "checkpoint") {
    cfg.checkpoint = value;
  } else if (key == "manifest") {
    cfg.manifest = value;
  } else if (key == "truth") {
    cfg.truth_dir = value;
  } else if (key == "loss_log") {
    cfg.loss_log = value;
  } else if (key == "extractor_file") {
    cfg.extractor_file = value;
  } else if (key == "seed") {
    cfg.seed = parse_u64(value, key);
  } else if (key == "test_fraction") {
    cfg.test_fraction = parse_double(value, key);
  } else if (key == "grid_a") {
    cfg.grid_a = parse_double_list(value, key);
  } else if (key == "grid_beta") {
    cfg.grid_beta = parse_double_list(value, key);
  } else if (key == "depth") {
    cfg.depth_kind = parse_depth_kind(value);
  } else if (key == "depth_constant") {
    cfg.depth_constant = parse_double(value, key);
  } else if (key == "base_channels") {
    cfg.network.base_channels = parse_int(value, key);
  } else if (key == "down_channels") {
    cfg.network.down_channels = parse_int(value, key);
  } else if (key == "residual_convs") {
    cfg.network.residual_conv_counts = parse_int_list(value, key);
  } else if (key == "input_multiple") {
    cfg.network.input_multiple = parse_int(value, key);
  } else if (key == "batch_size") {
    cfg.train.batch_size = parse_int(value, key);
  } else if (key == "crop") {
    cfg.train.crop = parse_int(value, key);
  } else if (key == "epochs") {
    cfg.train.epochs = parse_int(value, key);
  } else if (key == "checkpoint_every") {
    cfg.train.checkpoint_every = parse_int(value, key);
  } else if (key == "lambda") {
    cfg.train.loss.lambda = parse_double(value, key);
  } else if (key == "extractor_taps") {
    cfg.train.loss.extractor.tap_channels = parse_int_list(value, key);
  } else if (key == "extractor_convs") {
    cfg.train.loss.extractor.convs_per_stage = parse_int_list(value, key);
  } else if (key == "extractor_seed") {
    cfg.extractor_seed = parse_u64(value, key);
  } else {
    throw ArgumentError("unknown config key \"" + key + "\"");
  }
}

void load_config_file(RunConfig& cfg, const fs::path& path) {
  const std::string text = read_text_file(path, "config file");
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t line_off = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (const std::size_t hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trimmed(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw FormatError("config line is not \"key = value\"", line_off);
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty()) throw FormatError("config line has an empty key", line_off);
    try {
      apply_config_entry(cfg, key, value);
    } catch (const ArgumentError& e) {
      throw FormatError(e.what(), line_off);
    }
  }
}

namespace {

constexpr const char* kManifestHeader = "clear,hazy,A,beta,depth_kind";

}  // namespace

std::vector<ManifestRow> read_manifest(const fs::path& path) {
  const std::string text = read_text_file(path, "manifest");
  std::vector<ManifestRow> rows;
  bool saw_header = false;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t line_off = pos;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    const std::string line = trimmed(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != kManifestHeader)
        throw FormatError(std::string("manifest header must be \"") + kManifestHeader + "\"",
                          line_off);
      saw_header = true;
      continue;
    }
    const std::vector<std::string> fields = split_fields(line, ',');
    if (fields.size() != 5)
      throw FormatError("manifest row needs 5 comma-separated fields, got " +
                            std::to_string(fields.size()),
                        line_off);
    ManifestRow row;
    row.clear = trimmed(fields[0]);
    row.hazy = trimmed(fields[1]);
    row.depth_kind = trimmed(fields[4]);
    try {
      row.a = parse_double(trimmed(fields[2]), "A");
      row.beta = parse_double(trimmed(fields[3]), "beta");
    } catch (const ArgumentError& e) {
      throw FormatError(e.what(), line_off);
    }
    if (row.clear.empty() || row.hazy.empty())
      throw FormatError("manifest row has an empty path", line_off);
    rows.push_back(std::move(row));
  }
  if (!saw_header) throw FormatError("manifest has no header row", 0);
  return rows;
}

train::DatasetIndex index_from_manifest(const std::vector<ManifestRow>& rows) {
  train::DatasetIndex index;
  std::map<std::string, std::size_t> by_clear;
  for (const ManifestRow& row : rows) {
    const auto [it, inserted] = by_clear.try_emplace(row.clear, index.entries.size());
    if (inserted) index.entries.push_back({row.clear, {}});
    index.entries[it->second].hazy.push_back(row.hazy);
  }
  return index;
}

int run_synth(const RunConfig& cfg) {
  if (cfg.input_dir.empty())
    throw UsageError("synth needs --input (directory of clear .ppm images)");
  if (cfg.output_dir.empty()) throw UsageError("synth needs --output (directory for hazy images)");
  if (cfg.grid_a.empty() || cfg.grid_beta.empty())
    throw UsageError("synth needs at least one atmosphere light and one beta");
  for (double a : cfg.grid_a)
    for (double beta : cfg.grid_beta) haze::HazeParams{a, beta}.validate();

  const std::vector<fs::path> files = sorted_ppm_files(cfg.input_dir);
  fs::create_directories(cfg.output_dir);

  std::vector<ManifestRow> manifest;
  int processed = 0;
  for (const fs::path& file : files) {
    Tensor clear;
    try {
      clear = io::read_ppm(file);
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << file.string() << ": " << e.what() << "\n";
      continue;
    }
    const Shape& s = clear.shape();
    const haze::DepthMap depth = haze::gen_depth(cfg.depth_kind, s.h, s.w, cfg.depth_constant);
    const std::string stem = file.stem().string();
    for (double a : cfg.grid_a)
      for (double beta : cfg.grid_beta) {
        const haze::HazeParams params{a, beta};
        const Tensor hazy = haze::synthesize(clear, haze::transmission(depth, beta), params);
        const fs::path out =
            cfg.output_dir / (stem + "__A" + format_g(a) + "_b" + format_g(beta) + ".ppm");
        io::write_ppm(hazy, out);
        manifest.push_back(
            {file.string(), out.string(), a, beta, depth_kind_name(cfg.depth_kind)});
      }
    ++processed;
  }
  if (processed == 0) throw IoError("no readable .ppm images in " + cfg.input_dir.string());

  const fs::path manifest_path =
      cfg.manifest.empty() ? cfg.output_dir / "manifest.csv" : cfg.manifest;
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw IoError("cannot open " + manifest_path.string() + " for writing");
  out << kManifestHeader << "\n";
  for (const ManifestRow& row : manifest)
    out << row.clear << ',' << row.hazy << ',' << format_full(row.a) << ','
        << format_full(row.beta) << ',' << row.depth_kind << "\n";
  out.flush();
  if (!out) throw IoError("write to " + manifest_path.string() + " failed");

  std::cout << "synthesized " << manifest.size() << " hazy images from " << processed
            << " clear images into " << cfg.output_dir.string() << "\n";
  std::cout << "manifest written to " << manifest_path.string() << "\n";
  return 0;
}

int run_train(const RunConfig& cfg) {
  // --manifest names the CSV directly; --input alone means "the synth output
  // directory", whose manifest lives at a fixed name inside it.
  fs::path manifest_path = cfg.manifest;
  if (manifest_path.empty() && !cfg.input_dir.empty())
    manifest_path = cfg.input_dir / "manifest.csv";
  if (manifest_path.empty())
    throw UsageError("train needs --manifest (or --input pointing at the synth output directory)");
  if (cfg.checkpoint.empty()) throw UsageError("train needs --checkpoint (output path)");

  const std::vector<ManifestRow> rows = read_manifest(manifest_path);
  if (rows.empty()) throw ArgumentError("manifest " + manifest_path.string() + " lists no images");
  const train::DatasetIndex index = index_from_manifest(rows);
  const auto [train_split, test_split] = train::split_dataset(index, cfg.test_fraction, cfg.seed);
  if (train_split.entries.empty())
    throw ArgumentError("test fraction " + format_g(cfg.test_fraction) +
                        " left no training images");

  nn::Network net(cfg.network, cfg.seed);
  train::TrainConfig tc = cfg.train;
  tc.seed = cfg.seed;

  std::optional<nn::FeatureExtractor> fx;
  if (tc.loss.lambda != 0.0) {
    if (!cfg.extractor_file.empty())
      fx.emplace(nn::load_extractor(cfg.extractor_file));
    else
      fx.emplace(tc.loss.extractor, cfg.extractor_seed);
  }

  if (!cfg.checkpoint.parent_path().empty()) fs::create_directories(cfg.checkpoint.parent_path());

  std::size_t pair_count = 0;
  for (const train::DatasetEntry& e : train_split.entries) pair_count += e.hazy.size();
  std::cout << "training on " << pair_count << " pairs (" << train_split.entries.size()
            << " clear images, " << test_split.entries.size() << " held out) for " << tc.epochs
            << " epochs\n";

  const auto load = [](const std::string& path) { return io::read_ppm(path); };
  const train::FitResult result = train::fit(net, train_split, tc, fx ? &*fx : nullptr, load,
                                             cfg.checkpoint);

  const fs::path log_path = !cfg.loss_log.empty() ? cfg.loss_log
                            : !cfg.output_dir.empty()
                                ? cfg.output_dir / "loss_log.csv"
                                : cfg.checkpoint.parent_path() / "loss_log.csv";
  if (!log_path.parent_path().empty()) fs::create_directories(log_path.parent_path());
  train::write_loss_log(result.log, log_path);

  if (!result.log.empty()) {
    const loss::LossBreakdown& last = result.log.back();
    std::cout << "final epoch losses: total " << format_g(last.total) << ", mse "
              << format_g(last.l_mse) << ", perceptual " << format_g(last.l_p) << "\n";
  }
  std::cout << "checkpoint written to " << cfg.checkpoint.string() << "\n";
  std::cout << "loss log written to " << log_path.string() << "\n";
  return 0;
}

int run_dehaze(const RunConfig& cfg) {
  if (cfg.checkpoint.empty()) throw UsageError("dehaze needs --checkpoint");
  if (cfg.input_dir.empty())
    throw UsageError("dehaze needs --input (directory of hazy .ppm images)");
  if (cfg.output_dir.empty())
    throw UsageError("dehaze needs --output (directory for restored images)");

  const nn::Network net = nn::load_checkpoint(cfg.checkpoint);
  const std::vector<fs::path> files = sorted_ppm_files(cfg.input_dir);
  if (files.empty()) throw IoError("no .ppm images in " + cfg.input_dir.string());
  fs::create_directories(cfg.output_dir);

  for (const fs::path& file : files) {
    const Tensor hazy = io::read_ppm(file);
    const Shape s = hazy.shape();
    const Tensor padded = img::reflect_pad_to_multiple(hazy, net.config().input_multiple);
    const Tensor restored = img::crop_to(net.forward(padded), s.h, s.w);
    io::write_ppm(restored, cfg.output_dir / file.filename());
  }
  std::cout << "dehazed " << files.size() << " images into " << cfg.output_dir.string() << "\n";
  return 0;
}

int run_eval(const RunConfig& cfg) {
  const bool manifest_mode = !cfg.manifest.empty();
  const bool truth_mode = !cfg.truth_dir.empty();
  if (manifest_mode == truth_mode)
    throw UsageError("eval needs exactly one of --manifest or --truth");

  // (restored, ground truth) path pairs.
  std::vector<std::pair<fs::path, fs::path>> pairs;
  if (truth_mode) {
    if (cfg.input_dir.empty())
      throw UsageError("eval with --truth needs --input (directory of restored images)");
    const std::vector<fs::path> restored = sorted_ppm_files(cfg.input_dir);
    std::map<std::string, fs::path> truth_by_name;
    for (const fs::path& t : sorted_ppm_files(cfg.truth_dir))
      truth_by_name.emplace(t.filename().string(), t);
    std::vector<std::string> no_truth, no_restored;
    for (const fs::path& r : restored) {
      const auto it = truth_by_name.find(r.filename().string());
      if (it == truth_by_name.end()) {
        no_truth.push_back(r.filename().string());
        continue;
      }
      pairs.emplace_back(r, it->second);
      truth_by_name.erase(it);
    }
    for (const auto& [name, path] : truth_by_name) no_restored.push_back(name);
    if (!no_truth.empty() || !no_restored.empty()) {
      std::string msg = "eval: images do not pair up by filename";
      if (!no_truth.empty()) msg += "; no ground truth for: " + join(no_truth);
      if (!no_restored.empty()) msg += "; no restored image for: " + join(no_restored);
      throw ArgumentError(msg);
    }
  } else {
    // Manifest mode: ground truth is each row's clear image. The restored
    // image is looked up by filename under --input, or, with no --input, the
    // hazy image itself is scored (the no-restoration baseline).
    for (const ManifestRow& row : read_manifest(cfg.manifest)) {
      const fs::path hazy(row.hazy);
      const fs::path restored = cfg.input_dir.empty() ? hazy : cfg.input_dir / hazy.filename();
      pairs.emplace_back(restored, fs::path(row.clear));
    }
  }
  if (pairs.empty()) throw ArgumentError("eval: nothing to evaluate");

  struct EvalRow {
    std::string name;
    double psnr, ssim;
  };
  std::vector<EvalRow> table;
  double sum_psnr = 0.0, sum_ssim = 0.0;
  for (const auto& [restored_path, truth_path] : pairs) {
    const Tensor a = io::read_ppm(restored_path);
    const Tensor b = io::read_ppm(truth_path);
    if (!(a.shape() == b.shape()))
      throw ShapeError("eval: " + restored_path.string() + " is " + to_string(a.shape()) +
                       " but " + truth_path.string() + " is " + to_string(b.shape()));
    const double p = loss::psnr(a, b);
    const double s = loss::ssim(a, b);
    table.push_back({restored_path.filename().string(), p, s});
    sum_psnr += p;
    sum_ssim += s;
  }

  fs::path csv = cfg.output_dir.empty() ? fs::path("metrics.csv") : cfg.output_dir;
  if (fs::is_directory(csv)) csv /= "metrics.csv";
  std::ofstream out(csv, std::ios::binary);
  if (!out) throw IoError("cannot open " + csv.string() + " for writing");
  out << "image,psnr,ssim\n";
  for (const EvalRow& row : table)
    out << row.name << ',' << format_full(row.psnr) << ',' << format_full(row.ssim) << "\n";
  const double n = static_cast<double>(table.size());
  out << "mean," << format_full(sum_psnr / n) << ',' << format_full(sum_ssim / n) << "\n";
  out.flush();
  if (!out) throw IoError("write to " + csv.string() + " failed");

  std::cout << "evaluated " << table.size() << " images: mean psnr " << format_g(sum_psnr / n)
            << " dB, mean ssim " << format_g(sum_ssim / n) << "\n";
  std::cout << "metrics written to " << csv.string() << "\n";
  return 0;
}

int run(const RunConfig& cfg) {
  if (cfg.command == "synth") return run_synth(cfg);
  if (cfg.command == "train") return run_train(cfg);
  if (cfg.command == "dehaze") return run_dehaze(cfg);
  if (cfg.command == "eval") return run_eval(cfg);
  throw UsageError("unknown command \"" + cfg.command + "\" (expected synth, train, dehaze or eval)");
}

}  // namespace gman::cli
