#include "gman/checkpoint.hpp"

#include <string>
#include <vector>

#include "gman/serialize.hpp"

namespace gman::nn {

namespace {

// Corrupt headers must not trigger huge allocations before validation fails.
constexpr std::uint32_t kMaxListLen = 4096;

std::int64_t total_scalars(const std::deque<Param>& params) {
  std::int64_t total = 0;
  for (const Param& p : params) total += p.value.numel();
  return total;
}

void write_params(io::ByteWriter& w, const std::deque<Param>& params) {
  for (const Param& p : params) {
    w.u16(static_cast<std::uint16_t>(p.name.size()));
    w.str(p.name);
    w.u8(4);
    const Shape& s = p.value.shape();
    w.u32(static_cast<std::uint32_t>(s.n));
    w.u32(static_cast<std::uint32_t>(s.c));
    w.u32(static_cast<std::uint32_t>(s.h));
    w.u32(static_cast<std::uint32_t>(s.w));
    for (double v : p.value.flat()) w.f32(static_cast<float>(v));
  }
}

// Overwrites the freshly built params in order, insisting the file agrees
// with the reconstructed layout name by name and dim by dim.
void read_params(io::ByteReader& r, std::deque<Param>& params) {
  for (Param& p : params) {
    const std::uint64_t entry_off = r.offset();
    const std::uint16_t name_len = r.u16();
    const std::string name = r.str(name_len);
    if (name != p.name)
      throw FormatError("parameter '" + name + "' where '" + p.name + "' was expected",
                        entry_off);
    const std::uint64_t rank_off = r.offset();
    const std::uint8_t rank = r.u8();
    if (rank != 4)
      throw FormatError("parameter '" + name + "' has rank " + std::to_string(rank) +
                            ", expected 4",
                        rank_off);
    const std::uint64_t dims_off = r.offset();
    Shape s;
    s.n = static_cast<int>(r.u32());
    s.c = static_cast<int>(r.u32());
    s.h = static_cast<int>(r.u32());
    s.w = static_cast<int>(r.u32());
    if (!(s == p.value.shape()))
      throw FormatError("parameter '" + name + "' has shape " + to_string(s) + ", expected " +
                            to_string(p.value.shape()),
                        dims_off);
    for (double& v : p.value.flat()) v = static_cast<double>(r.f32());
  }
}

void check_consumed(const io::ByteReader& r) {
  if (!r.at_end()) throw FormatError("trailing data after last parameter", r.offset());
}

std::uint32_t read_list_len(io::ByteReader& r, const char* what) {
  const std::uint64_t off = r.offset();
  const std::uint32_t len = r.u32();
  if (len == 0 || len > kMaxListLen)
    throw FormatError("implausible " + std::string(what) + " count " + std::to_string(len), off);
  return len;
}

int read_channel_count(io::ByteReader& r, const char* what) {
  const std::uint64_t off = r.offset();
  const std::uint32_t n = r.u32();
  if (n == 0 || n > kMaxListLen)
    throw FormatError("implausible " + std::string(what) + " " + std::to_string(n), off);
  return static_cast<int>(n);
}

void expect_magic(io::ByteReader& r, const char* magic) {
  const std::uint64_t off = r.offset();
  const std::string got = r.str(4);
  if (got != magic)
    throw FormatError("bad magic '" + got + "', expected '" + magic + "'", off);
}

std::uint32_t read_version(io::ByteReader& r) {
  const std::uint64_t off = r.offset();
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw FormatError("unsupported format version " + std::to_string(version), off);
  return version;
}

void check_declared_count(io::ByteReader& r, std::int64_t actual) {
  const std::uint64_t off = r.offset();
  const std::uint32_t declared = r.u32();
  if (declared != static_cast<std::uint64_t>(actual))
    throw FormatError("declared parameter count " + std::to_string(declared) +
                          " does not match the configured network's " + std::to_string(actual),
                      off);
}

}  // namespace

void save_checkpoint(const Network& net, const std::filesystem::path& path) {
  io::ByteWriter w(path);
  w.str("GMAN");
  w.u32(kCheckpointVersion);
  const NetworkConfig& c = net.config();
  w.u32(static_cast<std::uint32_t>(c.base_channels));
  w.u32(static_cast<std::uint32_t>(c.down_channels));
  w.u32(static_cast<std::uint32_t>(c.residual_conv_counts.size()));
  for (int n : c.residual_conv_counts) w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(net.parameter_count()));
  write_params(w, net.params());
  w.finish();
}

Network load_checkpoint(const std::filesystem::path& path) {
  io::ByteReader r(path);
  expect_magic(r, "GMAN");
  read_version(r);

  const std::uint64_t config_off = r.offset();
  NetworkConfig cfg;
  cfg.base_channels = read_channel_count(r, "base_channels");
  cfg.down_channels = read_channel_count(r, "down_channels");
  const std::uint32_t blocks = read_list_len(r, "residual block");
  cfg.residual_conv_counts.clear();
  for (std::uint32_t i = 0; i < blocks; ++i) {
    const std::uint64_t off = r.offset();
    const std::uint32_t n = r.u32();
    if (n == 0 || n > kMaxListLen)
      throw FormatError("implausible residual conv count " + std::to_string(n), off);
    cfg.residual_conv_counts.push_back(static_cast<int>(n));
  }
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid network config: ") + e.what(), config_off);
  }

  Network net(cfg, 0);
  check_declared_count(r, net.parameter_count());
  read_params(r, net.params());
  check_consumed(r);
  return net;
}

void save_extractor(const FeatureExtractor& fx, const std::filesystem::path& path) {
  io::ByteWriter w(path);
  w.str("GMFX");
  w.u32(kCheckpointVersion);
  const FeatureExtractorConfig& c = fx.config();
  w.u32(static_cast<std::uint32_t>(c.tap_channels.size()));
  for (int n : c.tap_channels) w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(c.convs_per_stage.size()));
  for (int n : c.convs_per_stage) w.u32(static_cast<std::uint32_t>(n));
  w.u32(static_cast<std::uint32_t>(total_scalars(fx.params())));
  write_params(w, fx.params());
  w.finish();
}

FeatureExtractor load_extractor(const std::filesystem::path& path) {
  io::ByteReader r(path);
  expect_magic(r, "GMFX");
  read_version(r);

  const std::uint64_t config_off = r.offset();
  FeatureExtractorConfig cfg;
  cfg.tap_channels.clear();
  cfg.convs_per_stage.clear();
  const std::uint32_t taps = read_list_len(r, "tap channel");
  for (std::uint32_t i = 0; i < taps; ++i)
    cfg.tap_channels.push_back(read_channel_count(r, "tap channel"));
  const std::uint32_t stages = read_list_len(r, "stage");
  for (std::uint32_t i = 0; i < stages; ++i)
    cfg.convs_per_stage.push_back(read_channel_count(r, "stage conv count"));
  try {
    cfg.validate();
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("invalid extractor config: ") + e.what(), config_off);
  }

  FeatureExtractor fx(cfg, 0);
  check_declared_count(r, total_scalars(fx.params()));
  read_params(r, fx.params());
  check_consumed(r);
  return fx;
}

}  // namespace gman::nn
