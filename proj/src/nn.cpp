#include "gman/nn.hpp"

#include <algorithm>
#include <cmath>

#include "gman/rng.hpp"

namespace gman::nn {

void NetworkConfig::validate() const {
  if (base_channels < 1)
    throw ArgumentError("network config: base_channels must be positive, got " +
                        std::to_string(base_channels));
  if (down_channels < base_channels)
    throw ArgumentError("network config: down_channels " + std::to_string(down_channels) +
                        " must be >= base_channels " + std::to_string(base_channels));
  if (residual_conv_counts.empty())
    throw ArgumentError("network config: residual_conv_counts must be non-empty");
  for (int c : residual_conv_counts)
    if (c < 1)
      throw ArgumentError("network config: residual block conv counts must be >= 1, got " +
                          std::to_string(c));
  if (input_multiple < 1)
    throw ArgumentError("network config: input_multiple must be positive");
}

void FeatureExtractorConfig::validate() const {
  if (tap_channels.empty())
    throw ArgumentError("extractor config: tap_channels must be non-empty");
  if (tap_channels.size() != convs_per_stage.size())
    throw ArgumentError("extractor config: tap_channels and convs_per_stage lengths differ");
  for (int c : tap_channels)
    if (c < 1) throw ArgumentError("extractor config: tap channel counts must be positive");
  for (int c : convs_per_stage)
    if (c < 1) throw ArgumentError("extractor config: convs per stage must be >= 1");
}

const Shape* ForwardTrace::find(std::string_view name) const {
  for (const auto& [n, s] : volumes)
    if (n == name) return &s;
  return nullptr;
}

namespace {

// Fan-in-scaled normal init for relu stacks; biases stay zero. One shared Rng
// drawn in canonical parameter order makes equal seeds bitwise-reproducible.
void append_conv_params(std::deque<Param>& params, Rng& rng, const std::string& name,
                        const Shape& weight_shape, int out_channels, int fan_in,
                        bool requires_grad) {
  Tensor w(weight_shape);
  const double stddev = std::sqrt(2.0 / fan_in);
  for (double& v : w.flat()) v = rng.normal() * stddev;
  w.set_requires_grad(requires_grad);
  params.push_back({name + ".weight", std::move(w)});

  Tensor b(Shape{1, out_channels, 1, 1});
  b.set_requires_grad(requires_grad);
  params.push_back({name + ".bias", std::move(b)});
}

}  // namespace

Network::Network(const NetworkConfig& config, std::uint64_t init_seed) : config_(config) {
  config_.validate();
  const int base = config_.base_channels;
  const int down = config_.down_channels;
  Rng rng(init_seed);

  auto conv = [&](const std::string& name, int cin, int cout, int stride) {
    layers_.push_back({LayerKind::kConv, cin, cout, 3, 3, stride, 0, 0});
    append_conv_params(params_, rng, name, Shape{cout, cin, 3, 3}, cout, cin * 9, true);
  };
  auto deconv = [&](const std::string& name, int cin, int cout) {
    // k=3, s=2, p=1 with one row/column of output padding: exactly doubles h,w
    // and is the adjoint of the encoder's stride-2 conv geometry.
    layers_.push_back({LayerKind::kDeconv, cin, cout, 3, 3, 2, 1, 0});
    append_conv_params(params_, rng, name, Shape{cin, cout, 3, 3}, cout, cin * 9, true);
  };
  auto relu = [&] { layers_.push_back({LayerKind::kRelu}); };

  conv("enc_conv1", 3, base, 1);
  relu();
  conv("enc_conv2", base, base, 1);
  relu();
  conv("down_conv1", base, down, 2);
  relu();
  conv("down_conv2", down, down, 2);
  relu();
  for (std::size_t i = 0; i < config_.residual_conv_counts.size(); ++i) {
    const int count = config_.residual_conv_counts[i];
    layers_.push_back({LayerKind::kResidualBlock, down, down, 3, 3, 1, 0, count});
    const std::string block = "res" + std::to_string(i + 1);
    for (int j = 1; j <= count; ++j)
      append_conv_params(params_, rng, block + ".conv" + std::to_string(j),
                         Shape{down, down, 3, 3}, down, down * 9, true);
  }
  deconv("up_deconv1", down, down);
  relu();
  deconv("up_deconv2", down, base);
  relu();
  conv("dec_conv1", base, base, 1);
  relu();
  conv("dec_conv2", base, 3, 1);  // signed correction, no activation
  layers_.push_back({LayerKind::kGlobalResidualAdd});
  relu();
}

std::vector<Tensor*> Network::parameters() {
  std::vector<Tensor*> out;
  out.reserve(params_.size());
  for (Param& p : params_) out.push_back(&p.value);
  return out;
}

std::int64_t Network::parameter_count() const {
  std::int64_t total = 0;
  for (const Param& p : params_) total += p.value.numel();
  return total;
}

Tensor* Network::find_parameter(std::string_view name) {
  for (Param& p : params_)
    if (p.name == name) return &p.value;
  return nullptr;
}

template <typename Params, typename Bind>
autodiff::Id Network::walk(const Network& net, Params& params, autodiff::Tape& tape,
                           autodiff::Id input, Bind bind, ForwardTrace* trace) {
  using autodiff::Id;
  const Shape& in_shape = tape.shape(input);
  const int mult = net.config_.input_multiple;
  if (in_shape.h % mult != 0 || in_shape.w % mult != 0)
    throw ShapeError("forward: input " + to_string(in_shape) +
                     " spatial dims must be divisible by " + std::to_string(mult));

  auto record = [&](const std::string& name, Id id) {
    if (trace) trace->volumes.emplace_back(name, tape.shape(id));
  };
  record("input", input);

  std::size_t cursor = 0;
  auto block_name = [&] {
    const std::string& n = params[cursor].name;
    return n.substr(0, n.find('.'));
  };
  auto apply_conv = [&](Id x, const LayerSpec& s, bool deconv) {
    Id w = bind(params[cursor].value);
    Id b = bind(params[cursor + 1].value);
    cursor += 2;
    const int pad = s.kh / 2;
    return deconv ? tape.conv2d_transpose(x, w, b, s.stride, pad, s.output_pad)
                  : tape.conv2d(x, w, b, s.stride, pad);
  };

  Id cur = input;
  for (const LayerSpec& s : net.layers_) {
    switch (s.kind) {
      case LayerKind::kConv:
      case LayerKind::kDeconv: {
        const std::string name = block_name();
        cur = apply_conv(cur, s, s.kind == LayerKind::kDeconv);
        record(name, cur);
        break;
      }
      case LayerKind::kRelu:
        cur = tape.relu(cur);
        break;
      case LayerKind::kResidualBlock: {
        const std::string name = block_name();
        const Id shortcut = cur;
        LayerSpec inner = s;
        inner.stride = 1;
        for (int j = 0; j < s.inner_conv_count; ++j) {
          cur = apply_conv(cur, inner, false);
          if (j + 1 < s.inner_conv_count) cur = tape.relu(cur);
        }
        cur = tape.relu(tape.add(shortcut, cur));
        record(name, cur);
        break;
      }
      case LayerKind::kGlobalResidualAdd:
        cur = tape.add(input, cur);
        break;
    }
  }
  record("output", cur);
  return cur;
}

Tensor Network::forward(const Tensor& input, ForwardTrace* trace) const {
  autodiff::Tape tape;
  const autodiff::Id in = tape.leaf(input);
  const autodiff::Id out =
      walk(*this, params_, tape, in, [&tape](const Tensor& t) { return tape.leaf(t); }, trace);
  return tape.value(out);
}

autodiff::Id Network::forward_on_tape(autodiff::Tape& tape, autodiff::Id input,
                                      ForwardTrace* trace) {
  return walk(*this, params_, tape, input, [&tape](Tensor& t) { return tape.param(t); }, trace);
}

FeatureExtractor::FeatureExtractor(const FeatureExtractorConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  Rng rng(seed);
  const int stages = static_cast<int>(config_.tap_channels.size());
  for (int i = 1; i <= stages; ++i) {
    const int ch = config_.tap_channels[i - 1];
    for (int j = 1; j <= config_.convs_per_stage[i - 1]; ++j) {
      const int cin = (i == 1 && j == 1) ? 3 : ch;
      append_conv_params(params_, rng,
                         "stage" + std::to_string(i) + ".conv" + std::to_string(j),
                         Shape{ch, cin, 3, 3}, ch, cin * 9, false);
    }
    if (i < stages) {
      const int next = config_.tap_channels[i];
      append_conv_params(params_, rng, "down" + std::to_string(i), Shape{next, ch, 3, 3}, next,
                         ch * 9, false);
    }
  }
}

std::vector<autodiff::Id> FeatureExtractor::features_on_tape(autodiff::Tape& tape,
                                                             autodiff::Id image) const {
  using autodiff::Id;
  const Shape& s = tape.shape(image);
  const int stages = static_cast<int>(config_.tap_channels.size());
  const int mult = 1 << (stages - 1);
  if (s.h % mult != 0 || s.w % mult != 0)
    throw ShapeError("extract_features: input " + to_string(s) +
                     " spatial dims must be divisible by " + std::to_string(mult));

  std::size_t cursor = 0;
  auto conv_relu = [&](Id x, int stride) {
    const Id w = tape.leaf(params_[cursor].value);
    const Id b = tape.leaf(params_[cursor + 1].value);
    cursor += 2;
    return tape.relu(tape.conv2d(x, w, b, stride, 1));
  };

  std::vector<Id> taps;
  taps.reserve(stages);
  Id cur = image;
  for (int i = 1; i <= stages; ++i) {
    const int count = config_.convs_per_stage[i - 1];
    const int tap_at = std::min(i, count);
    for (int j = 1; j <= count; ++j) {
      cur = conv_relu(cur, 1);
      if (j == tap_at) taps.push_back(cur);
    }
    if (i < stages) cur = conv_relu(cur, 2);
  }
  return taps;
}

std::vector<Tensor> FeatureExtractor::extract(const Tensor& image) const {
  autodiff::Tape tape;
  std::vector<Tensor> out;
  for (autodiff::Id id : features_on_tape(tape, tape.leaf(image))) out.push_back(tape.value(id));
  return out;
}

}  // namespace gman::nn
