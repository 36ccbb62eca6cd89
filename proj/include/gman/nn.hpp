#pragma once

#include <cstdint>
#include <deque>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gman/autodiff.hpp"
#include "gman/tensor.hpp"

namespace gman::nn {

enum class LayerKind { kConv, kDeconv, kRelu, kResidualBlock, kGlobalResidualAdd };

// One row of the network's layer table. Residual blocks bundle their inner
// convs (relu between them, shortcut add, relu after the add) into one entry.
struct LayerSpec {
  LayerKind kind = LayerKind::kConv;
  int in_channels = 0;
  int out_channels = 0;
  int kh = 3, kw = 3;
  int stride = 1;
  int output_pad = 0;        // deconv upsamplers only
  int inner_conv_count = 0;  // residual blocks only
};

struct NetworkConfig {
  int base_channels = 64;
  int down_channels = 128;
  std::vector<int> residual_conv_counts = {2, 2, 3, 4};
  // Two stride-2 stages each way; forward() rejects inputs whose spatial dims
  // are not divisible by this.
  int input_multiple = 4;

  void validate() const;  // throws ArgumentError
};

// A named parameter tensor. The deque order of Network/FeatureExtractor
// params is the canonical layer order used by checkpoints.
struct Param {
  std::string name;
  Tensor value;
};

// Named shapes of the intermediate volumes of one forward pass.
struct ForwardTrace {
  std::vector<std::pair<std::string, Shape>> volumes;

  const Shape* find(std::string_view name) const;
};

// Encoder-decoder dehazing net: two stride-2 conv downsamplers, a chain of
// residual blocks on the encoded volume, two stride-2 deconv upsamplers, and
// a global shortcut that adds the input image to the predicted correction
// before the final relu.
class Network {
 public:
  Network(const NetworkConfig& config, std::uint64_t init_seed);

  const NetworkConfig& config() const { return config_; }
  const std::vector<LayerSpec>& layers() const { return layers_; }

  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }
  // Pointers in canonical order, for the optimizer.
  std::vector<Tensor*> parameters();
  // Total scalar count across all parameters.
  std::int64_t parameter_count() const;
  // nullptr when absent. Names look like "enc_conv1.weight", "res3.conv2.bias".
  Tensor* find_parameter(std::string_view name);

  // Inference: runs on a private tape with frozen parameters.
  Tensor forward(const Tensor& input, ForwardTrace* trace = nullptr) const;
  // Training: records the pass on the caller's tape. Parameters are
  // registered with tape.param(), so backward() fills their grads.
  autodiff::Id forward_on_tape(autodiff::Tape& tape, autodiff::Id input,
                               ForwardTrace* trace = nullptr);

 private:
  template <typename Params, typename Bind>
  static autodiff::Id walk(const Network& net, Params& params, autodiff::Tape& tape,
                           autodiff::Id input, Bind bind, ForwardTrace* trace);

  NetworkConfig config_;
  std::vector<LayerSpec> layers_;
  std::deque<Param> params_;
};

struct FeatureExtractorConfig {
  std::vector<int> tap_channels = {64, 128, 256};
  std::vector<int> convs_per_stage = {2, 2, 3};

  void validate() const;  // throws ArgumentError
};

// Fixed convolutional pyramid for the perceptual loss. Stage i taps the
// post-relu output of its i-th conv (capped at the stage's conv count);
// stride-2 convs between stages halve the spatial dims and map channels.
// Weights are frozen: seeded-random by default or loaded from a file, and
// never updated by training.
class FeatureExtractor {
 public:
  FeatureExtractor(const FeatureExtractorConfig& config, std::uint64_t seed);

  const FeatureExtractorConfig& config() const { return config_; }
  std::deque<Param>& params() { return params_; }
  const std::deque<Param>& params() const { return params_; }
  int tap_count() const { return static_cast<int>(config_.tap_channels.size()); }

  // Feature volumes recorded on the caller's tape: gradients flow back into
  // `image` but never into the extractor weights (bound as frozen leaves).
  std::vector<autodiff::Id> features_on_tape(autodiff::Tape& tape, autodiff::Id image) const;
  // Convenience for tests and metrics: plain tensors, private tape.
  std::vector<Tensor> extract(const Tensor& image) const;

 private:
  FeatureExtractorConfig config_;
  std::deque<Param> params_;
};

}  // namespace gman::nn
