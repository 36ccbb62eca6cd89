#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "gman/loss.hpp"
#include "gman/nn.hpp"
#include "gman/rng.hpp"
#include "gman/tensor.hpp"

namespace gman::train {

// Adam optimizer state over a fixed parameter list. Moment buffers mirror the
// parameter shapes; params are borrowed and must outlive the state.
struct AdamState {
  std::vector<Tensor*> params;
  std::vector<std::vector<double>> m, v;
  std::int64_t step_count = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit AdamState(std::vector<Tensor*> parameters);
};

// One bias-corrected update:
//   m <- b1*m + (1-b1)*g;  v <- b2*v + (1-b2)*g^2
//   p <- p - lr * (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps)
// Throws StateError when a parameter has no gradient buffer or the moment
// shapes fell out of sync.
void adam_step(AdamState& state);

struct TrainConfig {
  int batch_size = 35;
  int crop = 224;       // square crop side; must be divisible by 4
  int epochs = 20;
  std::uint64_t seed = 0;
  loss::LossConfig loss;
  int checkpoint_every = 0;  // epochs between checkpoint writes; 0 = final only

  void validate() const;  // throws ArgumentError
};

// One clear image and the hazy variants synthesized from it. Splits operate
// on whole entries so a clear image and its variants always travel together.
struct DatasetEntry {
  std::string clear;
  std::vector<std::string> hazy;
};

struct DatasetIndex {
  std::vector<DatasetEntry> entries;
};

// Uniform random top-left corner, then a plain sub-array copy. Draws the row
// offset before the column offset; equal seeds give equal corner sequences.
Tensor random_crop(const Tensor& image, int crop, Rng& rng);

// Seeded shuffle of the clear images, first round(test_fraction*n) to test,
// rest to train. Hazy variants follow their clear parent, so the two sides
// share no images.
std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& index,
                                                    double test_fraction, std::uint64_t seed);

// forward -> total loss -> backward -> adam -> clear gradients. Returns the
// losses of the step's forward pass (before the parameter update).
loss::LossBreakdown train_step(nn::Network& net, const Tensor& batch_hazy,
                               const Tensor& batch_clear, double lambda,
                               const nn::FeatureExtractor* fx, AdamState& adam);

struct FitResult {
  // One row per epoch: batch-size-weighted mean of the step losses.
  std::vector<loss::LossBreakdown> log;
};

// Epoch loop over all (hazy, clear) pairs of the index: seeded reshuffle each
// epoch, one shared random crop corner per pair, partial final batch kept.
// `load_image` maps a path to a (1,3,h,w) tensor and is memoized per path.
// A non-empty checkpoint_path is written every checkpoint_every epochs.
FitResult fit(nn::Network& net, const DatasetIndex& train_index, const TrainConfig& cfg,
              const nn::FeatureExtractor* fx,
              const std::function<Tensor(const std::string&)>& load_image,
              const std::filesystem::path& checkpoint_path = {});

// CSV "epoch,total,l_mse,l_p", one row per epoch, full-precision decimals.
void write_loss_log(const std::vector<loss::LossBreakdown>& log,
                    const std::filesystem::path& path);

}  // namespace gman::train
