#include "gman/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <utility>

#include "gman/checkpoint.hpp"
#include "gman/imageops.hpp"

namespace gman::train {

AdamState::AdamState(std::vector<Tensor*> parameters) : params(std::move(parameters)) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const Tensor* p : params) {
    m.emplace_back(static_cast<std::size_t>(p->numel()), 0.0);
    v.emplace_back(static_cast<std::size_t>(p->numel()), 0.0);
  }
}

void adam_step(AdamState& s) {
  if (s.m.size() != s.params.size() || s.v.size() != s.params.size())
    throw StateError("adam: moment buffers out of sync with the parameter list");
  ++s.step_count;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step_count));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step_count));
  for (std::size_t i = 0; i < s.params.size(); ++i) {
    Tensor& p = *s.params[i];
    if (!p.has_grad())
      throw StateError("adam: parameter " + std::to_string(i) +
                       " has no gradient (backward not run?)");
    if (static_cast<std::int64_t>(s.m[i].size()) != p.numel())
      throw StateError("adam: moment shape for parameter " + std::to_string(i) + " out of sync");
    const std::span<const double> g = std::as_const(p).grad();
    double* mp = s.m[i].data();
    double* vp = s.v[i].data();
    double* pp = p.data();
    for (std::int64_t j = 0; j < p.numel(); ++j) {
      mp[j] = s.beta1 * mp[j] + (1.0 - s.beta1) * g[j];
      vp[j] = s.beta2 * vp[j] + (1.0 - s.beta2) * g[j] * g[j];
      const double mhat = mp[j] / bc1;
      const double vhat = vp[j] / bc2;
      pp[j] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1)
    throw ArgumentError("train config: batch_size must be >= 1, got " +
                        std::to_string(batch_size));
  if (crop < 4 || crop % 4 != 0)
    throw ArgumentError("train config: crop must be a positive multiple of 4, got " +
                        std::to_string(crop));
  if (epochs < 1)
    throw ArgumentError("train config: epochs must be >= 1, got " + std::to_string(epochs));
  if (checkpoint_every < 0)
    throw ArgumentError("train config: checkpoint_every must be >= 0");
  loss.validate();
}

Tensor random_crop(const Tensor& image, int crop, Rng& rng) {
  const Shape& s = image.shape();
  if (crop < 1) throw ArgumentError("random_crop: crop must be positive");
  if (s.h < crop || s.w < crop)
    throw ArgumentError("random_crop: image " + to_string(s) + " smaller than crop " +
                        std::to_string(crop));
  const int y0 = static_cast<int>(rng.uniform_int(0, s.h - crop));
  const int x0 = static_cast<int>(rng.uniform_int(0, s.w - crop));
  return img::crop_at(image, y0, x0, crop, crop);
}

std::pair<DatasetIndex, DatasetIndex> split_dataset(const DatasetIndex& index,
                                                    double test_fraction, std::uint64_t seed) {
  const std::size_t n = index.entries.size();
  if (n == 0) throw ArgumentError("split_dataset: empty index");
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw ArgumentError("split_dataset: test fraction must be in (0,1), got " +
                        std::to_string(test_fraction));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(order);
  const auto test_n = static_cast<std::size_t>(
      std::min<long>(std::lround(test_fraction * static_cast<double>(n)), static_cast<long>(n)));
  std::pair<DatasetIndex, DatasetIndex> out;
  for (std::size_t i = 0; i < n; ++i)
    (i < test_n ? out.second : out.first).entries.push_back(index.entries[order[i]]);
  return out;
}

loss::LossBreakdown train_step(nn::Network& net, const Tensor& batch_hazy,
                               const Tensor& batch_clear, double lambda,
                               const nn::FeatureExtractor* fx, AdamState& adam) {
  autodiff::Tape tape;
  const autodiff::Id input = tape.leaf(batch_hazy);
  const autodiff::Id output = net.forward_on_tape(tape, input);
  const autodiff::Id truth = tape.leaf(batch_clear);
  const loss::LossIds ids = loss::total_loss(tape, output, truth, lambda, fx);
  tape.backward(ids.total);
  adam_step(adam);
  for (Tensor* p : adam.params) p->clear_grad();
  return ids.read(tape);
}

FitResult fit(nn::Network& net, const DatasetIndex& train_index, const TrainConfig& cfg,
              const nn::FeatureExtractor* fx,
              const std::function<Tensor(const std::string&)>& load_image,
              const std::filesystem::path& checkpoint_path) {
  cfg.validate();
  if (!load_image) throw ArgumentError("fit: load_image callback required");
  if (cfg.loss.lambda > 0.0 && !fx)
    throw ArgumentError("fit: lambda > 0 requires a feature extractor");

  struct PairRef {
    const std::string* clear;
    const std::string* hazy;
  };
  std::vector<PairRef> pairs;
  for (const DatasetEntry& e : train_index.entries)
    for (const std::string& h : e.hazy) pairs.push_back({&e.clear, &h});
  if (pairs.empty()) throw ArgumentError("fit: index contains no (clear, hazy) pairs");

  std::map<std::string, Tensor> cache;
  auto image = [&](const std::string& path) -> const Tensor& {
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, load_image(path)).first;
    return it->second;
  };

  AdamState adam(net.parameters());
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  const std::int64_t slot = static_cast<std::int64_t>(3) * cfg.crop * cfg.crop;
  FitResult result;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double weight = 0.0, total = 0.0, l_mse = 0.0, l_p = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const int bn = static_cast<int>(
          std::min<std::size_t>(cfg.batch_size, order.size() - start));
      Tensor hazy(Shape{bn, 3, cfg.crop, cfg.crop});
      Tensor clear(Shape{bn, 3, cfg.crop, cfg.crop});
      for (int i = 0; i < bn; ++i) {
        const PairRef& pr = pairs[order[start + i]];
        const Tensor& him = image(*pr.hazy);
        const Tensor& cim = image(*pr.clear);
        if (!(him.shape() == cim.shape()))
          throw ArgumentError("fit: hazy " + *pr.hazy + " " + to_string(him.shape()) +
                              " does not match clear " + *pr.clear + " " +
                              to_string(cim.shape()));
        if (him.shape().n != 1 || him.shape().c != 3)
          throw ArgumentError("fit: image " + *pr.hazy + " must be (1,3,h,w), got " +
                              to_string(him.shape()));
        if (him.shape().h < cfg.crop || him.shape().w < cfg.crop)
          throw ArgumentError("fit: image " + *pr.hazy + " " + to_string(him.shape()) +
                              " smaller than crop " + std::to_string(cfg.crop));
        // One corner per pair so hazy and clear crops stay aligned.
        const int y0 = static_cast<int>(rng.uniform_int(0, him.shape().h - cfg.crop));
        const int x0 = static_cast<int>(rng.uniform_int(0, him.shape().w - cfg.crop));
        const Tensor hc = img::crop_at(him, y0, x0, cfg.crop, cfg.crop);
        const Tensor cc = img::crop_at(cim, y0, x0, cfg.crop, cfg.crop);
        std::copy(hc.data(), hc.data() + slot, hazy.data() + i * slot);
        std::copy(cc.data(), cc.data() + slot, clear.data() + i * slot);
      }
      const loss::LossBreakdown step = train_step(net, hazy, clear, cfg.loss.lambda, fx, adam);
      weight += bn;
      total += step.total * bn;
      l_mse += step.l_mse * bn;
      l_p += step.l_p * bn;
    }
    result.log.push_back({l_mse / weight, l_p / weight, total / weight});
    if (!checkpoint_path.empty() && cfg.checkpoint_every > 0 &&
        epoch % cfg.checkpoint_every == 0)
      nn::save_checkpoint(net, checkpoint_path);
  }
  // The final state is always worth keeping, whether or not the last epoch
  // hit a periodic save.
  if (!checkpoint_path.empty()) nn::save_checkpoint(net, checkpoint_path);
  return result;
}

void write_loss_log(const std::vector<loss::LossBreakdown>& log,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "epoch,total,l_mse,l_p\n";
  char buf[160];
  for (std::size_t i = 0; i < log.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", i + 1, log[i].total, log[i].l_mse,
                  log[i].l_p);
    out << buf;
  }
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace gman::train
