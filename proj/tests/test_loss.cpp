#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gman/autodiff.hpp"
#include "gman/loss.hpp"
#include "gman/nn.hpp"
#include "gman/rng.hpp"
#include "gman/tensor.hpp"
#include "support.hpp"

using gman::Rng;
using gman::Shape;
using gman::Tensor;
using gman::autodiff::Tape;
using gman::nn::FeatureExtractor;
using gman::nn::FeatureExtractorConfig;
namespace loss = gman::loss;

namespace {

FeatureExtractor tiny_extractor(std::uint64_t seed = 4) {
  FeatureExtractorConfig cfg;
  cfg.tap_channels = {4, 8};
  cfg.convs_per_stage = {1, 2};
  return FeatureExtractor(cfg, seed);
}

}  // namespace

TEST_CASE("mse: zero on identical images, channel-sum scaling on offsets") {
  const Tensor x = testsup::pattern_image(6, 6);
  CHECK(loss::mse_loss(x, x) == 0.0);

  // A uniform offset of exactly 0.125 (representable) gives
  // (1/(n*h*w)) * sum over 3 channels = 3 * 0.125^2.
  Tensor shifted = x;
  Tensor base(Shape{1, 3, 6, 6}, 0.25);
  Tensor off(Shape{1, 3, 6, 6}, 0.375);
  CHECK(loss::mse_loss(base, off) == 3.0 * 0.125 * 0.125);

  // Batch mean: duplicating the pair must not change the value.
  Tensor base2(Shape{2, 3, 6, 6}, 0.25);
  Tensor off2(Shape{2, 3, 6, 6}, 0.375);
  CHECK(loss::mse_loss(base2, off2) == 3.0 * 0.125 * 0.125);

  CHECK_THROWS_AS(loss::mse_loss(base, Tensor(Shape{1, 3, 6, 5}, 0.0)), gman::ShapeError);
}

TEST_CASE("perceptual: zero on identical inputs, matches a direct evaluation") {
  const FeatureExtractor fx = tiny_extractor();
  const Tensor x = testsup::pattern_image(8, 8, 0.1);
  const Tensor y = testsup::pattern_image(8, 8, 0.9);

  CHECK(loss::perceptual_loss(x, x, fx) == 0.0);
  const double lp = loss::perceptual_loss(x, y, fx);
  CHECK(lp > 0.0);

  // Independent evaluation: extract both feature pyramids and accumulate the
  // per-tap mean squared distances by hand.
  const auto fa = fx.extract(x);
  const auto fb = fx.extract(y);
  double expected = 0.0;
  for (std::size_t j = 0; j < fa.size(); ++j) {
    double sq = 0.0;
    for (std::int64_t i = 0; i < fa[j].numel(); ++i) {
      const double d = fa[j].data()[i] - fb[j].data()[i];
      sq += d * d;
    }
    expected += sq / static_cast<double>(fa[j].numel());
  }
  CHECK(lp == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("total: lambda arithmetic and the lambda=0 alias") {
  const FeatureExtractor fx = tiny_extractor();
  const Tensor x = testsup::pattern_image(8, 8, 0.2);
  const Tensor y = testsup::pattern_image(8, 8, 1.4);

  const loss::LossBreakdown b = loss::total_loss(x, y, 2.0, &fx);
  CHECK(b.l_mse == loss::mse_loss(x, y));
  CHECK(b.l_p == loss::perceptual_loss(x, y, fx));
  CHECK(b.total == b.l_mse + 2.0 * b.l_p);

  // lambda = 0: no extractor needed, total IS l_mse (same tape node).
  Tape tape;
  const auto ids = loss::total_loss(tape, tape.leaf(x), tape.leaf(y), 0.0, nullptr);
  CHECK(ids.l_p == -1);
  CHECK(ids.total == ids.l_mse);
  const loss::LossBreakdown b0 = ids.read(tape);
  CHECK(b0.total == b0.l_mse);
  CHECK(b0.l_p == 0.0);
  CHECK(b0.l_mse == loss::mse_loss(x, y));

  // lambda != 0 without an extractor is a caller bug.
  Tape tape2;
  CHECK_THROWS_AS(loss::total_loss(tape2, tape2.leaf(x), tape2.leaf(y), 0.5, nullptr),
                  gman::ArgumentError);
  loss::LossConfig bad;
  bad.lambda = -0.5;
  CHECK_THROWS_AS(bad.validate(), gman::ArgumentError);
}

TEST_CASE("total loss gradient agrees with finite differences") {
  const FeatureExtractor fx = tiny_extractor(11);
  Rng rng(31);
  Tensor out(Shape{1, 3, 8, 8});
  for (double& v : out.flat()) v = 0.2 + 0.6 * rng.uniform();
  const Tensor truth = testsup::pattern_image(8, 8, 0.8);

  auto eval = [&](const Tensor& o) {
    return loss::total_loss(o, truth, 0.7, &fx).total;
  };
  const Tensor numeric = gman::autodiff::finite_diff_grad(eval, out);

  Tensor probe = out;
  probe.set_requires_grad(true);
  Tape tape;
  const auto ids = loss::total_loss(tape, tape.param(probe), tape.leaf(truth), 0.7, &fx);
  tape.backward(ids.total);

  double max_num = 0.0, max_err = 0.0;
  for (std::int64_t i = 0; i < numeric.numel(); ++i) {
    max_num = std::max(max_num, std::abs(numeric.data()[i]));
    max_err = std::max(max_err, std::abs(probe.grad()[i] - numeric.data()[i]));
  }
  CHECK(max_err / std::max(max_num, 1e-12) < 1e-4);
}

TEST_CASE("psnr: cap, known values, monotone in error") {
  const Tensor x = testsup::pattern_image(8, 8);
  CHECK(loss::psnr(x, x) == 100.0);
  CHECK(loss::psnr(x, x, 55.0) == 55.0);

  // Uniform difference of 0.1: -10*log10(0.01) = 20 dB.
  Tensor a(Shape{1, 3, 8, 8}, 0.5);
  Tensor b(Shape{1, 3, 8, 8}, 0.6);
  CHECK(loss::psnr(a, b) == doctest::Approx(20.0).epsilon(5e-4));

  // Exactly representable difference: 0.125 -> 10*log10(64) dB.
  Tensor c(Shape{1, 3, 8, 8}, 0.375);
  CHECK(loss::psnr(a, c) == doctest::Approx(10.0 * std::log10(64.0)).epsilon(1e-12));

  // Halving the error adds 10*log10(4) ~ 6.0206 dB.
  Tensor d(Shape{1, 3, 8, 8}, 0.4375);  // diff 0.0625
  CHECK(loss::psnr(a, d) - loss::psnr(a, c) ==
        doctest::Approx(10.0 * std::log10(4.0)).epsilon(1e-9));

  CHECK_THROWS_AS(loss::psnr(a, Tensor(Shape{1, 3, 8, 7}, 0.0)), gman::ShapeError);
}

TEST_CASE("ssim: identity, symmetry, constant-image closed form") {
  Rng rng(17);
  const Tensor x = testsup::random_image(Shape{1, 3, 16, 16}, rng);
  const Tensor y = testsup::random_image(Shape{1, 3, 16, 16}, rng);

  CHECK(loss::ssim(x, x) == 1.0);  // exact: numerator and denominator coincide
  CHECK(std::abs(loss::ssim(x, y) - loss::ssim(y, x)) <= 1e-12);
  const double s = loss::ssim(x, y);
  CHECK(s > -1.0);
  CHECK(s < 1.0);

  // Two flat images (0.3 vs 0.5): zero variance everywhere, so the contrast
  // factor collapses to C2/C2 = 1 and only the luminance term survives:
  // (2*mu1*mu2 + C1) / (mu1^2 + mu2^2 + C1).
  Tensor f1(Shape{1, 1, 16, 16}, 0.3);
  Tensor f2(Shape{1, 1, 16, 16}, 0.5);
  const double expected = (2 * 0.3 * 0.5 + 1e-4) / (0.3 * 0.3 + 0.5 * 0.5 + 1e-4);
  CHECK(loss::ssim(f1, f2) == doctest::Approx(expected).epsilon(1e-9));

  // Images smaller than the 11x11 window have no valid positions.
  Tensor small(Shape{1, 1, 10, 12}, 0.5);
  CHECK_THROWS_AS(loss::ssim(small, small), gman::ArgumentError);
  CHECK_THROWS_AS(loss::ssim(x, Tensor(Shape{1, 3, 16, 15}, 0.0)), gman::ShapeError);
}

TEST_CASE("quality metrics rank haze levels the same way") {
  // Degrading an image more should never raise either metric.
  const Tensor clean = testsup::pattern_image(16, 16, 0.5);
  double prev_psnr = 1e9, prev_ssim = 2.0;
  for (const double amp : {0.02, 0.05, 0.1, 0.2}) {
    Tensor noisy = clean;
    Rng rng(5);
    for (double& v : noisy.flat())
      v = std::min(1.0, std::max(0.0, v + amp * (2.0 * rng.uniform() - 1.0)));
    const double p = loss::psnr(clean, noisy);
    const double s = loss::ssim(clean, noisy);
    CHECK(p < prev_psnr);
    CHECK(s < prev_ssim);
    prev_psnr = p;
    prev_ssim = s;
  }
}
