#include "gman/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace gman::loss {

void LossConfig::validate() const {
  if (!(lambda >= 0.0))
    throw ArgumentError("loss config: lambda must be >= 0, got " + std::to_string(lambda));
  extractor.validate();
}

LossBreakdown LossIds::read(const autodiff::Tape& tape) const {
  LossBreakdown out;
  out.l_mse = tape.scalar(l_mse);
  out.l_p = l_p >= 0 ? tape.scalar(l_p) : 0.0;
  out.total = tape.scalar(total);
  return out;
}

autodiff::Id mse_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth) {
  const Shape& s = tape.shape(output);
  const double norm = 1.0 / (static_cast<double>(s.n) * s.h * s.w);
  return tape.sq_diff_sum(output, truth, norm);
}

autodiff::Id perceptual_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth,
                             const nn::FeatureExtractor& fx) {
  if (!(tape.shape(output) == tape.shape(truth)))
    throw ShapeError("perceptual_loss: shapes " + to_string(tape.shape(output)) + " and " +
                     to_string(tape.shape(truth)) + " differ");
  const std::vector<autodiff::Id> f_out = fx.features_on_tape(tape, output);
  const std::vector<autodiff::Id> f_truth = fx.features_on_tape(tape, truth);
  autodiff::Id total = -1;
  for (std::size_t j = 0; j < f_out.size(); ++j) {
    const Shape& fs = tape.shape(f_out[j]);
    const double norm = 1.0 / static_cast<double>(fs.numel());
    const autodiff::Id term = tape.sq_diff_sum(f_out[j], f_truth[j], norm);
    total = j == 0 ? term : tape.add(total, term);
  }
  return total;
}

LossIds total_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth, double lambda,
                   const nn::FeatureExtractor* fx) {
  if (!(lambda >= 0.0))
    throw ArgumentError("total_loss: lambda must be >= 0, got " + std::to_string(lambda));
  LossIds ids;
  ids.l_mse = mse_loss(tape, output, truth);
  if (lambda == 0.0) {
    ids.total = ids.l_mse;  // bitwise-equal by construction
    return ids;
  }
  if (!fx) throw ArgumentError("total_loss: lambda > 0 requires a feature extractor");
  ids.l_p = perceptual_loss(tape, output, truth, *fx);
  ids.total = tape.add(ids.l_mse, tape.scale(ids.l_p, lambda));
  return ids;
}

double mse_loss(const Tensor& output, const Tensor& truth) {
  autodiff::Tape tape;
  return tape.scalar(mse_loss(tape, tape.leaf(output), tape.leaf(truth)));
}

double perceptual_loss(const Tensor& output, const Tensor& truth,
                       const nn::FeatureExtractor& fx) {
  autodiff::Tape tape;
  return tape.scalar(perceptual_loss(tape, tape.leaf(output), tape.leaf(truth), fx));
}

LossBreakdown total_loss(const Tensor& output, const Tensor& truth, double lambda,
                         const nn::FeatureExtractor* fx) {
  autodiff::Tape tape;
  const LossIds ids = total_loss(tape, tape.leaf(output), tape.leaf(truth), lambda, fx);
  return ids.read(tape);
}

double psnr(const Tensor& a, const Tensor& b, double cap_db) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("psnr: shapes " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                     " differ");
  if (a.numel() == 0) throw ArgumentError("psnr: empty tensors");
  const double* pa = a.data();
  const double* pb = b.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < a.numel(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  const double m = acc / static_cast<double>(a.numel());
  if (m == 0.0) return cap_db;
  return 10.0 * std::log10(1.0 / m);
}

namespace {

constexpr int kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kC1 = 1e-4;  // (0.01 * L)^2 with L = 1
constexpr double kC2 = 9e-4;  // (0.03 * L)^2

// Valid-region separable blur: in is h*w, out is (h-10)*(w-10).
void blur_valid(const double* in, int h, int w, const double* k, std::vector<double>& tmp,
                double* out) {
  const int ow = w - (kWindow - 1);
  const int oh = h - (kWindow - 1);
  tmp.resize(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y)
    for (int ox = 0; ox < ow; ++ox) {
      const double* row = in + static_cast<std::int64_t>(y) * w + ox;
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * row[i];
      tmp[static_cast<std::size_t>(y) * ow + ox] = acc;
    }
  for (int oy = 0; oy < oh; ++oy)
    for (int ox = 0; ox < ow; ++ox) {
      double acc = 0.0;
      for (int i = 0; i < kWindow; ++i) acc += k[i] * tmp[static_cast<std::size_t>(oy + i) * ow + ox];
      out[static_cast<std::int64_t>(oy) * ow + ox] = acc;
    }
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
  const Shape& s = a.shape();
  if (!(s == b.shape()))
    throw ShapeError("ssim: shapes " + to_string(s) + " and " + to_string(b.shape()) + " differ");
  if (s.h < kWindow || s.w < kWindow)
    throw ArgumentError("ssim: image " + to_string(s) + " is smaller than the " +
                        std::to_string(kWindow) + "x" + std::to_string(kWindow) + " window");

  double k[kWindow];
  double ksum = 0.0;
  for (int i = 0; i < kWindow; ++i) {
    const double d = i - (kWindow - 1) / 2.0;
    k[i] = std::exp(-(d * d) / (2.0 * kSigma * kSigma));
    ksum += k[i];
  }
  for (double& v : k) v /= ksum;

  const int h = s.h, w = s.w;
  const std::int64_t plane = static_cast<std::int64_t>(h) * w;
  const int oh = h - (kWindow - 1), ow = w - (kWindow - 1);
  const std::int64_t windows = static_cast<std::int64_t>(oh) * ow;

  std::vector<double> aa(plane), bb(plane), ab(plane);
  std::vector<double> mu_a(windows), mu_b(windows), e_aa(windows), e_bb(windows), e_ab(windows);
  std::vector<double> tmp;

  double total = 0.0;
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c) {
      const double* pa = a.data() + (static_cast<std::int64_t>(n) * s.c + c) * plane;
      const double* pb = b.data() + (static_cast<std::int64_t>(n) * s.c + c) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        aa[i] = pa[i] * pa[i];
        bb[i] = pb[i] * pb[i];
        ab[i] = pa[i] * pb[i];
      }
      blur_valid(pa, h, w, k, tmp, mu_a.data());
      blur_valid(pb, h, w, k, tmp, mu_b.data());
      blur_valid(aa.data(), h, w, k, tmp, e_aa.data());
      blur_valid(bb.data(), h, w, k, tmp, e_bb.data());
      blur_valid(ab.data(), h, w, k, tmp, e_ab.data());
      for (std::int64_t i = 0; i < windows; ++i) {
        const double ma = mu_a[i], mb = mu_b[i];
        const double va = e_aa[i] - ma * ma;
        const double vb = e_bb[i] - mb * mb;
        const double cov = e_ab[i] - ma * mb;
        // Identical inputs make numerator and denominator bitwise equal
        // (2*x == x + x exactly), so ssim(x,x) is exactly 1.
        const double num = (2.0 * ma * mb + kC1) * (2.0 * cov + kC2);
        const double den = (ma * ma + mb * mb + kC1) * (va + vb + kC2);
        total += num / den;
      }
    }
  return total / (static_cast<double>(s.n) * s.c * windows);
}

}  // namespace gman::loss
