#pragma once

#include "gman/autodiff.hpp"
#include "gman/nn.hpp"
#include "gman/tensor.hpp"

namespace gman::loss {

struct LossConfig {
  // Perceptual weight; 0 disables the feature branch entirely.
  double lambda = 0.01;
  nn::FeatureExtractorConfig extractor;

  void validate() const;  // throws ArgumentError
};

struct LossBreakdown {
  double l_mse = 0.0;
  double l_p = 0.0;
  double total = 0.0;  // l_mse + lambda * l_p, exactly as computed
};

// Tape ids of the loss terms of one training step. l_p is -1 when the
// perceptual branch is disabled; total then aliases l_mse so the two are
// bitwise identical.
struct LossIds {
  autodiff::Id total = -1;
  autodiff::Id l_mse = -1;
  autodiff::Id l_p = -1;

  LossBreakdown read(const autodiff::Tape& tape) const;
};

// Sum over channels, mean over batch pixels: (1/(n*h*w)) * sum((out-truth)^2).
// Note this is 3x the per-element mean psnr() uses.
autodiff::Id mse_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth);

// Squared feature distance per tap, each normalized by its element count
// (n*C_j*H_j*W_j), summed over taps. Gradients reach `output` through the
// frozen extractor; the truth branch stays gradient-free.
autodiff::Id perceptual_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth,
                             const nn::FeatureExtractor& fx);

// total = l_mse + lambda * l_p. fx may be null when lambda == 0.
LossIds total_loss(autodiff::Tape& tape, autodiff::Id output, autodiff::Id truth, double lambda,
                   const nn::FeatureExtractor* fx);

// Plain-number wrappers over the tape builders.
double mse_loss(const Tensor& output, const Tensor& truth);
double perceptual_loss(const Tensor& output, const Tensor& truth, const nn::FeatureExtractor& fx);
LossBreakdown total_loss(const Tensor& output, const Tensor& truth, double lambda,
                         const nn::FeatureExtractor* fx);

// 10*log10(1/m) with m the mean squared error over all elements; returns
// cap_db when m == 0. Assumes values in [0,1] (peak 1).
double psnr(const Tensor& a, const Tensor& b, double cap_db = 100.0);

// Mean local structural similarity: 11x11 Gaussian window (sigma 1.5),
// C1 = 0.01^2, C2 = 0.03^2, valid windows only, per channel then averaged.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace gman::loss
