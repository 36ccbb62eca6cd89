#pragma once

#include <cstdint>

#include "gman/tensor.hpp"

namespace gman::kernels {

// Resolved geometry of one convolution (or transposed convolution) call.
struct ConvGeom {
  int n = 0, cin = 0, ih = 0, iw = 0;
  int cout = 0, kh = 0, kw = 0;
  int stride = 1, pad = 0, outpad = 0;
  int oh = 0, ow = 0;

  std::int64_t in_numel() const { return static_cast<std::int64_t>(n) * cin * ih * iw; }
  std::int64_t out_numel() const { return static_cast<std::int64_t>(n) * cout * oh * ow; }
  std::int64_t weight_numel() const { return static_cast<std::int64_t>(cout) * cin * kh * kw; }
};

// Validates shapes and computes output dims for cross-correlation:
//   oh = floor((ih + 2*pad - kh) / stride) + 1.
// weight is (cout, cin, kh, kw); bias, when used, is (1, cout, 1, 1).
ConvGeom conv_geometry(const Shape& input, const Shape& weight, int stride, int pad);

// Transposed convolution geometry:
//   oh = (ih - 1)*stride - 2*pad + kh + outpad.
// weight is (cin, cout, kh, kw). outpad must satisfy 0 <= outpad < stride.
ConvGeom deconv_geometry(const Shape& input, const Shape& weight, int stride, int pad,
                         int outpad);

// All kernels are bitwise deterministic: each output element is accumulated
// in a fixed serial order, and parallelism only splits independent elements
// across threads. Gradient kernels accumulate (+=) into their target buffer.

void conv2d_forward(const double* in, const double* w, const double* bias, double* out,
                    const ConvGeom& g);
void conv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g);
void conv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g);
void conv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g);

void deconv2d_forward(const double* in, const double* w, const double* bias, double* out,
                      const ConvGeom& g);
void deconv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g);
void deconv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g);
void deconv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g);

void relu_forward(const double* x, double* y, std::int64_t count);
void relu_backward(const double* x, const double* gy, double* gx, std::int64_t count);

void add_forward(const double* a, const double* b, double* y, std::int64_t count);
void scale_forward(const double* x, double alpha, double* y, std::int64_t count);
void accumulate(double* dst, const double* src, std::int64_t count);
void accumulate_scaled(double* dst, const double* src, double alpha, std::int64_t count);

// Serial reference implementations. Same contracts, plain loops, no OpenMP.
// Kept for the kernel equivalence tests and the benchmark tool; results must
// match the parallel versions bit for bit.
namespace ref {

void conv2d_forward(const double* in, const double* w, const double* bias, double* out,
                    const ConvGeom& g);
void conv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g);
void conv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g);
void conv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g);

void deconv2d_forward(const double* in, const double* w, const double* bias, double* out,
                      const ConvGeom& g);
void deconv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g);
void deconv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g);
void deconv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g);

void relu_forward(const double* x, double* y, std::int64_t count);
void relu_backward(const double* x, const double* gy, double* gx, std::int64_t count);

}  // namespace ref

}  // namespace gman::kernels
