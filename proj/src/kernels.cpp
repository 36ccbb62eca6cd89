#include "gman/kernels.hpp"

#include <algorithm>
#include <string>

namespace gman::kernels {

ConvGeom conv_geometry(const Shape& input, const Shape& weight, int stride, int pad) {
  if (stride <= 0) throw ArgumentError("conv2d: stride must be positive, got " + std::to_string(stride));
  if (pad < 0) throw ArgumentError("conv2d: pad must be nonnegative, got " + std::to_string(pad));
  if (input.c != weight.c)
    throw ShapeError("conv2d: input channels " + std::to_string(input.c) +
                     " do not match weight channels " + std::to_string(weight.c));
  if (weight.h > input.h + 2 * pad || weight.w > input.w + 2 * pad)
    throw ShapeError("conv2d: kernel " + std::to_string(weight.h) + "x" + std::to_string(weight.w) +
                     " larger than padded input " + to_string(input));
  ConvGeom g;
  g.n = input.n;
  g.cin = input.c;
  g.ih = input.h;
  g.iw = input.w;
  g.cout = weight.n;
  g.kh = weight.h;
  g.kw = weight.w;
  g.stride = stride;
  g.pad = pad;
  g.oh = (input.h + 2 * pad - weight.h) / stride + 1;
  g.ow = (input.w + 2 * pad - weight.w) / stride + 1;
  return g;
}

ConvGeom deconv_geometry(const Shape& input, const Shape& weight, int stride, int pad,
                         int outpad) {
  if (stride <= 0)
    throw ArgumentError("conv2d_transpose: stride must be positive, got " + std::to_string(stride));
  if (pad < 0) throw ArgumentError("conv2d_transpose: pad must be nonnegative");
  if (outpad < 0 || outpad >= stride)
    throw ArgumentError("conv2d_transpose: output padding must be in [0, stride)");
  if (input.c != weight.n)
    throw ShapeError("conv2d_transpose: input channels " + std::to_string(input.c) +
                     " do not match weight input channels " + std::to_string(weight.n));
  ConvGeom g;
  g.n = input.n;
  g.cin = input.c;
  g.ih = input.h;
  g.iw = input.w;
  g.cout = weight.c;
  g.kh = weight.h;
  g.kw = weight.w;
  g.stride = stride;
  g.pad = pad;
  g.outpad = outpad;
  g.oh = (input.h - 1) * stride - 2 * pad + weight.h + outpad;
  g.ow = (input.w - 1) * stride - 2 * pad + weight.w + outpad;
  if (g.oh < 1 || g.ow < 1)
    throw ShapeError("conv2d_transpose: output would be empty for input " + to_string(input));
  return g;
}

// Accumulation order per output element is (ci, ky, kx); the serial reference
// uses the same order so results match bit for bit.
void conv2d_forward(const double* in, const double* w, const double* bias, double* out,
                    const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
  const std::int64_t w_per_cout = static_cast<std::int64_t>(g.cin) * g.kh * g.kw;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.n; ++n) {
    for (int co = 0; co < g.cout; ++co) {
      const double b = bias ? bias[co] : 0.0;
      const double* w_co = w + co * w_per_cout;
      const double* in_n = in + static_cast<std::int64_t>(n) * g.cin * in_plane;
      double* out_p = out + (static_cast<std::int64_t>(n) * g.cout + co) * out_plane;
      for (int oy = 0; oy < g.oh; ++oy) {
        const int iy_base = oy * g.stride - g.pad;
        const int ky0 = std::max(0, -iy_base);
        const int ky1 = std::min(g.kh, g.ih - iy_base);
        for (int ox = 0; ox < g.ow; ++ox) {
          const int ix_base = ox * g.stride - g.pad;
          const int kx0 = std::max(0, -ix_base);
          const int kx1 = std::min(g.kw, g.iw - ix_base);
          double acc = b;
          for (int ci = 0; ci < g.cin; ++ci) {
            const double* in_c = in_n + ci * in_plane;
            const double* w_c = w_co + static_cast<std::int64_t>(ci) * g.kh * g.kw;
            for (int ky = ky0; ky < ky1; ++ky) {
              const double* in_row = in_c + static_cast<std::int64_t>(iy_base + ky) * g.iw + ix_base;
              const double* w_row = w_c + static_cast<std::int64_t>(ky) * g.kw;
              for (int kx = kx0; kx < kx1; ++kx) acc += w_row[kx] * in_row[kx];
            }
          }
          out_p[static_cast<std::int64_t>(oy) * g.ow + ox] = acc;
        }
      }
    }
  }
}

// gin[n,ci,iy,ix] += sum over (co, ky, kx) of gout[n,co,oy,ox] * w[co,ci,ky,kx]
// where oy = (iy + pad - ky)/stride when integral and in range.
void conv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
  const std::int64_t w_per_cout = static_cast<std::int64_t>(g.cin) * g.kh * g.kw;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.n; ++n) {
    for (int ci = 0; ci < g.cin; ++ci) {
      double* gin_p = gin + (static_cast<std::int64_t>(n) * g.cin + ci) * in_plane;
      const double* gout_n = gout + static_cast<std::int64_t>(n) * g.cout * out_plane;
      for (int iy = 0; iy < g.ih; ++iy) {
        for (int ix = 0; ix < g.iw; ++ix) {
          double acc = 0.0;
          for (int co = 0; co < g.cout; ++co) {
            const double* gout_c = gout_n + co * out_plane;
            const double* w_c = w + co * w_per_cout + static_cast<std::int64_t>(ci) * g.kh * g.kw;
            for (int ky = 0; ky < g.kh; ++ky) {
              const int ty = iy + g.pad - ky;
              if (ty < 0 || ty % g.stride != 0) continue;
              const int oy = ty / g.stride;
              if (oy >= g.oh) continue;
              for (int kx = 0; kx < g.kw; ++kx) {
                const int tx = ix + g.pad - kx;
                if (tx < 0 || tx % g.stride != 0) continue;
                const int ox = tx / g.stride;
                if (ox >= g.ow) continue;
                acc += gout_c[static_cast<std::int64_t>(oy) * g.ow + ox] *
                       w_c[static_cast<std::int64_t>(ky) * g.kw + kx];
              }
            }
          }
          gin_p[static_cast<std::int64_t>(iy) * g.iw + ix] += acc;
        }
      }
    }
  }
}

// gw[co,ci,ky,kx] += sum over (n, oy, ox) of gout[n,co,oy,ox] * in[n,ci,iy,ix].
void conv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int co = 0; co < g.cout; ++co) {
    for (int ci = 0; ci < g.cin; ++ci) {
      double* gw_p = gw + (static_cast<std::int64_t>(co) * g.cin + ci) * g.kh * g.kw;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < g.n; ++n) {
            const double* gout_p = gout + (static_cast<std::int64_t>(n) * g.cout + co) * out_plane;
            const double* in_p = in + (static_cast<std::int64_t>(n) * g.cin + ci) * in_plane;
            for (int oy = 0; oy < g.oh; ++oy) {
              const int iy = oy * g.stride + ky - g.pad;
              if (iy < 0 || iy >= g.ih) continue;
              const double* in_row = in_p + static_cast<std::int64_t>(iy) * g.iw;
              const double* gout_row = gout_p + static_cast<std::int64_t>(oy) * g.ow;
              for (int ox = 0; ox < g.ow; ++ox) {
                const int ix = ox * g.stride + kx - g.pad;
                if (ix < 0 || ix >= g.iw) continue;
                acc += gout_row[ox] * in_row[ix];
              }
            }
          }
          gw_p[static_cast<std::int64_t>(ky) * g.kw + kx] += acc;
        }
      }
    }
  }
}

void conv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g) {
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
#pragma omp parallel for schedule(static)
  for (int co = 0; co < g.cout; ++co) {
    double acc = 0.0;
    for (int n = 0; n < g.n; ++n) {
      const double* p = gout + (static_cast<std::int64_t>(n) * g.cout + co) * out_plane;
      for (std::int64_t i = 0; i < out_plane; ++i) acc += p[i];
    }
    gb[co] += acc;
  }
}

// out[n,co,oy,ox] = bias[co] + sum over (ci, ky, kx) of in[n,ci,iy,ix] * w[ci,co,ky,kx]
// where iy = (oy + pad - ky)/stride when integral and in range (gather form of
// the kernel scatter, so threads never write the same element).
void deconv2d_forward(const double* in, const double* w, const double* bias, double* out,
                      const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
  const std::int64_t w_per_cin = static_cast<std::int64_t>(g.cout) * g.kh * g.kw;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.n; ++n) {
    for (int co = 0; co < g.cout; ++co) {
      const double b = bias ? bias[co] : 0.0;
      const double* in_n = in + static_cast<std::int64_t>(n) * g.cin * in_plane;
      double* out_p = out + (static_cast<std::int64_t>(n) * g.cout + co) * out_plane;
      for (int oy = 0; oy < g.oh; ++oy) {
        for (int ox = 0; ox < g.ow; ++ox) {
          double acc = b;
          for (int ci = 0; ci < g.cin; ++ci) {
            const double* in_c = in_n + ci * in_plane;
            const double* w_c = w + ci * w_per_cin + static_cast<std::int64_t>(co) * g.kh * g.kw;
            for (int ky = 0; ky < g.kh; ++ky) {
              const int ty = oy + g.pad - ky;
              if (ty < 0 || ty % g.stride != 0) continue;
              const int iy = ty / g.stride;
              if (iy >= g.ih) continue;
              for (int kx = 0; kx < g.kw; ++kx) {
                const int tx = ox + g.pad - kx;
                if (tx < 0 || tx % g.stride != 0) continue;
                const int ix = tx / g.stride;
                if (ix >= g.iw) continue;
                acc += in_c[static_cast<std::int64_t>(iy) * g.iw + ix] *
                       w_c[static_cast<std::int64_t>(ky) * g.kw + kx];
              }
            }
          }
          out_p[static_cast<std::int64_t>(oy) * g.ow + ox] = acc;
        }
      }
    }
  }
}

// gin[n,ci,iy,ix] += sum over (co, ky, kx) of gout[n,co,iy*s-p+ky,ix*s-p+kx] * w[ci,co,ky,kx].
void deconv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
  const std::int64_t w_per_cin = static_cast<std::int64_t>(g.cout) * g.kh * g.kw;
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < g.n; ++n) {
    for (int ci = 0; ci < g.cin; ++ci) {
      double* gin_p = gin + (static_cast<std::int64_t>(n) * g.cin + ci) * in_plane;
      const double* gout_n = gout + static_cast<std::int64_t>(n) * g.cout * out_plane;
      for (int iy = 0; iy < g.ih; ++iy) {
        const int oy_base = iy * g.stride - g.pad;
        const int ky0 = std::max(0, -oy_base);
        const int ky1 = std::min(g.kh, g.oh - oy_base);
        for (int ix = 0; ix < g.iw; ++ix) {
          const int ox_base = ix * g.stride - g.pad;
          const int kx0 = std::max(0, -ox_base);
          const int kx1 = std::min(g.kw, g.ow - ox_base);
          double acc = 0.0;
          for (int co = 0; co < g.cout; ++co) {
            const double* gout_c = gout_n + co * out_plane;
            const double* w_c = w + ci * w_per_cin + static_cast<std::int64_t>(co) * g.kh * g.kw;
            for (int ky = ky0; ky < ky1; ++ky) {
              const double* gout_row =
                  gout_c + static_cast<std::int64_t>(oy_base + ky) * g.ow + ox_base;
              const double* w_row = w_c + static_cast<std::int64_t>(ky) * g.kw;
              for (int kx = kx0; kx < kx1; ++kx) acc += gout_row[kx] * w_row[kx];
            }
          }
          gin_p[static_cast<std::int64_t>(iy) * g.iw + ix] += acc;
        }
      }
    }
  }
}

// gw[ci,co,ky,kx] += sum over (n, iy, ix) of in[n,ci,iy,ix] * gout[n,co,iy*s-p+ky,ix*s-p+kx].
void deconv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g) {
  const std::int64_t in_plane = static_cast<std::int64_t>(g.ih) * g.iw;
  const std::int64_t out_plane = static_cast<std::int64_t>(g.oh) * g.ow;
#pragma omp parallel for collapse(2) schedule(static)
  for (int ci = 0; ci < g.cin; ++ci) {
    for (int co = 0; co < g.cout; ++co) {
      double* gw_p = gw + (static_cast<std::int64_t>(ci) * g.cout + co) * g.kh * g.kw;
      for (int ky = 0; ky < g.kh; ++ky) {
        for (int kx = 0; kx < g.kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < g.n; ++n) {
            const double* in_p = in + (static_cast<std::int64_t>(n) * g.cin + ci) * in_plane;
            const double* gout_p = gout + (static_cast<std::int64_t>(n) * g.cout + co) * out_plane;
            for (int iy = 0; iy < g.ih; ++iy) {
              const int oy = iy * g.stride + ky - g.pad;
              if (oy < 0 || oy >= g.oh) continue;
              const double* in_row = in_p + static_cast<std::int64_t>(iy) * g.iw;
              const double* gout_row = gout_p + static_cast<std::int64_t>(oy) * g.ow;
              for (int ix = 0; ix < g.iw; ++ix) {
                const int ox = ix * g.stride + kx - g.pad;
                if (ox < 0 || ox >= g.ow) continue;
                acc += in_row[ix] * gout_row[ox];
              }
            }
          }
          gw_p[static_cast<std::int64_t>(ky) * g.kw + kx] += acc;
        }
      }
    }
  }
}

void deconv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g) {
  conv2d_grad_bias(gout, gb, g);
}

void relu_forward(const double* x, double* y, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

// Gradient at exactly 0 is 0.
void relu_backward(const double* x, const double* gy, double* gx, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) {
    if (x[i] > 0.0) gx[i] += gy[i];
  }
}

void add_forward(const double* a, const double* b, double* y, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = a[i] + b[i];
}

void scale_forward(const double* x, double alpha, double* y, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) y[i] = alpha * x[i];
}

void accumulate(double* dst, const double* src, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) dst[i] += src[i];
}

void accumulate_scaled(double* dst, const double* src, double alpha, std::int64_t count) {
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < count; ++i) dst[i] += alpha * src[i];
}

}  // namespace gman::kernels
