// Plain serial versions of every kernel, written as directly as possible from
// the defining sums. They accumulate each output element in the same term
// order as the parallel versions, so the two must agree bit for bit; the
// tests rely on that.

#include "gman/kernels.hpp"

namespace gman::kernels::ref {

namespace {

inline std::int64_t idx4(int a, int b, int c, int d, int B, int C, int D) {
  return ((static_cast<std::int64_t>(a) * B + b) * C + c) * D + d;
}

}  // namespace

void conv2d_forward(const double* in, const double* w, const double* bias, double* out,
                    const ConvGeom& g) {
  for (int n = 0; n < g.n; ++n)
    for (int co = 0; co < g.cout; ++co)
      for (int oy = 0; oy < g.oh; ++oy)
        for (int ox = 0; ox < g.ow; ++ox) {
          double acc = bias ? bias[co] : 0.0;
          for (int ci = 0; ci < g.cin; ++ci)
            for (int ky = 0; ky < g.kh; ++ky)
              for (int kx = 0; kx < g.kw; ++kx) {
                const int iy = oy * g.stride + ky - g.pad;
                const int ix = ox * g.stride + kx - g.pad;
                if (iy < 0 || iy >= g.ih || ix < 0 || ix >= g.iw) continue;
                acc += w[idx4(co, ci, ky, kx, g.cin, g.kh, g.kw)] *
                       in[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)];
              }
          out[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)] = acc;
        }
}

void conv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g) {
  for (int n = 0; n < g.n; ++n)
    for (int ci = 0; ci < g.cin; ++ci)
      for (int iy = 0; iy < g.ih; ++iy)
        for (int ix = 0; ix < g.iw; ++ix) {
          double acc = 0.0;
          for (int co = 0; co < g.cout; ++co)
            for (int ky = 0; ky < g.kh; ++ky)
              for (int kx = 0; kx < g.kw; ++kx) {
                const int ty = iy + g.pad - ky;
                const int tx = ix + g.pad - kx;
                if (ty < 0 || tx < 0 || ty % g.stride != 0 || tx % g.stride != 0) continue;
                const int oy = ty / g.stride;
                const int ox = tx / g.stride;
                if (oy >= g.oh || ox >= g.ow) continue;
                acc += gout[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)] *
                       w[idx4(co, ci, ky, kx, g.cin, g.kh, g.kw)];
              }
          gin[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)] += acc;
        }
}

void conv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g) {
  for (int co = 0; co < g.cout; ++co)
    for (int ci = 0; ci < g.cin; ++ci)
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < g.n; ++n)
            for (int oy = 0; oy < g.oh; ++oy)
              for (int ox = 0; ox < g.ow; ++ox) {
                const int iy = oy * g.stride + ky - g.pad;
                const int ix = ox * g.stride + kx - g.pad;
                if (iy < 0 || iy >= g.ih || ix < 0 || ix >= g.iw) continue;
                acc += gout[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)] *
                       in[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)];
              }
          gw[idx4(co, ci, ky, kx, g.cin, g.kh, g.kw)] += acc;
        }
}

void conv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g) {
  for (int co = 0; co < g.cout; ++co) {
    double acc = 0.0;
    for (int n = 0; n < g.n; ++n)
      for (int oy = 0; oy < g.oh; ++oy)
        for (int ox = 0; ox < g.ow; ++ox)
          acc += gout[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)];
    gb[co] += acc;
  }
}

void deconv2d_forward(const double* in, const double* w, const double* bias, double* out,
                      const ConvGeom& g) {
  for (int n = 0; n < g.n; ++n)
    for (int co = 0; co < g.cout; ++co)
      for (int oy = 0; oy < g.oh; ++oy)
        for (int ox = 0; ox < g.ow; ++ox) {
          double acc = bias ? bias[co] : 0.0;
          for (int ci = 0; ci < g.cin; ++ci)
            for (int ky = 0; ky < g.kh; ++ky)
              for (int kx = 0; kx < g.kw; ++kx) {
                const int ty = oy + g.pad - ky;
                const int tx = ox + g.pad - kx;
                if (ty < 0 || tx < 0 || ty % g.stride != 0 || tx % g.stride != 0) continue;
                const int iy = ty / g.stride;
                const int ix = tx / g.stride;
                if (iy >= g.ih || ix >= g.iw) continue;
                acc += in[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)] *
                       w[idx4(ci, co, ky, kx, g.cout, g.kh, g.kw)];
              }
          out[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)] = acc;
        }
}

void deconv2d_grad_input(const double* gout, const double* w, double* gin, const ConvGeom& g) {
  for (int n = 0; n < g.n; ++n)
    for (int ci = 0; ci < g.cin; ++ci)
      for (int iy = 0; iy < g.ih; ++iy)
        for (int ix = 0; ix < g.iw; ++ix) {
          double acc = 0.0;
          for (int co = 0; co < g.cout; ++co)
            for (int ky = 0; ky < g.kh; ++ky)
              for (int kx = 0; kx < g.kw; ++kx) {
                const int oy = iy * g.stride + ky - g.pad;
                const int ox = ix * g.stride + kx - g.pad;
                if (oy < 0 || oy >= g.oh || ox < 0 || ox >= g.ow) continue;
                acc += gout[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)] *
                       w[idx4(ci, co, ky, kx, g.cout, g.kh, g.kw)];
              }
          gin[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)] += acc;
        }
}

void deconv2d_grad_weight(const double* gout, const double* in, double* gw, const ConvGeom& g) {
  for (int ci = 0; ci < g.cin; ++ci)
    for (int co = 0; co < g.cout; ++co)
      for (int ky = 0; ky < g.kh; ++ky)
        for (int kx = 0; kx < g.kw; ++kx) {
          double acc = 0.0;
          for (int n = 0; n < g.n; ++n)
            for (int iy = 0; iy < g.ih; ++iy)
              for (int ix = 0; ix < g.iw; ++ix) {
                const int oy = iy * g.stride + ky - g.pad;
                const int ox = ix * g.stride + kx - g.pad;
                if (oy < 0 || oy >= g.oh || ox < 0 || ox >= g.ow) continue;
                acc += in[idx4(n, ci, iy, ix, g.cin, g.ih, g.iw)] *
                       gout[idx4(n, co, oy, ox, g.cout, g.oh, g.ow)];
              }
          gw[idx4(ci, co, ky, kx, g.cout, g.kh, g.kw)] += acc;
        }
}

void deconv2d_grad_bias(const double* gout, double* gb, const ConvGeom& g) {
  ref::conv2d_grad_bias(gout, gb, g);
}

void relu_forward(const double* x, double* y, std::int64_t count) {
  for (std::int64_t i = 0; i < count; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_backward(const double* x, const double* gy, double* gx, std::int64_t count) {
  for (std::int64_t i = 0; i < count; ++i) {
    if (x[i] > 0.0) gx[i] += gy[i];
  }
}

}  // namespace gman::kernels::ref
