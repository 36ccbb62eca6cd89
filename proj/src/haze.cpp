#include "gman/haze.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gman::haze {

void HazeParams::validate() const {
  if (atmosphere_light < 0.0 || atmosphere_light > 1.0)
    throw ArgumentError("haze params: atmosphere light must be in [0,1], got " +
                        std::to_string(atmosphere_light));
  if (!(beta >= 0.0))
    throw ArgumentError("haze params: beta must be >= 0, got " + std::to_string(beta));
}

DepthMap gen_depth(DepthKind kind, int h, int w, double constant) {
  if (h < 1 || w < 1)
    throw ArgumentError("gen_depth: dims must be positive, got " + std::to_string(h) + "x" +
                        std::to_string(w));
  DepthMap d(Shape{1, 1, h, w});
  switch (kind) {
    case DepthKind::kConstant: {
      if (constant < 0.0)
        throw ArgumentError("gen_depth: constant depth must be >= 0, got " +
                            std::to_string(constant));
      for (double& v : d.flat()) v = constant;
      break;
    }
    case DepthKind::kRamp: {
      for (int y = 0; y < h; ++y) {
        const double v = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
        for (int x = 0; x < w; ++x) d.at(0, 0, y, x) = v;
      }
      break;
    }
    case DepthKind::kRadial: {
      const double cy = (h - 1) / 2.0;
      const double cx = (w - 1) / 2.0;
      const double corner = std::sqrt(cy * cy + cx * cx);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double r = std::sqrt((y - cy) * (y - cy) + (x - cx) * (x - cx));
          d.at(0, 0, y, x) = corner > 0.0 ? r / corner : 0.0;
        }
      break;
    }
  }
  return d;
}

TransmissionMap transmission(const DepthMap& depth, double beta) {
  if (!(beta >= 0.0))
    throw ArgumentError("transmission: beta must be >= 0, got " + std::to_string(beta));
  TransmissionMap t(depth.shape());
  const double* d = depth.data();
  double* out = t.data();
  for (std::int64_t i = 0; i < depth.numel(); ++i) out[i] = std::exp(-beta * d[i]);
  return t;
}

namespace {

void check_map(const Shape& img, const Shape& map, const char* op) {
  if (map.n != 1 || map.c != 1 || map.h != img.h || map.w != img.w)
    throw ShapeError(std::string(op) + ": transmission map " + to_string(map) +
                     " does not match image " + to_string(img));
}

}  // namespace

Tensor synthesize(const Tensor& clear, const TransmissionMap& t, const HazeParams& params) {
  params.validate();
  check_map(clear.shape(), t.shape(), "synthesize");
  const Shape& s = clear.shape();
  const double a = params.atmosphere_light;
  Tensor hazy(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const double tv = t.at(0, 0, y, x);
          hazy.at(n, c, y, x) = clear.at(n, c, y, x) * tv + a * (1.0 - tv);
        }
  return hazy;
}

Tensor invert(const Tensor& hazy, const TransmissionMap& t, const HazeParams& params,
              double t_floor) {
  if (!(t_floor > 0.0))
    throw ArgumentError("invert: t_floor must be positive, got " + std::to_string(t_floor));
  params.validate();
  check_map(hazy.shape(), t.shape(), "invert");
  const Shape& s = hazy.shape();
  const double a = params.atmosphere_light;
  Tensor clear(s);
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x) {
          const double tv = std::max(t.at(0, 0, y, x), t_floor);
          clear.at(n, c, y, x) = (hazy.at(n, c, y, x) - a * (1.0 - tv)) / tv;
        }
  return clear;
}

}  // namespace gman::haze
