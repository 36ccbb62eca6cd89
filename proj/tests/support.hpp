#pragma once

// Shared helpers for the test suites: deterministic procedural images and
// random tensor builders.

#include <cmath>

#include "gman/rng.hpp"
#include "gman/tensor.hpp"

namespace testsup {

// Smooth deterministic RGB image; values stay strictly inside [0,1] so haze
// synthesis and PPM round trips are exercised away from the clamp edges.
// Different phases give different images.
inline gman::Tensor pattern_image(int h, int w, double phase = 0.0) {
  gman::Tensor img(gman::Shape{1, 3, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double u = h > 1 ? static_cast<double>(y) / (h - 1) : 0.0;
      const double v = w > 1 ? static_cast<double>(x) / (w - 1) : 0.0;
      img.at(0, 0, y, x) = 0.5 + 0.45 * std::sin(6.0 * u + phase) * std::cos(5.0 * v);
      img.at(0, 1, y, x) = 0.5 + 0.4 * std::sin(3.0 * (u + v) + 1.3 * phase);
      img.at(0, 2, y, x) = 0.1 + 0.8 * u * v;
    }
  return img;
}

inline gman::Tensor random_tensor(const gman::Shape& s, gman::Rng& rng, double scale = 1.0) {
  gman::Tensor t(s);
  for (double& v : t.flat()) v = scale * rng.normal();
  return t;
}

// Uniform [0,1) values, the natural content for image-valued tensors.
inline gman::Tensor random_image(const gman::Shape& s, gman::Rng& rng) {
  gman::Tensor t(s);
  for (double& v : t.flat()) v = rng.uniform();
  return t;
}

}  // namespace testsup
