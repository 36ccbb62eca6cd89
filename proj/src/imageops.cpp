#include "gman/imageops.hpp"

#include <algorithm>
#include <string>

namespace gman::img {

Tensor crop_at(const Tensor& image, int y0, int x0, int ch, int cw) {
  const Shape& s = image.shape();
  if (ch < 1 || cw < 1)
    throw ArgumentError("crop_at: crop dims must be positive, got " + std::to_string(ch) + "x" +
                        std::to_string(cw));
  if (y0 < 0 || x0 < 0 || y0 + ch > s.h || x0 + cw > s.w)
    throw ArgumentError("crop_at: window " + std::to_string(ch) + "x" + std::to_string(cw) +
                        " at (" + std::to_string(y0) + "," + std::to_string(x0) +
                        ") exceeds image " + to_string(s));
  Tensor out(Shape{s.n, s.c, ch, cw});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < ch; ++y) {
        const double* src = image.data() + image.index(n, c, y0 + y, x0);
        std::copy(src, src + cw, out.data() + out.index(n, c, y, 0));
      }
  return out;
}

Tensor reflect_pad_to_multiple(const Tensor& image, int multiple) {
  if (multiple < 1) throw ArgumentError("reflect_pad_to_multiple: multiple must be positive");
  const Shape& s = image.shape();
  if (s.h < 1 || s.w < 1)
    throw ArgumentError("reflect_pad_to_multiple: empty image " + to_string(s));
  const int nh = (s.h + multiple - 1) / multiple * multiple;
  const int nw = (s.w + multiple - 1) / multiple * multiple;
  if (nh == s.h && nw == s.w) return image;

  auto mirror = [](int i, int extent) {
    if (i < extent) return i;
    const int r = 2 * extent - 1 - i;
    return std::max(r, 0);
  };

  Tensor out(Shape{s.n, s.c, nh, nw});
  for (int n = 0; n < s.n; ++n)
    for (int c = 0; c < s.c; ++c)
      for (int y = 0; y < nh; ++y) {
        const int sy = mirror(y, s.h);
        for (int x = 0; x < nw; ++x) out.at(n, c, y, x) = image.at(n, c, sy, mirror(x, s.w));
      }
  return out;
}

Tensor crop_to(const Tensor& image, int h, int w) { return crop_at(image, 0, 0, h, w); }

}  // namespace gman::img
