#include "gman/tensor.hpp"

#include <cmath>

namespace gman {

std::string to_string(const Shape& s) {
  return "(" + std::to_string(s.n) + "," + std::to_string(s.c) + "," + std::to_string(s.h) +
         "," + std::to_string(s.w) + ")";
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("max_abs_diff shape mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  double m = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) m = std::max(m, std::abs(pa[i] - pb[i]));
  return m;
}

double dot(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape()))
    throw ShapeError("dot shape mismatch: " + to_string(a.shape()) + " vs " +
                     to_string(b.shape()));
  double s = 0.0;
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::int64_t i = 0; i < a.numel(); ++i) s += pa[i] * pb[i];
  return s;
}

}  // namespace gman
