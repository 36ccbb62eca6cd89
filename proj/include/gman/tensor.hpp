#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gman/error.hpp"

namespace gman {

// NCHW dimensions. Immutable once a tensor is constructed.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::int64_t numel() const {
    return static_cast<std::int64_t>(n) * c * h * w;
  }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& s);

// Dense NCHW tensor of doubles with an optional gradient buffer.
// data is row-major in (n, c, h, w) order; grad, when present, has the same
// length. The shape never changes after construction.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(Shape shape, double fill = 0.0)
      : shape_(shape), data_(check_size(shape), fill) {}

  Tensor(Shape shape, std::vector<double> data) : shape_(shape), data_(std::move(data)) {
    if (static_cast<std::int64_t>(data_.size()) != shape_.numel())
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + to_string(shape_));
  }

  const Shape& shape() const { return shape_; }
  std::int64_t numel() const { return shape_.numel(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> flat() { return data_; }
  std::span<const double> flat() const { return data_; }

  std::int64_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::int64_t>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  double& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

  bool has_grad() const { return !grad_.empty(); }

  // Allocates (zeroed) on first use.
  std::span<double> grad() {
    ensure_grad();
    return grad_;
  }
  std::span<const double> grad() const { return grad_; }

  void ensure_grad() {
    if (grad_.empty()) grad_.assign(data_.size(), 0.0);
  }
  void zero_grad() {
    for (double& g : grad_) g = 0.0;
  }
  void clear_grad() { grad_.clear(); }

 private:
  static std::size_t check_size(const Shape& s) {
    if (s.n < 0 || s.c < 0 || s.h < 0 || s.w < 0)
      throw ShapeError("negative dimension in shape " + to_string(s));
    return static_cast<std::size_t>(s.numel());
  }

  Shape shape_;
  std::vector<double> data_;
  std::vector<double> grad_;
  bool requires_grad_ = false;
};

// Elementwise max-abs difference; shapes must match.
double max_abs_diff(const Tensor& a, const Tensor& b);

// Sum of elementwise products; shapes must match.
double dot(const Tensor& a, const Tensor& b);

}  // namespace gman
