#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <vector>

#include "gman/kernels.hpp"
#include "gman/tensor.hpp"

namespace gman::autodiff {

// Handle to a node on a Tape. Only valid for the tape that produced it.
using Id = std::int32_t;

// Reverse-mode autodiff over a flat, topologically ordered op list. Build the
// forward computation through the op methods, then call backward() on a
// scalar node; gradients accumulate into the grad buffers of every tensor
// registered via param() whose requires_grad flag is set.
//
// Tensors passed to leaf()/param() are referenced, not copied, and must
// outlive the tape. A tape is single-writer: record and backward from one
// thread at a time.
class Tape {
 public:
  // Frozen external input: never receives a gradient.
  Id leaf(const Tensor& t);
  // Differentiable external tensor. backward() adds into t.grad(); calling
  // backward twice without zeroing accumulates.
  Id param(Tensor& t);
  // Tape-owned frozen value.
  Id constant(Tensor t);

  // weight (cout,cin,kh,kw), bias (1,cout,1,1).
  Id conv2d(Id input, Id weight, Id bias, int stride, int pad);
  // weight (cin,cout,kh,kw), bias (1,cout,1,1). output_pad grows the output
  // by extra rows/columns at the bottom/right (0 <= output_pad < stride);
  // with k=3, s=2, p=1, output_pad=1 this exactly doubles h and w.
  Id conv2d_transpose(Id input, Id weight, Id bias, int stride, int pad, int output_pad = 0);
  Id relu(Id x);
  Id add(Id a, Id b);
  Id scale(Id x, double alpha);
  // Sum of all elements -> (1,1,1,1).
  Id sum(Id x);
  // norm * sum((a - b)^2) -> (1,1,1,1). The building block of the losses.
  Id sq_diff_sum(Id a, Id b, double norm);

  const Tensor& value(Id id) const;
  const Shape& shape(Id id) const { return value(id).shape(); }
  // Value of a single-element node.
  double scalar(Id id) const;

  // Reverse sweep from a scalar loss node. Throws ArgumentError if the node
  // is not shaped (1,1,1,1).
  void backward(Id loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : std::uint8_t {
    kLeaf, kParam, kConstant, kConv2d, kDeconv2d, kRelu, kAdd, kScale, kSum, kSqDiffSum
  };

  struct Node {
    Op op;
    Id a = -1, b = -1, c = -1;      // inputs; c is the bias of conv ops
    double alpha = 0.0;             // scale factor or sq_diff_sum norm
    kernels::ConvGeom geom;
    std::optional<Tensor> owned;    // output value (interior and constant nodes)
    const Tensor* ext = nullptr;    // external value (leaf and param nodes)
    Tensor* ext_mut = nullptr;      // grad target (param nodes)
    bool needs_grad = false;
  };

  const Node& node(Id id) const;
  Id push(Node n);
  Id check(Id id) const;

  // deque so Tensor references handed out by value() survive later pushes
  std::deque<Node> nodes_;
};

// Central-difference gradient of a scalar-valued function, the testing oracle
// for backward(): (f(x + eps*e_i) - f(x - eps*e_i)) / (2*eps) per coordinate.
Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps = 1e-5);

}  // namespace gman::autodiff
