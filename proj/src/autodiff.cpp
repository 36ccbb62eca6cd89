#include "gman/autodiff.hpp"

#include <string>
#include <utility>

namespace gman::autodiff {

Id Tape::check(Id id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
    throw GraphError("tensor id " + std::to_string(id) + " is not on this tape");
  return id;
}

const Tape::Node& Tape::node(Id id) const { return nodes_[static_cast<std::size_t>(check(id))]; }

Id Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return static_cast<Id>(nodes_.size() - 1);
}

const Tensor& Tape::value(Id id) const {
  const Node& n = node(id);
  return n.ext ? *n.ext : *n.owned;
}

double Tape::scalar(Id id) const {
  const Tensor& v = value(id);
  if (v.numel() != 1)
    throw ArgumentError("scalar: node has shape " + to_string(v.shape()) + ", expected one element");
  return v.data()[0];
}

Id Tape::leaf(const Tensor& t) {
  Node n;
  n.op = Op::kLeaf;
  n.ext = &t;
  return push(std::move(n));
}

Id Tape::param(Tensor& t) {
  Node n;
  n.op = Op::kParam;
  n.ext = &t;
  n.ext_mut = &t;
  n.needs_grad = t.requires_grad();
  return push(std::move(n));
}

Id Tape::constant(Tensor t) {
  Node n;
  n.op = Op::kConstant;
  n.owned = std::move(t);
  return push(std::move(n));
}

Id Tape::conv2d(Id input, Id weight, Id bias, int stride, int pad) {
  const Tensor& x = value(input);
  const Tensor& w = value(weight);
  const Tensor& b = value(bias);
  kernels::ConvGeom g = kernels::conv_geometry(x.shape(), w.shape(), stride, pad);
  if (!(b.shape() == Shape{1, g.cout, 1, 1}))
    throw ShapeError("conv2d: bias shape " + to_string(b.shape()) + " must be (1," +
                     std::to_string(g.cout) + ",1,1)");
  Node n;
  n.op = Op::kConv2d;
  n.a = input;
  n.b = weight;
  n.c = bias;
  n.geom = g;
  n.owned.emplace(Shape{g.n, g.cout, g.oh, g.ow});
  kernels::conv2d_forward(x.data(), w.data(), b.data(), n.owned->data(), g);
  n.needs_grad = nodes_[input].needs_grad || nodes_[weight].needs_grad || nodes_[bias].needs_grad;
  return push(std::move(n));
}

Id Tape::conv2d_transpose(Id input, Id weight, Id bias, int stride, int pad, int output_pad) {
  const Tensor& x = value(input);
  const Tensor& w = value(weight);
  const Tensor& b = value(bias);
  kernels::ConvGeom g = kernels::deconv_geometry(x.shape(), w.shape(), stride, pad, output_pad);
  if (!(b.shape() == Shape{1, g.cout, 1, 1}))
    throw ShapeError("conv2d_transpose: bias shape " + to_string(b.shape()) + " must be (1," +
                     std::to_string(g.cout) + ",1,1)");
  Node n;
  n.op = Op::kDeconv2d;
  n.a = input;
  n.b = weight;
  n.c = bias;
  n.geom = g;
  n.owned.emplace(Shape{g.n, g.cout, g.oh, g.ow});
  kernels::deconv2d_forward(x.data(), w.data(), b.data(), n.owned->data(), g);
  n.needs_grad = nodes_[input].needs_grad || nodes_[weight].needs_grad || nodes_[bias].needs_grad;
  return push(std::move(n));
}

Id Tape::relu(Id x) {
  const Tensor& v = value(x);
  Node n;
  n.op = Op::kRelu;
  n.a = x;
  n.owned.emplace(v.shape());
  kernels::relu_forward(v.data(), n.owned->data(), v.numel());
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Id Tape::add(Id a, Id b) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!(va.shape() == vb.shape()))
    throw ShapeError("add: shapes " + to_string(va.shape()) + " and " + to_string(vb.shape()) +
                     " differ");
  Node n;
  n.op = Op::kAdd;
  n.a = a;
  n.b = b;
  n.owned.emplace(va.shape());
  kernels::add_forward(va.data(), vb.data(), n.owned->data(), va.numel());
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

Id Tape::scale(Id x, double alpha) {
  const Tensor& v = value(x);
  Node n;
  n.op = Op::kScale;
  n.a = x;
  n.alpha = alpha;
  n.owned.emplace(v.shape());
  kernels::scale_forward(v.data(), alpha, n.owned->data(), v.numel());
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Id Tape::sum(Id x) {
  const Tensor& v = value(x);
  // Serial accumulation in flat order keeps the result bitwise deterministic.
  double acc = 0.0;
  for (double e : v.flat()) acc += e;
  Node n;
  n.op = Op::kSum;
  n.a = x;
  n.owned.emplace(Shape{1, 1, 1, 1}, std::vector<double>{acc});
  n.needs_grad = nodes_[x].needs_grad;
  return push(std::move(n));
}

Id Tape::sq_diff_sum(Id a, Id b, double norm) {
  const Tensor& va = value(a);
  const Tensor& vb = value(b);
  if (!(va.shape() == vb.shape()))
    throw ShapeError("sq_diff_sum: shapes " + to_string(va.shape()) + " and " +
                     to_string(vb.shape()) + " differ");
  const double* pa = va.data();
  const double* pb = vb.data();
  double acc = 0.0;
  for (std::int64_t i = 0; i < va.numel(); ++i) {
    const double d = pa[i] - pb[i];
    acc += d * d;
  }
  Node n;
  n.op = Op::kSqDiffSum;
  n.a = a;
  n.b = b;
  n.alpha = norm;
  n.owned.emplace(Shape{1, 1, 1, 1}, std::vector<double>{norm * acc});
  n.needs_grad = nodes_[a].needs_grad || nodes_[b].needs_grad;
  return push(std::move(n));
}

void Tape::backward(Id loss) {
  const Node& top = node(loss);
  const Tensor& top_v = top.ext ? *top.ext : *top.owned;
  if (!(top_v.shape() == Shape{1, 1, 1, 1}))
    throw ArgumentError("backward: loss must have shape (1,1,1,1), got " + to_string(top_v.shape()));
  if (!top.needs_grad) return;  // nothing differentiable feeds this node

  // Per-node gradient buffers for this sweep. Param nodes write straight into
  // the external tensor's grad so repeated backward calls accumulate.
  std::vector<std::optional<Tensor>> local(static_cast<std::size_t>(loss) + 1);
  auto grad_buf = [&](Id i) -> double* {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.op == Op::kParam) {
      n.ext_mut->ensure_grad();
      return n.ext_mut->grad().data();
    }
    auto& slot = local[static_cast<std::size_t>(i)];
    if (!slot) slot.emplace(n.ext ? n.ext->shape() : n.owned->shape());
    return slot->data();
  };

  grad_buf(loss)[0] += 1.0;

  for (Id i = loss; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.needs_grad) continue;
    if (n.op == Op::kLeaf || n.op == Op::kParam || n.op == Op::kConstant) continue;
    auto& slot = local[static_cast<std::size_t>(i)];
    if (!slot) continue;  // not on any path to the loss
    const double* gout = slot->data();
    switch (n.op) {
      case Op::kConv2d: {
        if (nodes_[n.a].needs_grad)
          kernels::conv2d_grad_input(gout, value(n.b).data(), grad_buf(n.a), n.geom);
        if (nodes_[n.b].needs_grad)
          kernels::conv2d_grad_weight(gout, value(n.a).data(), grad_buf(n.b), n.geom);
        if (nodes_[n.c].needs_grad) kernels::conv2d_grad_bias(gout, grad_buf(n.c), n.geom);
        break;
      }
      case Op::kDeconv2d: {
        if (nodes_[n.a].needs_grad)
          kernels::deconv2d_grad_input(gout, value(n.b).data(), grad_buf(n.a), n.geom);
        if (nodes_[n.b].needs_grad)
          kernels::deconv2d_grad_weight(gout, value(n.a).data(), grad_buf(n.b), n.geom);
        if (nodes_[n.c].needs_grad) kernels::deconv2d_grad_bias(gout, grad_buf(n.c), n.geom);
        break;
      }
      case Op::kRelu: {
        if (nodes_[n.a].needs_grad)
          kernels::relu_backward(value(n.a).data(), gout, grad_buf(n.a), n.owned->numel());
        break;
      }
      case Op::kAdd: {
        if (nodes_[n.a].needs_grad) kernels::accumulate(grad_buf(n.a), gout, n.owned->numel());
        if (nodes_[n.b].needs_grad) kernels::accumulate(grad_buf(n.b), gout, n.owned->numel());
        break;
      }
      case Op::kScale: {
        if (nodes_[n.a].needs_grad)
          kernels::accumulate_scaled(grad_buf(n.a), gout, n.alpha, n.owned->numel());
        break;
      }
      case Op::kSum: {
        if (nodes_[n.a].needs_grad) {
          const double s = gout[0];
          double* ga = grad_buf(n.a);
          const std::int64_t count = value(n.a).numel();
          for (std::int64_t k = 0; k < count; ++k) ga[k] += s;
        }
        break;
      }
      case Op::kSqDiffSum: {
        const double coef = 2.0 * n.alpha * gout[0];
        const double* pa = value(n.a).data();
        const double* pb = value(n.b).data();
        const std::int64_t count = value(n.a).numel();
        if (nodes_[n.a].needs_grad) {
          double* ga = grad_buf(n.a);
          for (std::int64_t k = 0; k < count; ++k) ga[k] += coef * (pa[k] - pb[k]);
        }
        if (nodes_[n.b].needs_grad) {
          double* gb = grad_buf(n.b);
          for (std::int64_t k = 0; k < count; ++k) gb[k] -= coef * (pa[k] - pb[k]);
        }
        break;
      }
      default:
        break;
    }
    slot.reset();  // this node's incoming gradient is fully consumed
  }
}

Tensor finite_diff_grad(const std::function<double(const Tensor&)>& f, const Tensor& x,
                        double eps) {
  if (eps <= 0.0) throw ArgumentError("finite_diff_grad: eps must be positive");
  Tensor probe = x;
  Tensor g(x.shape());
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double orig = probe.data()[i];
    probe.data()[i] = orig + eps;
    const double fp = f(probe);
    probe.data()[i] = orig - eps;
    const double fm = f(probe);
    probe.data()[i] = orig;
    g.data()[i] = (fp - fm) / (2.0 * eps);
  }
  return g;
}

}  // namespace gman::autodiff
