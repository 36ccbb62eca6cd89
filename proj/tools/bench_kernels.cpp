// Times the OpenMP kernels against their serial reference implementations on
// network-sized shapes and checks that the two agree bit for bit. --quick
// shrinks the shapes so the same binary doubles as a smoke test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <string>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "gman/kernels.hpp"
#include "gman/rng.hpp"
#include "gman/tensor.hpp"

using gman::Rng;
using gman::Shape;
using gman::Tensor;
namespace kernels = gman::kernels;

namespace {

template <typename F>
double best_ms(F&& f, int reps) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

Tensor random_tensor(const Shape& s, Rng& rng) {
  Tensor t(s);
  for (double& v : t.flat()) v = rng.normal();
  return t;
}

struct Row {
  std::string name;
  double serial_ms, parallel_ms, max_diff;
};

void run_case(std::vector<Row>& rows, const std::string& name, const Tensor& out_p,
              const Tensor& out_s, const std::function<void()>& parallel,
              const std::function<void()>& serial, int reps) {
  serial();
  parallel();
  const double diff = gman::max_abs_diff(out_p, out_s);
  const double s_ms = best_ms(serial, reps);
  const double p_ms = best_ms(parallel, reps);
  rows.push_back({name, s_ms, p_ms, diff});
}

std::string dims(const Shape& s) {
  return std::to_string(s.n) + "x" + std::to_string(s.c) + "x" + std::to_string(s.h) + "x" +
         std::to_string(s.w);
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = false;
  int reps = 3;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--quick") {
      quick = true;
    } else if (arg == "--reps" && i + 1 < argc) {
      reps = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: bench_kernels [--quick] [--reps N]\n");
      return 1;
    }
  }
  if (reps < 1) reps = 1;

  // Full mode mirrors the default network's heavy layers: a stride-1 conv at
  // base resolution and the stride-2 deconv upsampler at half resolution.
  const int n = quick ? 1 : 4;
  const int hw = quick ? 16 : 64;
  const int c1 = quick ? 8 : 64;
  const int c2 = quick ? 16 : 128;

  Rng rng(7);
  std::vector<Row> rows;

  {  // conv2d, stride 1, pad 1
    const Tensor in = random_tensor({n, c1, hw, hw}, rng);
    const Tensor w = random_tensor({c2, c1, 3, 3}, rng);
    const Tensor b = random_tensor({1, c2, 1, 1}, rng);
    const kernels::ConvGeom g = kernels::conv_geometry(in.shape(), w.shape(), 1, 1);
    Tensor out_p(Shape{g.n, g.cout, g.oh, g.ow}), out_s(out_p.shape());
    run_case(
        rows, "conv_fwd " + dims(in.shape()) + "->" + std::to_string(c2), out_p, out_s,
        [&] { kernels::conv2d_forward(in.data(), w.data(), b.data(), out_p.data(), g); },
        [&] { kernels::ref::conv2d_forward(in.data(), w.data(), b.data(), out_s.data(), g); },
        reps);

    const Tensor gout = random_tensor(out_p.shape(), rng);
    Tensor gin_p(in.shape()), gin_s(in.shape());
    run_case(
        rows, "conv_grad_input", gin_p, gin_s,
        [&] {
          for (double& v : gin_p.flat()) v = 0.0;
          kernels::conv2d_grad_input(gout.data(), w.data(), gin_p.data(), g);
        },
        [&] {
          for (double& v : gin_s.flat()) v = 0.0;
          kernels::ref::conv2d_grad_input(gout.data(), w.data(), gin_s.data(), g);
        },
        reps);

    Tensor gw_p(w.shape()), gw_s(w.shape());
    run_case(
        rows, "conv_grad_weight", gw_p, gw_s,
        [&] {
          for (double& v : gw_p.flat()) v = 0.0;
          kernels::conv2d_grad_weight(gout.data(), in.data(), gw_p.data(), g);
        },
        [&] {
          for (double& v : gw_s.flat()) v = 0.0;
          kernels::ref::conv2d_grad_weight(gout.data(), in.data(), gw_s.data(), g);
        },
        reps);
  }

  {  // transposed conv, stride 2, pad 1, outpad 1 (the 2x upsampler)
    const Tensor in = random_tensor({n, c2, hw / 2, hw / 2}, rng);
    const Tensor w = random_tensor({c2, c2, 3, 3}, rng);
    const Tensor b = random_tensor({1, c2, 1, 1}, rng);
    const kernels::ConvGeom g = kernels::deconv_geometry(in.shape(), w.shape(), 2, 1, 1);
    Tensor out_p(Shape{g.n, g.cout, g.oh, g.ow}), out_s(out_p.shape());
    run_case(
        rows, "deconv_fwd " + dims(in.shape()) + "->" + std::to_string(c2), out_p, out_s,
        [&] { kernels::deconv2d_forward(in.data(), w.data(), b.data(), out_p.data(), g); },
        [&] { kernels::ref::deconv2d_forward(in.data(), w.data(), b.data(), out_s.data(), g); },
        reps);

    const Tensor gout = random_tensor(out_p.shape(), rng);
    Tensor gin_p(in.shape()), gin_s(in.shape());
    run_case(
        rows, "deconv_grad_input", gin_p, gin_s,
        [&] {
          for (double& v : gin_p.flat()) v = 0.0;
          kernels::deconv2d_grad_input(gout.data(), w.data(), gin_p.data(), g);
        },
        [&] {
          for (double& v : gin_s.flat()) v = 0.0;
          kernels::ref::deconv2d_grad_input(gout.data(), w.data(), gin_s.data(), g);
        },
        reps);

    Tensor gw_p(w.shape()), gw_s(w.shape());
    run_case(
        rows, "deconv_grad_weight", gw_p, gw_s,
        [&] {
          for (double& v : gw_p.flat()) v = 0.0;
          kernels::deconv2d_grad_weight(gout.data(), in.data(), gw_p.data(), g);
        },
        [&] {
          for (double& v : gw_s.flat()) v = 0.0;
          kernels::ref::deconv2d_grad_weight(gout.data(), in.data(), gw_s.data(), g);
        },
        reps);
  }

  {  // relu over the conv input volume
    const Tensor x = random_tensor({n, c2, hw, hw}, rng);
    Tensor y_p(x.shape()), y_s(x.shape());
    run_case(
        rows, "relu_fwd " + dims(x.shape()), y_p, y_s,
        [&] { kernels::relu_forward(x.data(), y_p.data(), x.numel()); },
        [&] { kernels::ref::relu_forward(x.data(), y_s.data(), x.numel()); }, reps);
  }

#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled at build time; both columns run serial code\n");
#endif
  std::printf("%-28s %12s %12s %9s %11s\n", "kernel", "serial ms", "parallel ms", "speedup",
              "max |diff|");
  bool ok = true;
  for (const Row& r : rows) {
    std::printf("%-28s %12.3f %12.3f %8.2fx %11.3g\n", r.name.c_str(), r.serial_ms,
                r.parallel_ms, r.serial_ms / r.parallel_ms, r.max_diff);
    if (r.max_diff != 0.0) ok = false;
  }
  if (!ok) {
    std::fprintf(stderr, "FAIL: parallel kernels disagree with the serial reference\n");
    return 1;
  }
  std::printf("all kernels bitwise-identical to the serial reference\n");
  return 0;
}
