#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "gman/rng.hpp"
#include "gman/tensor.hpp"

using gman::Rng;
using gman::Shape;
using gman::Tensor;

TEST_CASE("shape numel and equality") {
  const Shape s{2, 3, 4, 5};
  CHECK(s.numel() == 120);
  CHECK(s == Shape{2, 3, 4, 5});
  CHECK(s != Shape{2, 3, 5, 4});
  CHECK(Shape{0, 3, 4, 5}.numel() == 0);
}

TEST_CASE("construction fills and validates") {
  const Tensor zeros(Shape{1, 2, 2, 2});
  CHECK(zeros.numel() == 8);
  CHECK(std::all_of(zeros.flat().begin(), zeros.flat().end(), [](double v) { return v == 0.0; }));

  const Tensor sevens(Shape{1, 1, 2, 2}, 7.0);
  CHECK(sevens.at(0, 0, 1, 1) == 7.0);

  CHECK_THROWS_AS(Tensor(Shape{1, 1, 2, 2}, std::vector<double>{1.0, 2.0}), gman::ShapeError);
  CHECK_THROWS_AS(Tensor(Shape{1, -1, 2, 2}), gman::ShapeError);
}

TEST_CASE("data is row-major in (n,c,h,w)") {
  Tensor t(Shape{2, 2, 2, 2});
  for (std::int64_t i = 0; i < t.numel(); ++i) t.data()[i] = static_cast<double>(i);
  CHECK(t.at(0, 0, 0, 1) == 1.0);
  CHECK(t.at(0, 0, 1, 0) == 2.0);
  CHECK(t.at(0, 1, 0, 0) == 4.0);
  CHECK(t.at(1, 0, 0, 0) == 8.0);
  CHECK(t.index(1, 1, 1, 1) == 15);
}

TEST_CASE("gradient buffer lifecycle") {
  Tensor t(Shape{1, 1, 2, 2});
  CHECK_FALSE(t.has_grad());
  CHECK_FALSE(t.requires_grad());

  auto g = t.grad();  // allocates zeroed on first touch
  CHECK(t.has_grad());
  CHECK(g.size() == 4);
  g[0] = 3.0;
  t.zero_grad();
  CHECK(t.grad()[0] == 0.0);
  t.clear_grad();
  CHECK_FALSE(t.has_grad());

  const Tensor& ct = t;
  CHECK(ct.grad().empty());  // const access never allocates
}

TEST_CASE("max_abs_diff and dot") {
  Tensor a(Shape{1, 1, 1, 3}, std::vector<double>{1.0, 2.0, 3.0});
  Tensor b(Shape{1, 1, 1, 3}, std::vector<double>{1.0, 2.5, 2.0});
  CHECK(gman::max_abs_diff(a, b) == doctest::Approx(1.0));
  CHECK(gman::dot(a, b) == doctest::Approx(1.0 + 5.0 + 6.0));
  Tensor c(Shape{1, 1, 3, 1});
  CHECK_THROWS_AS(gman::max_abs_diff(a, c), gman::ShapeError);
  CHECK_THROWS_AS(gman::dot(a, c), gman::ShapeError);
}

TEST_CASE("rng is deterministic per seed") {
  Rng a(42), b(42), c(43);
  bool all_equal = true, any_diff_seed = false;
  for (int i = 0; i < 100; ++i) {
    const double va = a.uniform();
    all_equal = all_equal && va == b.uniform();
    any_diff_seed = any_diff_seed || va != c.uniform();
  }
  CHECK(all_equal);
  CHECK(any_diff_seed);
}

TEST_CASE("uniform stays in [0,1) and uniform_int hits both bounds") {
  Rng rng(1);
  bool lo_seen = false, hi_seen = false;
  for (int i = 0; i < 2000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    const std::int64_t k = rng.uniform_int(2, 5);
    CHECK(k >= 2);
    CHECK(k <= 5);
    lo_seen = lo_seen || k == 2;
    hi_seen = hi_seen || k == 5;
  }
  CHECK(lo_seen);
  CHECK(hi_seen);
}

TEST_CASE("normal draws have roughly standard moments") {
  Rng rng(9);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  CHECK(std::abs(sum / n) < 0.05);
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("shuffle permutes and is seed-deterministic") {
  std::vector<int> v(20);
  for (int i = 0; i < 20; ++i) v[i] = i;
  std::vector<int> w = v;
  Rng a(5), b(5);
  a.shuffle(v);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}
