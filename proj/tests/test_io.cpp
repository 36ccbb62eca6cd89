#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "gman/image_io.hpp"
#include "gman/imageops.hpp"
#include "gman/rng.hpp"
#include "gman/tensor.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using gman::Rng;
using gman::Shape;
using gman::Tensor;

namespace {

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "gman_io_tests";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_bytes(const std::string& name, const std::string& bytes) {
  const fs::path p = temp_file(name);
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  REQUIRE(out.good());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("ppm: 8-bit-exact values survive a write/read round trip") {
  Tensor img(Shape{1, 3, 5, 4});
  Rng rng(12);
  for (double& v : img.flat()) v = rng.uniform_int(0, 255) / 255.0;

  const fs::path p = temp_file("roundtrip.ppm");
  gman::io::write_ppm(img, p);
  const Tensor back = gman::io::read_ppm(p);
  CHECK(back.shape() == img.shape());
  CHECK(gman::max_abs_diff(back, img) == 0.0);

  // Writing the reread tensor reproduces the file byte for byte.
  const fs::path p2 = temp_file("roundtrip2.ppm");
  gman::io::write_ppm(back, p2);
  CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("ppm: quantization error is bounded by half a step") {
  const Tensor img = testsup::pattern_image(7, 9);
  const fs::path p = temp_file("quantized.ppm");
  gman::io::write_ppm(img, p);
  const Tensor back = gman::io::read_ppm(p);
  CHECK(gman::max_abs_diff(back, img) <= 0.5 / 255.0 + 1e-15);

  // Out-of-range values clamp rather than wrap.
  Tensor wild(Shape{1, 3, 2, 2});
  wild.data()[0] = -0.5;
  wild.data()[1] = 1.5;
  gman::io::write_ppm(wild, p);
  const Tensor clamped = gman::io::read_ppm(p);
  CHECK(clamped.data()[0] == 0.0);
  CHECK(clamped.data()[1] == 1.0);
}

TEST_CASE("ppm: exact header and payload bytes") {
  Tensor zero(Shape{1, 3, 2, 3}, 0.0);
  const fs::path p = temp_file("zero.ppm");
  gman::io::write_ppm(zero, p);
  const std::string bytes = slurp(p);
  const std::string header = "P6\n3 2\n255\n";
  REQUIRE(bytes.size() == header.size() + 18);
  CHECK(bytes.substr(0, header.size()) == header);
  for (std::size_t i = header.size(); i < bytes.size(); ++i) CHECK(bytes[i] == '\0');
}

TEST_CASE("ppm: parses hand-built files, comments included") {
  // 3 wide, 2 tall; pixel bytes are interleaved r,g,b row by row.
  std::string body(18, '\0');
  body[0] = static_cast<char>(255);              // (0,0) red
  body[(0 * 3 + 2) * 3 + 1] = static_cast<char>(51);   // (0,2) green = 0.2
  body[(1 * 3 + 1) * 3 + 2] = static_cast<char>(102);  // (1,1) blue = 0.4
  const fs::path p =
      write_bytes("hand.ppm", "P6 # binary pixmap\n# full-line comment\n3 2 # dims\n255\n" + body);
  const Tensor img = gman::io::read_ppm(p);
  CHECK(img.shape() == Shape{1, 3, 2, 3});
  CHECK(img.at(0, 0, 0, 0) == 1.0);
  CHECK(img.at(0, 1, 0, 2) == 51.0 / 255.0);
  CHECK(img.at(0, 2, 1, 1) == 102.0 / 255.0);
  CHECK(img.at(0, 0, 1, 2) == 0.0);
}

TEST_CASE("ppm: malformed files carry the defect offset") {
  SUBCASE("bad magic") {
    const fs::path p = write_bytes("magic.ppm", "P5\n2 2\n255\n" + std::string(12, 'x'));
    try {
      gman::io::read_ppm(p);
      FAIL("expected FormatError");
    } catch (const gman::FormatError& e) {
      CHECK(e.offset() == 0);
    }
  }

  SUBCASE("unsupported maxval") {
    const std::string head = "P6\n2 2\n";
    const fs::path p = write_bytes("maxval.ppm", head + "65535\n" + std::string(24, 'x'));
    try {
      gman::io::read_ppm(p);
      FAIL("expected FormatError");
    } catch (const gman::FormatError& e) {
      CHECK(e.offset() == head.size());
    }
  }

  SUBCASE("truncated pixel payload") {
    const std::string full = "P6\n2 2\n255\n" + std::string(12, 'x');
    const fs::path p = write_bytes("short.ppm", full.substr(0, full.size() - 5));
    try {
      gman::io::read_ppm(p);
      FAIL("expected FormatError");
    } catch (const gman::FormatError& e) {
      CHECK(e.offset() == full.size() - 5);
    }
  }

  SUBCASE("junk instead of whitespace after maxval") {
    const std::string head = "P6\n2 2\n255";
    const fs::path p = write_bytes("sep.ppm", head + "x" + std::string(12, 'x'));
    try {
      gman::io::read_ppm(p);
      FAIL("expected FormatError");
    } catch (const gman::FormatError& e) {
      CHECK(e.offset() == head.size());
    }
  }

  SUBCASE("zero-sized dimensions") {
    const fs::path p = write_bytes("dims.ppm", "P6\n0 2\n255\n");
    CHECK_THROWS_AS(gman::io::read_ppm(p), gman::FormatError);
  }

  SUBCASE("missing header fields") {
    const fs::path p = write_bytes("fields.ppm", "P6\n2\n");
    CHECK_THROWS_AS(gman::io::read_ppm(p), gman::FormatError);
  }

  SUBCASE("oversized image rejected before allocation") {
    const fs::path p = write_bytes("huge.ppm", "P6\n20000 20000\n255\n");
    CHECK_THROWS_AS(gman::io::read_ppm(p), gman::FormatError);
  }

  SUBCASE("missing file") {
    CHECK_THROWS_AS(gman::io::read_ppm(temp_file("nope.ppm")), gman::IoError);
  }

  SUBCASE("wrong tensor shape for writing") {
    Tensor gray(Shape{1, 1, 2, 2}, 0.5);
    CHECK_THROWS_AS(gman::io::write_ppm(gray, temp_file("gray.ppm")), gman::ArgumentError);
  }
}

TEST_CASE("crop_at: window copy with bounds checks") {
  const Tensor img = testsup::pattern_image(6, 8);
  const Tensor win = gman::img::crop_at(img, 2, 3, 3, 4);
  CHECK(win.shape() == Shape{1, 3, 3, 4});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) CHECK(win.at(0, c, y, x) == img.at(0, c, 2 + y, 3 + x));

  CHECK_THROWS_AS(gman::img::crop_at(img, 4, 0, 3, 4), gman::ArgumentError);  // bottom edge
  CHECK_THROWS_AS(gman::img::crop_at(img, 0, 5, 3, 4), gman::ArgumentError);  // right edge
  CHECK_THROWS_AS(gman::img::crop_at(img, -1, 0, 3, 4), gman::ArgumentError);
  CHECK_THROWS_AS(gman::img::crop_at(img, 0, 0, 0, 4), gman::ArgumentError);
}

TEST_CASE("reflect padding mirrors the bottom/right edges") {
  const Tensor img = testsup::pattern_image(5, 7);
  const Tensor padded = gman::img::reflect_pad_to_multiple(img, 4);
  CHECK(padded.shape() == Shape{1, 3, 8, 8});

  for (int c = 0; c < 3; ++c) {
    // Original content intact.
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 7; ++x) CHECK(padded.at(0, c, y, x) == img.at(0, c, y, x));
    // Rows 5,6,7 mirror rows 4,3,2; column 7 mirrors column 6.
    for (int x = 0; x < 7; ++x) {
      CHECK(padded.at(0, c, 5, x) == img.at(0, c, 4, x));
      CHECK(padded.at(0, c, 6, x) == img.at(0, c, 3, x));
      CHECK(padded.at(0, c, 7, x) == img.at(0, c, 2, x));
    }
    for (int y = 0; y < 5; ++y) CHECK(padded.at(0, c, y, 7) == img.at(0, c, y, 6));
    CHECK(padded.at(0, c, 5, 7) == img.at(0, c, 4, 6));  // corner
  }

  // Already aligned: returned unchanged.
  const Tensor even = testsup::pattern_image(8, 12);
  CHECK(gman::max_abs_diff(gman::img::reflect_pad_to_multiple(even, 4), even) == 0.0);

  // crop_to undoes the padding exactly.
  CHECK(gman::max_abs_diff(gman::img::crop_to(padded, 5, 7), img) == 0.0);

  // A 1-pixel-tall image must replicate, not read out of bounds.
  Tensor thin(Shape{1, 3, 1, 5});
  Rng rng(3);
  for (double& v : thin.flat()) v = rng.uniform();
  const Tensor tp = gman::img::reflect_pad_to_multiple(thin, 4);
  CHECK(tp.shape() == Shape{1, 3, 4, 8});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < 4; ++y)
      for (int x = 0; x < 5; ++x) CHECK(tp.at(0, c, y, x) == thin.at(0, c, 0, x));

  CHECK_THROWS_AS(gman::img::reflect_pad_to_multiple(img, 0), gman::ArgumentError);
}
