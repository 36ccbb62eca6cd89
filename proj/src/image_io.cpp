#include "gman/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

namespace gman::io {

namespace {

constexpr std::int64_t kMaxPixels = 100'000'000;

// Scanner over the PPM header: whitespace and '#' comments separate tokens.
struct HeaderScanner {
  const std::string& buf;
  std::size_t pos = 0;

  void skip_separators() {
    while (pos < buf.size()) {
      const char c = buf[pos];
      if (c == '#') {
        while (pos < buf.size() && buf[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        ++pos;
      } else {
        break;
      }
    }
  }

  std::int64_t integer(const char* what) {
    skip_separators();
    const std::size_t start = pos;
    std::int64_t value = 0;
    while (pos < buf.size() && buf[pos] >= '0' && buf[pos] <= '9') {
      value = value * 10 + (buf[pos] - '0');
      if (value > kMaxPixels * 3) break;  // runaway digits
      ++pos;
    }
    if (pos == start)
      throw FormatError(std::string("expected ") + what + " in PPM header", start);
    return value;
  }
};

}  // namespace

Tensor read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read from " + path.string() + " failed");

  if (buf.size() < 2 || buf[0] != 'P' || buf[1] != '6')
    throw FormatError("bad magic, expected P6", 0);
  HeaderScanner sc{buf, 2};
  const std::int64_t w = sc.integer("width");
  const std::int64_t h = sc.integer("height");
  if (w < 1 || h < 1 || w * h > kMaxPixels)
    throw FormatError("implausible dimensions " + std::to_string(w) + "x" + std::to_string(h),
                      sc.pos);
  const std::size_t maxval_at = (sc.skip_separators(), sc.pos);
  const std::int64_t maxval = sc.integer("maxval");
  if (maxval != 255)
    throw FormatError("unsupported maxval " + std::to_string(maxval) + ", expected 255",
                      maxval_at);
  if (sc.pos >= buf.size()) throw FormatError("missing pixel data", sc.pos);
  const char sep = buf[sc.pos];
  if (sep != ' ' && sep != '\t' && sep != '\r' && sep != '\n')
    throw FormatError("expected whitespace after maxval", sc.pos);
  ++sc.pos;  // exactly one whitespace byte separates header and pixels

  const std::int64_t need = w * h * 3;
  if (static_cast<std::int64_t>(buf.size() - sc.pos) < need)
    throw FormatError("truncated pixel data, expected " + std::to_string(need) + " bytes", buf.size());

  Tensor img(Shape{1, 3, static_cast<int>(h), static_cast<int>(w)});
  const auto* p = reinterpret_cast<const unsigned char*>(buf.data() + sc.pos);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(0, c, y, x) = p[(static_cast<std::int64_t>(y) * w + x) * 3 + c] / 255.0;
  return img;
}

void write_ppm(const Tensor& image, const std::filesystem::path& path) {
  const Shape& s = image.shape();
  if (s.n != 1 || s.c != 3)
    throw ArgumentError("write_ppm: image must be (1,3,h,w), got " + to_string(s));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << "P6\n" << s.w << " " << s.h << "\n255\n";
  std::string payload(static_cast<std::size_t>(s.h) * s.w * 3, '\0');
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const double v = std::clamp(image.at(0, c, y, x), 0.0, 1.0);
        payload[(static_cast<std::size_t>(y) * s.w + x) * 3 + c] =
            static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

}  // namespace gman::io
