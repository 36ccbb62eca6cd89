#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gman/error.hpp"

namespace gman::io {

// Little-endian binary file writer with a running byte offset.
class ByteWriter {
 public:
  explicit ByteWriter(const std::filesystem::path& path)
      : path_(path.string()), out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot open " + path_ + " for writing");
  }

  void bytes(const void* p, std::size_t len) {
    out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
    offset_ += len;
  }
  void u8(std::uint8_t v) { bytes(&v, 1); }
  void u16(std::uint16_t v) {
    const std::uint8_t b[2] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8)};
    bytes(b, 2);
  }
  void u32(std::uint32_t v) {
    const std::uint8_t b[4] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v >> 8),
                               static_cast<std::uint8_t>(v >> 16),
                               static_cast<std::uint8_t>(v >> 24)};
    bytes(b, 4);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(std::string_view s) { bytes(s.data(), s.size()); }

  std::uint64_t offset() const { return offset_; }

  void finish() {
    out_.flush();
    if (!out_) throw IoError("write to " + path_ + " failed");
  }

 private:
  std::string path_;
  std::ofstream out_;
  std::uint64_t offset_ = 0;
};

// Whole-file little-endian reader. Reading past the end throws FormatError
// carrying the offset where data ran out.
class ByteReader {
 public:
  explicit ByteReader(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string() + " for reading");
    buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read from " + path.string() + " failed");
  }
  explicit ByteReader(std::vector<std::uint8_t> data) {
    buf_.assign(data.begin(), data.end());
  }

  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }
  std::uint16_t u16() {
    need(2);
    const auto* p = reinterpret_cast<const std::uint8_t*>(buf_.data() + pos_);
    pos_ += 2;
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const std::uint8_t*>(buf_.data() + pos_);
    pos_ += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str(std::size_t len) {
    need(len);
    std::string s(buf_.data() + pos_, len);
    pos_ += len;
    return s;
  }

  std::uint64_t offset() const { return pos_; }
  std::uint64_t size() const { return buf_.size(); }
  bool at_end() const { return pos_ == buf_.size(); }

 private:
  void need(std::size_t len) {
    if (pos_ + len > buf_.size()) throw FormatError("unexpected end of file", pos_);
  }

  std::string buf_;
  std::uint64_t pos_ = 0;
};

}  // namespace gman::io
