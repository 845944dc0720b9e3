#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "fer/error.hpp"
#include "fer/matrix.hpp"

namespace fer {

/// Little-endian byte sink.
class BinaryWriter {
 public:
  void magic(std::string_view tag) {
    require(tag.size() == 4, ErrorKind::InvalidArgument, "magic tags are four bytes");
    bytes_.insert(bytes_.end(), tag.begin(), tag.end());
  }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
  }

  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }

  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  void f64s(std::span<const double> values) {
    for (double v : values) f64(v);
  }

  /// Row-major values only; the shape is implied by the enclosing format.
  void matrix_values(const Matrix& m) { f64s(m.data()); }

  /// u32 rows, u32 cols, then row-major values.
  void matrix(const Matrix& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    matrix_values(m);
  }

  void string(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }

  /// u64 length prefix followed by the section bytes.
  void section(const BinaryWriter& inner) {
    u64(inner.bytes_.size());
    bytes_.insert(bytes_.end(), inner.bytes_.begin(), inner.bytes_.end());
  }

  const std::vector<char>& bytes() const noexcept { return bytes_; }

 private:
  std::vector<char> bytes_;
};

/// Bounds-checked little-endian byte source; malformed input raises BadFormat.
class BinaryReader {
 public:
  explicit BinaryReader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  void expect_magic(std::string_view tag) {
    need(4);
    require(std::string_view(bytes_.data() + pos_, 4) == tag, ErrorKind::BadFormat,
            "expected magic '" + std::string(tag) + "'");
    pos_ += 4;
  }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }

  double f64() { return std::bit_cast<double>(u64()); }

  Matrix matrix_values(std::size_t rows, std::size_t cols) {
    require(rows > 0 && cols > 0, ErrorKind::BadFormat, "matrix with zero extent");
    need(rows * cols * 8);
    std::vector<double> v(rows * cols);
    for (double& x : v) x = f64();
    try {
      return Matrix(rows, cols, std::move(v));
    } catch (const Error& e) {
      fail(ErrorKind::BadFormat, std::string("bad matrix payload: ") + e.what());
    }
  }

  Matrix matrix() {
    const std::size_t r = u32();
    const std::size_t c = u32();
    return matrix_values(r, c);
  }

  std::vector<double> f64s(std::size_t count) {
    need(count * 8);
    std::vector<double> v(count);
    for (double& x : v) x = f64();
    return v;
  }

  std::string string() {
    const std::size_t n = u32();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  BinaryReader section() {
    const std::uint64_t n = u64();
    need(n);
    std::vector<char> inner(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                            bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return BinaryReader(std::move(inner));
  }

  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  void expect_end() const {
    require(at_end(), ErrorKind::BadFormat, "trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    require(n <= bytes_.size() - pos_, ErrorKind::BadFormat, "truncated binary payload");
  }

  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

inline void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write to '" + path + "' failed");
}

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open '" + path + "'");
  return std::vector<char>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace fer
