#pragma once

// Byte-order explicit readers and writers for the repo's binary formats, plus
// whole-file helpers that transparently inflate gzip input.

#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "laya/error.hpp"

namespace laya::io {

// Reads a file fully. Gzip-compressed files are inflated; other files are
// returned unchanged. Missing/unreadable files raise IoError.
std::vector<std::uint8_t> read_file(const std::string& path);
void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

class ByteWriter {
 public:
  void u32_le(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64_le(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32_le(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32_le(v);
  }
  void f64_le(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    u64_le(v);
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() noexcept { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

// Bounds-checked cursor; running past the end raises FormatError naming the
// field being read and its offset.
class ByteReader {
 public:
  ByteReader(const std::vector<std::uint8_t>& bytes, std::string source)
      : bytes_(bytes), source_(std::move(source)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }
  bool at_end() const noexcept { return pos_ == bytes_.size(); }

  void need(std::size_t n, const char* field) const {
    if (remaining() < n) {
      throw FormatError(source_ + ": truncated while reading " + field + " at offset " +
                        std::to_string(pos_));
    }
  }
  std::uint32_t u32_le(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint32_t u32_be(const char* field) {
    need(4, field);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::uint64_t u64_le(const char* field) {
    need(8, field);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32_le(const char* field) {
    const std::uint32_t v = u32_le(field);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  double f64_le(const char* field) {
    const std::uint64_t v = u64_le(field);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  const std::uint8_t* take(std::size_t n, const char* field) {
    need(n, field);
    const std::uint8_t* p = bytes_.data() + pos_;
    pos_ += n;
    return p;
  }
  const std::string& source() const noexcept { return source_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace laya::io
