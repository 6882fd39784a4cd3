#pragma once

#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace benh {

inline constexpr const char* kToolVersion = "0.1.0";

// Data-level failures (malformed files, dangling references, shape
// mismatches). The CLI maps these to exit code 2; everything else is 3.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// ---- little-endian scalar IO (files are LE regardless of host) ----

inline void put_u16le(std::string& out, uint16_t v) {
  out.push_back(char(v & 0xff));
  out.push_back(char((v >> 8) & 0xff));
}
inline void put_u32le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_u64le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f32le(std::string& out, float v) {
  uint32_t b;
  std::memcpy(&b, &v, 4);
  put_u32le(out, b);
}
inline void put_f64le(std::string& out, double v) {
  uint64_t b;
  std::memcpy(&b, &v, 8);
  put_u64le(out, b);
}

class ByteReader {
 public:
  ByteReader(const uint8_t* data, size_t size) : data_(data), size_(size) {}

  size_t remaining() const { return size_ - pos_; }
  size_t pos() const { return pos_; }

  uint16_t u16le() { return uint16_t(take(2, "u16")); }
  uint32_t u32le() { return uint32_t(take(4, "u32")); }
  uint64_t u64le() { return take(8, "u64"); }
  float f32le() {
    uint32_t b = u32le();
    float v;
    std::memcpy(&v, &b, 4);
    return v;
  }
  double f64le() {
    uint64_t b = u64le();
    double v;
    std::memcpy(&v, &b, 8);
    return v;
  }
  std::string bytes(size_t n) {
    need(n, "bytes");
    std::string s(reinterpret_cast<const char*>(data_ + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(size_t n, const char* what) {
    if (remaining() < n)
      throw DataError(std::string("truncated input while reading ") + what +
                      " at offset " + std::to_string(pos_));
  }
  uint64_t take(size_t n, const char* what) {
    need(n, what);
    uint64_t v = 0;
    for (size_t i = 0; i < n; ++i) v |= uint64_t(data_[pos_ + i]) << (8 * i);
    pos_ += n;
    return v;
  }

  const uint8_t* data_;
  size_t size_;
  size_t pos_ = 0;
};

// Counts Unicode codepoints; each byte of an invalid sequence counts as one.
inline size_t utf8_length(const std::string& s) {
  size_t n = 0;
  for (size_t i = 0; i < s.size();) {
    unsigned char c = s[i];
    size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 1;
    if (i + len > s.size()) len = 1;
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) {
        len = 1;
        break;
      }
    }
    i += len;
    ++n;
  }
  return n;
}

// Splits into codepoint-boundary offsets (start of each char, plus end).
inline std::vector<size_t> utf8_offsets(const std::string& s) {
  std::vector<size_t> off;
  for (size_t i = 0; i < s.size();) {
    off.push_back(i);
    unsigned char c = s[i];
    size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xe ? 3 : (c >> 3) == 0x1e ? 4 : 1;
    if (i + len > s.size()) len = 1;
    for (size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) & 0xc0) != 0x80) {
        len = 1;
        break;
      }
    }
    i += len;
  }
  off.push_back(s.size());
  return off;
}

std::string read_file(const std::string& path);
// Writes via temp file + rename so failures never leave partial output.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace benh
