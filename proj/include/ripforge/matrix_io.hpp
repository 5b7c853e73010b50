#pragma once

// RFMX binary matrix files:
//   bytes 0..3   magic "RFMX"
//   byte  4      dtype tag, 0 = f64 real, 1 = f64 complex (re, im interleaved)
//   bytes 5..12  rows, u64 little-endian
//   bytes 13..20 cols, u64 little-endian
//   payload      row-major f64 little-endian values

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"

namespace ripforge::io {

inline constexpr std::array<char, 4> kRfmxMagic{'R', 'F', 'M', 'X'};
inline constexpr std::uint8_t kRfmxReal = 0;
inline constexpr std::uint8_t kRfmxComplex = 1;
inline constexpr std::size_t kRfmxHeaderSize = 21;

namespace detail {

inline void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>(v >> (8 * b)));
}

inline void put_f64(std::vector<unsigned char>& out, double v) {
  put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

inline double get_f64(const unsigned char* p) { return std::bit_cast<double>(get_u64(p)); }

inline std::vector<unsigned char> header(std::uint8_t tag, std::size_t rows,
                                         std::size_t cols) {
  std::vector<unsigned char> out(kRfmxMagic.begin(), kRfmxMagic.end());
  out.push_back(tag);
  put_u64(out, rows);
  put_u64(out, cols);
  return out;
}

}  // namespace detail

inline std::vector<unsigned char> encode(const Mat& m) {
  auto out = detail::header(kRfmxReal, m.rows(), m.cols());
  out.reserve(out.size() + 8 * m.size());
  for (double v : m.data()) detail::put_f64(out, v);
  return out;
}

inline std::vector<unsigned char> encode(const CMat& m) {
  auto out = detail::header(kRfmxComplex, m.rows(), m.cols());
  out.reserve(out.size() + 16 * m.size());
  for (const Complex& v : m.data()) {
    detail::put_f64(out, v.real());
    detail::put_f64(out, v.imag());
  }
  return out;
}

using AnyMatrix = std::variant<Mat, CMat>;

inline AnyMatrix decode(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kRfmxHeaderSize) {
    throw ParseError("RFMX file truncated inside the header", bytes.size());
  }
  if (std::memcmp(bytes.data(), kRfmxMagic.data(), 4) != 0) {
    throw ParseError("missing RFMX magic", 0);
  }
  const std::uint8_t tag = bytes[4];
  if (tag != kRfmxReal && tag != kRfmxComplex) {
    throw ParseError("unknown RFMX dtype tag " + std::to_string(tag), 4);
  }
  const std::uint64_t rows = detail::get_u64(bytes.data() + 5);
  const std::uint64_t cols = detail::get_u64(bytes.data() + 13);
  const std::size_t width = tag == kRfmxReal ? 8 : 16;
  if (cols != 0 && rows > (bytes.size() / width) / cols + 1) {
    throw ParseError("RFMX dimensions exceed payload", 5);
  }
  const std::size_t expected = kRfmxHeaderSize + width * rows * cols;
  if (bytes.size() != expected) {
    throw ParseError("RFMX payload is " + std::to_string(bytes.size()) +
                         " bytes, expected " + std::to_string(expected),
                     std::min(bytes.size(), expected));
  }
  const unsigned char* p = bytes.data() + kRfmxHeaderSize;
  if (tag == kRfmxReal) {
    std::vector<double> data(rows * cols);
    for (std::size_t k = 0; k < data.size(); ++k) data[k] = detail::get_f64(p + 8 * k);
    return Mat(rows, cols, std::move(data));
  }
  std::vector<Complex> data(rows * cols);
  for (std::size_t k = 0; k < data.size(); ++k) {
    data[k] = Complex(detail::get_f64(p + 16 * k), detail::get_f64(p + 16 * k + 8));
  }
  return CMat(rows, cols, std::move(data));
}

inline std::vector<unsigned char> read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

template <class M>
void write_matrix(const std::string& path, const M& m) {
  write_bytes(path, encode(m));
}

inline AnyMatrix read_any(const std::string& path) { return decode(read_bytes(path)); }

inline Mat read_real(const std::string& path) {
  auto any = read_any(path);
  if (auto* m = std::get_if<Mat>(&any)) return std::move(*m);
  throw ParseError(path + " holds a complex matrix where a real one was expected", 4);
}

inline CMat read_complex(const std::string& path) {
  auto any = read_any(path);
  if (auto* m = std::get_if<CMat>(&any)) return std::move(*m);
  return to_complex(std::get<Mat>(any));
}

}  // namespace ripforge::io
