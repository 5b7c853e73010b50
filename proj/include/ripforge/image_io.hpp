#pragma once

// Grayscale image files: binary/ASCII PGM (P5/P2) and PNG, 8 or 16 bits.
// Pixels load as reals in [0, 1] (value / maxval); the maxval is kept so a
// write at the same depth reproduces the file's samples exactly.

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "ripforge/errors.hpp"
#include "ripforge/matrix.hpp"
#include "ripforge/matrix_io.hpp"

namespace ripforge::io {

struct Image {
  Mat pixels;              ///< values in [0, 1]
  std::uint32_t maxval = 255;

  unsigned bit_depth() const { return maxval > 255 ? 16 : 8; }
};

namespace detail {

inline std::uint32_t quantize(double v, std::uint32_t maxval) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint32_t>(std::lround(c * maxval));
}

inline void check_depth(unsigned bits) {
  if (bits != 8 && bits != 16) throw ConfigError("image bit depth must be 8 or 16");
}

class PgmCursor {
 public:
  PgmCursor(const std::vector<unsigned char>& b, std::size_t pos) : b_(b), pos_(pos) {}

  std::size_t pos() const { return pos_; }

  void skip_space_and_comments() {
    while (pos_ < b_.size()) {
      if (b_[pos_] == '#') {
        while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
      } else if (std::isspace(b_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint32_t number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    std::uint64_t v = 0;
    while (pos_ < b_.size() && std::isdigit(b_[pos_])) {
      v = v * 10 + (b_[pos_] - '0');
      if (v > 0xffffffffULL) throw ParseError(std::string("PGM ") + what + " too large", start);
      ++pos_;
    }
    if (pos_ == start) throw ParseError(std::string("PGM: expected ") + what, start);
    return static_cast<std::uint32_t>(v);
  }

  void single_whitespace() {
    if (pos_ >= b_.size() || !std::isspace(b_[pos_])) {
      throw ParseError("PGM: expected whitespace before the pixel data", pos_);
    }
    ++pos_;
  }

 private:
  const std::vector<unsigned char>& b_;
  std::size_t pos_;
};

}  // namespace detail

inline Image decode_pgm(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw ParseError("PGM: missing P5/P2 magic", 0);
  }
  const bool binary = bytes[1] == '5';
  detail::PgmCursor c(bytes, 2);
  const std::uint32_t w = c.number("width");
  const std::uint32_t h = c.number("height");
  c.skip_space_and_comments();
  const std::size_t maxval_at = c.pos();
  const std::uint32_t maxval = c.number("maxval");
  if (w == 0 || h == 0) throw ParseError("PGM: zero image dimension", 2);
  if (maxval == 0 || maxval > 65535) throw ParseError("PGM: maxval must be in [1, 65535]", maxval_at);
  Image img{Mat(h, w), maxval};
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (binary) {
    c.single_whitespace();
    const std::size_t per = maxval > 255 ? 2 : 1, start = c.pos();
    if (bytes.size() < start + n * per) throw ParseError("PGM: pixel data truncated", bytes.size());
    for (std::size_t k = 0; k < n; ++k) {
      const unsigned char* p = bytes.data() + start + k * per;
      const std::uint32_t v = per == 2 ? (std::uint32_t{p[0]} << 8) | p[1] : p[0];
      if (v > maxval) throw ParseError("PGM: sample exceeds maxval", start + k * per);
      img.pixels.data()[k] = static_cast<double>(v) / maxval;
    }
  } else {
    for (std::size_t k = 0; k < n; ++k) {
      c.skip_space_and_comments();
      const std::size_t at = c.pos();
      const std::uint32_t v = c.number("sample");
      if (v > maxval) throw ParseError("PGM: sample exceeds maxval", at);
      img.pixels.data()[k] = static_cast<double>(v) / maxval;
    }
  }
  return img;
}

inline std::vector<unsigned char> encode_pgm(const Mat& pixels, unsigned bits = 8) {
  detail::check_depth(bits);
  const std::uint32_t maxval = bits == 16 ? 65535 : 255;
  const std::string head = "P5\n" + std::to_string(pixels.cols()) + " " +
                           std::to_string(pixels.rows()) + "\n" + std::to_string(maxval) + "\n";
  std::vector<unsigned char> out(head.begin(), head.end());
  for (double v : pixels.data()) {
    const std::uint32_t q = detail::quantize(v, maxval);
    if (bits == 16) out.push_back(static_cast<unsigned char>(q >> 8));
    out.push_back(static_cast<unsigned char>(q & 0xff));
  }
  return out;
}

namespace detail {

struct PngReadState {
  const std::vector<unsigned char>* bytes;
  std::size_t pos = 0;
  char message[256] = {};
};

inline void png_read_mem(png_structp png, png_bytep out, png_size_t len) {
  auto* st = static_cast<PngReadState*>(png_get_io_ptr(png));
  if (st->pos + len > st->bytes->size()) png_error(png, "unexpected end of data");
  std::memcpy(out, st->bytes->data() + st->pos, len);
  st->pos += len;
}

inline void png_on_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngReadState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

inline void png_on_warning(png_structp, png_const_charp) {}

struct PngWriteState {
  std::vector<unsigned char>* out;
  char message[256] = {};
};

inline void png_write_mem(png_structp png, png_bytep data, png_size_t len) {
  auto* st = static_cast<PngWriteState*>(png_get_io_ptr(png));
  st->out->insert(st->out->end(), data, data + len);
}

inline void png_flush_mem(png_structp) {}

inline void png_on_write_error(png_structp png, png_const_charp msg) {
  auto* st = static_cast<PngWriteState*>(png_get_error_ptr(png));
  std::snprintf(st->message, sizeof st->message, "%s", msg);
  png_longjmp(png, 1);
}

}  // namespace detail

/// Decodes a grayscale PNG (color input is converted to luma, alpha dropped).
inline Image decode_png(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) {
    throw ParseError("PNG: bad signature", 0);
  }
  detail::PngReadState st{&bytes};
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &st, detail::png_on_error,
                                           detail::png_on_warning);
  if (!png) throw IoError("PNG: cannot allocate decoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("PNG: cannot allocate decoder");
  }
  // Everything touched after setjmp lives in these heap/outer objects.
  std::vector<unsigned char> raw;
  std::vector<png_bytep> row_ptrs;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw ParseError(std::string("PNG: ") + st.message, st.pos);
  }
  png_set_read_fn(png, &st, detail::png_read_mem);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  const png_uint_32 width = png_get_image_width(png, info);
  const png_uint_32 height = png_get_image_height(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  raw.resize(stride * height);
  row_ptrs.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = raw.data() + r * stride;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::uint32_t maxval = depth == 16 ? 65535 : 255;
  Image img{Mat(height, width), maxval};
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const unsigned char* p = raw.data() + r * stride + c * (depth == 16 ? 2 : 1);
      const std::uint32_t v = depth == 16 ? (std::uint32_t{p[0]} << 8) | p[1] : p[0];
      img.pixels(r, c) = static_cast<double>(v) / maxval;
    }
  }
  return img;
}

inline std::vector<unsigned char> encode_png(const Mat& pixels, unsigned bits = 8) {
  detail::check_depth(bits);
  if (pixels.rows() == 0 || pixels.cols() == 0) throw DimensionError("PNG: empty image");
  const std::uint32_t maxval = bits == 16 ? 65535 : 255;
  const std::size_t per = bits / 8, stride = pixels.cols() * per;
  std::vector<unsigned char> raw(stride * pixels.rows());
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const std::uint32_t q = detail::quantize(pixels.data()[k], maxval);
    if (bits == 16) {
      raw[2 * k] = static_cast<unsigned char>(q >> 8);
      raw[2 * k + 1] = static_cast<unsigned char>(q & 0xff);
    } else {
      raw[k] = static_cast<unsigned char>(q);
    }
  }
  std::vector<png_bytep> row_ptrs(pixels.rows());
  for (std::size_t r = 0; r < pixels.rows(); ++r) row_ptrs[r] = raw.data() + r * stride;

  std::vector<unsigned char> out;
  detail::PngWriteState st{&out};
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &st,
                                            detail::png_on_write_error, detail::png_on_warning);
  if (!png) throw IoError("PNG: cannot allocate encoder");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("PNG: cannot allocate encoder");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError(std::string("PNG: ") + st.message);
  }
  png_set_write_fn(png, &st, detail::png_write_mem, detail::png_flush_mem);
  png_set_IHDR(png, info, static_cast<png_uint_32>(pixels.cols()),
               static_cast<png_uint_32>(pixels.rows()), static_cast<int>(bits),
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

/// Reads PGM or PNG, chosen by the file's magic bytes.
inline Image read_image(const std::string& path) {
  const std::vector<unsigned char> bytes = read_bytes(path);
  if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) return decode_png(bytes);
  if (bytes.size() >= 2 && bytes[0] == 'P') return decode_pgm(bytes);
  throw ParseError("unrecognized image format in " + path, 0);
}

/// Writes PNG for a .png extension, PGM otherwise.
inline void write_image(const std::string& path, const Mat& pixels, unsigned bits = 8) {
  const std::string ext = std::filesystem::path(path).extension().string();
  write_bytes(path, ext == ".png" || ext == ".PNG" ? encode_png(pixels, bits)
                                                   : encode_pgm(pixels, bits));
}

}  // namespace ripforge::io
