#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "ripforge/image_io.hpp"
#include "ripforge/matrix_io.hpp"
#include "ripforge/rng.hpp"
#include "ripforge/toml_lite.hpp"
#include "test_support.hpp"

using namespace ripforge;
using namespace ripforge::testing;

namespace {

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

Mat random_levels(std::size_t r, std::size_t c, std::uint32_t maxval, Seed seed) {
  Rng rng(seed);
  Mat m(r, c);
  for (double& v : m.data()) {
    v = static_cast<double>(rng.next_u64() % (maxval + 1)) / maxval;
  }
  return m;
}

template <class M>
bool identical(const M& a, const M& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::equal(a.data().begin(), a.data().end(), b.data().begin());
}

std::size_t parse_offset(const std::vector<unsigned char>& bytes) {
  try {
    io::decode_pgm(bytes);
  } catch (const ParseError& e) {
    return e.offset();
  }
  ADD_FAILURE() << "expected a parse error";
  return 0;
}

}  // namespace

// ------------------------------------------------------------------ RFMX

TEST(Rfmx, RealAndComplexRoundTripExactly) {
  const Mat m = random_mat(7, 5, 3);
  const auto real_back = io::decode(io::encode(m));
  ASSERT_TRUE(std::holds_alternative<Mat>(real_back));
  EXPECT_TRUE(identical(std::get<Mat>(real_back), m));

  CMat c(3, 4);
  Rng rng(9);
  for (Complex& v : c.data()) v = Complex(rng.gaussian(), rng.gaussian());
  const auto complex_back = io::decode(io::encode(c));
  ASSERT_TRUE(std::holds_alternative<CMat>(complex_back));
  EXPECT_TRUE(identical(std::get<CMat>(complex_back), c));

  const auto dir = scratch_dir("rfmx");
  io::write_bytes((dir / "m.rfmx").string(), io::encode(m));
  EXPECT_TRUE(identical(io::read_real((dir / "m.rfmx").string()), m));
  const CMat promoted = io::read_complex((dir / "m.rfmx").string());
  EXPECT_EQ(promoted(2, 3), Complex(m(2, 3), 0.0));
  io::write_bytes((dir / "c.rfmx").string(), io::encode(c));
  EXPECT_THROW(io::read_real((dir / "c.rfmx").string()), ParseError);
}

TEST(Rfmx, HeaderLayoutIsLittleEndian) {
  const auto b = io::encode(Mat{{1.0, 2.0, 3.0}});
  ASSERT_EQ(b.size(), 21u + 3 * 8);
  EXPECT_EQ(std::string(b.begin(), b.begin() + 4), "RFMX");
  EXPECT_EQ(b[4], 0);
  EXPECT_EQ(b[5], 1);   // rows
  EXPECT_EQ(b[13], 3);  // cols
  // 1.0 = 0x3ff0000000000000, most significant byte last.
  EXPECT_EQ(b[21 + 7], 0x3f);
  EXPECT_EQ(b[21 + 6], 0xf0);
}

TEST(Rfmx, MalformedInputReportsOffsets) {
  auto good = io::encode(Mat(2, 2));
  auto offset_of = [](const std::vector<unsigned char>& b) -> std::size_t {
    try {
      io::decode(b);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return SIZE_MAX;
  };
  EXPECT_EQ(offset_of({'R', 'F'}), 2u);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(offset_of(bad_magic), 0u);

  auto bad_tag = good;
  bad_tag[4] = 7;
  EXPECT_EQ(offset_of(bad_tag), 4u);

  auto truncated = good;
  truncated.resize(truncated.size() - 3);
  EXPECT_EQ(offset_of(truncated), truncated.size());

  auto huge = good;
  huge[12] = 0x40;  // rows ~ 2^62
  EXPECT_EQ(offset_of(huge), 5u);

  EXPECT_THROW(io::read_bytes("/nonexistent/ripforge.rfmx"), IoError);
}

// ------------------------------------------------------------------- PGM

TEST(Pgm, HandBuiltBinaryFixture) {
  std::vector<unsigned char> b = bytes_of("P5\n2 2\n255\n");
  for (unsigned char v : {0, 51, 200, 255}) b.push_back(v);
  const io::Image img = io::decode_pgm(b);
  ASSERT_EQ(img.pixels.rows(), 2u);
  ASSERT_EQ(img.pixels.cols(), 2u);
  EXPECT_EQ(img.maxval, 255u);
  EXPECT_DOUBLE_EQ(img.pixels(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(img.pixels(0, 1), 51.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.pixels(1, 0), 200.0 / 255.0);
  EXPECT_DOUBLE_EQ(img.pixels(1, 1), 1.0);
}

TEST(Pgm, AsciiWithCommentsAndOddMaxval) {
  const io::Image img = io::decode_pgm(bytes_of("P2\n# made by hand\n3 1 # w h\n10\n0 5\n10\n"));
  EXPECT_EQ(img.maxval, 10u);
  EXPECT_DOUBLE_EQ(img.pixels(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(img.pixels(0, 2), 1.0);
}

TEST(Pgm, EightAndSixteenBitRoundTripsAreBitIdentical) {
  for (unsigned bits : {8u, 16u}) {
    const std::uint32_t maxval = bits == 16 ? 65535 : 255;
    const Mat m = random_levels(13, 17, maxval, bits);
    const auto encoded = io::encode_pgm(m, bits);
    const io::Image back = io::decode_pgm(encoded);
    EXPECT_EQ(back.maxval, maxval);
    EXPECT_EQ(back.bit_depth(), bits);
    EXPECT_TRUE(identical(back.pixels, m));
    EXPECT_EQ(io::encode_pgm(back.pixels, bits), encoded);
  }
}

TEST(Pgm, SixteenBitSamplesAreBigEndian) {
  std::vector<unsigned char> b = bytes_of("P5 1 1 65535\n");
  b.push_back(0x01);
  b.push_back(0x02);
  EXPECT_DOUBLE_EQ(io::decode_pgm(b).pixels(0, 0), 258.0 / 65535.0);
}

TEST(Pgm, MalformedFilesCarryByteOffsets) {
  EXPECT_EQ(parse_offset(bytes_of("P6\n1 1\n255\n")), 0u);
  EXPECT_EQ(parse_offset(bytes_of("P5\nx 1\n255\n")), 3u);
  EXPECT_EQ(parse_offset(bytes_of("P5\n1 1\n0\n")), 7u);
  // 2x2 payload cut short after one byte: reported at end of file.
  std::vector<unsigned char> truncated = bytes_of("P5\n2 2\n255\n");
  truncated.push_back(9);
  EXPECT_EQ(parse_offset(truncated), truncated.size());
  // Second ASCII sample above maxval.
  EXPECT_EQ(parse_offset(bytes_of("P2\n2 1\n7\n3 9\n")), 11u);
}

// ------------------------------------------------------------------- PNG

TEST(Png, EightAndSixteenBitRoundTripsAreBitIdentical) {
  const auto dir = scratch_dir("png");
  for (unsigned bits : {8u, 16u}) {
    const std::uint32_t maxval = bits == 16 ? 65535 : 255;
    const Mat m = random_levels(19, 11, maxval, 100 + bits);
    const std::string path = (dir / ("img" + std::to_string(bits) + ".png")).string();
    io::write_image(path, m, bits);
    const io::Image back = io::read_image(path);
    EXPECT_EQ(back.maxval, maxval);
    EXPECT_TRUE(identical(back.pixels, m));
  }
}

TEST(Png, SixteenBitRampStaysMonotone) {
  Mat ramp(4, 300);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 300; ++j) ramp(i, j) = static_cast<double>(j) / 299.0;
  }
  const io::Image back = io::decode_png(io::encode_png(ramp, 16));
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 1; j < 300; ++j) EXPECT_GT(back.pixels(i, j), back.pixels(i, j - 1));
  }
}

TEST(Png, FormatIsSniffedNotTakenFromExtension) {
  const auto dir = scratch_dir("png");
  const Mat m = random_levels(5, 6, 255, 4);
  const std::string path = (dir / "actually_png.pgm").string();
  io::write_bytes(path, io::encode_png(m, 8));
  EXPECT_TRUE(identical(io::read_image(path).pixels, m));
}

TEST(Png, CorruptDataIsAParseError) {
  auto b = io::encode_png(random_levels(8, 8, 255, 5), 8);
  b.resize(b.size() / 2);
  EXPECT_THROW(io::decode_png(b), ParseError);
  EXPECT_THROW(io::decode_png(bytes_of("not a png at all")), ParseError);
}

TEST(ImageIo, OutOfRangePixelsClampOnWrite) {
  const io::Image back = io::decode_pgm(io::encode_pgm(Mat{{-0.5, 1.5}}, 8));
  EXPECT_DOUBLE_EQ(back.pixels(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(back.pixels(0, 1), 1.0);
  EXPECT_THROW(io::encode_pgm(Mat(1, 1), 12), ConfigError);
}

// ------------------------------------------------------------------ TOML

TEST(Toml, TablesArraysAndScalars) {
  const toml::Table t = toml::parse(R"(# experiment
name = "desk run"   # trailing comment
trials = 2_000
rate = 5e-5
strict = true

[phase]
ratios = [0.125,
          0.25, ]
levels = [10, 12, 14]
mri.gamma = 0.0035
)");
  EXPECT_EQ(t.string("name"), "desk run");
  EXPECT_EQ(t.integer("trials"), 2000);
  EXPECT_DOUBLE_EQ(t.number("rate"), 5e-5);
  EXPECT_TRUE(t.boolean("strict"));
  EXPECT_EQ(t.numbers("phase.ratios"), (std::vector<double>{0.125, 0.25}));
  EXPECT_EQ(t.numbers("phase.levels"), (std::vector<double>{10, 12, 14}));
  EXPECT_DOUBLE_EQ(t.number("phase.mri.gamma"), 0.0035);
  EXPECT_DOUBLE_EQ(t.number("trials"), 2000.0);
  EXPECT_EQ(t.integer_or("absent", 7), 7);
}

TEST(Toml, StringEscapes) {
  const toml::Table t = toml::parse("path = \"a\\\\b \\\"q\\\"\"\n");
  EXPECT_EQ(t.string("path"), "a\\b \"q\"");
}

TEST(Toml, TypeAndPresenceErrorsAreConfigErrors) {
  const toml::Table t = toml::parse("n = 3\nx = 1.5\ns = \"t\"\n");
  EXPECT_THROW(t.integer("x"), ConfigError);
  EXPECT_THROW(t.boolean("n"), ConfigError);
  EXPECT_THROW(t.number("s"), ConfigError);
  EXPECT_THROW(t.numbers("n"), ConfigError);
  EXPECT_THROW(t.number("missing"), ConfigError);
  EXPECT_THROW(toml::parse_file("/nonexistent/cfg.toml"), IoError);
}

TEST(Toml, SyntaxErrorsCarryOffsets) {
  auto offset_of = [](const std::string& text) -> std::size_t {
    try {
      toml::parse(text);
    } catch (const ParseError& e) {
      return e.offset();
    }
    return SIZE_MAX;
  };
  EXPECT_EQ(offset_of("a = 1\na = 2\n"), 6u);
  EXPECT_EQ(offset_of("a 1\n"), 2u);
  EXPECT_EQ(offset_of("a = 1x\n"), 4u);
  EXPECT_EQ(offset_of("a = \"open\n"), 9u);
  EXPECT_EQ(offset_of("a = 1 2\n"), 6u);
}
