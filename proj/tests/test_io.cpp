#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <sstream>

#include "aperture/error.hpp"
#include "aperture/io.hpp"
#include "common.hpp"

using namespace aperture;
namespace fs = std::filesystem;

namespace {

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    dir = fs::temp_directory_path() /
          ("aperture_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }
  fs::path dir;
};

}  // namespace

using IoTest = TempDir;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(io::sha256_bytes(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(io::sha256_bytes("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Numbers, FormatRoundTripsAndStrictParse) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 20 - 10);
    EXPECT_EQ(io::parse_double(io::format_double(v)), v);
  }
  EXPECT_THROW(io::parse_double("1.5x"), SyntaxError);
  EXPECT_THROW(io::parse_double(""), SyntaxError);
  EXPECT_THROW(io::parse_int("3.0"), SyntaxError);
  EXPECT_EQ(io::parse_int("-42"), -42);
}

TEST(KeyValues, ParsesAndReportsLines) {
  const auto kv = io::parse_key_values("# header\n a = 1 \n\nb=x # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0].key, "a");
  EXPECT_EQ(kv[0].value, "1");
  EXPECT_EQ(kv[0].line, 2);
  EXPECT_EQ(kv[1].value, "x");
  EXPECT_EQ(kv[1].line, 4);
  try {
    io::parse_key_values("a=1\nnot a pair\n");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2);
  }
  EXPECT_THROW(io::parse_key_values("=3\n"), SyntaxError);
  EXPECT_THROW(io::parse_key_values("a=1\na=2\n"), SyntaxError);
}

TEST(Srgb, TransferCurveInverts) {
  for (double v = 0.0; v <= 1.0; v += 0.01) EXPECT_NEAR(io::srgb_to_linear(io::linear_to_srgb(v)), v, 1e-12);
  EXPECT_NEAR(io::linear_to_srgb(0.0031308), 0.04045, 1e-6);
  EXPECT_EQ(io::srgb_to_linear(1.0), 1.0);
}

TEST_F(IoTest, PngRoundTrip8And16Bit) {
  const ColorImage img = aperture::testing::uniform_color(37, 23, 4);
  for (int bits : {8, 16}) {
    const fs::path p = dir / ("img" + std::to_string(bits) + ".png");
    io::write_png_rgb(p, img, bits);
    const ColorImage back = io::read_png_rgb(p);
    ASSERT_EQ(back.width(), 37);
    ASSERT_EQ(back.height(), 23);
    // Quantization happens in sRGB space; its slope bounds the linear error.
    const double step = bits == 8 ? 1.0 / 255 : 1.0 / 65535;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < img[c].size(); ++i)
        EXPECT_NEAR(back[c].data()[i], img[c].data()[i], 1.3 * step) << bits;
  }
  EXPECT_THROW(io::write_png_rgb(dir / "x.png", img, 12), InvalidArgument);
}

TEST_F(IoTest, DepthPngRoundTripWithinTenthOfMillimeter) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.1, 6.0);
  ImageD depth(50, 40);
  for (double& v : depth.pixels()) v = u(rng);
  depth(0, 0) = 0.0;
  depth(1, 0) = NAN;
  io::write_depth_png(dir / "d.png", depth);
  const ImageD back = io::read_depth_png(dir / "d.png");
  EXPECT_EQ(back(0, 0), 0.0);
  EXPECT_EQ(back(1, 0), 0.0);
  for (std::size_t i = 2; i < depth.size(); ++i) EXPECT_LE(std::abs(back.data()[i] - depth.data()[i]), 1e-4);
  EXPECT_THROW(io::write_depth_png(dir / "far.png", ImageD(2, 2, 14.0)), OutOfRange);
  EXPECT_NO_THROW(io::write_depth_png(dir / "far1000.png", ImageD(2, 2, 14.0), 1000.0));
}

TEST_F(IoTest, PfmRoundTripIsFloatExact) {
  const ImageD gray = aperture::testing::uniform_noise(13, 9, 3, -2.0, 5.0);
  io::write_pfm(dir / "g.pfm", gray);
  const ImageD g = io::read_pfm(dir / "g.pfm");
  for (std::size_t i = 0; i < gray.size(); ++i)
    EXPECT_EQ(g.data()[i], static_cast<double>(static_cast<float>(gray.data()[i])));
  const ColorImage rgb = aperture::testing::uniform_color(8, 5, 4);
  io::write_pfm(dir / "c.pfm", rgb);
  const ColorImage c = io::read_pfm_rgb(dir / "c.pfm");
  for (int ch = 0; ch < 3; ++ch)
    for (std::size_t i = 0; i < rgb[ch].size(); ++i)
      EXPECT_EQ(c[ch].data()[i], static_cast<double>(static_cast<float>(rgb[ch].data()[i])));
  EXPECT_THROW(io::read_pfm(dir / "c.pfm"), LoadError);
  io::write_file_atomic(dir / "bad.pfm", "P6\n1 1\n255\n");
  EXPECT_THROW(io::read_pfm(dir / "bad.pfm"), LoadError);
}

TEST_F(IoTest, TrajectoryRoundTripIsExact) {
  Trajectory t;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int i = 0; i < 20; ++i) {
    const Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
    t.poses.push_back(Pose::from_quaternion(q, {g(rng), g(rng), g(rng)}, 1305031102.175304 + 0.033 * i));
  }
  io::write_trajectory(dir / "t.txt", t);
  const Trajectory back = io::read_trajectory(dir / "t.txt");
  ASSERT_EQ(back.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(back.poses[i].timestamp, t.poses[i].timestamp);
    EXPECT_EQ(back.poses[i].translation, t.poses[i].translation);
    EXPECT_LE((back.poses[i].rotation - t.poses[i].rotation).norm(), 1e-12);
  }
  std::istringstream text(io::format_trajectory(t));
  int lines = 0;
  for (std::string line; std::getline(text, line);)
    if (!line.empty() && line[0] != '#') ++lines;
  EXPECT_EQ(lines, 20);
  io::write_file_atomic(dir / "empty.txt", "# nothing\n");
  EXPECT_THROW(io::read_trajectory(dir / "empty.txt"), EmptyInput);
  io::write_file_atomic(dir / "short.txt", "1 2 3\n");
  EXPECT_THROW(io::read_trajectory(dir / "short.txt"), SyntaxError);
}

TEST_F(IoTest, MaskRoundTrip) {
  const PhaseMask mask = aperture::testing::default_optics().mask;
  io::write_mask(dir / "mask.txt", mask);
  const PhaseMask back = io::read_mask(dir / "mask.txt");
  EXPECT_EQ(back.grid(), mask.grid());
  EXPECT_EQ(back.grid_pitch, mask.grid_pitch);
  EXPECT_EQ(back.height_map, mask.height_map);
  io::write_file_atomic(dir / "short.txt", "3 1e-4\n0 0 0\n0 0 0\n");
  EXPECT_THROW(io::read_mask(dir / "short.txt"), LoadError);
}

TEST_F(IoTest, BinsRoundTrip) {
  for (auto spacing : {BinSpacing::inverse_depth, BinSpacing::linear}) {
    const DepthBins bins = make_depth_bins(11, 0.4, 7.0, spacing);
    io::write_bins(dir / "bins.txt", bins);
    const DepthBins back = io::read_bins(dir / "bins.txt");
    EXPECT_EQ(back.centers, bins.centers);
    EXPECT_EQ(back.spacing, bins.spacing);
    EXPECT_EQ(back.count, 11);
  }
}

TEST_F(IoTest, PsfBankRoundTripIsBitExact) {
  const PsfBank& bank = aperture::testing::default_optics().bank;
  io::write_psf_bank(dir / "bank", bank);
  const PsfBank back = io::read_psf_bank(dir / "bank");
  ASSERT_EQ(back.size(), bank.size());
  EXPECT_EQ(back.fingerprint(), bank.fingerprint());
  EXPECT_EQ(back.depth_bins, bank.depth_bins);
  for (std::size_t b = 0; b < bank.size(); ++b)
    for (int c = 0; c < 3; ++c) EXPECT_EQ(back.kernel(b, c), bank.kernel(b, c));
  std::string blob = io::read_file(dir / "bank" / "kernels.f64");
  blob[100] ^= 1;
  io::write_file_atomic(dir / "bank" / "kernels.f64", blob);
  EXPECT_THROW(io::read_psf_bank(dir / "bank"), LoadError);
}

TEST_F(IoTest, IntrinsicsRoundTripAndOptionalScale) {
  io::write_intrinsics(dir / "k.txt", {Intrinsics{525.0, 526.5, 319.5, 239.5}, 1000.0});
  const auto k = io::read_intrinsics(dir / "k.txt");
  EXPECT_EQ(k.intrinsics.fx, 525.0);
  EXPECT_EQ(k.intrinsics.fy, 526.5);
  EXPECT_EQ(k.intrinsics.cx, 319.5);
  EXPECT_EQ(k.intrinsics.cy, 239.5);
  EXPECT_EQ(k.depth_scale, 1000.0);
  io::write_intrinsics(dir / "k2.txt", {Intrinsics{1, 1, 0, 0}, std::nullopt});
  EXPECT_FALSE(io::read_intrinsics(dir / "k2.txt").depth_scale);
  io::write_file_atomic(dir / "k3.txt", "fx=1\nfy=1\ncx=0\n");
  EXPECT_THROW(io::read_intrinsics(dir / "k3.txt"), LoadError);
}

TEST_F(IoTest, AtomicWriteLeavesNoTempFiles) {
  io::write_file_atomic(dir / "a.txt", "one");
  io::write_file_atomic(dir / "a.txt", "two");
  EXPECT_EQ(io::read_file(dir / "a.txt"), "two");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator()), 1);
  EXPECT_EQ(io::sha256_file(dir / "a.txt"), io::sha256_bytes("two"));
  EXPECT_THROW(io::read_file(dir / "missing"), LoadError);
}
