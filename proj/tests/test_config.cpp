#include <gtest/gtest.h>

#include <filesystem>

#include "aperture/config.hpp"
#include "aperture/error.hpp"
#include "aperture/io.hpp"

using namespace aperture;

namespace {

template <class E>
std::string message_of(const std::string& text) {
  try {
    parse_config_text(text, "cfg");
  } catch (const E& e) {
    return e.what();
  }
  ADD_FAILURE() << "no exception for: " << text;
  return {};
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  EXPECT_EQ(parse_config_text(""), PipelineConfig{});
  EXPECT_EQ(parse_config_text("# only a comment\n\n"), PipelineConfig{});
  EXPECT_NO_THROW(PipelineConfig{}.validate());
}

TEST(Config, DefaultsMatchDocumentedValues) {
  const PipelineConfig c;
  EXPECT_EQ(c.camera.focal_length, 0.05);
  EXPECT_EQ(c.camera.f_number, 1.8);
  EXPECT_EQ(c.camera.focus_distance, 0.85);
  EXPECT_EQ(c.mask.grid, 23);
  EXPECT_EQ(c.mask.pitch, 135e-6);
  EXPECT_EQ(c.bins.count, 27);
  EXPECT_EQ(c.bins.near, 0.5);
  EXPECT_EQ(c.bins.far, 6.0);
  EXPECT_EQ(c.vo.depth_gate, 3.0);
  EXPECT_EQ(c.vo.inlier_threshold, 0.05);
  EXPECT_EQ(c.eval.max_dt, 0.02);
  EXPECT_EQ(c.dataset.depth_scale, 5000.0);
}

TEST(Config, SetsValuesFromText) {
  const PipelineConfig c = parse_config_text(
      "camera.focus_distance = 2.5\n"
      "camera.wavelengths=610e-9,530e-9,470e-9\n"
      "bins.spacing=linear\n"
      "mask.zernike=0,0,0,1e-7\n"
      "estimator.shiftable_windows=false\n"
      "vo.max_features=300\n"
      "seed=99\n");
  EXPECT_EQ(c.camera.focus_distance, 2.5);
  EXPECT_EQ(c.camera.wavelengths[0], 610e-9);
  EXPECT_EQ(c.bins.spacing, BinSpacing::linear);
  EXPECT_EQ(c.mask.zernike, (std::vector<double>{0, 0, 0, 1e-7}));
  EXPECT_FALSE(c.estimator.shiftable_windows);
  EXPECT_EQ(c.vo.max_features, 300);
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.vo_config().seed, 99u);
}

TEST(Config, SyntaxErrorNamesLineAndKey) {
  try {
    parse_config_text("bins.near=0.5\nbins.count=abc\n", "cfg");
    FAIL();
  } catch (const SyntaxError& e) {
    EXPECT_EQ(e.line(), 2);
    EXPECT_NE(std::string(e.what()).find("cfg:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bins.count"), std::string::npos);
  }
  EXPECT_NE(message_of<SyntaxError>("bins.spacing=log\n").find("bins.spacing"), std::string::npos);
  EXPECT_NE(message_of<SyntaxError>("no equals sign\n").find("cfg"), std::string::npos);
}

TEST(Config, InvalidValuesNameTheKey) {
  EXPECT_NE(message_of<InvalidConfiguration>("camera.f_number=-1\n").find("camera.f_number"), std::string::npos);
  EXPECT_NE(message_of<InvalidConfiguration>("bins.far=0.3\n").find("bins.far"), std::string::npos);
  EXPECT_NE(message_of<InvalidConfiguration>("estimator.window=20\n").find("window"), std::string::npos);
  EXPECT_NE(message_of<InvalidConfiguration>("vo.min_inliers=2\n").find("vo.min_inliers"), std::string::npos);
  EXPECT_NE(message_of<InvalidConfiguration>("eval.trials=0\n").find("eval.trials"), std::string::npos);
}

TEST(Config, UnknownKeysAreListedTogether) {
  const std::string msg = message_of<InvalidConfiguration>("camera.zoom=2\nbins.count=9\nvo.speed=3\n");
  EXPECT_NE(msg.find("camera.zoom"), std::string::npos);
  EXPECT_NE(msg.find("vo.speed"), std::string::npos);
  PipelineConfig c;
  EXPECT_THROW(set_config_value(c, "nope", "1"), InvalidConfiguration);
  EXPECT_THROW(set_config_value(c, "bins.count", "x"), SyntaxError);
}

TEST(Config, SnapshotRoundTripsExactly) {
  PipelineConfig c;
  c.camera.focus_distance = 1.0 / 3.0;
  c.mask.zernike = {0.0, 1e-9, -3.5e-8};
  c.bins.spacing = BinSpacing::linear;
  c.estimator.snr_param = 123.456;
  c.vo.ransac_iterations = 77;
  c.eval.with_scale = true;
  c.dataset.layout = "icl";
  c.dataset.flip_gt_y = true;
  c.seed = 123456789012345ULL;
  const std::string text = format_config(c);
  EXPECT_EQ(parse_config_text(text), c);
  EXPECT_EQ(format_config(parse_config_text(text)), text);
  for (const auto& key : config_keys()) EXPECT_NE(text.find(key + "="), std::string::npos) << key;
}

TEST(Config, GetAndSetAgree) {
  PipelineConfig c;
  for (const auto& key : config_keys()) {
    const std::string v = get_config_value(c, key);
    PipelineConfig d;
    set_config_value(d, key, v);
    EXPECT_EQ(get_config_value(d, key), v) << key;
  }
}

TEST(Config, ReadsFiles) {
  const auto path = std::filesystem::temp_directory_path() / "aperture_config_test.cfg";
  io::write_file_atomic(path, "vo.depth_gate=2.0\n");
  EXPECT_EQ(parse_config(path).vo.depth_gate, 2.0);
  std::filesystem::remove(path);
  EXPECT_THROW(parse_config(path), LoadError);
}

TEST(Config, DerivedBins) {
  PipelineConfig c;
  c.bins.count = 5;
  const DepthBins b = c.depth_bins();
  ASSERT_EQ(b.centers.size(), 5u);
  // Midpoints of five equal cells in inverse depth between 1/6 and 2.
  const double step = (2.0 - 1.0 / 6.0) / 5.0;
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(b.centers[4 - i], 1.0 / (1.0 / 6.0 + (i + 0.5) * step), 1e-12);
}
