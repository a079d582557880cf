#include <gtest/gtest.h>

#include <cmath>

#include "mitodet/error.hpp"
#include "mitodet/random.hpp"
#include "mitodet/stain.hpp"
#include "synthetic.hpp"

using namespace mitodet;
using mitodet::testing::LogCapture;
using mitodet::testing::TempDir;

TEST(ChannelStats, ConstantImage) {
  Image img(5, 5);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 5; ++x) img.set_rgb(x, y, {100, 150, 200});
  }
  const ChannelStats s = channel_stats(img);
  EXPECT_EQ(s.mean, (std::array<double, 3>{100, 150, 200}));
  EXPECT_EQ(s.std, (std::array<double, 3>{0, 0, 0}));
}

TEST(ChannelStats, TwoPixelPopulationStd) {
  Image img(2, 1);
  img.set_rgb(0, 0, {0, 0, 0});
  img.set_rgb(1, 0, {200, 200, 200});
  const ChannelStats s = channel_stats(img);
  EXPECT_EQ(s.mean[0], 100.0);
  EXPECT_EQ(s.std[0], 100.0);
}

TEST(ChannelStats, Checkerboard) {
  Image img(8, 8);
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) img.set_rgb(x, y, (x + y) % 2 ? Rgb{255, 255, 255} : Rgb{0, 0, 0});
  }
  const ChannelStats s = channel_stats(img);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(s.mean[c], 127.5);
    EXPECT_EQ(s.std[c], 127.5);
  }
}

TEST(ChannelStats, MatchesDirectComputation) {
  const Image img = mitodet::testing::random_tissue_image(41, 23, 9);
  const ChannelStats s = channel_stats(img);
  for (int c = 0; c < 3; ++c) {
    long double sum = 0;
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) sum += img.at(x, y, c);
    }
    const long double mean = sum / img.pixel_count();
    long double var = 0;
    for (int y = 0; y < img.height(); ++y) {
      for (int x = 0; x < img.width(); ++x) var += (img.at(x, y, c) - mean) * (img.at(x, y, c) - mean);
    }
    EXPECT_NEAR(s.mean[c], static_cast<double>(mean), 1e-9);
    EXPECT_NEAR(s.std[c], std::sqrt(static_cast<double>(var / img.pixel_count())), 1e-9);
  }
}

TEST(ChannelStats, Errors) {
  EXPECT_THROW(channel_stats(Image(2, 2, 1)), ContractError);
  EXPECT_THROW(channel_stats(Image()), ContractError);
}

TEST(Reinhard, PointCheck) {
  EXPECT_EQ(reinhard_value(100, 90, 20, 120, 10), 125.0);
  Image img(1, 1);
  img.set_rgb(0, 0, {100, 100, 100});
  const ChannelStats src{{90, 90, 90}, {20, 20, 20}};
  const ChannelStats dst{{120, 120, 120}, {10, 10, 10}};
  EXPECT_EQ(reinhard_map(img, src, dst).rgb(0, 0), (Rgb{125, 125, 125}));
}

TEST(Reinhard, RoundsHalfAwayFromZeroAndClamps) {
  Image img(3, 1);
  img.set_rgb(0, 0, {1, 0, 0});
  img.set_rgb(1, 0, {3, 0, 0});
  img.set_rgb(2, 0, {250, 0, 0});
  // value -> value / 2 + 100: 1 -> 100.5 -> 101, 3 -> 101.5 -> 102; 250 * 2 clamps
  const ChannelStats src{{0, 0, 0}, {2, 1, 1}};
  const ChannelStats dst{{100, 0, 0}, {1, 1, 1}};
  const Image out = reinhard_map(img, src, dst);
  EXPECT_EQ(out.at(0, 0, 0), 101);
  EXPECT_EQ(out.at(1, 0, 0), 102);
  EXPECT_EQ(out.at(2, 0, 0), 225);
  const ChannelStats wide{{0, 0, 0}, {0.5, 1, 1}};
  EXPECT_EQ(reinhard_map(img, wide, dst).at(2, 0, 0), 255);
}

TEST(Reinhard, ConstantImageMapsToTargetMean) {
  const Image img(6, 6, 3, 77);
  const ChannelStats target{{120.4, 30.6, 200}, {15, 3, 40}};
  const Image out = reinhard_normalize(img, target);
  EXPECT_EQ(out.rgb(3, 3), (Rgb{120, 31, 200}));
}

TEST(Reinhard, IdentityWithinQuantization) {
  const Image img = mitodet::testing::random_tissue_image(64, 64, 4);
  const Image out = reinhard_normalize(img, channel_stats(img));
  for (std::size_t i = 0; i < img.data().size(); ++i) {
    EXPECT_LE(std::abs(int(out.data()[i]) - int(img.data()[i])), 1);
  }
}

TEST(Reinhard, MonotoneAndInRange) {
  Image ramp(256, 1);
  for (int x = 0; x < 256; ++x) ramp.set_rgb(x, 0, {std::uint8_t(x), std::uint8_t(x), std::uint8_t(255 - x)});
  const ChannelStats target{{140, 90, 180}, {60, 20, 90}};
  const Image out = reinhard_normalize(ramp, target);
  for (int x = 1; x < 256; ++x) {
    EXPECT_LE(out.at(x - 1, 0, 0), out.at(x, 0, 0));
    EXPECT_GE(out.at(x - 1, 0, 2), out.at(x, 0, 2));
  }
}

TEST(Reinhard, MatchesTargetStatistics) {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 30; ++trial) {
    const Image img = mitodet::testing::random_tissue_image(80, 60, rng.next());
    const ChannelStats target = channel_stats(mitodet::testing::random_tissue_image(10, 10, rng.next()));
    const Image out = reinhard_normalize(img, target);
    std::size_t clamped = 0;
    for (auto v : out.data()) clamped += v == 0 || v == 255;
    if (clamped * 100 >= out.data().size()) continue;
    ++checked;
    const ChannelStats got = channel_stats(out);
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(got.mean[c], target.mean[c], 2.0);
      EXPECT_NEAR(got.std[c], target.std[c], 0.05 * target.std[c]);
    }
  }
  EXPECT_GT(checked, 10);
}

TEST(Reinhard, Errors) {
  const ChannelStats s{{0, 0, 0}, {1, 1, 1}};
  EXPECT_THROW(reinhard_map(Image(2, 2, 1), s, s), ContractError);
  EXPECT_THROW(reinhard_map(Image(2, 2), s, s, 0.0), ValidationError);
}

TEST(FitTarget, EqualsChannelStatsAndWarnsOnConstant) {
  const Image img = mitodet::testing::random_tissue_image(20, 20, 8);
  EXPECT_EQ(fit_target(img), channel_stats(img));
  LogCapture logs;
  const ChannelStats gray = fit_target(Image(4, 4, 3, 128));
  EXPECT_EQ(gray.mean, (std::array<double, 3>{128, 128, 128}));
  EXPECT_EQ(logs.warnings().size(), 1u);
}

TEST(FitTarget, FromFile) {
  TempDir dir;
  EXPECT_THROW(fit_target(dir / "missing.png"), IoError);
  const Image img = mitodet::testing::random_tissue_image(20, 20, 8);
  write_png(dir / "t.png", img);
  EXPECT_EQ(fit_target(dir / "t.png"), channel_stats(img));
}

TEST(Stats, JsonRoundTripIsBitExact) {
  TempDir dir;
  const ChannelStats s{{0.1, 123.456789012345678, 1.0 / 3.0}, {2.0 / 7.0, 1e-300, 77.7}};
  write_stats(dir / "s.json", s);
  EXPECT_EQ(read_stats(dir / "s.json"), s);
  EXPECT_THROW(stats_from_json(nlohmann::json::parse(R"({"mean":[1,2,3],"std":[1,-2,3]})")), ValidationError);
  EXPECT_THROW(stats_from_json(nlohmann::json::parse(R"({"mean":[1,2]})")), ParseError);
}
