#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "mitodet/config.hpp"
#include "mitodet/error.hpp"
#include "synthetic.hpp"

using namespace mitodet;

TEST(Config, TextRoundTrip) {
  RunConfig c;
  c.annotations_dir = "/a b/ann";
  c.seed = 18446744073709551615ULL;
  c.mitosis_threshold = 0.1 + 0.2;
  c.patch_size = 512;
  c.render = false;
  c.backend = "model:/m/x.json";
  c.oracle_jitter = 1.0 / 3.0;
  const RunConfig back = apply_config_text(config_to_text(c));
  EXPECT_EQ(config_to_text(back), config_to_text(c));
  EXPECT_EQ(back.mitosis_threshold, c.mitosis_threshold);
  EXPECT_EQ(back.seed, c.seed);
  EXPECT_EQ(back.annotations_dir, "/a b/ann");
}

TEST(Config, EveryKeyIsPersisted) {
  const std::string text = config_to_text(RunConfig{});
  for (const std::string& key : config_keys()) {
    EXPECT_NE(text.find(key + " = "), std::string::npos) << key;
  }
}

TEST(Config, LayersOnBaseWithComments) {
  RunConfig base;
  base.patch_size = 1024;
  const RunConfig c = apply_config_text("# comment\n\n  overlap = 16   # trailing\nseed=7\n", base);
  EXPECT_EQ(c.patch_size, 1024);
  EXPECT_EQ(c.overlap, 16);
  EXPECT_EQ(c.seed, 7u);
}

TEST(Config, ErrorsNameTheLine) {
  try {
    apply_config_text("seed = 1\nbogus = 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bogus"), std::string::npos);
  }
  EXPECT_THROW(apply_config_text("patch_size = big\n"), ParseError);
  EXPECT_THROW(apply_config_text("render = yes\n"), ParseError);
  EXPECT_THROW(apply_config_text("just words\n"), ParseError);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(validate(RunConfig{}));
  auto bad = [](auto mutate) {
    RunConfig c;
    mutate(c);
    return c;
  };
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.patch_size = 0; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.overlap = 256; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.split = 1.0; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.backend = "yolo"; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.normalization = "macenko"; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.eval_mode = "tile"; })), ValidationError);
  EXPECT_THROW(validate(bad([](RunConfig& c) { c.oracle_drop = 2; })), ValidationError);
}

TEST(Config, FileAndOutputRoot) {
  mitodet::testing::TempDir dir;
  {
    std::ofstream(dir / "c.txt") << "patch_size = 512\n";
  }
  EXPECT_EQ(read_config(dir / "c.txt").patch_size, 512);
  ::setenv("MITODET_OUTPUT_ROOT", "/tmp/somewhere", 1);
  EXPECT_EQ(default_output_root(), "/tmp/somewhere");
  ::unsetenv("MITODET_OUTPUT_ROOT");
  EXPECT_EQ(default_output_root(), "mitodet-out");
}
