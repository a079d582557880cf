#include <gtest/gtest.h>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/pipeline.hpp"
#include "synthetic.hpp"

using namespace mitodet;
using mitodet::testing::TempDir;
namespace fs = std::filesystem;

namespace {

RunConfig fixture_config(const TempDir& dir, int slides = 6) {
  mitodet::testing::write_slide_set(dir / "data", mitodet::testing::make_slide_set(slides, 3, 300, 600));
  RunConfig c;
  c.annotations_dir = (dir / "data" / "annotations").string();
  c.images_dir = (dir / "data" / "images").string();
  c.output_dir = (dir / "run").string();
  c.seed = 11;
  return c;
}

}  // namespace

TEST(Pipeline, OracleSlideModeIsPerfect) {
  TempDir dir;
  const RunConfig c = fixture_config(dir);
  const EvalReport r = run_pipeline(c, 2);
  EXPECT_EQ(r.map_50, 1.0);
  EXPECT_EQ(r.map_50_95, 1.0);
  EXPECT_EQ(r.granularity, "slide");
  const fs::path run = dir / "run";
  for (const char* f : {"run_config.txt", "manifest.json", "report.json", "detect/detections.json",
                        "detect/patch_detections.json", "tiles/manifest.json", "tiles/tile_summary.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_TRUE(fs::exists(run / "tiles" / "slide_00_r0_c0.png"));
  EXPECT_TRUE(fs::exists(run / "tiles" / "grids" / "slide_00.json"));
  EXPECT_TRUE(fs::exists(run / "detect" / "renders" / "slide_00.png"));
  EXPECT_TRUE(fs::exists(run / "detect" / "slides" / "slide_00.json"));
  EXPECT_EQ(read_config(run / "run_config.txt").seed, 11u);
}

TEST(Pipeline, OraclePatchModeIsPerfect) {
  TempDir dir;
  RunConfig c = fixture_config(dir);
  c.eval_mode = "patch";
  c.eval_split = "all";
  const EvalReport r = run_pipeline(c);
  EXPECT_EQ(r.map_50, 1.0);
  EXPECT_EQ(r.map_50_95, 1.0);
  EXPECT_EQ(r.granularity, "patch");
}

TEST(Pipeline, OverlapAndNormalizationStayPerfect) {
  TempDir dir;
  RunConfig c = fixture_config(dir);
  c.overlap = 96;
  c.normalization = "reinhard";
  c.render = false;
  const EvalReport r = run_pipeline(c);
  EXPECT_EQ(r.map_50, 1.0);
  EXPECT_TRUE(fs::exists(dir / "run" / "normalized" / "target_stats.json"));
  EXPECT_FALSE(fs::exists(dir / "run" / "detect" / "renders"));
}

TEST(Pipeline, BlobBackendProducesValidOutput) {
  TempDir dir;
  RunConfig c = fixture_config(dir);
  c.backend = "blob";
  c.eval_split = "all";
  const EvalReport r = run_pipeline(c);
  ASSERT_TRUE(r.map_50.has_value());
  EXPECT_GE(*r.map_50, 0.0);
  EXPECT_LE(*r.map_50, 1.0);
  const DetectionSet dets = read_detections(dir / "run" / "detect" / "detections.json");
  std::size_t n = 0;
  for (const auto& [id, list] : dets) {
    for (const Detection& d : list) {
      EXPECT_EQ(d.cell_class, CellClass::kNonMitotic);
      ++n;
    }
  }
  EXPECT_GT(n, 0u);
}

TEST(Pipeline, EmptyPatchesAreCounted) {
  TempDir dir;
  const RunConfig c = fixture_config(dir, 3);
  run_pipeline(c);
  const auto summary = nlohmann::json::parse(read_text(dir / "run" / "tiles" / "tile_summary.json"));
  EXPECT_EQ(summary["patches"].get<std::size_t>(),
            read_manifest(dir / "run" / "tiles" / "manifest.json").images.size());
  const Manifest slides = read_manifest(dir / "run" / "manifest.json");
  const TileOutcome dropped = run_tile(slides, {256, 0, 0.5, true, 1}, dir / "tiles2");
  EXPECT_EQ(dropped.patch_count + dropped.empty_train, summary["patches"].get<std::size_t>());
}

TEST(Pipeline, EvaluateSkipsOtherSplitsButRejectsUnknownIds) {
  TempDir dir;
  const RunConfig c = fixture_config(dir);
  run_pipeline(c);
  const Manifest m = read_manifest(dir / "run" / "manifest.json");
  DetectionSet dets = read_detections(dir / "run" / "detect" / "detections.json");
  const EvalReport val = run_evaluate(m, dets, "validation", {});
  EXPECT_EQ(val.image_count, m.filtered("validation").images.size());
  dets["ghost"].push_back({BoundingBox(0, 0, 5, 5), CellClass::kMitotic, 0.5});
  try {
    run_evaluate(m, dets, "all", {});
    FAIL();
  } catch (const ContractError& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(Pipeline, DetectRejectsWrongPatchSize) {
  TempDir dir;
  const RunConfig c = fixture_config(dir, 2);
  run_pipeline(c);
  const Manifest m = read_manifest(dir / "run" / "manifest.json");
  const auto blob = blob_baseline(512);
  DetectOptions o;
  o.patch_size = 256;
  EXPECT_THROW(run_detect(m, *blob, o, dir / "d"), ContractError);
}

TEST(Pipeline, MissingInputsFail) {
  TempDir dir;
  RunConfig c;
  c.annotations_dir = (dir / "nope").string();
  c.images_dir = (dir / "nope2").string();
  c.output_dir = (dir / "run").string();
  EXPECT_THROW(run_pipeline(c), IoError);
  c.annotations_dir.clear();
  EXPECT_THROW(run_pipeline(c), ValidationError);
}

TEST(NormalizeDir, WritesImagesAndStats) {
  TempDir dir;
  const Image target = mitodet::testing::random_tissue_image(30, 30, 1);
  write_png(dir / "target.png", target);
  write_png(dir / "in" / "a.png", mitodet::testing::random_tissue_image(20, 10, 2));
  write_png(dir / "in" / "b.png", mitodet::testing::random_tissue_image(20, 10, 3));
  const ChannelStats s = run_normalize_dir(dir / "target.png", dir / "in", dir / "out", 1e-6, 2);
  EXPECT_EQ(s, channel_stats(target));
  EXPECT_EQ(read_stats(dir / "out" / "target_stats.json"), s);
  EXPECT_EQ(read_png(dir / "out" / "b.png"),
            reinhard_normalize(mitodet::testing::random_tissue_image(20, 10, 3), s));
}
