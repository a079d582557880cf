#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mitodet/aggregate.hpp"
#include "mitodet/config.hpp"
#include "mitodet/dataset.hpp"
#include "mitodet/detector.hpp"
#include "mitodet/evaluation.hpp"
#include "mitodet/interchange.hpp"
#include "mitodet/manifest.hpp"
#include "mitodet/stain.hpp"

namespace mitodet {

// Stage runners behind the CLI subcommands. Each reads its inputs, writes its
// artifacts (atomically) under the given directory, and returns what later
// stages need.

struct IngestOutcome {
  Manifest manifest;
  IngestSummary summary;
};

/// discover_slides + build_dataset, then writes the manifest to `manifest_path`.
IngestOutcome run_ingest(const std::filesystem::path& annotations_dir,
                         const std::filesystem::path& images_dir, const IngestOptions& options,
                         const std::filesystem::path& manifest_path);

/// Normalizes every `*.png` in `in_dir` into `out_dir` and writes
/// `out_dir/target_stats.json`.
ChannelStats run_normalize_dir(const std::filesystem::path& target_png,
                               const std::filesystem::path& in_dir,
                               const std::filesystem::path& out_dir, double epsilon,
                               unsigned jobs = 0);

/// Normalizes the manifest's images into `out_dir`; the returned manifest
/// points at the normalized copies.
Manifest normalize_manifest(const Manifest& manifest, const ChannelStats& target,
                            const std::filesystem::path& out_dir, double epsilon,
                            unsigned jobs = 0);

struct TileOptions {
  int patch_size = 256;
  int overlap = 0;
  double min_visible = 0.5;
  bool drop_empty_train = false;
  unsigned jobs = 0;
};

struct TileOutcome {
  Manifest patch_manifest;  // one image per patch, patch-local annotations
  std::size_t patch_count = 0;
  std::size_t empty_train = 0;
  std::size_t empty_validation = 0;
};

/// Writes `{image_id}_r{row}_c{col}.png` patches, `grids/{image_id}.json`
/// sidecars, `manifest.json` (patch level) and `tile_summary.json` to `out_dir`.
TileOutcome run_tile(const Manifest& manifest, const TileOptions& options,
                     const std::filesystem::path& out_dir);

/// Builds a backend from "oracle", "blob" or "model:PATH". The oracle replays
/// `manifest`; eval_mode "patch" makes it replay patch-projected ground truth.
std::unique_ptr<DetectorBackend> make_backend(const RunConfig& config, const Manifest& manifest);

struct DetectOptions {
  int patch_size = 256;
  int overlap = 0;
  double merge_iou = kDefaultMergeIou;
  bool render = false;
  RenderOptions render_options;
  unsigned jobs = 0;
};

struct DetectOutcome {
  DetectionSet slide_detections;  // aggregated, slide coordinates
  DetectionSet patch_detections;  // per patch name, patch-local, clipped to the patch
};

/// Tiles each manifest image in memory, runs the backend per patch, lifts and
/// aggregates. Writes `detections.json`, `patch_detections.json`,
/// `slides/{image_id}.json` and, when rendering, `renders/{image_id}.png`.
DetectOutcome run_detect(const Manifest& manifest, const DetectorBackend& backend,
                         const DetectOptions& options, const std::filesystem::path& out_dir);

/// Evaluates `dets` against the images of `manifest` in `split`. Ids present in
/// the manifest but outside the split are skipped; ids absent from the
/// manifest raise ContractError. Writes the report JSON when a path is given.
EvalReport run_evaluate(const Manifest& manifest, const DetectionSet& dets,
                        const std::string& split, const EvalOptions& options,
                        const std::filesystem::path& report_path = {});

/// ingest -> [normalize] -> tile -> detect -> evaluate under config.output_dir,
/// with the config snapshot in `run_config.txt`.
EvalReport run_pipeline(const RunConfig& config, unsigned jobs = 0);

}  // namespace mitodet
