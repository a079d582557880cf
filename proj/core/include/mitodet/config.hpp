#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mitodet {

/**
 * Everything that determines a run's outputs. Persisted as `key = value`
 * lines (one per field, '#' starts a comment) so a run directory can be
 * replayed with `--config`.
 */
struct RunConfig {
  // inputs
  std::string annotations_dir;
  std::string images_dir;
  std::string output_dir;

  // ingest
  double box_side = 70.0;
  double mitosis_threshold = 0.5;
  double split = 0.8;
  std::uint64_t seed = 0;

  // normalization: "off", "reinhard" (first training image) or "reinhard:PATH"
  std::string normalization = "off";
  double epsilon = 1e-6;

  // tiling
  int patch_size = 256;
  int overlap = 0;
  double min_visible = 0.5;

  // detection: "oracle", "blob" or "model:PATH"
  std::string backend = "oracle";
  double score_threshold = 0.05;
  std::uint64_t max_detections = 0;
  double oracle_jitter = 0.0;
  double oracle_drop = 0.0;
  double oracle_spurious = 0.0;

  // aggregation and rendering
  double merge_iou = 0.5;
  bool render = true;
  bool render_scores = false;
  double display_threshold = 0.5;

  // evaluation
  std::string eval_mode = "slide";  // "slide" | "patch"
  std::string eval_split = "validation";
  bool coco_sweep = true;
  double eval_iou = 0.5;  // used when coco_sweep is false
};

/// Throws ValidationError for out-of-range fields.
void validate(const RunConfig& config);

std::string config_to_text(const RunConfig& config);

/// Applies the keys present in `text` on top of `base`. Unknown keys and
/// malformed values raise ParseError naming the line.
RunConfig apply_config_text(std::string_view text, RunConfig base = {});
RunConfig read_config(const std::filesystem::path& path, RunConfig base = {});

/// All recognised keys, in persisted order.
std::vector<std::string> config_keys();

/// Default output root: $MITODET_OUTPUT_ROOT or "mitodet-out".
std::filesystem::path default_output_root();

}  // namespace mitodet
