#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mitodet/geometry.hpp"
#include "mitodet/image.hpp"
#include "mitodet/tiling.hpp"

namespace mitodet {

/// Detections of one patch, already lifted to slide coordinates.
struct PatchDetections {
  PatchSpec spec;
  std::vector<Detection> detections;
};

struct SlideDetections {
  std::string image_id;
  std::vector<Detection> detections;  // descending score
  /// Parallel to `detections`: the patch each kept detection came from,
  /// followed by the patches of the duplicates merged into it.
  std::vector<std::vector<PatchSpec>> provenance;
};

inline constexpr double kDefaultMergeIou = 0.5;

/// Concatenates per-patch results, clips to the slide, and merges duplicates
/// with class-wise NMS at merge_iou.
SlideDetections aggregate(const std::string& image_id, std::span<const PatchDetections> per_patch,
                          const PatchGrid& grid, double merge_iou = kDefaultMergeIou);

/// Re-merges an aggregated result; a no-op on aggregate() output.
SlideDetections aggregate(const SlideDetections& slide, const PatchGrid& grid,
                          double merge_iou = kDefaultMergeIou);

nlohmann::ordered_json slide_detections_to_json(const SlideDetections& slide);

struct RenderOptions {
  double display_threshold = 0.5;
  int stroke_width = 3;
  Rgb mitotic_color{0, 0, 255};
  Rgb nonmitotic_color{0, 255, 0};
  bool draw_scores = false;
};

/**
 * Draws box outlines for detections scoring >= display_threshold. A box
 * [x0, x1) x [y0, y1) is rasterized to pixel columns round(x0) .. round(x1)-1
 * and the stroke runs inward from that edge. Pixels outside strokes (and
 * labels, when enabled) are left untouched.
 */
Image render(const Image& slide, std::span<const Detection> dets, const RenderOptions& options = {});

}  // namespace mitodet
