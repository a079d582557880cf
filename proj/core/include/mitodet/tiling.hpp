#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mitodet/geometry.hpp"
#include "mitodet/image.hpp"

namespace mitodet {

/// One square tile; origin in slide pixels.
struct PatchSpec {
  int row = 0;
  int col = 0;
  int x = 0;
  int y = 0;
  int size = 0;

  BoundingBox bounds() const { return BoundingBox(x, y, x + size, y + size); }

  friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

/// `{image_id}_r{row}_c{col}`, the on-disk stem and patch-level image id.
std::string patch_name(const std::string& image_id, const PatchSpec& spec);

/**
 * Square tiling of a W x H slide. Tiles step by patch_size - overlap; the
 * last row/column reads past the slide into a canvas padded with pad_color.
 * With overlap 0 the tiles partition the canvas and
 * rows = ceil(H / patch_size), cols = ceil(W / patch_size).
 */
class PatchGrid {
 public:
  static PatchGrid plan(int slide_width, int slide_height, int patch_size, int overlap = 0,
                        Rgb pad_color = kWhite);

  int slide_width() const { return slide_width_; }
  int slide_height() const { return slide_height_; }
  int patch_size() const { return patch_size_; }
  int overlap() const { return overlap_; }
  int stride() const { return patch_size_ - overlap_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t patch_count() const { return static_cast<std::size_t>(rows_) * cols_; }
  int canvas_width() const { return (cols_ - 1) * stride() + patch_size_; }
  int canvas_height() const { return (rows_ - 1) * stride() + patch_size_; }
  Rgb pad_color() const { return pad_color_; }
  BoundingBox slide_bounds() const { return BoundingBox(0, 0, slide_width_, slide_height_); }

  PatchSpec spec(int row, int col) const;
  std::vector<PatchSpec> specs() const;  // row-major
  bool contains(const PatchSpec& spec) const;

  friend bool operator==(const PatchGrid&, const PatchGrid&) = default;

 private:
  int slide_width_ = 0;
  int slide_height_ = 0;
  int patch_size_ = 0;
  int overlap_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  Rgb pad_color_ = kWhite;
};

inline PatchGrid plan_grid(int slide_width, int slide_height, int patch_size) {
  return PatchGrid::plan(slide_width, slide_height, patch_size);
}

struct Patch {
  PatchSpec spec;
  Image image;
};

/// Throws ContractError when the slide size or spec does not belong to `grid`.
Image extract_patch(const Image& slide, const PatchGrid& grid, const PatchSpec& spec);
std::vector<Patch> extract_all(const Image& slide, const PatchGrid& grid);

/// Reassembles the slide (cropped back to W x H). Throws ContractError for
/// missing, duplicate, foreign, or wrongly sized cells.
Image stitch(std::span<const Patch> patches, const PatchGrid& grid);

/// Translates slide boxes into the patch, clips them, and keeps a box iff its
/// clipped area is at least min_visible_fraction of its original area.
std::vector<GroundTruth> project_annotations(std::span<const GroundTruth> boxes,
                                             const PatchSpec& spec, double min_visible_fraction);

/// Patch-local detections to slide coordinates, clipped to the slide.
/// Detections that lie entirely in the padding are dropped.
std::vector<Detection> lift_detections(std::span<const Detection> dets, const PatchSpec& spec,
                                       const PatchGrid& grid);

/// Grid sidecar: slide dims, patch size, overlap, pad color.
nlohmann::ordered_json grid_to_json(const std::string& image_id, const PatchGrid& grid);
PatchGrid grid_from_json(const nlohmann::json& doc);

}  // namespace mitodet
