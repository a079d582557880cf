#include "mitodet/tiling.hpp"

#include <algorithm>

#include "mitodet/error.hpp"

namespace mitodet {

std::string patch_name(const std::string& image_id, const PatchSpec& spec) {
  return image_id + "_r" + std::to_string(spec.row) + "_c" + std::to_string(spec.col);
}

namespace {

int tiles_along(int extent, int patch, int stride) {
  if (extent <= patch) return 1;
  return (extent - patch + stride - 1) / stride + 1;
}

}  // namespace

PatchGrid PatchGrid::plan(int slide_width, int slide_height, int patch_size, int overlap,
                          Rgb pad_color) {
  if (slide_width <= 0 || slide_height <= 0 || patch_size <= 0) {
    throw ValidationError("plan_grid: slide dimensions and patch size must be positive");
  }
  if (overlap < 0 || overlap >= patch_size) {
    throw ValidationError("plan_grid: overlap must lie in [0, patch_size)");
  }
  PatchGrid g;
  g.slide_width_ = slide_width;
  g.slide_height_ = slide_height;
  g.patch_size_ = patch_size;
  g.overlap_ = overlap;
  g.pad_color_ = pad_color;
  g.cols_ = tiles_along(slide_width, patch_size, g.stride());
  g.rows_ = tiles_along(slide_height, patch_size, g.stride());
  return g;
}

PatchSpec PatchGrid::spec(int row, int col) const {
  if (row < 0 || row >= rows_ || col < 0 || col >= cols_) {
    throw ContractError("patch (" + std::to_string(row) + ", " + std::to_string(col) +
                        ") outside a " + std::to_string(rows_) + "x" + std::to_string(cols_) +
                        " grid");
  }
  return {row, col, col * stride(), row * stride(), patch_size_};
}

std::vector<PatchSpec> PatchGrid::specs() const {
  std::vector<PatchSpec> out;
  out.reserve(patch_count());
  for (int r = 0; r < rows_; ++r) {
    for (int c = 0; c < cols_; ++c) out.push_back(spec(r, c));
  }
  return out;
}

bool PatchGrid::contains(const PatchSpec& s) const {
  return s.row >= 0 && s.row < rows_ && s.col >= 0 && s.col < cols_ && s == spec(s.row, s.col);
}

Image extract_patch(const Image& slide, const PatchGrid& grid, const PatchSpec& spec) {
  if (slide.width() != grid.slide_width() || slide.height() != grid.slide_height()) {
    throw ContractError("extract_patch: slide is " + std::to_string(slide.width()) + "x" +
                        std::to_string(slide.height()) + ", grid was planned for " +
                        std::to_string(grid.slide_width()) + "x" +
                        std::to_string(grid.slide_height()));
  }
  if (slide.channels() != 3) throw ContractError("extract_patch: slide must be RGB");
  if (!grid.contains(spec)) throw ContractError("extract_patch: spec does not belong to the grid");

  Image patch(spec.size, spec.size, 3);
  const Rgb pad = grid.pad_color();
  const int real_w = std::clamp(slide.width() - spec.x, 0, spec.size);
  const int real_h = std::clamp(slide.height() - spec.y, 0, spec.size);
  for (int y = 0; y < spec.size; ++y) {
    auto dst = patch.row(y);
    int x0 = 0;
    if (y < real_h) {
      const auto src = slide.row(spec.y + y);
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(spec.x) * 3, real_w * 3, dst.begin());
      x0 = real_w;
    }
    for (int x = x0; x < spec.size; ++x) {
      std::copy(pad.begin(), pad.end(), dst.begin() + static_cast<std::ptrdiff_t>(x) * 3);
    }
  }
  return patch;
}

std::vector<Patch> extract_all(const Image& slide, const PatchGrid& grid) {
  std::vector<Patch> out;
  out.reserve(grid.patch_count());
  for (const PatchSpec& s : grid.specs()) out.push_back({s, extract_patch(slide, grid, s)});
  return out;
}

Image stitch(std::span<const Patch> patches, const PatchGrid& grid) {
  std::vector<const Patch*> cells(grid.patch_count(), nullptr);
  for (const Patch& p : patches) {
    if (!grid.contains(p.spec)) throw ContractError("stitch: patch does not belong to the grid");
    if (p.image.width() != p.spec.size || p.image.height() != p.spec.size ||
        p.image.channels() != 3) {
      throw ContractError("stitch: patch " + std::to_string(p.spec.row) + "," +
                          std::to_string(p.spec.col) + " has the wrong size");
    }
    const std::size_t i = static_cast<std::size_t>(p.spec.row) * grid.cols() + p.spec.col;
    if (cells[i]) {
      throw ContractError("stitch: duplicate cell " + std::to_string(p.spec.row) + "," +
                          std::to_string(p.spec.col));
    }
    cells[i] = &p;
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (!cells[i]) {
      throw ContractError("stitch: missing cell " + std::to_string(i / grid.cols()) + "," +
                          std::to_string(i % grid.cols()));
    }
  }

  Image slide(grid.slide_width(), grid.slide_height(), 3);
  for (const Patch* p : cells) {
    const PatchSpec& s = p->spec;
    const int w = std::clamp(grid.slide_width() - s.x, 0, s.size);
    const int h = std::clamp(grid.slide_height() - s.y, 0, s.size);
    for (int y = 0; y < h; ++y) {
      const auto src = p->image.row(y);
      auto dst = slide.row(s.y + y);
      std::copy_n(src.begin(), w * 3, dst.begin() + static_cast<std::ptrdiff_t>(s.x) * 3);
    }
  }
  return slide;
}

std::vector<GroundTruth> project_annotations(std::span<const GroundTruth> boxes,
                                             const PatchSpec& spec, double min_visible_fraction) {
  if (!(min_visible_fraction >= 0.0 && min_visible_fraction <= 1.0)) {
    throw ValidationError("min_visible_fraction must lie in [0, 1]");
  }
  const BoundingBox local(0, 0, spec.size, spec.size);
  std::vector<GroundTruth> out;
  for (const GroundTruth& gt : boxes) {
    const BoundingBox moved = gt.box.translated(-spec.x, -spec.y);
    const auto clipped = clip_box(moved, local);
    if (!clipped) continue;
    if (clipped->area() >= min_visible_fraction * moved.area()) {
      out.push_back({*clipped, gt.cell_class});
    }
  }
  return out;
}

std::vector<Detection> lift_detections(std::span<const Detection> dets, const PatchSpec& spec,
                                       const PatchGrid& grid) {
  std::vector<Detection> out;
  out.reserve(dets.size());
  for (const Detection& d : dets) {
    const auto clipped = clip_box(d.box.translated(spec.x, spec.y), grid.slide_bounds());
    if (clipped) out.push_back({*clipped, d.cell_class, d.score});
  }
  return out;
}

nlohmann::ordered_json grid_to_json(const std::string& image_id, const PatchGrid& grid) {
  return {{"image_id", image_id},
          {"slide_width", grid.slide_width()},
          {"slide_height", grid.slide_height()},
          {"patch_size", grid.patch_size()},
          {"overlap", grid.overlap()},
          {"rows", grid.rows()},
          {"cols", grid.cols()},
          {"pad_color", grid.pad_color()}};
}

PatchGrid grid_from_json(const nlohmann::json& doc) {
  try {
    const PatchGrid g = PatchGrid::plan(doc.at("slide_width").get<int>(),
                                        doc.at("slide_height").get<int>(),
                                        doc.at("patch_size").get<int>(), doc.value("overlap", 0),
                                        doc.value("pad_color", kWhite));
    if (doc.contains("rows") && (doc["rows"].get<int>() != g.rows() || doc["cols"].get<int>() != g.cols())) {
      throw ValidationError("grid sidecar row/column counts disagree with its dimensions");
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed grid sidecar: ") + e.what());
  }
}

}  // namespace mitodet
