#include "mitodet/aggregate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "mitodet/error.hpp"

namespace mitodet {
namespace {

struct Candidate {
  Detection det;
  std::vector<PatchSpec> sources;
};

SlideDetections merge(const std::string& image_id, std::vector<Candidate> candidates,
                      const PatchGrid& grid, double merge_iou) {
  std::vector<Detection> dets;
  std::vector<std::vector<PatchSpec>> sources;
  for (Candidate& c : candidates) {
    const auto clipped = clip_box(c.det.box, grid.slide_bounds());
    if (!clipped) continue;
    dets.push_back({*clipped, c.det.cell_class, c.det.score});
    sources.push_back(std::move(c.sources));
  }

  const NmsResult r = nms_indices(dets, merge_iou);
  std::vector<std::vector<PatchSpec>> absorbed(dets.size());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (const auto owner = r.suppressed_by[i]) {
      absorbed[*owner].insert(absorbed[*owner].end(), sources[i].begin(), sources[i].end());
    }
  }

  SlideDetections out;
  out.image_id = image_id;
  for (std::size_t k : r.kept) {
    out.detections.push_back(dets[k]);
    // Own sources first, then the absorbed ones in grid order.
    std::sort(absorbed[k].begin(), absorbed[k].end(), [](const PatchSpec& a, const PatchSpec& b) {
      return std::tie(a.row, a.col) < std::tie(b.row, b.col);
    });
    std::vector<PatchSpec> prov;
    for (const auto* list : {&sources[k], &absorbed[k]}) {
      for (const PatchSpec& s : *list) {
        if (std::find(prov.begin(), prov.end(), s) == prov.end()) prov.push_back(s);
      }
    }
    out.provenance.push_back(std::move(prov));
  }
  return out;
}

}  // namespace

SlideDetections aggregate(const std::string& image_id, std::span<const PatchDetections> per_patch,
                          const PatchGrid& grid, double merge_iou) {
  std::vector<Candidate> candidates;
  for (const PatchDetections& p : per_patch) {
    for (const Detection& d : p.detections) candidates.push_back({d, {p.spec}});
  }
  return merge(image_id, std::move(candidates), grid, merge_iou);
}

SlideDetections aggregate(const SlideDetections& slide, const PatchGrid& grid, double merge_iou) {
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < slide.detections.size(); ++i) {
    candidates.push_back(
        {slide.detections[i], i < slide.provenance.size() ? slide.provenance[i] : std::vector<PatchSpec>{}});
  }
  return merge(slide.image_id, std::move(candidates), grid, merge_iou);
}

nlohmann::ordered_json slide_detections_to_json(const SlideDetections& slide) {
  nlohmann::ordered_json dets = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < slide.detections.size(); ++i) {
    const Detection& d = slide.detections[i];
    nlohmann::ordered_json patches = nlohmann::ordered_json::array();
    if (i < slide.provenance.size()) {
      for (const PatchSpec& s : slide.provenance[i]) patches.push_back({s.row, s.col});
    }
    dets.push_back({{"category_id", class_id(d.cell_class)},
                    {"bbox", {d.box.x_min(), d.box.y_min(), d.box.width(), d.box.height()}},
                    {"score", d.score},
                    {"patches", patches}});
  }
  return {{"image_id", slide.image_id}, {"detections", dets}};
}

// -- rendering -------------------------------------------------------------------

namespace {

// 3x5 glyphs, one row per nibble (bit 2 = left column).
constexpr std::array<std::array<std::uint8_t, 5>, 11> kGlyphs{{
    {7, 5, 5, 5, 7},  // 0
    {2, 6, 2, 2, 7},  // 1
    {7, 1, 7, 4, 7},  // 2
    {7, 1, 7, 1, 7},  // 3
    {5, 5, 7, 1, 1},  // 4
    {7, 4, 7, 1, 7},  // 5
    {7, 4, 7, 5, 7},  // 6
    {7, 1, 1, 1, 1},  // 7
    {7, 5, 7, 5, 7},  // 8
    {7, 5, 7, 1, 7},  // 9
    {0, 0, 0, 0, 2},  // .
}};

void put(Image& img, int x, int y, Rgb color) {
  if (x >= 0 && y >= 0 && x < img.width() && y < img.height()) img.set_rgb(x, y, color);
}

void draw_label(Image& img, int x, int y, double score, Rgb color) {
  char text[8];
  std::snprintf(text, sizeof text, "%.2f", score);
  for (const char* p = text; *p; ++p, x += 4) {
    const int g = *p == '.' ? 10 : *p - '0';
    if (g < 0 || g > 10) continue;
    for (int row = 0; row < 5; ++row) {
      for (int col = 0; col < 3; ++col) {
        if (kGlyphs[g][row] & (4 >> col)) put(img, x + col, y + row, color);
      }
    }
  }
}

}  // namespace

Image render(const Image& slide, std::span<const Detection> dets, const RenderOptions& options) {
  if (slide.channels() != 3) throw ContractError("render needs an RGB slide");
  if (options.stroke_width < 1) throw ValidationError("stroke width must be at least 1");
  Image out = slide;

  std::vector<Detection> shown;
  for (const Detection& d : dets) {
    if (d.score >= options.display_threshold) shown.push_back(d);
  }
  // Highest scores end up on top.
  std::stable_sort(shown.begin(), shown.end(),
                   [](const Detection& a, const Detection& b) { return a.score < b.score; });

  const int s = options.stroke_width;
  for (const Detection& d : shown) {
    const Rgb color = d.cell_class == CellClass::kMitotic ? options.mitotic_color
                                                           : options.nonmitotic_color;
    const int x0 = static_cast<int>(std::lround(d.box.x_min()));
    const int y0 = static_cast<int>(std::lround(d.box.y_min()));
    const int x1 = std::max(x0 + 1, static_cast<int>(std::lround(d.box.x_max())));
    const int y1 = std::max(y0 + 1, static_cast<int>(std::lround(d.box.y_max())));
    for (int y = std::max(y0, 0); y < std::min(y1, out.height()); ++y) {
      const bool edge_row = y < y0 + s || y >= y1 - s;
      for (int x = std::max(x0, 0); x < std::min(x1, out.width()); ++x) {
        if (edge_row || x < x0 + s || x >= x1 - s) out.set_rgb(x, y, color);
      }
    }
    if (options.draw_scores) {
      const int ly = y0 - 7 >= 0 ? y0 - 7 : y0 + s + 1;
      draw_label(out, x0, ly, d.score, color);
    }
  }
  return out;
}

}  // namespace mitodet
