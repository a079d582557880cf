#include "mitodet/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "mitodet/error.hpp"

namespace mitodet {

BoundingBox::BoundingBox(double x_min, double y_min, double x_max, double y_max)
    : x_min_(x_min), y_min_(y_min), x_max_(x_max), y_max_(y_max) {
  const bool finite = std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
                      std::isfinite(y_max);
  if (!finite || !(x_min < x_max) || !(y_min < y_max)) {
    std::ostringstream msg;
    msg << "invalid bounding box (" << x_min << ", " << y_min << ", " << x_max << ", " << y_max
        << "): requires finite coordinates with min < max";
    throw ValidationError(msg.str());
  }
}

BoundingBox BoundingBox::from_xywh(double x, double y, double w, double h) {
  return BoundingBox(x, y, x + w, y + h);
}

BoundingBox BoundingBox::translated(double dx, double dy) const {
  return BoundingBox(x_min_ + dx, y_min_ + dy, x_max_ + dx, y_max_ + dy);
}

bool BoundingBox::contains(const BoundingBox& other) const {
  return other.x_min_ >= x_min_ && other.y_min_ >= y_min_ && other.x_max_ <= x_max_ &&
         other.y_max_ <= y_max_;
}

int class_id(CellClass c) { return static_cast<int>(c); }

CellClass class_from_id(int id) {
  switch (id) {
    case 1:
      return CellClass::kMitotic;
    case 2:
      return CellClass::kNonMitotic;
    default:
      throw ValidationError("unknown category id " + std::to_string(id) +
                            " (expected 1 = mitotic or 2 = nonmitotic)");
  }
}

std::string_view class_name(CellClass c) {
  return c == CellClass::kMitotic ? "mitotic" : "nonmitotic";
}

CellClass class_from_name(std::string_view name) {
  if (name == "mitotic") return CellClass::kMitotic;
  if (name == "nonmitotic") return CellClass::kNonMitotic;
  throw ValidationError("unknown class name '" + std::string(name) + "'");
}

Detection make_detection(const BoundingBox& box, CellClass cell_class, double score) {
  if (!(score >= 0.0 && score <= 1.0)) {
    throw ValidationError("detection score " + std::to_string(score) + " outside [0, 1]");
  }
  return Detection{box, cell_class, score};
}

double intersection_area(const BoundingBox& a, const BoundingBox& b) {
  const double w = std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min());
  const double h = std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min());
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double inter = intersection_area(a, b);
  if (inter == 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::optional<BoundingBox> clip_box(const BoundingBox& box, const BoundingBox& region) {
  const double x0 = std::max(box.x_min(), region.x_min());
  const double y0 = std::max(box.y_min(), region.y_min());
  const double x1 = std::min(box.x_max(), region.x_max());
  const double y1 = std::min(box.y_max(), region.y_max());
  if (!(x0 < x1) || !(y0 < y1)) return std::nullopt;
  return BoundingBox(x0, y0, x1, y1);
}

BoundingBox centroid_to_box(Point centroid, double side) {
  if (!(side > 0.0)) {
    throw ValidationError("box side must be positive, got " + std::to_string(side));
  }
  const double half = side / 2.0;
  return BoundingBox(centroid.x - half, centroid.y - half, centroid.x + half, centroid.y + half);
}

namespace {

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

}  // namespace

NmsResult nms_indices(std::span<const Detection> dets, double iou_threshold) {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) {
    throw ValidationError("NMS IoU threshold must lie in (0, 1], got " +
                          std::to_string(iou_threshold));
  }
  NmsResult result;
  result.suppressed_by.assign(dets.size(), std::nullopt);
  for (std::size_t idx : score_order(dets)) {
    const Detection& cand = dets[idx];
    bool keep = true;
    for (std::size_t k : result.kept) {
      if (dets[k].cell_class == cand.cell_class && iou(dets[k].box, cand.box) >= iou_threshold) {
        result.suppressed_by[idx] = k;
        keep = false;
        break;
      }
    }
    if (keep) result.kept.push_back(idx);
  }
  return result;
}

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold) {
  const NmsResult r = nms_indices(dets, iou_threshold);
  std::vector<Detection> out;
  out.reserve(r.kept.size());
  for (std::size_t k : r.kept) out.push_back(dets[k]);
  return out;
}

void sort_by_score(std::vector<Detection>& dets) {
  std::stable_sort(dets.begin(), dets.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });
}

}  // namespace mitodet
