#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace mitodet {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/**
 * Axis-aligned box in pixel space, half-open: it covers
 * [x_min, x_max) x [y_min, y_max). Coordinates are real-valued; only the
 * renderer rasterizes them.
 *
 * Construction rejects zero-area, inverted, and non-finite boxes, so every
 * BoundingBox value has positive area.
 */
class BoundingBox {
 public:
  BoundingBox(double x_min, double y_min, double x_max, double y_max);

  /// COCO-style [x, y, w, h].
  static BoundingBox from_xywh(double x, double y, double w, double h);

  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_max() const { return x_max_; }
  double y_max() const { return y_max_; }
  double width() const { return x_max_ - x_min_; }
  double height() const { return y_max_ - y_min_; }
  double area() const { return width() * height(); }
  Point center() const { return {(x_min_ + x_max_) / 2.0, (y_min_ + y_max_) / 2.0}; }

  BoundingBox translated(double dx, double dy) const;
  bool contains(const BoundingBox& other) const;

  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;

 private:
  double x_min_;
  double y_min_;
  double x_max_;
  double y_max_;
};

/// Stable integer ids are used in every interchange file.
enum class CellClass : int { kMitotic = 1, kNonMitotic = 2 };

inline constexpr CellClass kAllClasses[] = {CellClass::kMitotic, CellClass::kNonMitotic};

int class_id(CellClass c);
CellClass class_from_id(int id);  // throws ValidationError for ids other than 1 and 2
std::string_view class_name(CellClass c);  // "mitotic" / "nonmitotic"
CellClass class_from_name(std::string_view name);

struct Detection {
  BoundingBox box;
  CellClass cell_class;
  double score;  // [0, 1]

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// Throws ValidationError unless score is within [0, 1].
Detection make_detection(const BoundingBox& box, CellClass cell_class, double score);

/// A labeled ground-truth box.
struct GroundTruth {
  BoundingBox box;
  CellClass cell_class;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

double intersection_area(const BoundingBox& a, const BoundingBox& b);

/// Intersection over union; symmetric, 1 for identical boxes, 0 for disjoint ones.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Intersection of `box` with `region`, or nullopt when it has zero area.
std::optional<BoundingBox> clip_box(const BoundingBox& box, const BoundingBox& region);

/// Square box of side `side` centered on `centroid`. Throws ValidationError for side <= 0.
BoundingBox centroid_to_box(Point centroid, double side);

struct NmsResult {
  /// Indices into the input of the kept detections, by descending score.
  std::vector<std::size_t> kept;
  /// For each input index, the kept index that suppressed it (nullopt if kept).
  std::vector<std::optional<std::size_t>> suppressed_by;
};

/**
 * Greedy class-wise non-maximum suppression.
 *
 * Detections are visited by descending score (stable, so ties keep input
 * order). A detection survives iff its IoU with every already kept detection
 * of the same class is below `iou_threshold`. Throws ValidationError unless
 * the threshold lies in (0, 1].
 */
NmsResult nms_indices(std::span<const Detection> dets, double iou_threshold);

std::vector<Detection> nms(std::span<const Detection> dets, double iou_threshold);

/// Stable sort by descending score.
void sort_by_score(std::vector<Detection>& dets);

}  // namespace mitodet
