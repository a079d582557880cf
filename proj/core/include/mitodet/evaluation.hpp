#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mitodet/geometry.hpp"
#include "mitodet/interchange.hpp"

namespace mitodet {

// Scoring follows the COCO protocol: greedy score-ordered matching per class,
// detections pooled per class across images, precision interpolated and
// sampled at 101 recall levels. No area buckets and no crowd/ignore regions.

struct DetectionMatch {
  std::size_t detection_index = 0;  // into the input span
  double score = 0.0;
  CellClass cell_class = CellClass::kMitotic;
  bool true_positive = false;
  std::optional<std::size_t> gt_index;
  double iou = 0.0;  // IoU with the matched ground truth, 0 for false positives
};

struct MatchResult {
  std::vector<DetectionMatch> detections;  // descending score, ties in input order
  std::vector<bool> gt_matched;            // parallel to the ground-truth span

  std::size_t true_positives() const;
};

/// Each detection, in descending score order, claims the unmatched same-class
/// ground truth with the highest IoU (lowest index on ties), provided that
/// IoU >= iou_threshold; otherwise it is a false positive.
MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             double iou_threshold);

inline constexpr std::size_t kRecallLevels = 101;

/// i-th sampled recall, i / 100, computed as i * 0.01 like the reference tooling.
double recall_level(std::size_t i);

struct PRCurve {
  /// Interpolated precision at recall_level(i); non-increasing in i.
  std::array<double, kRecallLevels> precision{};
};

/// One pooled detection outcome; pr_curve expects them in rank order.
struct RankedOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// Cumulative precision/recall over `ranked`, precision interpolated as the
/// maximum at any recall >= r. With total_gt == 0 the curve is all zeros.
PRCurve pr_curve(std::span<const RankedOutcome> ranked, std::size_t total_gt);

/// Mean interpolated precision over the 101 recall samples.
double average_precision(const PRCurve& curve);

/// {0.50, 0.55, ..., 0.95}, generated the way the reference tooling does.
std::vector<double> coco_iou_thresholds();

struct EvalOptions {
  std::vector<double> iou_thresholds = coco_iou_thresholds();
  /// Per image and class, keep only the top-N detections; 0 disables the cap.
  std::size_t max_detections_per_image = 0;
  std::string granularity = "slide";  // recorded in the report only
};

struct ClassReport {
  CellClass cell_class = CellClass::kMitotic;
  std::size_t gt_count = 0;
  std::size_t detection_count = 0;
  /// Parallel to EvalReport::thresholds; nullopt when the class has neither
  /// ground truth nor detections and is excluded from the means.
  std::vector<std::optional<double>> ap;
  std::vector<PRCurve> curves;
};

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<ClassReport> classes;
  std::vector<std::optional<double>> map_per_threshold;
  std::optional<double> map_50;     // when 0.5 is among the thresholds
  std::optional<double> map_50_95;  // when the full COCO sweep was evaluated
  std::size_t image_count = 0;
  std::string granularity;
  std::vector<std::string> warnings;
};

/**
 * Scores detections against ground truth for every image in `gts`. Images
 * without detections count as having none. A detection keyed by an image id
 * absent from `gts` raises ContractError naming the first such id.
 */
EvalReport evaluate(const DetectionSet& dets,
                    const std::map<std::string, std::vector<GroundTruth>>& gts,
                    const EvalOptions& options = {});

nlohmann::ordered_json report_to_json(const EvalReport& report);

/// Fixed-width summary table for terminals.
std::string format_report(const EvalReport& report);

}  // namespace mitodet
