#include "mitodet/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "mitodet/error.hpp"
#include "mitodet/log.hpp"

namespace mitodet {

std::size_t MatchResult::true_positives() const {
  return static_cast<std::size_t>(std::count_if(detections.begin(), detections.end(),
                                                [](const DetectionMatch& m) { return m.true_positive; }));
}

MatchResult match_detections(std::span<const Detection> dets, std::span<const GroundTruth> gts,
                             double iou_threshold) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });

  MatchResult result;
  result.gt_matched.assign(gts.size(), false);
  result.detections.reserve(dets.size());
  for (std::size_t di : order) {
    const Detection& d = dets[di];
    DetectionMatch m{di, d.score, d.cell_class, false, std::nullopt, 0.0};
    double best = -1.0;
    for (std::size_t gi = 0; gi < gts.size(); ++gi) {
      if (result.gt_matched[gi] || gts[gi].cell_class != d.cell_class) continue;
      const double o = iou(d.box, gts[gi].box);
      if (o >= iou_threshold && o > best) {
        best = o;
        m.gt_index = gi;
      }
    }
    if (m.gt_index) {
      result.gt_matched[*m.gt_index] = true;
      m.true_positive = true;
      m.iou = best;
    }
    result.detections.push_back(m);
  }
  return result;
}

double recall_level(std::size_t i) { return static_cast<double>(i) * 0.01; }

PRCurve pr_curve(std::span<const RankedOutcome> ranked, std::size_t total_gt) {
  PRCurve curve;
  if (total_gt == 0 || ranked.empty()) return curve;

  const std::size_t n = ranked.size();
  std::vector<double> recall(n);
  std::vector<double> precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += ranked[i].true_positive ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(total_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  for (std::size_t i = n - 1; i > 0; --i) precision[i - 1] = std::max(precision[i - 1], precision[i]);

  for (std::size_t k = 0; k < kRecallLevels; ++k) {
    const auto it = std::lower_bound(recall.begin(), recall.end(), recall_level(k));
    curve.precision[k] = it == recall.end() ? 0.0 : precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return curve;
}

double average_precision(const PRCurve& curve) {
  double sum = 0.0;
  for (double p : curve.precision) sum += p;
  return sum / static_cast<double>(kRecallLevels);
}

std::vector<double> coco_iou_thresholds() {
  // Same construction as numpy.linspace(0.5, 0.95, 10).
  std::vector<double> t(10);
  const double step = (0.95 - 0.5) / 9.0;
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.5 + static_cast<double>(i) * step;
  t.back() = 0.95;
  return t;
}

namespace {

bool is_coco_sweep(const std::vector<double>& t) {
  const std::vector<double> ref = coco_iou_thresholds();
  if (t.size() != ref.size()) return false;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (std::abs(t[i] - ref[i]) > 1e-9) return false;
  }
  return true;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

EvalReport evaluate(const DetectionSet& dets,
                    const std::map<std::string, std::vector<GroundTruth>>& gts,
                    const EvalOptions& options) {
  for (const auto& [image_id, list] : dets) {
    if (!gts.contains(image_id)) {
      throw ContractError("detections reference image id '" + image_id +
                          "' which is not in the ground truth");
    }
  }
  if (options.iou_thresholds.empty()) throw ValidationError("no IoU thresholds to evaluate");
  for (double t : options.iou_thresholds) {
    if (!(t > 0.0 && t <= 1.0)) throw ValidationError("IoU thresholds must lie in (0, 1]");
  }

  EvalReport report;
  report.thresholds = options.iou_thresholds;
  report.image_count = gts.size();
  report.granularity = options.granularity;

  for (CellClass cls : kAllClasses) {
    // Per-image inputs for this class, in image-id order.
    struct PerImage {
      std::vector<Detection> dets;
      std::vector<GroundTruth> gts;
    };
    std::vector<PerImage> images;
    ClassReport cr;
    cr.cell_class = cls;
    for (const auto& [image_id, truth] : gts) {
      PerImage pi;
      for (const GroundTruth& g : truth) {
        if (g.cell_class == cls) pi.gts.push_back(g);
      }
      if (const auto it = dets.find(image_id); it != dets.end()) {
        for (const Detection& d : it->second) {
          if (d.cell_class == cls) pi.dets.push_back(d);
        }
      }
      sort_by_score(pi.dets);
      if (options.max_detections_per_image > 0 && pi.dets.size() > options.max_detections_per_image) {
        pi.dets.erase(pi.dets.begin() + static_cast<std::ptrdiff_t>(options.max_detections_per_image),
                      pi.dets.end());
      }
      cr.gt_count += pi.gts.size();
      cr.detection_count += pi.dets.size();
      images.push_back(std::move(pi));
    }

    const bool excluded = cr.gt_count == 0 && cr.detection_count == 0;
    if (cr.gt_count == 0 && cr.detection_count > 0) {
      const std::string msg = "class " + std::string(class_name(cls)) +
                              " has detections but no ground truth; its AP is 0";
      report.warnings.push_back(msg);
      log_warning(msg);
    }

    for (double t : options.iou_thresholds) {
      std::vector<RankedOutcome> pooled;
      for (const PerImage& pi : images) {
        const MatchResult m = match_detections(pi.dets, pi.gts, t);
        for (const DetectionMatch& dm : m.detections) pooled.push_back({dm.score, dm.true_positive});
      }
      std::stable_sort(pooled.begin(), pooled.end(),
                       [](const RankedOutcome& a, const RankedOutcome& b) { return a.score > b.score; });
      const PRCurve curve = pr_curve(pooled, cr.gt_count);
      cr.curves.push_back(curve);
      cr.ap.push_back(excluded ? std::nullopt : std::optional<double>(average_precision(curve)));
    }
    report.classes.push_back(std::move(cr));
  }

  for (std::size_t ti = 0; ti < report.thresholds.size(); ++ti) {
    std::vector<std::optional<double>> per_class;
    for (const ClassReport& cr : report.classes) per_class.push_back(cr.ap[ti]);
    report.map_per_threshold.push_back(mean_of(per_class));
    if (std::abs(report.thresholds[ti] - 0.5) < 1e-12) report.map_50 = report.map_per_threshold.back();
  }
  if (is_coco_sweep(report.thresholds)) {
    std::vector<std::optional<double>> per_class;
    for (const ClassReport& cr : report.classes) per_class.push_back(mean_of(cr.ap));
    report.map_50_95 = mean_of(per_class);
  }
  return report;
}

namespace {

nlohmann::ordered_json opt(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

}  // namespace

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  using nlohmann::ordered_json;
  ordered_json classes = ordered_json::array();
  for (const ClassReport& cr : report.classes) {
    ordered_json ap = ordered_json::array();
    for (const auto& v : cr.ap) ap.push_back(opt(v));
    ordered_json curves = ordered_json::array();
    for (const PRCurve& c : cr.curves) curves.push_back(c.precision);
    classes.push_back({{"category_id", class_id(cr.cell_class)},
                       {"name", class_name(cr.cell_class)},
                       {"gt_count", cr.gt_count},
                       {"detection_count", cr.detection_count},
                       {"ap", ap},
                       {"pr_precision", curves}});
  }
  ordered_json per_t = ordered_json::array();
  for (const auto& v : report.map_per_threshold) per_t.push_back(opt(v));
  std::vector<double> recalls(kRecallLevels);
  for (std::size_t i = 0; i < kRecallLevels; ++i) recalls[i] = recall_level(i);
  return {{"granularity", report.granularity},
          {"image_count", report.image_count},
          {"iou_thresholds", report.thresholds},
          {"map_50", opt(report.map_50)},
          {"map_50_95", opt(report.map_50_95)},
          {"map_per_threshold", per_t},
          {"classes", classes},
          {"recall_levels", recalls},
          {"warnings", report.warnings}};
}

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  char line[160];
  auto fmt = [](const std::optional<double>& v) {
    char buf[16];
    if (v) {
      std::snprintf(buf, sizeof buf, "%.4f", *v);
    } else {
      std::snprintf(buf, sizeof buf, "%s", "-");
    }
    return std::string(buf);
  };
  out << "granularity: " << report.granularity << ", images: " << report.image_count << "\n";
  std::snprintf(line, sizeof line, "%-12s %8s %8s %10s %10s\n", "class", "gt", "dets", "AP@0.5",
                "AP@.5:.95");
  out << line;
  for (const ClassReport& cr : report.classes) {
    std::optional<double> ap50;
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
      if (std::abs(report.thresholds[i] - 0.5) < 1e-12) ap50 = cr.ap[i];
    }
    std::optional<double> sweep;
    if (report.map_50_95) sweep = mean_of(cr.ap);
    std::snprintf(line, sizeof line, "%-12s %8zu %8zu %10s %10s\n",
                  std::string(class_name(cr.cell_class)).c_str(), cr.gt_count, cr.detection_count,
                  fmt(ap50).c_str(), fmt(sweep).c_str());
    out << line;
  }
  out << "mAP@0.5:        " << fmt(report.map_50) << "\n";
  out << "mAP@[0.5:0.95]: " << fmt(report.map_50_95) << "\n";
  if (!report.map_50 && !report.map_50_95) {
    for (std::size_t i = 0; i < report.thresholds.size(); ++i) {
      std::snprintf(line, sizeof line, "mAP@%.2f:       %s\n", report.thresholds[i],
                    fmt(report.map_per_threshold[i]).c_str());
      out << line;
    }
  }
  return out.str();
}

}  // namespace mitodet
