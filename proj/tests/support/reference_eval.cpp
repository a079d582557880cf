#include "reference_eval.hpp"

#include <algorithm>
#include <cstddef>

namespace mitodet::testing::ref {
namespace {

double box_iou(const Box& a, const Box& b) {
  const double w = std::min(a.x1, b.x1) - std::max(a.x0, b.x0);
  const double h = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (w <= 0 || h <= 0) return 0.0;
  const double inter = w * h;
  return inter / ((a.x1 - a.x0) * (a.y1 - a.y0) + (b.x1 - b.x0) * (b.y1 - b.y0) - inter);
}

struct Outcome {
  double score;
  bool tp;
};

std::optional<double> class_ap(const Scene& scene, int category, double t) {
  std::vector<Outcome> pooled;
  std::size_t total_gt = 0;
  for (std::size_t img = 0; img < scene.gts.size(); ++img) {
    std::vector<Box> gts;
    for (const Box& g : scene.gts[img]) {
      if (g.category == category) gts.push_back(g);
    }
    std::vector<Box> dets;
    for (const Box& d : scene.dets[img]) {
      if (d.category == category) dets.push_back(d);
    }
    // insertion sort: stable, descending score
    for (std::size_t i = 1; i < dets.size(); ++i) {
      for (std::size_t j = i; j > 0 && dets[j - 1].score < dets[j].score; --j) std::swap(dets[j - 1], dets[j]);
    }
    total_gt += gts.size();
    std::vector<bool> taken(gts.size(), false);
    for (const Box& d : dets) {
      int best = -1;
      double best_iou = 0.0;
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (taken[g]) continue;
        const double v = box_iou(d, gts[g]);
        if (v >= t && (best < 0 || v > best_iou)) {
          best = static_cast<int>(g);
          best_iou = v;
        }
      }
      if (best >= 0) taken[best] = true;
      pooled.push_back({d.score, best >= 0});
    }
  }
  if (total_gt == 0) {
    if (pooled.empty()) return std::nullopt;
    return 0.0;
  }
  for (std::size_t i = 1; i < pooled.size(); ++i) {
    for (std::size_t j = i; j > 0 && pooled[j - 1].score < pooled[j].score; --j) std::swap(pooled[j - 1], pooled[j]);
  }
  std::vector<double> recall, precision;
  double tp = 0, fp = 0;
  for (const Outcome& o : pooled) {
    (o.tp ? tp : fp) += 1;
    recall.push_back(tp / static_cast<double>(total_gt));
    precision.push_back(tp / (tp + fp));
  }
  double sum = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = i * 0.01;
    double best = 0.0;
    for (std::size_t k = 0; k < recall.size(); ++k) {
      if (recall[k] >= r) best = std::max(best, precision[k]);
    }
    sum += best;
  }
  return sum / 101.0;
}

std::optional<double> mean_of(const std::vector<std::optional<double>>& xs) {
  double s = 0;
  int n = 0;
  for (const auto& x : xs) {
    if (x) {
      s += *x;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return s / n;
}

}  // namespace

std::vector<double> coco_thresholds() {
  std::vector<double> t;
  const double step = (0.95 - 0.5) / 9.0;
  for (int i = 0; i < 10; ++i) t.push_back(0.5 + i * step);
  t.back() = 0.95;
  return t;
}

Result evaluate(const Scene& scene, const std::vector<double>& thresholds) {
  Result r;
  r.thresholds = thresholds;
  r.ap.assign(2, {});
  for (int c = 1; c <= 2; ++c) {
    for (double t : thresholds) r.ap[c - 1].push_back(class_ap(scene, c, t));
  }
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    r.map_per_threshold.push_back(mean_of({r.ap[0][i], r.ap[1][i]}));
    if (thresholds[i] == 0.5) r.map_50 = r.map_per_threshold.back();
  }
  if (thresholds == coco_thresholds()) {
    // mean over thresholds per class, then over classes
    std::vector<std::optional<double>> per_class;
    for (int c = 0; c < 2; ++c) per_class.push_back(mean_of(r.ap[c]));
    r.map_50_95 = mean_of(per_class);
  }
  return r;
}

}  // namespace mitodet::testing::ref
