#include "mitodet/detector.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "mitodet/error.hpp"
#include "mitodet/manifest.hpp"
#include "mitodet/random.hpp"

namespace mitodet {

DetectorBackend::DetectorBackend(int patch_size, DetectorOptions options)
    : patch_size_(patch_size), options_(options) {
  if (patch_size <= 0) throw ValidationError("backend patch size must be positive");
  if (!(options.score_threshold >= 0.0 && options.score_threshold <= 1.0)) {
    throw ValidationError("score threshold must lie in [0, 1]");
  }
}

std::vector<Detection> DetectorBackend::detect(const PatchContext& context,
                                               const Image& patch) const {
  if (patch.width() != patch_size_ || patch.height() != patch_size_) {
    throw ContractError(name() + " backend expects " + std::to_string(patch_size_) + "x" +
                        std::to_string(patch_size_) + " patches, got " +
                        std::to_string(patch.width()) + "x" + std::to_string(patch.height()));
  }
  std::vector<Detection> raw = run(context, patch);
  const BoundingBox local(0, 0, patch_size_, patch_size_);
  std::vector<Detection> out;
  out.reserve(raw.size());
  for (const Detection& d : raw) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ValidationError(name() + " backend produced score " + std::to_string(d.score));
    }
    if (d.score < options_.score_threshold) continue;
    if (confined_to_patch()) {
      const auto clipped = clip_box(d.box, local);
      if (clipped) out.push_back({*clipped, d.cell_class, d.score});
    } else {
      out.push_back(d);
    }
  }
  sort_by_score(out);
  if (options_.max_detections > 0 && out.size() > options_.max_detections) {
    out.erase(out.begin() + static_cast<std::ptrdiff_t>(options_.max_detections), out.end());
  }
  return out;
}

namespace {

// ---------------------------------------------------------------------------

class OracleBackend final : public DetectorBackend {
 public:
  OracleBackend(std::map<std::string, std::vector<GroundTruth>> truth, int patch_size,
                OracleConfig config, DetectorOptions options)
      : DetectorBackend(patch_size, options), truth_(std::move(truth)), config_(config) {
    const OracleNoise& n = config_.noise;
    if (!(n.jitter_sigma >= 0.0) || !(n.drop_probability >= 0.0 && n.drop_probability <= 1.0) ||
        !(n.spurious_rate >= 0.0)) {
      throw ValidationError("oracle noise parameters out of range");
    }
  }

  std::string name() const override { return "oracle"; }

 protected:
  bool confined_to_patch() const override { return config_.mode == OracleMode::kPatch; }

  std::vector<Detection> run(const PatchContext& ctx, const Image&) const override {
    const auto it = truth_.find(ctx.image_id);
    if (it == truth_.end()) {
      throw ContractError("oracle has no ground truth for image id '" + ctx.image_id + "'");
    }
    const std::uint64_t image_key = hash_string(ctx.image_id);
    const std::vector<GroundTruth>& gts = it->second;

    std::vector<GroundTruth> replayed;
    for (std::size_t i = 0; i < gts.size(); ++i) {
      const auto gt = perturb(gts[i], image_key, i);
      if (gt) replayed.push_back(*gt);
    }

    std::vector<Detection> out;
    const PatchSpec& s = ctx.spec;
    if (config_.mode == OracleMode::kPatch) {
      for (const GroundTruth& g : project_annotations(replayed, s, config_.min_visible_fraction)) {
        out.push_back({g.box, g.cell_class, 1.0});
      }
    } else {
      for (const GroundTruth& g : replayed) {
        const Point c = g.box.center();
        if (c.x >= s.x && c.x < s.x + s.size && c.y >= s.y && c.y < s.y + s.size) {
          out.push_back({g.box.translated(-s.x, -s.y), g.cell_class, 1.0});
        }
      }
    }
    add_spurious(out, image_key, s);
    return out;
  }

 private:
  std::optional<GroundTruth> perturb(const GroundTruth& gt, std::uint64_t image_key,
                                     std::size_t index) const {
    const OracleNoise& n = config_.noise;
    Rng rng(derive_seed(config_.seed, hash_string("oracle-gt"), image_key, index));
    // The drop draw comes first so it does not depend on the jitter setting.
    if (rng.uniform() < n.drop_probability) return std::nullopt;
    if (n.jitter_sigma == 0.0) return gt;
    const double dx0 = n.jitter_sigma * rng.normal();
    const double dy0 = n.jitter_sigma * rng.normal();
    const double dx1 = n.jitter_sigma * rng.normal();
    const double dy1 = n.jitter_sigma * rng.normal();
    const double x0 = gt.box.x_min() + dx0, y0 = gt.box.y_min() + dy0;
    const double x1 = gt.box.x_max() + dx1, y1 = gt.box.y_max() + dy1;
    if (!(x0 < x1) || !(y0 < y1)) return gt;
    return GroundTruth{BoundingBox(x0, y0, x1, y1), gt.cell_class};
  }

  void add_spurious(std::vector<Detection>& out, std::uint64_t image_key, const PatchSpec& s) const {
    const double rate = config_.noise.spurious_rate;
    if (rate == 0.0) return;
    Rng rng(derive_seed(config_.seed, hash_string("oracle-spurious"), image_key,
                        static_cast<std::uint64_t>(s.row), static_cast<std::uint64_t>(s.col)));
    // Knuth's Poisson sampler; rates here are small.
    const double limit = std::exp(-rate);
    int count = -1;
    double p = 1.0;
    do {
      ++count;
      p *= rng.uniform();
    } while (p > limit);
    const double side = std::min<double>(config_.spurious_box_side, s.size);
    for (int k = 0; k < count; ++k) {
      const double x = rng.uniform(0.0, s.size - side);
      const double y = rng.uniform(0.0, s.size - side);
      const CellClass cls = rng.uniform() < 0.5 ? CellClass::kMitotic : CellClass::kNonMitotic;
      const double score = rng.uniform(0.05, 0.95);
      out.push_back({BoundingBox(x, y, x + side, y + side), cls, score});
    }
  }

  std::map<std::string, std::vector<GroundTruth>> truth_;
  OracleConfig config_;
};

// ---------------------------------------------------------------------------

class BlobBackend final : public DetectorBackend {
 public:
  BlobBackend(int patch_size, BlobConfig config, DetectorOptions options)
      : DetectorBackend(patch_size, options), config_(config) {
    if (config.min_area < 1 || config.max_area < config.min_area) {
      throw ValidationError("blob size band must satisfy 1 <= min_area <= max_area");
    }
  }

  std::string name() const override { return "blob"; }

 protected:
  std::vector<Detection> run(const PatchContext&, const Image& patch) const override {
    const int w = patch.width();
    const int h = patch.height();
    std::vector<std::uint8_t> dark(static_cast<std::size_t>(w) * h, 0);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Rgb p = patch.rgb(x, y);
        dark[static_cast<std::size_t>(y) * w + x] =
            p[0] <= config_.max_color[0] && p[1] <= config_.max_color[1] &&
            p[2] <= config_.max_color[2];
      }
    }

    std::vector<Detection> out;
    std::vector<std::uint8_t> seen(dark.size(), 0);
    std::deque<std::pair<int, int>> queue;
    for (int sy = 0; sy < h; ++sy) {
      for (int sx = 0; sx < w; ++sx) {
        const std::size_t si = static_cast<std::size_t>(sy) * w + sx;
        if (!dark[si] || seen[si]) continue;
        seen[si] = 1;
        queue.assign(1, {sx, sy});
        int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
        long long area = 0;
        double gray_sum = 0.0;
        while (!queue.empty()) {
          const auto [x, y] = queue.front();
          queue.pop_front();
          ++area;
          const Rgb p = patch.rgb(x, y);
          gray_sum += (p[0] + p[1] + p[2]) / 3.0;
          x0 = std::min(x0, x);
          x1 = std::max(x1, x);
          y0 = std::min(y0, y);
          y1 = std::max(y1, y);
          for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
              const int nx = x + dx, ny = y + dy;
              if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
              const std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
              if (dark[ni] && !seen[ni]) {
                seen[ni] = 1;
                queue.emplace_back(nx, ny);
              }
            }
          }
        }
        if (area < config_.min_area || area > config_.max_area) continue;
        const double score = std::clamp(1.0 - gray_sum / static_cast<double>(area) / 255.0, 0.0, 1.0);
        out.push_back({BoundingBox(x0, y0, x1 + 1, y1 + 1), CellClass::kNonMitotic, score});
      }
    }
    return out;
  }

 private:
  BlobConfig config_;
};

}  // namespace

std::unique_ptr<DetectorBackend> oracle_from_manifest(const Manifest& manifest, int patch_size,
                                                      const OracleConfig& config,
                                                      DetectorOptions options) {
  return std::make_unique<OracleBackend>(manifest.ground_truth(), patch_size, config, options);
}

std::unique_ptr<DetectorBackend> blob_baseline(int patch_size, const BlobConfig& config,
                                               DetectorOptions options) {
  return std::make_unique<BlobBackend>(patch_size, config, options);
}

}  // namespace mitodet
