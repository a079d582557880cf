#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "mitodet/geometry.hpp"
#include "mitodet/image.hpp"
#include "mitodet/tiling.hpp"

namespace mitodet {

struct Manifest;

/// Where a patch came from. Only the oracle looks at it; image-based
/// backends see pixels alone.
struct PatchContext {
  std::string image_id;
  PatchSpec spec;
};

struct DetectorOptions {
  /// Detections scoring below this are not emitted. Low, so PR curves stay complete.
  double score_threshold = 0.05;
  /// Per-patch cap after sorting; 0 disables it.
  std::size_t max_detections = 0;
};

/**
 * Uniform inference contract. detect() checks the patch size, runs the
 * backend, validates scores, confines boxes to the patch (except for
 * backends that replay slide geometry), applies the score threshold and cap,
 * and returns detections sorted by descending score.
 *
 * detect() is const and deterministic. Backends that cannot run concurrently
 * return false from shareable(); callers must serialize access to them.
 */
class DetectorBackend {
 public:
  virtual ~DetectorBackend() = default;

  virtual std::string name() const = 0;
  virtual bool shareable() const { return true; }

  int patch_size() const { return patch_size_; }
  const DetectorOptions& options() const { return options_; }

  std::vector<Detection> detect(const PatchContext& context, const Image& patch) const;

 protected:
  DetectorBackend(int patch_size, DetectorOptions options);

  virtual std::vector<Detection> run(const PatchContext& context, const Image& patch) const = 0;

  /// False only for backends whose boxes may legitimately extend past the patch.
  virtual bool confined_to_patch() const { return true; }

 private:
  int patch_size_;
  DetectorOptions options_;
};

// -- oracle --------------------------------------------------------------------

struct OracleNoise {
  double jitter_sigma = 0.0;      // pixels, independent per box edge
  double drop_probability = 0.0;  // per ground-truth box
  double spurious_rate = 0.0;     // expected false boxes per patch (Poisson)

  bool none() const { return jitter_sigma == 0.0 && drop_probability == 0.0 && spurious_rate == 0.0; }
};

enum class OracleMode {
  /// Each ground truth is replayed at full extent by every patch containing
  /// its center, so lifted and merged output reproduces slide ground truth.
  kSlide,
  /// Ground truth is replayed exactly as project_annotations() sees it in
  /// each patch, for patch-level evaluation.
  kPatch,
};

struct OracleConfig {
  OracleNoise noise;
  std::uint64_t seed = 0;
  OracleMode mode = OracleMode::kSlide;
  double min_visible_fraction = 0.5;  // kPatch only
  double spurious_box_side = 70.0;
};

/// Replays manifest ground truth. All noise draws are keyed by (seed, image,
/// box index) or (seed, image, patch), so output does not depend on the order
/// in which patches are processed, and drop decisions are nested as the drop
/// probability grows. Unknown image ids raise ContractError.
std::unique_ptr<DetectorBackend> oracle_from_manifest(const Manifest& manifest, int patch_size,
                                                      const OracleConfig& config,
                                                      DetectorOptions options = {});

// -- blob baseline ---------------------------------------------------------------

struct BlobConfig {
  /// A pixel is "dark" when every channel is at or below this color.
  Rgb max_color{140, 120, 190};
  int min_area = 40;    // pixels, inclusive
  int max_area = 6000;  // pixels, inclusive
};

/// Hematoxylin-dark connected regions (8-connected) inside the size band
/// become NonMitotic detections scored by mean darkness 1 - gray/255.
std::unique_ptr<DetectorBackend> blob_baseline(int patch_size, const BlobConfig& config = {},
                                               DetectorOptions options = {});

}  // namespace mitodet
