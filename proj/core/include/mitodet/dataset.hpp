#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mitodet/geometry.hpp"
#include "mitodet/image.hpp"

namespace mitodet {

/// One row of a per-slide annotation CSV: pathologist centroid and confidence.
struct LabeledCentroid {
  Point centroid;
  double confidence = 0.0;
};

/// Parses `x,y,confidence` rows (no header, '.' decimal separator). Blank
/// lines are skipped. Throws ParseError naming file and line for malformed
/// rows and ValidationError for confidences outside [0, 1].
std::vector<LabeledCentroid> parse_annotations(const std::filesystem::path& csv_path);
std::vector<LabeledCentroid> parse_annotation_text(std::string_view text, std::string_view source);

/// Mitotic iff confidence >= mitosis_threshold.
CellClass classify_annotation(double confidence, double mitosis_threshold);

enum class Scanner { kAperio, kHamamatsu, kUnknown };

inline constexpr ImageSize kAperioFrame{1539, 1376};
inline constexpr ImageSize kHamamatsuFrame{1663, 1485};

Scanner scanner_from_size(ImageSize size);
std::string_view scanner_name(Scanner s);

struct Annotation {
  Point centroid;
  double confidence = 0.0;
  BoundingBox box;  // clipped to the image
  CellClass cell_class = CellClass::kNonMitotic;
};

struct SlideRecord {
  std::string image_id;
  std::filesystem::path image_path;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;
  Scanner scanner = Scanner::kUnknown;
};

/// A slide before box derivation, as produced by an importer.
struct SlideSource {
  std::string image_id;
  std::filesystem::path image_path;
  std::vector<LabeledCentroid> labels;
  Scanner scanner = Scanner::kUnknown;  // when known, the decoded size must match
};

struct IngestOptions {
  double box_side = 70.0;
  double split_ratio = 0.8;
  std::uint64_t seed = 0;
  double mitosis_threshold = 0.5;
  /// A border-clipped box is kept iff it retains this fraction of box_side^2.
  double min_border_fraction = 0.5;
};

struct IngestSummary {
  std::vector<std::string> empty_records;  // removed, no surviving annotations
  std::size_t dropped_border_annotations = 0;
};

enum class Split { kTrain, kValidation };
std::string_view split_name(Split s);

struct Dataset {
  std::vector<SlideRecord> train;
  std::vector<SlideRecord> validation;
  IngestSummary summary;
};

/**
 * Derives boxes (centroid_to_box, then clipped to the image under the border
 * rule), classifies every annotation, drops empty records and splits by whole
 * slide. The train split holds ceil(N * split_ratio) records; membership
 * depends only on the seed and the set of image ids, not on input order.
 *
 * Throws IngestError listing every record whose image cannot be read, and
 * IngestError("empty dataset") when nothing survives filtering.
 */
Dataset build_dataset(std::span<const SlideSource> sources, const IngestOptions& options);

/// ceil(n * ratio), tolerant of representation error in the product.
std::size_t train_split_size(std::size_t n, double ratio);

/**
 * Pairs every `*.png` in `images_dir` with its annotation files found
 * anywhere below `annotations_dir`: `{stem}.csv` in the plain importer
 * format, or the ICPR-style pair `{stem}_mitosis.{csv,txt}` and
 * `{stem}_not_mitosis.{csv,txt}`. Images without annotation files yield
 * sources with no labels (build_dataset drops them).
 */
std::vector<SlideSource> discover_slides(const std::filesystem::path& annotations_dir,
                                         const std::filesystem::path& images_dir);

BoundingBox hflip_box(const BoundingBox& box, int image_width);

struct FlipSample {
  Image image;
  std::vector<BoundingBox> boxes;
};

/// Mirrors the image about its vertical center line; x-extents map to
/// (W - x_max, W - x_min). Throws ContractError for boxes outside the image.
FlipSample hflip_sample(const Image& image, std::span<const BoundingBox> boxes);

}  // namespace mitodet
