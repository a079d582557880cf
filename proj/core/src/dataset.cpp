#include "mitodet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/log.hpp"
#include "mitodet/random.hpp"

namespace mitodet {
namespace {

std::string_view trim(std::string_view s) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

bool parse_real(std::string_view field, double& out) {
  field = trim(field);
  if (field.empty()) return false;
  const char* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, out);
  return ec == std::errc() && ptr == end && std::isfinite(out);
}

}  // namespace

std::vector<LabeledCentroid> parse_annotation_text(std::string_view text, std::string_view source) {
  std::vector<LabeledCentroid> rows;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    line = trim(line);
    if (line.empty()) continue;

    double values[3];
    std::size_t n = 0;
    bool ok = true;
    while (ok) {
      const std::size_t comma = line.find(',');
      const std::string_view field = line.substr(0, comma);
      if (n == 3 || !parse_real(field, values[n])) {
        ok = false;
        break;
      }
      ++n;
      if (comma == std::string_view::npos) break;
      line.remove_prefix(comma + 1);
    }
    if (!ok || n != 3) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": expected 'x,y,confidence'";
      throw ParseError(msg.str());
    }
    if (values[2] < 0.0 || values[2] > 1.0) {
      std::ostringstream msg;
      msg << source << ":" << line_no << ": confidence " << values[2] << " outside [0, 1]";
      throw ValidationError(msg.str());
    }
    rows.push_back({{values[0], values[1]}, values[2]});
  }
  return rows;
}

std::vector<LabeledCentroid> parse_annotations(const std::filesystem::path& csv_path) {
  return parse_annotation_text(read_text(csv_path), csv_path.string());
}

CellClass classify_annotation(double confidence, double mitosis_threshold) {
  if (!(confidence >= 0.0 && confidence <= 1.0) ||
      !(mitosis_threshold >= 0.0 && mitosis_threshold <= 1.0)) {
    throw ValidationError("confidence and mitosis threshold must lie in [0, 1]");
  }
  return confidence >= mitosis_threshold ? CellClass::kMitotic : CellClass::kNonMitotic;
}

Scanner scanner_from_size(ImageSize size) {
  if (size.width == kAperioFrame.width && size.height == kAperioFrame.height) {
    return Scanner::kAperio;
  }
  if (size.width == kHamamatsuFrame.width && size.height == kHamamatsuFrame.height) {
    return Scanner::kHamamatsu;
  }
  return Scanner::kUnknown;
}

std::string_view scanner_name(Scanner s) {
  switch (s) {
    case Scanner::kAperio:
      return "aperio";
    case Scanner::kHamamatsu:
      return "hamamatsu";
    case Scanner::kUnknown:
      break;
  }
  return "unknown";
}

std::string_view split_name(Split s) { return s == Split::kTrain ? "train" : "validation"; }

std::size_t train_split_size(std::size_t n, double ratio) {
  // 10 * 0.7 evaluates to 7.000000000000001; do not let that round up to 8.
  const double exact = static_cast<double>(n) * ratio;
  const auto k = static_cast<std::size_t>(std::ceil(exact - 1e-9 * std::max(1.0, exact)));
  return std::min(k, n);
}

Dataset build_dataset(std::span<const SlideSource> sources, const IngestOptions& options) {
  if (!(options.box_side > 0.0)) throw ValidationError("box side must be positive");
  if (!(options.split_ratio > 0.0 && options.split_ratio < 1.0)) {
    throw ValidationError("split ratio must lie in (0, 1)");
  }

  std::vector<const SlideSource*> ordered;
  ordered.reserve(sources.size());
  for (const SlideSource& s : sources) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const SlideSource* a, const SlideSource* b) { return a->image_id < b->image_id; });
  for (std::size_t i = 1; i < ordered.size(); ++i) {
    if (ordered[i]->image_id == ordered[i - 1]->image_id) {
      throw IngestError("duplicate image id '" + ordered[i]->image_id + "'");
    }
  }

  Dataset dataset;
  std::vector<SlideRecord> records;
  std::vector<std::string> unreadable;
  const double min_area = options.min_border_fraction * options.box_side * options.box_side;

  for (const SlideSource* src : ordered) {
    ImageSize size;
    try {
      size = read_png_size(src->image_path);
    } catch (const Error& e) {
      unreadable.push_back(src->image_id + " (" + e.what() + ")");
      continue;
    }
    const Scanner inferred = scanner_from_size(size);
    if (src->scanner != Scanner::kUnknown && src->scanner != inferred) {
      throw IngestError("record '" + src->image_id + "' is declared " +
                        std::string(scanner_name(src->scanner)) + " but its image is " +
                        std::to_string(size.width) + "x" + std::to_string(size.height));
    }

    SlideRecord rec;
    rec.image_id = src->image_id;
    rec.image_path = src->image_path;
    rec.width = size.width;
    rec.height = size.height;
    rec.scanner = inferred;
    const BoundingBox bounds(0.0, 0.0, size.width, size.height);
    for (const LabeledCentroid& label : src->labels) {
      const CellClass cls = classify_annotation(label.confidence, options.mitosis_threshold);
      const auto clipped = clip_box(centroid_to_box(label.centroid, options.box_side), bounds);
      if (!clipped || clipped->area() < min_area) {
        ++dataset.summary.dropped_border_annotations;
        std::ostringstream msg;
        msg << "record '" << rec.image_id << "': dropping annotation at (" << label.centroid.x
            << ", " << label.centroid.y << "), too little of its box lies inside the image";
        log_warning(msg.str());
        continue;
      }
      rec.annotations.push_back({label.centroid, label.confidence, *clipped, cls});
    }
    if (rec.annotations.empty()) {
      dataset.summary.empty_records.push_back(rec.image_id);
      continue;
    }
    records.push_back(std::move(rec));
  }

  if (!unreadable.empty()) {
    std::string msg = "unreadable image file for record(s):";
    for (const std::string& u : unreadable) msg += "\n  " + u;
    throw IngestError(msg);
  }
  if (records.empty()) throw IngestError("empty dataset");

  // Fisher-Yates over the id-sorted records.
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(options.seed, hash_string("split")));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.below(i)]);
  }
  const std::size_t n_train = train_split_size(records.size(), options.split_ratio);
  std::vector<bool> in_train(records.size(), false);
  for (std::size_t i = 0; i < n_train; ++i) in_train[order[i]] = true;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_train[i] ? dataset.train : dataset.validation).push_back(std::move(records[i]));
  }
  return dataset;
}

namespace {

bool has_annotation_ext(const std::filesystem::path& p) {
  return p.extension() == ".csv" || p.extension() == ".txt";
}

}  // namespace

std::vector<SlideSource> discover_slides(const std::filesystem::path& annotations_dir,
                                         const std::filesystem::path& images_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(images_dir)) {
    throw IoError("images directory '" + images_dir.string() + "' does not exist");
  }
  if (!fs::is_directory(annotations_dir)) {
    throw IoError("annotations directory '" + annotations_dir.string() + "' does not exist");
  }

  // Annotation files by stem; sorted so that merge order is stable.
  std::map<std::string, std::vector<fs::path>> by_stem;
  for (const auto& entry : fs::recursive_directory_iterator(annotations_dir)) {
    if (!entry.is_regular_file() || !has_annotation_ext(entry.path())) continue;
    by_stem[entry.path().stem().string()].push_back(entry.path());
  }
  for (auto& [stem, paths] : by_stem) std::sort(paths.begin(), paths.end());

  std::vector<fs::path> images;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") images.push_back(entry.path());
  }
  std::sort(images.begin(), images.end());

  std::vector<SlideSource> sources;
  for (const fs::path& img : images) {
    SlideSource src;
    src.image_id = img.stem().string();
    src.image_path = img;
    for (const std::string& key :
         {src.image_id, src.image_id + "_mitosis", src.image_id + "_not_mitosis"}) {
      const auto it = by_stem.find(key);
      if (it == by_stem.end()) continue;
      for (const fs::path& csv : it->second) {
        auto rows = parse_annotations(csv);
        src.labels.insert(src.labels.end(), rows.begin(), rows.end());
      }
    }
    sources.push_back(std::move(src));
  }
  return sources;
}

BoundingBox hflip_box(const BoundingBox& box, int image_width) {
  const double w = image_width;
  return BoundingBox(w - box.x_max(), box.y_min(), w - box.x_min(), box.y_max());
}

FlipSample hflip_sample(const Image& image, std::span<const BoundingBox> boxes) {
  const BoundingBox bounds(0.0, 0.0, std::max(image.width(), 1), std::max(image.height(), 1));
  FlipSample out{Image(image.width(), image.height(), image.channels()), {}};
  out.boxes.reserve(boxes.size());
  for (const BoundingBox& b : boxes) {
    if (!bounds.contains(b)) throw ContractError("hflip_sample: box lies outside the image");
    out.boxes.push_back(hflip_box(b, image.width()));
  }
  const int c = image.channels();
  for (int y = 0; y < image.height(); ++y) {
    const auto src = image.row(y);
    auto dst = out.image.row(y);
    for (int x = 0; x < image.width(); ++x) {
      const int mx = image.width() - 1 - x;
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(x) * c, c,
                  dst.begin() + static_cast<std::ptrdiff_t>(mx) * c);
    }
  }
  return out;
}

}  // namespace mitodet
