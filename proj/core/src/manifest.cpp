#include "mitodet/manifest.hpp"

#include <set>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"

namespace mitodet {

using nlohmann::json;
using nlohmann::ordered_json;

const ManifestImage* Manifest::find_image(const std::string& id) const {
  for (const ManifestImage& img : images) {
    if (img.id == id) return &img;
  }
  return nullptr;
}

std::map<std::string, std::vector<GroundTruth>> Manifest::ground_truth() const {
  std::map<std::string, std::vector<GroundTruth>> out;
  for (const ManifestImage& img : images) out[img.id];
  for (const ManifestAnnotation& a : annotations) {
    const auto it = out.find(a.image_id);
    if (it != out.end()) it->second.push_back({a.box, a.cell_class});
  }
  return out;
}

Manifest Manifest::filtered(const std::string& split) const {
  if (split == "all") return *this;
  if (split != "train" && split != "validation") {
    throw ValidationError("unknown split '" + split + "' (expected all, train or validation)");
  }
  Manifest out;
  std::set<std::string> kept;
  for (const ManifestImage& img : images) {
    if (img.split == split) {
      out.images.push_back(img);
      kept.insert(img.id);
    }
  }
  for (const ManifestAnnotation& a : annotations) {
    if (kept.contains(a.image_id)) out.annotations.push_back(a);
  }
  return out;
}

Manifest to_manifest(const Dataset& dataset) {
  Manifest m;
  auto add = [&m](const std::vector<SlideRecord>& records, Split split) {
    for (const SlideRecord& r : records) {
      m.images.push_back({r.image_id, r.image_path, r.width, r.height, std::string(split_name(split))});
      for (const Annotation& a : r.annotations) {
        m.annotations.push_back({r.image_id, a.box, a.cell_class, a.confidence});
      }
    }
  };
  add(dataset.train, Split::kTrain);
  add(dataset.validation, Split::kValidation);
  return m;
}

ordered_json manifest_to_json(const Manifest& manifest, const std::filesystem::path& base_dir) {
  ordered_json images = ordered_json::array();
  for (const ManifestImage& img : manifest.images) {
    std::filesystem::path p = img.path;
    if (!base_dir.empty() && p.is_absolute()) {
      const auto rel = p.lexically_relative(base_dir);
      if (!rel.empty()) p = rel;
    }
    images.push_back({{"id", img.id},
                      {"path", p.generic_string()},
                      {"width", img.width},
                      {"height", img.height},
                      {"split", img.split}});
  }
  ordered_json annotations = ordered_json::array();
  for (const ManifestAnnotation& a : manifest.annotations) {
    annotations.push_back({{"image_id", a.image_id},
                           {"bbox", {a.box.x_min(), a.box.y_min(), a.box.width(), a.box.height()}},
                           {"category_id", class_id(a.cell_class)},
                           {"confidence", a.confidence}});
  }
  ordered_json categories = ordered_json::array();
  for (CellClass c : kAllClasses) {
    categories.push_back({{"id", class_id(c)}, {"name", class_name(c)}});
  }
  return {{"images", images}, {"annotations", annotations}, {"categories", categories}};
}

Manifest manifest_from_json(const json& doc, const std::filesystem::path& base_dir) {
  Manifest m;
  try {
    std::set<std::string> ids;
    for (const json& img : doc.at("images")) {
      ManifestImage mi;
      mi.id = img.at("id").get<std::string>();
      mi.path = img.at("path").get<std::string>();
      if (!base_dir.empty() && mi.path.is_relative()) mi.path = (base_dir / mi.path).lexically_normal();
      mi.width = img.at("width").get<int>();
      mi.height = img.at("height").get<int>();
      mi.split = img.value("split", std::string("train"));
      if (!ids.insert(mi.id).second) throw ValidationError("duplicate image id '" + mi.id + "'");
      m.images.push_back(std::move(mi));
    }
    for (const json& ann : doc.at("annotations")) {
      const std::string image_id = ann.at("image_id").get<std::string>();
      if (!ids.contains(image_id)) {
        throw ValidationError("annotation references unknown image id '" + image_id + "'");
      }
      const json& b = ann.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
      const BoundingBox box = BoundingBox::from_xywh(b[0].get<double>(), b[1].get<double>(),
                                                     b[2].get<double>(), b[3].get<double>());
      const double confidence = ann.value("confidence", 1.0);
      m.annotations.push_back(
          {image_id, box, class_from_id(ann.at("category_id").get<int>()), confidence});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

std::string dump_json(const ordered_json& doc) { return doc.dump(2) + "\n"; }

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  const auto base = std::filesystem::absolute(path).lexically_normal().parent_path();
  Manifest abs = manifest;
  for (ManifestImage& img : abs.images) img.path = std::filesystem::absolute(img.path).lexically_normal();
  write_text_atomic(path, dump_json(manifest_to_json(abs, base)));
}

Manifest read_manifest(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text(path));
  } catch (const json::parse_error& e) {
    throw ParseError("cannot parse manifest '" + path.string() + "': " + e.what());
  }
  return manifest_from_json(doc, std::filesystem::absolute(path).lexically_normal().parent_path());
}

}  // namespace mitodet
