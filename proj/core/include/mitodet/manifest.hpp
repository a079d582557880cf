#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mitodet/dataset.hpp"
#include "mitodet/geometry.hpp"

namespace mitodet {

/**
 * COCO-style dataset manifest shared by ingest, tile, detect and evaluate.
 *
 *   {"images":[{"id","path","width","height","split"}],
 *    "annotations":[{"image_id","bbox":[x,y,w,h],"category_id","confidence"}],
 *    "categories":[{"id":1,"name":"mitotic"},{"id":2,"name":"nonmitotic"}]}
 *
 * Image paths are stored relative to the manifest's directory when written and
 * resolved against it when read.
 */
struct ManifestImage {
  std::string id;
  std::filesystem::path path;
  int width = 0;
  int height = 0;
  std::string split;  // "train" | "validation"
};

struct ManifestAnnotation {
  std::string image_id;
  BoundingBox box;
  CellClass cell_class;
  double confidence;
};

struct Manifest {
  std::vector<ManifestImage> images;
  std::vector<ManifestAnnotation> annotations;

  const ManifestImage* find_image(const std::string& id) const;

  /// Ground truth per image id; every image is present, possibly with no boxes.
  std::map<std::string, std::vector<GroundTruth>> ground_truth() const;

  /// Copy restricted to one split ("train"/"validation"), or all for "all".
  Manifest filtered(const std::string& split) const;
};

Manifest to_manifest(const Dataset& dataset);

nlohmann::ordered_json manifest_to_json(const Manifest& manifest,
                                        const std::filesystem::path& base_dir = {});
Manifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

/// Formats a JSON document the same way every artifact writer does.
std::string dump_json(const nlohmann::ordered_json& doc);

}  // namespace mitodet
