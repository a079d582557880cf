#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mitodet/geometry.hpp"

namespace mitodet {

/// Detections keyed by image id (slide id or patch name).
using DetectionSet = std::map<std::string, std::vector<Detection>>;

/// COCO-results array `[{"image_id","category_id","bbox":[x,y,w,h],"score"}]`,
/// ordered by image id, then by descending score (stable).
nlohmann::ordered_json detections_to_json(const DetectionSet& dets);
DetectionSet detections_from_json(const nlohmann::json& doc);

void write_detections(const std::filesystem::path& path, const DetectionSet& dets);
DetectionSet read_detections(const std::filesystem::path& path);

}  // namespace mitodet
