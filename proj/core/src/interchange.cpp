#include "mitodet/interchange.hpp"

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/manifest.hpp"

namespace mitodet {

nlohmann::ordered_json detections_to_json(const DetectionSet& dets) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& [image_id, list] : dets) {
    std::vector<Detection> sorted = list;
    sort_by_score(sorted);
    for (const Detection& d : sorted) {
      out.push_back({{"image_id", image_id},
                     {"category_id", class_id(d.cell_class)},
                     {"bbox", {d.box.x_min(), d.box.y_min(), d.box.width(), d.box.height()}},
                     {"score", d.score}});
    }
  }
  return out;
}

DetectionSet detections_from_json(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError("detection file must be a JSON array");
  DetectionSet out;
  try {
    for (const auto& item : doc) {
      const auto& b = item.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("bbox must be [x, y, w, h]");
      const BoundingBox box = BoundingBox::from_xywh(b[0].get<double>(), b[1].get<double>(),
                                                     b[2].get<double>(), b[3].get<double>());
      out[item.at("image_id").get<std::string>()].push_back(make_detection(
          box, class_from_id(item.at("category_id").get<int>()), item.at("score").get<double>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed detection entry: ") + e.what());
  }
  return out;
}

void write_detections(const std::filesystem::path& path, const DetectionSet& dets) {
  write_text_atomic(path, dump_json(detections_to_json(dets)));
}

DetectionSet read_detections(const std::filesystem::path& path) {
  try {
    return detections_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse detections '" + path.string() + "': " + e.what());
  }
}

}  // namespace mitodet
