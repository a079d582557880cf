#include "mitodet/model_backend.hpp"

#include <opencv2/core.hpp>
#include <opencv2/dnn.hpp>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <set>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"

namespace mitodet {

ModelSidecar sidecar_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  ModelSidecar s;
  try {
    s.model_path = doc.at("model").get<std::string>();
    if (s.model_path.is_relative()) s.model_path = base_dir / s.model_path;
    const auto& in = doc.at("input");
    s.input_width = in.at("width").get<int>();
    s.input_height = in.at("height").get<int>();
    s.channel_order = in.value("channel_order", std::string("RGB"));
    s.scale = in.value("scale", 1.0 / 255.0);
    s.mean = in.value("mean", s.mean);
    s.std = in.value("std", s.std);
    for (const auto& [key, value] : doc.at("class_map").items()) {
      s.class_map[std::stoi(key)] = class_from_name(value.get<std::string>());
    }
    s.raw_outputs = doc.value("raw_outputs", false);
    s.nms_iou = doc.value("nms_iou", 0.5);
    s.recipe = doc.value("recipe", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed model sidecar: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("model sidecar class_map keys must be integers");
  }
  if (s.input_width <= 0 || s.input_width != s.input_height) {
    throw ValidationError("model input must be square and non-empty");
  }
  if (s.channel_order != "RGB" && s.channel_order != "BGR") {
    throw ValidationError("channel_order must be RGB or BGR");
  }
  for (double v : s.std) {
    if (!(v > 0.0)) throw ValidationError("model normalization std must be positive");
  }
  std::set<CellClass> targets;
  for (const auto& [id, cls] : s.class_map) targets.insert(cls);
  if (s.class_map.size() != 2 || targets.size() != 2) {
    throw ValidationError("model class map must be a bijection onto {mitotic, nonmitotic}");
  }
  return s;
}

ModelSidecar read_model_sidecar(const std::filesystem::path& path) {
  try {
    return sidecar_from_json(nlohmann::json::parse(read_text(path)),
                             std::filesystem::absolute(path).parent_path());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse model sidecar '" + path.string() + "': " + e.what());
  }
}

namespace {

class PortableModelBackend final : public DetectorBackend {
 public:
  PortableModelBackend(ModelSidecar sidecar, DetectorOptions options)
      : DetectorBackend(sidecar.input_width, options), sidecar_(std::move(sidecar)) {
    try {
      net_ = cv::dnn::readNetFromONNX(sidecar_.model_path.string());
    } catch (const cv::Exception& e) {
      throw IoError("cannot load model '" + sidecar_.model_path.string() + "': " + e.what());
    }
    if (net_.empty()) throw IoError("model '" + sidecar_.model_path.string() + "' is empty");
    net_.setPreferableBackend(cv::dnn::DNN_BACKEND_OPENCV);
    net_.setPreferableTarget(cv::dnn::DNN_TARGET_CPU);
  }

  std::string name() const override { return "model"; }
  bool shareable() const override { return false; }

 protected:
  std::vector<Detection> run(const PatchContext&, const Image& patch) const override {
    const int n = patch.width();
    const int sizes[] = {1, 3, n, n};
    cv::Mat blob(4, sizes, CV_32F);
    auto* planes = blob.ptr<float>();
    const std::size_t plane = static_cast<std::size_t>(n) * n;
    const bool bgr = sidecar_.channel_order == "BGR";
    for (int c = 0; c < 3; ++c) {
      const int src_c = bgr ? 2 - c : c;
      float* dst = planes + c * plane;
      for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
          const double v = patch.at(x, y, src_c) * sidecar_.scale;
          dst[static_cast<std::size_t>(y) * n + x] =
              static_cast<float>((v - sidecar_.mean[c]) / sidecar_.std[c]);
        }
      }
    }

    cv::Mat output;
    {
      std::lock_guard lock(mutex_);
      net_.setInput(blob);
      output = net_.forward().clone();
    }
    if (output.total() % 6 != 0) {
      throw ContractError("model output has " + std::to_string(output.total()) +
                          " values, expected rows of 6");
    }
    cv::Mat rows = output.reshape(1, static_cast<int>(output.total() / 6));
    rows.convertTo(rows, CV_64F);

    std::vector<Detection> out;
    for (int r = 0; r < rows.rows; ++r) {
      const double* v = rows.ptr<double>(r);
      const auto cls = sidecar_.class_map.find(static_cast<int>(std::lround(v[5])));
      if (cls == sidecar_.class_map.end()) {
        throw ContractError("model emitted unknown category id " + std::to_string(v[5]));
      }
      if (!(v[0] < v[2]) || !(v[1] < v[3])) continue;
      const double score = std::clamp(v[4], 0.0, 1.0);
      out.push_back({BoundingBox(v[0], v[1], v[2], v[3]), cls->second, score});
    }
    if (sidecar_.raw_outputs) out = nms(out, sidecar_.nms_iou);
    return out;
  }

 private:
  ModelSidecar sidecar_;
  mutable std::mutex mutex_;
  mutable cv::dnn::Net net_;
};

}  // namespace

std::unique_ptr<DetectorBackend> portable_model(const std::filesystem::path& path,
                                                DetectorOptions options) {
  std::filesystem::path sidecar = path;
  if (path.extension() != ".json") sidecar.replace_extension(".json");
  if (!std::filesystem::exists(sidecar)) {
    throw IoError("model sidecar '" + sidecar.string() + "' not found");
  }
  return std::make_unique<PortableModelBackend>(read_model_sidecar(sidecar), options);
}

}  // namespace mitodet
