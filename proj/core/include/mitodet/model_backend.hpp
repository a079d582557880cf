#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "mitodet/detector.hpp"

namespace mitodet {

/**
 * Sidecar describing an exported detector graph (ONNX).
 *
 *   {"model": "detector.onnx",
 *    "input": {"width": 256, "height": 256, "channel_order": "RGB",
 *              "scale": 0.00392156862745098, "mean": [..3], "std": [..3]},
 *    "class_map": {"1": "mitotic", "2": "nonmitotic"},
 *    "raw_outputs": false, "nms_iou": 0.5,
 *    "recipe": {...}}
 *
 * The graph takes one NCHW float tensor, each channel computed as
 * (pixel * scale - mean) / std, and returns an [N, 6] (or [1, N, 6]) tensor of
 * rows (x_min, y_min, x_max, y_max, score, category_id) in input pixels. When
 * raw_outputs is true the graph does no suppression and the backend applies
 * class-wise NMS at nms_iou.
 */
struct ModelSidecar {
  std::filesystem::path model_path;
  int input_width = 0;
  int input_height = 0;
  std::string channel_order = "RGB";
  double scale = 1.0 / 255.0;
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> std{1.0, 1.0, 1.0};
  std::map<int, CellClass> class_map;
  bool raw_outputs = false;
  double nms_iou = 0.5;
  nlohmann::json recipe;  // carried through untouched
};

/// Relative model paths resolve against `base_dir`. Throws ValidationError
/// when the class map is not a bijection onto {mitotic, nonmitotic}.
ModelSidecar sidecar_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir);
ModelSidecar read_model_sidecar(const std::filesystem::path& path);

/// Accepts either the sidecar JSON or the model file with a sibling `.json`.
std::unique_ptr<DetectorBackend> portable_model(const std::filesystem::path& path,
                                                DetectorOptions options = {});

}  // namespace mitodet
