#pragma once

#include <array>
#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mitodet/image.hpp"

namespace mitodet {

/// Per-channel population mean and standard deviation, channel order R, G, B.
struct ChannelStats {
  std::array<double, 3> mean{};
  std::array<double, 3> std{};

  friend bool operator==(const ChannelStats&, const ChannelStats&) = default;
};

inline constexpr double kDefaultStainEpsilon = 1e-6;

/// Throws ContractError for images without exactly 3 channels or with no pixels.
ChannelStats channel_stats(const Image& image);

/// Unquantized per-channel affine map:
/// (value - source_mean) / max(source_std, epsilon) * target_std + target_mean.
double reinhard_value(double value, double source_mean, double source_std, double target_mean,
                      double target_std, double epsilon = kDefaultStainEpsilon);

/**
 * Matches each R, G, B channel's mean and standard deviation to `target`.
 * Results are clamped to [0, 255] and rounded half away from zero. The map is
 * applied directly on the RGB channels, not in a decorrelated color space.
 */
Image reinhard_map(const Image& image, const ChannelStats& source, const ChannelStats& target,
                   double epsilon = kDefaultStainEpsilon);

/// reinhard_map with source = channel_stats(image).
Image reinhard_normalize(const Image& image, const ChannelStats& target,
                         double epsilon = kDefaultStainEpsilon);

/// Stats of a reference image; logs a warning when any channel is constant.
ChannelStats fit_target(const Image& reference);
ChannelStats fit_target(const std::filesystem::path& reference_png);

/// {"mean":[r,g,b],"std":[r,g,b]}
nlohmann::ordered_json stats_to_json(const ChannelStats& stats);
ChannelStats stats_from_json(const nlohmann::json& doc);

void write_stats(const std::filesystem::path& path, const ChannelStats& stats);
ChannelStats read_stats(const std::filesystem::path& path);

}  // namespace mitodet
