#include "mitodet/stain.hpp"

#include <algorithm>
#include <cmath>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/log.hpp"
#include "mitodet/manifest.hpp"

namespace mitodet {

ChannelStats channel_stats(const Image& image) {
  if (image.channels() != 3) {
    throw ContractError("channel_stats needs 3 channels, got " + std::to_string(image.channels()));
  }
  if (image.pixel_count() == 0) throw ContractError("channel_stats on an image with no pixels");

  // Histogram first: exact integer sums, then a two-pass variance over 256 bins.
  std::array<std::array<std::uint64_t, 256>, 3> hist{};
  const auto data = image.data();
  for (std::size_t i = 0; i < data.size(); i += 3) {
    ++hist[0][data[i]];
    ++hist[1][data[i + 1]];
    ++hist[2][data[i + 2]];
  }
  const double n = static_cast<double>(image.pixel_count());
  ChannelStats s;
  for (int c = 0; c < 3; ++c) {
    std::uint64_t sum = 0;
    for (int v = 0; v < 256; ++v) sum += hist[c][v] * static_cast<std::uint64_t>(v);
    const double mean = static_cast<double>(sum) / n;
    double ss = 0.0;
    for (int v = 0; v < 256; ++v) {
      const double d = v - mean;
      ss += static_cast<double>(hist[c][v]) * d * d;
    }
    s.mean[c] = mean;
    s.std[c] = std::sqrt(ss / n);
  }
  return s;
}

double reinhard_value(double value, double source_mean, double source_std, double target_mean,
                      double target_std, double epsilon) {
  return (value - source_mean) / std::max(source_std, epsilon) * target_std + target_mean;
}

Image reinhard_map(const Image& image, const ChannelStats& source, const ChannelStats& target,
                   double epsilon) {
  if (image.channels() != 3) {
    throw ContractError("reinhard_map: stats have 3 channels, image has " +
                        std::to_string(image.channels()));
  }
  if (!(epsilon > 0.0)) throw ValidationError("reinhard epsilon must be positive");

  // The map is affine per channel, so a 256-entry table per channel is exact.
  std::array<std::array<std::uint8_t, 256>, 3> lut{};
  for (int c = 0; c < 3; ++c) {
    for (int v = 0; v < 256; ++v) {
      const double mapped =
          reinhard_value(v, source.mean[c], source.std[c], target.mean[c], target.std[c], epsilon);
      lut[c][v] = static_cast<std::uint8_t>(std::round(std::clamp(mapped, 0.0, 255.0)));
    }
  }
  Image out = image;
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); i += 3) {
    data[i] = lut[0][data[i]];
    data[i + 1] = lut[1][data[i + 1]];
    data[i + 2] = lut[2][data[i + 2]];
  }
  return out;
}

Image reinhard_normalize(const Image& image, const ChannelStats& target, double epsilon) {
  return reinhard_map(image, channel_stats(image), target, epsilon);
}

ChannelStats fit_target(const Image& reference) {
  ChannelStats s = channel_stats(reference);
  if (std::any_of(s.std.begin(), s.std.end(), [](double v) { return v == 0.0; })) {
    log_warning("normalization target has a constant channel; mapped images will be flat there");
  }
  return s;
}

ChannelStats fit_target(const std::filesystem::path& reference_png) {
  return fit_target(read_png(reference_png));
}

nlohmann::ordered_json stats_to_json(const ChannelStats& stats) {
  return {{"mean", stats.mean}, {"std", stats.std}};
}

ChannelStats stats_from_json(const nlohmann::json& doc) {
  ChannelStats s;
  try {
    s.mean = doc.at("mean").get<std::array<double, 3>>();
    s.std = doc.at("std").get<std::array<double, 3>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed channel stats: ") + e.what());
  }
  for (double v : s.std) {
    if (!(v >= 0.0)) throw ValidationError("channel std must be non-negative");
  }
  return s;
}

void write_stats(const std::filesystem::path& path, const ChannelStats& stats) {
  write_text_atomic(path, dump_json(stats_to_json(stats)));
}

ChannelStats read_stats(const std::filesystem::path& path) {
  try {
    return stats_from_json(nlohmann::json::parse(read_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("cannot parse stats '" + path.string() + "': " + e.what());
  }
}

}  // namespace mitodet
