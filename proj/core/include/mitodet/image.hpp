#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace mitodet {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kWhite{255, 255, 255};

/// Interleaved 8-bit image, row-major, `channels` samples per pixel.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 3, std::uint8_t fill = 0);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

  std::uint8_t& at(int x, int y, int c) { return data_[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return data_[index(x, y, c)]; }

  Rgb rgb(int x, int y) const;
  void set_rgb(int x, int y, Rgb value);

  std::span<std::uint8_t> row(int y);
  std::span<const std::uint8_t> row(int y) const;
  std::span<std::uint8_t> data() { return data_; }
  std::span<const std::uint8_t> data() const { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width_ + x) * channels_ + c;
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 0;
  std::vector<std::uint8_t> data_;
};

struct ImageSize {
  int width = 0;
  int height = 0;
};

/// Decodes any PNG to 8-bit RGB (alpha dropped, gray expanded, 16-bit reduced).
Image read_png(const std::filesystem::path& path);

/// Reads only the PNG header.
ImageSize read_png_size(const std::filesystem::path& path);

/// Writes 8-bit RGB/gray PNG through a temp file and rename.
void write_png(const std::filesystem::path& path, const Image& image, int compression_level = 6);

}  // namespace mitodet
