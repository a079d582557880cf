#include "mitodet/image.hpp"

#include <png.h>

#include <cstdio>
#include <memory>
#include <string>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"

namespace mitodet {

Image::Image(int width, int height, int channels, std::uint8_t fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0 || channels < 1 || channels > 4) {
    throw ValidationError("invalid image geometry " + std::to_string(width) + "x" +
                          std::to_string(height) + "x" + std::to_string(channels));
  }
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

Rgb Image::rgb(int x, int y) const {
  const std::size_t i = index(x, y, 0);
  return {data_[i], data_[i + 1], data_[i + 2]};
}

void Image::set_rgb(int x, int y, Rgb value) {
  const std::size_t i = index(x, y, 0);
  data_[i] = value[0];
  data_[i + 1] = value[1];
  data_[i + 2] = value[2];
}

std::span<std::uint8_t> Image::row(int y) {
  return std::span(data_).subspan(index(0, y, 0), static_cast<std::size_t>(width_) * channels_);
}

std::span<const std::uint8_t> Image::row(int y) const {
  return std::span(data_).subspan(index(0, y, 0), static_cast<std::size_t>(width_) * channels_);
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  return f;
}

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

// libpng reports errors through longjmp; keep the jmp_buf frames free of
// objects with non-trivial destructors.
class PngReader {
 public:
  explicit PngReader(const std::filesystem::path& path) : path_(path), file_(open_file(path, "rb")) {
    png_byte sig[8];
    if (std::fread(sig, 1, 8, file_.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
      throw IoError("'" + path.string() + "' is not a PNG file");
    }
    png_ = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error_, png_error_fn, png_warning_fn);
    info_ = png_ ? png_create_info_struct(png_) : nullptr;
    if (!png_ || !info_) throw IoError("libpng initialization failed");
    png_init_io(png_, file_.get());
    png_set_sig_bytes(png_, 8);
  }

  ~PngReader() { png_destroy_read_struct(&png_, &info_, nullptr); }

  PngReader(const PngReader&) = delete;
  PngReader& operator=(const PngReader&) = delete;

  ImageSize header() {
    if (!read_info()) fail();
    return {static_cast<int>(png_get_image_width(png_, info_)),
            static_cast<int>(png_get_image_height(png_, info_))};
  }

  Image decode() {
    const ImageSize size = header();
    Image img(size.width, size.height, 3);
    std::vector<png_bytep> rows(static_cast<std::size_t>(size.height));
    for (int y = 0; y < size.height; ++y) rows[y] = img.row(y).data();
    if (!read_rows(rows.data())) fail();
    return img;
  }

 private:
  bool read_info() {
    if (setjmp(png_jmpbuf(png_))) return false;
    png_read_info(png_, info_);
    const png_byte color = png_get_color_type(png_, info_);
    const png_byte depth = png_get_bit_depth(png_, info_);
    if (depth == 16) png_set_strip_16(png_);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png_);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png_);
    if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png_);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png_);
    if (png_get_valid(png_, info_, PNG_INFO_tRNS)) png_set_strip_alpha(png_);
    png_read_update_info(png_, info_);
    return true;
  }

  bool read_rows(png_bytepp rows) {
    if (setjmp(png_jmpbuf(png_))) return false;
    png_read_image(png_, rows);
    png_read_end(png_, nullptr);
    return true;
  }

  [[noreturn]] void fail() const {
    throw IoError("failed to decode PNG '" + path_.string() + "': " + error_);
  }

  std::filesystem::path path_;
  FilePtr file_;
  std::string error_;
  png_structp png_ = nullptr;
  png_infop info_ = nullptr;
};

bool encode_png(std::FILE* f, const Image& image, int level, std::string* error) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, error, png_error_fn, png_warning_fn);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    *error = "libpng initialization failed";
    return false;
  }
  std::vector<png_bytep> rows(static_cast<std::size_t>(image.height()));
  for (int y = 0; y < image.height(); ++y) {
    rows[y] = const_cast<png_bytep>(image.row(y).data());
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, f);
  png_set_compression_level(png, level);
  const int color = image.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_set_IHDR(png, info, image.width(), image.height(), 8, color, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

}  // namespace

Image read_png(const std::filesystem::path& path) { return PngReader(path).decode(); }

ImageSize read_png_size(const std::filesystem::path& path) { return PngReader(path).header(); }

void write_png(const std::filesystem::path& path, const Image& image, int compression_level) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw ContractError("write_png supports 1 or 3 channels, got " +
                        std::to_string(image.channels()));
  }
  if (image.empty()) throw ContractError("cannot write an empty image to '" + path.string() + "'");
  AtomicFile out(path);
  std::string error;
  {
    FilePtr f = open_file(out.temp_path(), "wb");
    if (!encode_png(f.get(), image, compression_level, &error)) {
      throw IoError("failed to encode PNG '" + path.string() + "': " + error);
    }
    if (std::fflush(f.get()) != 0) throw IoError("failed to write '" + path.string() + "'");
  }
  out.commit();
}

}  // namespace mitodet
