#include "synthetic.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unistd.h>

#include "mitodet/random.hpp"

namespace mitodet::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

LogCapture::LogCapture() {
  previous_ = set_log_sink([this](LogLevel level, std::string_view msg) {
    if (level == LogLevel::kWarning) warnings_.emplace_back(msg);
  });
}

LogCapture::~LogCapture() { set_log_sink(previous_); }

void draw_disc(Image& image, Point center, double radius, Rgb color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(center.x - radius)));
  const int x1 = std::min(image.width() - 1, static_cast<int>(std::ceil(center.x + radius)));
  const int y0 = std::max(0, static_cast<int>(std::floor(center.y - radius)));
  const int y1 = std::min(image.height() - 1, static_cast<int>(std::ceil(center.y + radius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      const double dx = x + 0.5 - center.x;
      const double dy = y + 0.5 - center.y;
      if (dx * dx + dy * dy <= radius * radius) image.set_rgb(x, y, color);
    }
  }
}

namespace {

std::uint8_t jittered(Rng& rng, int base, int spread) {
  const int v = base + static_cast<int>(rng.below(2 * spread + 1)) - spread;
  return static_cast<std::uint8_t>(std::clamp(v, 0, 255));
}

}  // namespace

SyntheticSlide make_slide(const std::string& id, const SlideSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  SyntheticSlide slide{id, Image(spec.width, spec.height), {}};
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      slide.image.set_rgb(x, y, {jittered(rng, 232, 10), jittered(rng, 182, 12), jittered(rng, 212, 10)});
    }
  }

  int attempts = 0;
  while (static_cast<int>(slide.cells.size()) < spec.cells && attempts++ < 10000) {
    const Point c{rng.uniform(spec.border_margin, spec.width - spec.border_margin),
                  rng.uniform(spec.border_margin, spec.height - spec.border_margin)};
    const bool crowded = std::any_of(slide.cells.begin(), slide.cells.end(), [&](const SyntheticCell& o) {
      return std::abs(o.centroid.x - c.x) < spec.min_spacing && std::abs(o.centroid.y - c.y) < spec.min_spacing;
    });
    if (crowded) continue;
    // Confidences on a 0.1 grid, both classes well represented.
    const double confidence = static_cast<double>(rng.below(11)) / 10.0;
    slide.cells.push_back({c, confidence});
    const bool mitotic = confidence >= 0.5;
    const Rgb color = mitotic ? Rgb{58, 28, 92} : Rgb{112, 78, 150};
    draw_disc(slide.image, c, rng.uniform(9.0, 15.0), color);
  }
  return slide;
}

Image random_tissue_image(int width, int height, std::uint64_t seed) {
  Rng rng(seed);
  Image img(width, height);
  std::array<double, 3> mean{}, spread{};
  for (int c = 0; c < 3; ++c) {
    mean[c] = rng.uniform(80.0, 180.0);
    spread[c] = rng.uniform(12.0, 40.0);
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = mean[c] + spread[c] * rng.normal();
        img.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return img;
}

std::vector<SyntheticSlide> make_slide_set(int n, std::uint64_t seed, int min_side, int max_side) {
  Rng rng(seed);
  std::vector<SyntheticSlide> out;
  for (int i = 0; i < n; ++i) {
    SlideSpec spec;
    spec.width = min_side + static_cast<int>(rng.below(max_side - min_side + 1));
    spec.height = min_side + static_cast<int>(rng.below(max_side - min_side + 1));
    spec.cells = 3 + static_cast<int>(rng.below(8));
    std::ostringstream id;
    id << "slide_" << std::setw(2) << std::setfill('0') << i;
    out.push_back(make_slide(id.str(), spec, derive_seed(seed, i)));
  }
  return out;
}

void write_slide_set(const fs::path& root, const std::vector<SyntheticSlide>& slides) {
  fs::create_directories(root / "images");
  fs::create_directories(root / "annotations");
  for (const SyntheticSlide& s : slides) {
    write_png(root / "images" / (s.id + ".png"), s.image, 1);
    std::ofstream csv(root / "annotations" / (s.id + ".csv"));
    csv << std::setprecision(17);
    for (const SyntheticCell& c : s.cells) {
      csv << c.centroid.x << ',' << c.centroid.y << ',' << c.confidence << '\n';
    }
  }
}

}  // namespace mitodet::testing
