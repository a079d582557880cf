#include "mitodet/config.hpp"

#include <charconv>
#include <cstdlib>
#include <sstream>
#include <type_traits>
#include <variant>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"

namespace mitodet {
namespace {

using Field = std::variant<std::string RunConfig::*, double RunConfig::*, int RunConfig::*,
                           std::uint64_t RunConfig::*, bool RunConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      {"annotations_dir", &RunConfig::annotations_dir},
      {"images_dir", &RunConfig::images_dir},
      {"output_dir", &RunConfig::output_dir},
      {"box_side", &RunConfig::box_side},
      {"mitosis_threshold", &RunConfig::mitosis_threshold},
      {"split", &RunConfig::split},
      {"seed", &RunConfig::seed},
      {"normalization", &RunConfig::normalization},
      {"epsilon", &RunConfig::epsilon},
      {"patch_size", &RunConfig::patch_size},
      {"overlap", &RunConfig::overlap},
      {"min_visible", &RunConfig::min_visible},
      {"backend", &RunConfig::backend},
      {"score_threshold", &RunConfig::score_threshold},
      {"max_detections", &RunConfig::max_detections},
      {"oracle_jitter", &RunConfig::oracle_jitter},
      {"oracle_drop", &RunConfig::oracle_drop},
      {"oracle_spurious", &RunConfig::oracle_spurious},
      {"merge_iou", &RunConfig::merge_iou},
      {"render", &RunConfig::render},
      {"render_scores", &RunConfig::render_scores},
      {"display_threshold", &RunConfig::display_threshold},
      {"eval_mode", &RunConfig::eval_mode},
      {"eval_split", &RunConfig::eval_split},
      {"coco_sweep", &RunConfig::coco_sweep},
      {"eval_iou", &RunConfig::eval_iou},
  };
  return table;
}

std::string format_double(double v) {
  // Shortest representation that round-trips.
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void validate(const RunConfig& c) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ValidationError("invalid configuration: " + what);
  };
  require(c.box_side > 0.0, "box_side must be positive");
  require(c.mitosis_threshold >= 0.0 && c.mitosis_threshold <= 1.0, "mitosis_threshold must lie in [0, 1]");
  require(c.split > 0.0 && c.split < 1.0, "split must lie in (0, 1)");
  require(c.normalization == "off" || c.normalization == "reinhard" ||
              c.normalization.starts_with("reinhard:"),
          "normalization must be off, reinhard or reinhard:PATH");
  require(c.epsilon > 0.0, "epsilon must be positive");
  require(c.patch_size > 0, "patch_size must be positive");
  require(c.overlap >= 0 && c.overlap < c.patch_size, "overlap must lie in [0, patch_size)");
  require(c.min_visible >= 0.0 && c.min_visible <= 1.0, "min_visible must lie in [0, 1]");
  require(c.backend == "oracle" || c.backend == "blob" || c.backend.starts_with("model:"),
          "backend must be oracle, blob or model:PATH");
  require(c.score_threshold >= 0.0 && c.score_threshold <= 1.0, "score_threshold must lie in [0, 1]");
  require(c.oracle_jitter >= 0.0, "oracle_jitter must be non-negative");
  require(c.oracle_drop >= 0.0 && c.oracle_drop <= 1.0, "oracle_drop must lie in [0, 1]");
  require(c.oracle_spurious >= 0.0, "oracle_spurious must be non-negative");
  require(c.merge_iou > 0.0 && c.merge_iou <= 1.0, "merge_iou must lie in (0, 1]");
  require(c.eval_mode == "slide" || c.eval_mode == "patch", "eval_mode must be slide or patch");
  require(c.eval_split == "all" || c.eval_split == "train" || c.eval_split == "validation",
          "eval_split must be all, train or validation");
  require(c.eval_iou > 0.0 && c.eval_iou <= 1.0, "eval_iou must lie in (0, 1]");
}

std::string config_to_text(const RunConfig& config) {
  std::ostringstream out;
  for (const Entry& e : entries()) {
    out << e.key << " = ";
    std::visit(
        [&](auto member) {
          const auto& v = config.*member;
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::string>) {
            out << v;
          } else if constexpr (std::is_same_v<T, bool>) {
            out << (v ? "true" : "false");
          } else if constexpr (std::is_same_v<T, double>) {
            out << format_double(v);
          } else {
            out << v;
          }
        },
        e.field);
    out << '\n';
  }
  return out.str();
}

RunConfig apply_config_text(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string_view key = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Entry* entry = nullptr;
    for (const Entry& e : entries()) {
      if (key == e.key) entry = &e;
    }
    if (!entry) {
      throw ParseError("config line " + std::to_string(line_no) + ": unknown key '" +
                       std::string(key) + "'");
    }
    bool ok = true;
    std::visit(
        [&](auto member) {
          auto& v = base.*member;
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::string>) {
            v = std::string(value);
          } else if constexpr (std::is_same_v<T, bool>) {
            if (value == "true") {
              v = true;
            } else if (value == "false") {
              v = false;
            } else {
              ok = false;
            }
          } else {
            ok = parse_number(value, v);
          }
        },
        entry->field);
    if (!ok) {
      throw ParseError("config line " + std::to_string(line_no) + ": bad value '" +
                       std::string(value) + "' for " + std::string(key));
    }
  }
  return base;
}

RunConfig read_config(const std::filesystem::path& path, RunConfig base) {
  return apply_config_text(read_text(path), std::move(base));
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const Entry& e : entries()) keys.emplace_back(e.key);
  return keys;
}

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("MITODET_OUTPUT_ROOT"); env && *env) return env;
  return "mitodet-out";
}

}  // namespace mitodet
