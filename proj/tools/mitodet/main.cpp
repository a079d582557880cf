// mitodet: command-line front end for the mitosis detection pipeline.

#include <CLI11.hpp>

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "mitodet/config.hpp"
#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/log.hpp"
#include "mitodet/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mitodet;

namespace {

// Options bound to RunConfig fields. Parsed values land in `cli`; only flags
// the user actually passed are copied over the config-file/default values.
class Binder {
 public:
  explicit Binder(CLI::App* app) : app_(app) {}

  template <typename T>
  CLI::Option* field(const std::string& name, T RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app_->add_option(name, cli_.*member, help);
    opt->default_str(default_text(RunConfig{}.*member));
    bound_.push_back({opt, [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; }});
    return opt;
  }

  CLI::Option* flag(const std::string& name, bool RunConfig::*member, const std::string& help) {
    CLI::Option* opt = app_->add_flag(name, cli_.*member, help);
    bound_.push_back({opt, [member](RunConfig& dst, const RunConfig& src) { dst.*member = src.*member; }});
    return opt;
  }

  void common() {
    app_->add_option("--config", config_path_,
                     "Key-value config file; explicit flags take precedence over it")
        ->check(CLI::ExistingFile);
    app_->add_option("--jobs,-j", jobs_, "Worker threads (0 = all available cores)")
        ->default_val(0);
    app_->add_flag("--verbose,-v", verbose_, "Print progress messages to stderr");
  }

  /// defaults < config file < explicit flags
  RunConfig merged() const {
    RunConfig out;
    if (!config_path_.empty()) out = read_config(config_path_, out);
    for (const auto& b : bound_) {
      if (b.option->count() > 0) b.copy(out, cli_);
    }
    validate(out);
    return out;
  }

  unsigned jobs() const { return jobs_; }
  bool verbose() const { return verbose_; }
  CLI::App* app() const { return app_; }

 private:
  template <typename T>
  static std::string default_text(const T& v) {
    if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else {
      std::ostringstream s;
      s << v;
      return s.str();
    }
  }

  struct Bound {
    CLI::Option* option;
    std::function<void(RunConfig&, const RunConfig&)> copy;
  };

  CLI::App* app_;
  RunConfig cli_;
  std::vector<Bound> bound_;
  std::string config_path_;
  unsigned jobs_ = 0;
  bool verbose_ = false;
};

// Where a stage writing a single file keeps its config snapshot.
fs::path snapshot_for_file(const fs::path& file) {
  return file.parent_path() / (file.stem().string() + ".run_config.txt");
}

void persist(const fs::path& path, const RunConfig& config) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  write_text_atomic(path, config_to_text(config));
}

DetectOptions detect_options(const RunConfig& c, unsigned jobs) {
  DetectOptions d;
  d.patch_size = c.patch_size;
  d.overlap = c.overlap;
  d.merge_iou = c.merge_iou;
  d.render = c.render;
  d.render_options.display_threshold = c.display_threshold;
  d.render_options.draw_scores = c.render_scores;
  d.jobs = jobs;
  return d;
}

EvalOptions eval_options(const RunConfig& c) {
  EvalOptions e;
  e.iou_thresholds = c.coco_sweep ? coco_iou_thresholds() : std::vector<double>{c.eval_iou};
  e.granularity = c.eval_mode;
  return e;
}

IngestOptions ingest_options(const RunConfig& c) {
  IngestOptions i;
  i.box_side = c.box_side;
  i.split_ratio = c.split;
  i.seed = c.seed;
  i.mitosis_threshold = c.mitosis_threshold;
  i.min_border_fraction = c.min_visible;
  return i;
}

void add_ingest_flags(Binder& b) {
  b.field("--box-side", &RunConfig::box_side, "Side of the box derived from each centroid, in pixels");
  b.field("--mitosis-threshold", &RunConfig::mitosis_threshold,
          "Confidence at or above which a centroid is labeled mitotic");
  b.field("--split", &RunConfig::split, "Fraction of slides assigned to the training split");
  b.field("--seed", &RunConfig::seed, "Seed for the split shuffle and oracle noise");
  b.field("--min-visible", &RunConfig::min_visible,
          "Minimum fraction of a box that must survive clipping (image border, patch edge)");
}

void add_detect_flags(Binder& b) {
  b.field("--backend", &RunConfig::backend, "Detector: oracle, blob or model:PATH");
  b.field("--overlap", &RunConfig::overlap, "Overlap between neighbouring patches, in pixels");
  b.field("--score-threshold", &RunConfig::score_threshold, "Drop detections scoring below this");
  b.field("--max-detections", &RunConfig::max_detections, "Per-patch detection cap (0 = none)");
  b.field("--oracle-jitter", &RunConfig::oracle_jitter, "Oracle: std of box corner noise, in pixels");
  b.field("--oracle-drop", &RunConfig::oracle_drop, "Oracle: probability of dropping each box");
  b.field("--oracle-spurious", &RunConfig::oracle_spurious, "Oracle: mean spurious boxes per patch");
  b.field("--merge-iou", &RunConfig::merge_iou, "IoU at which overlapping patch detections merge");
  b.flag("--render,!--no-render", &RunConfig::render, "Write annotated slide PNGs");
  b.flag("--render-scores", &RunConfig::render_scores, "Draw scores next to rendered boxes");
  b.field("--display-threshold", &RunConfig::display_threshold, "Minimum score drawn when rendering");
}

void add_eval_flags(Binder& b) {
  b.field("--eval-mode", &RunConfig::eval_mode, "Evaluation granularity: slide or patch")
      ->check(CLI::IsMember({"slide", "patch"}));
  b.field("--eval-split", &RunConfig::eval_split, "Split evaluated: validation, train or all")
      ->check(CLI::IsMember({"validation", "train", "all"}));
  b.field("--iou", &RunConfig::eval_iou, "Single IoU threshold (disables the COCO sweep)");
  b.flag("--coco-sweep,!--no-coco-sweep", &RunConfig::coco_sweep,
         "Average over IoU 0.50:0.05:0.95 (default); --iou implies --no-coco-sweep");
}

// --iou given without an explicit sweep flag selects single-threshold mode.
RunConfig resolve_iou(RunConfig c, const CLI::App* sub) {
  if (sub->count("--iou") > 0 && sub->count("--coco-sweep") == 0 && sub->count("--no-coco-sweep") == 0) {
    c.coco_sweep = false;
  }
  return c;
}

void print_report(const EvalReport& report) { std::cout << format_report(report); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mitodet: mitotic cell detection on whole-slide frames"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "mitodet 0.1.0");

  // ingest
  CLI::App* ingest = app.add_subcommand("ingest", "Convert centroid CSVs and slide PNGs into a manifest");
  Binder ingest_b(ingest);
  std::string ingest_out;
  ingest_b.field("--annotations", &RunConfig::annotations_dir, "Directory of centroid CSV files");
  ingest_b.field("--images", &RunConfig::images_dir, "Directory of slide PNG images");
  add_ingest_flags(ingest_b);
  ingest->add_option("--out,-o", ingest_out, "Manifest JSON to write")->required();
  ingest_b.common();

  // normalize
  CLI::App* normalize = app.add_subcommand("normalize", "Reinhard-normalize a directory of PNGs");
  Binder normalize_b(normalize);
  std::string norm_target, norm_in, norm_out;
  normalize->add_option("--target", norm_target, "Reference PNG whose colour statistics are matched")
      ->required()
      ->check(CLI::ExistingFile);
  normalize->add_option("--in", norm_in, "Directory of PNGs to normalize")->required();
  normalize->add_option("--out,-o", norm_out, "Output directory")->required();
  normalize_b.field("--epsilon", &RunConfig::epsilon, "Guard added to the source standard deviation");
  normalize_b.common();

  // tile
  CLI::App* tile = app.add_subcommand("tile", "Cut manifest slides into fixed-size patches");
  Binder tile_b(tile);
  std::string tile_manifest, tile_out;
  bool drop_empty = false;
  tile->add_option("--manifest", tile_manifest, "Slide manifest JSON")->required()->check(CLI::ExistingFile);
  tile_b.field("--patch-size", &RunConfig::patch_size, "Patch side in pixels (256, 512, 1024 or any positive value)");
  tile_b.field("--overlap", &RunConfig::overlap, "Overlap between neighbouring patches, in pixels");
  tile_b.field("--min-visible", &RunConfig::min_visible,
               "Minimum fraction of a box kept inside a patch for it to be projected");
  tile->add_flag("--drop-empty-train", drop_empty, "Skip training patches without annotations");
  tile->add_option("--out,-o", tile_out, "Output directory")->required();
  tile_b.common();

  // detect
  CLI::App* detect = app.add_subcommand("detect", "Run a detector over tiled slides and aggregate");
  Binder detect_b(detect);
  std::string detect_manifest, detect_out;
  detect->add_option("--manifest", detect_manifest, "Slide manifest JSON")->required()->check(CLI::ExistingFile);
  detect_b.field("--patch-size", &RunConfig::patch_size, "Patch side in pixels");
  add_detect_flags(detect_b);
  detect_b.field("--seed", &RunConfig::seed, "Seed for oracle noise");
  detect_b.field("--min-visible", &RunConfig::min_visible,
                 "Oracle in patch mode: minimum visible fraction of a projected box");
  detect_b.field("--eval-mode", &RunConfig::eval_mode,
                 "Oracle replay granularity: slide (whole boxes) or patch (projected boxes)")
      ->check(CLI::IsMember({"slide", "patch"}));
  detect->add_option("--out,-o", detect_out, "Output directory")->required();
  detect_b.common();

  // evaluate
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score detections against a manifest (COCO protocol)");
  Binder eval_b(evaluate_cmd);
  std::string eval_manifest, eval_dets, eval_out;
  evaluate_cmd->add_option("--manifest", eval_manifest, "Manifest JSON holding the ground truth")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--detections", eval_dets, "Detection JSON (COCO results format)")
      ->required()
      ->check(CLI::ExistingFile);
  add_eval_flags(eval_b);
  evaluate_cmd->add_option("--out,-o", eval_out, "Report JSON to write (the table always goes to stdout)");
  eval_b.common();

  // pipeline
  CLI::App* pipeline = app.add_subcommand("pipeline", "ingest, normalize, tile, detect and evaluate in one run");
  Binder pipe_b(pipeline);
  pipe_b.field("--annotations", &RunConfig::annotations_dir, "Directory of centroid CSV files");
  pipe_b.field("--images", &RunConfig::images_dir, "Directory of slide PNG images");
  pipe_b.field("--out,-o", &RunConfig::output_dir, "Run directory (default $MITODET_OUTPUT_ROOT or ./mitodet-out)");
  add_ingest_flags(pipe_b);
  pipe_b.field("--normalization", &RunConfig::normalization,
               "Stain normalization: off, reinhard (first training slide) or reinhard:PATH");
  pipe_b.field("--epsilon", &RunConfig::epsilon, "Guard added to the source standard deviation");
  pipe_b.field("--patch-size", &RunConfig::patch_size, "Patch side in pixels (256, 512, 1024 or any positive value)");
  add_detect_flags(pipe_b);
  add_eval_flags(pipe_b);
  pipe_b.common();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    Binder* active = nullptr;
    for (Binder* b : {&ingest_b, &normalize_b, &tile_b, &detect_b, &eval_b, &pipe_b}) {
      if (b->app()->parsed()) active = b;
    }
    if (active->verbose()) {
      set_log_sink([](LogLevel level, std::string_view msg) {
        std::cerr << (level == LogLevel::kWarning ? "warning: " : "") << msg << '\n';
      });
    }
    const unsigned jobs = active->jobs();

    if (ingest->parsed()) {
      const RunConfig c = ingest_b.merged();
      if (c.annotations_dir.empty() || c.images_dir.empty()) {
        throw ValidationError("ingest needs --annotations and --images");
      }
      run_ingest(c.annotations_dir, c.images_dir, ingest_options(c), ingest_out);
      persist(snapshot_for_file(ingest_out), c);
    } else if (normalize->parsed()) {
      RunConfig c = normalize_b.merged();
      c.normalization = "reinhard:" + norm_target;
      c.output_dir = norm_out;
      run_normalize_dir(norm_target, norm_in, norm_out, c.epsilon, jobs);
      persist(fs::path(norm_out) / "run_config.txt", c);
    } else if (tile->parsed()) {
      RunConfig c = tile_b.merged();
      c.output_dir = tile_out;
      const TileOutcome t =
          run_tile(read_manifest(tile_manifest), {c.patch_size, c.overlap, c.min_visible, drop_empty, jobs}, tile_out);
      persist(fs::path(tile_out) / "run_config.txt", c);
      log_info("tile: " + std::to_string(t.patch_count) + " patches written");
    } else if (detect->parsed()) {
      RunConfig c = detect_b.merged();
      c.output_dir = detect_out;
      const Manifest manifest = read_manifest(detect_manifest);
      const auto backend = make_backend(c, manifest);
      run_detect(manifest, *backend, detect_options(c, jobs), detect_out);
      persist(fs::path(detect_out) / "run_config.txt", c);
    } else if (evaluate_cmd->parsed()) {
      const RunConfig c = resolve_iou(eval_b.merged(), evaluate_cmd);
      const EvalReport report = run_evaluate(read_manifest(eval_manifest), read_detections(eval_dets),
                                             c.eval_split, eval_options(c), eval_out);
      if (!eval_out.empty()) persist(snapshot_for_file(eval_out), c);
      print_report(report);
    } else if (pipeline->parsed()) {
      const RunConfig c = resolve_iou(pipe_b.merged(), pipeline);
      const EvalReport report = run_pipeline(c, jobs);
      print_report(report);
    }
  } catch (const Error& e) {
    std::cerr << "mitodet: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "mitodet: unexpected error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
