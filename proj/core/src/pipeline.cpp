#include "mitodet/pipeline.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "mitodet/error.hpp"
#include "mitodet/fileio.hpp"
#include "mitodet/log.hpp"
#include "mitodet/model_backend.hpp"
#include "mitodet/parallel.hpp"
#include "mitodet/tiling.hpp"

namespace mitodet {

namespace fs = std::filesystem;

IngestOutcome run_ingest(const fs::path& annotations_dir, const fs::path& images_dir,
                         const IngestOptions& options, const fs::path& manifest_path) {
  const std::vector<SlideSource> sources = discover_slides(annotations_dir, images_dir);
  const Dataset dataset = build_dataset(sources, options);
  IngestOutcome out{to_manifest(dataset), dataset.summary};
  write_manifest(manifest_path, out.manifest);
  log_info("ingest: " + std::to_string(dataset.train.size()) + " train / " +
           std::to_string(dataset.validation.size()) + " validation slides, " +
           std::to_string(dataset.summary.empty_records.size()) + " empty records removed");
  return out;
}

ChannelStats run_normalize_dir(const fs::path& target_png, const fs::path& in_dir,
                               const fs::path& out_dir, double epsilon, unsigned jobs) {
  if (!fs::is_directory(in_dir)) throw IoError("input directory '" + in_dir.string() + "' does not exist");
  const ChannelStats target = fit_target(target_png);
  std::vector<fs::path> inputs;
  for (const auto& entry : fs::directory_iterator(in_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") inputs.push_back(entry.path());
  }
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(out_dir);
  write_stats(out_dir / "target_stats.json", target);
  parallel_for(inputs.size(), jobs, [&](std::size_t i) {
    write_png(out_dir / inputs[i].filename(), reinhard_normalize(read_png(inputs[i]), target, epsilon));
  });
  return target;
}

Manifest normalize_manifest(const Manifest& manifest, const ChannelStats& target,
                            const fs::path& out_dir, double epsilon, unsigned jobs) {
  Manifest out = manifest;
  fs::create_directories(out_dir);
  write_stats(out_dir / "target_stats.json", target);
  parallel_for(out.images.size(), jobs, [&](std::size_t i) {
    ManifestImage& img = out.images[i];
    const fs::path dst = out_dir / (img.id + ".png");
    write_png(dst, reinhard_normalize(read_png(img.path), target, epsilon));
    img.path = dst;
  });
  return out;
}

namespace {

Image read_slide(const ManifestImage& img) {
  Image slide = read_png(img.path);
  if (slide.width() != img.width || slide.height() != img.height) {
    throw ContractError("image '" + img.id + "' is " + std::to_string(slide.width()) + "x" +
                        std::to_string(slide.height()) + " but the manifest says " +
                        std::to_string(img.width) + "x" + std::to_string(img.height));
  }
  return slide;
}

}  // namespace

TileOutcome run_tile(const Manifest& manifest, const TileOptions& options, const fs::path& out_dir) {
  fs::create_directories(out_dir / "grids");
  std::map<std::string, std::vector<const ManifestAnnotation*>> by_image;
  for (const ManifestAnnotation& a : manifest.annotations) by_image[a.image_id].push_back(&a);

  std::vector<Manifest> per_image(manifest.images.size());
  std::vector<std::size_t> empty_train(manifest.images.size(), 0);
  std::vector<std::size_t> empty_val(manifest.images.size(), 0);
  for (std::size_t i = 0; i < manifest.images.size(); ++i) {
    const ManifestImage& img = manifest.images[i];
    const Image slide = read_slide(img);
    const PatchGrid grid = PatchGrid::plan(img.width, img.height, options.patch_size, options.overlap);
    write_text_atomic(out_dir / "grids" / (img.id + ".json"), dump_json(grid_to_json(img.id, grid)));
    const std::vector<PatchSpec> specs = grid.specs();
    const auto& anns = by_image[img.id];
    std::vector<std::vector<ManifestAnnotation>> projected(specs.size());
    std::vector<char> keep(specs.size(), 1);
    parallel_for(specs.size(), options.jobs, [&](std::size_t k) {
      for (const ManifestAnnotation* a : anns) {
        const GroundTruth gt{a->box, a->cell_class};
        for (const GroundTruth& p : project_annotations({&gt, 1}, specs[k], options.min_visible)) {
          projected[k].push_back({patch_name(img.id, specs[k]), p.box, p.cell_class, a->confidence});
        }
      }
      if (projected[k].empty() && img.split == "train" && options.drop_empty_train) {
        keep[k] = 0;
        return;
      }
      write_png(out_dir / (patch_name(img.id, specs[k]) + ".png"), extract_patch(slide, grid, specs[k]));
    });
    Manifest& m = per_image[i];
    for (std::size_t k = 0; k < specs.size(); ++k) {
      if (projected[k].empty()) ++(img.split == "train" ? empty_train[i] : empty_val[i]);
      if (!keep[k]) continue;
      const std::string name = patch_name(img.id, specs[k]);
      m.images.push_back({name, out_dir / (name + ".png"), specs[k].size, specs[k].size, img.split});
      m.annotations.insert(m.annotations.end(), projected[k].begin(), projected[k].end());
    }
  }

  TileOutcome out;
  for (std::size_t i = 0; i < per_image.size(); ++i) {
    out.patch_manifest.images.insert(out.patch_manifest.images.end(), per_image[i].images.begin(),
                                     per_image[i].images.end());
    out.patch_manifest.annotations.insert(out.patch_manifest.annotations.end(),
                                          per_image[i].annotations.begin(),
                                          per_image[i].annotations.end());
    out.empty_train += empty_train[i];
    out.empty_validation += empty_val[i];
  }
  out.patch_count = out.patch_manifest.images.size();
  write_manifest(out_dir / "manifest.json", out.patch_manifest);
  const nlohmann::ordered_json summary = {
      {"patch_size", options.patch_size},
      {"overlap", options.overlap},
      {"min_visible", options.min_visible},
      {"slides", manifest.images.size()},
      {"patches", out.patch_count},
      {"empty_train_patches", out.empty_train},
      {"empty_validation_patches", out.empty_validation},
      {"empty_train_patches_dropped", options.drop_empty_train}};
  write_text_atomic(out_dir / "tile_summary.json", dump_json(summary));
  return out;
}

std::unique_ptr<DetectorBackend> make_backend(const RunConfig& config, const Manifest& manifest) {
  DetectorOptions opts{config.score_threshold, config.max_detections};
  if (config.backend == "oracle") {
    OracleConfig oc;
    oc.noise = {config.oracle_jitter, config.oracle_drop, config.oracle_spurious};
    oc.seed = config.seed;
    oc.mode = config.eval_mode == "patch" ? OracleMode::kPatch : OracleMode::kSlide;
    oc.min_visible_fraction = config.min_visible;
    oc.spurious_box_side = config.box_side;
    return oracle_from_manifest(manifest, config.patch_size, oc, opts);
  }
  if (config.backend == "blob") return blob_baseline(config.patch_size, BlobConfig{}, opts);
  if (config.backend.starts_with("model:")) {
    auto backend = portable_model(config.backend.substr(6), opts);
    if (backend->patch_size() != config.patch_size) {
      throw ValidationError("model expects " + std::to_string(backend->patch_size()) +
                            "px patches but patch_size is " + std::to_string(config.patch_size));
    }
    return backend;
  }
  throw ValidationError("unknown backend '" + config.backend + "'");
}

DetectOutcome run_detect(const Manifest& manifest, const DetectorBackend& backend,
                         const DetectOptions& options, const fs::path& out_dir) {
  if (backend.patch_size() != options.patch_size) {
    throw ContractError("backend " + backend.name() + " works on " +
                        std::to_string(backend.patch_size()) + "px patches, tiling uses " +
                        std::to_string(options.patch_size));
  }
  const unsigned jobs = backend.shareable() ? options.jobs : 1;
  fs::create_directories(out_dir / "slides");
  DetectOutcome out;
  for (const ManifestImage& img : manifest.images) {
    const Image slide = read_slide(img);
    const PatchGrid grid = PatchGrid::plan(img.width, img.height, options.patch_size, options.overlap);
    const std::vector<PatchSpec> specs = grid.specs();
    std::vector<std::vector<Detection>> local(specs.size());
    parallel_for(specs.size(), jobs, [&](std::size_t k) {
      local[k] = backend.detect({img.id, specs[k]}, extract_patch(slide, grid, specs[k]));
    });

    std::vector<PatchDetections> lifted;
    lifted.reserve(specs.size());
    const BoundingBox patch_bounds(0, 0, options.patch_size, options.patch_size);
    for (std::size_t k = 0; k < specs.size(); ++k) {
      lifted.push_back({specs[k], lift_detections(local[k], specs[k], grid)});
      std::vector<Detection>& clipped = out.patch_detections[patch_name(img.id, specs[k])];
      for (const Detection& d : local[k]) {
        if (const auto b = clip_box(d.box, patch_bounds)) clipped.push_back({*b, d.cell_class, d.score});
      }
    }
    const SlideDetections merged = aggregate(img.id, lifted, grid, options.merge_iou);
    out.slide_detections[img.id] = merged.detections;
    write_text_atomic(out_dir / "slides" / (img.id + ".json"), dump_json(slide_detections_to_json(merged)));
    if (options.render) {
      write_png(out_dir / "renders" / (img.id + ".png"),
                render(slide, merged.detections, options.render_options));
    }
  }
  write_detections(out_dir / "detections.json", out.slide_detections);
  write_detections(out_dir / "patch_detections.json", out.patch_detections);
  return out;
}

EvalReport run_evaluate(const Manifest& manifest, const DetectionSet& dets, const std::string& split,
                        const EvalOptions& options, const fs::path& report_path) {
  const Manifest selected = manifest.filtered(split);
  std::set<std::string> known;
  for (const ManifestImage& img : manifest.images) known.insert(img.id);
  DetectionSet in_split;
  const auto gts = selected.ground_truth();
  for (const auto& [image_id, list] : dets) {
    if (!known.contains(image_id)) {
      throw ContractError("detections reference image id '" + image_id +
                          "' which is not in the manifest");
    }
    if (gts.contains(image_id)) in_split[image_id] = list;
  }
  EvalReport report = evaluate(in_split, gts, options);
  if (!report_path.empty()) {
    nlohmann::ordered_json doc = report_to_json(report);
    doc["split"] = split;
    write_text_atomic(report_path, dump_json(doc));
  }
  return report;
}

EvalReport run_pipeline(const RunConfig& config, unsigned jobs) {
  validate(config);
  if (config.annotations_dir.empty() || config.images_dir.empty()) {
    throw ValidationError("pipeline needs annotations_dir and images_dir");
  }
  const fs::path out = config.output_dir.empty() ? default_output_root() : fs::path(config.output_dir);
  fs::create_directories(out);
  write_text_atomic(out / "run_config.txt", config_to_text(config));

  IngestOptions ingest;
  ingest.box_side = config.box_side;
  ingest.split_ratio = config.split;
  ingest.seed = config.seed;
  ingest.mitosis_threshold = config.mitosis_threshold;
  ingest.min_border_fraction = config.min_visible;
  Manifest manifest = run_ingest(config.annotations_dir, config.images_dir, ingest, out / "manifest.json").manifest;

  if (config.normalization != "off") {
    fs::path target_path;
    if (config.normalization.starts_with("reinhard:")) {
      target_path = config.normalization.substr(9);
    } else {
      const auto first_train = std::find_if(manifest.images.begin(), manifest.images.end(),
                                            [](const ManifestImage& m) { return m.split == "train"; });
      if (first_train == manifest.images.end()) throw IngestError("no training image to normalize against");
      target_path = first_train->path;
    }
    manifest = normalize_manifest(manifest, fit_target(target_path), out / "normalized", config.epsilon, jobs);
    write_manifest(out / "normalized" / "manifest.json", manifest);
  }

  const TileOutcome tiles =
      run_tile(manifest, {config.patch_size, config.overlap, config.min_visible, false, jobs}, out / "tiles");

  const auto backend = make_backend(config, manifest);
  DetectOptions detect;
  detect.patch_size = config.patch_size;
  detect.overlap = config.overlap;
  detect.merge_iou = config.merge_iou;
  detect.render = config.render;
  detect.render_options.display_threshold = config.display_threshold;
  detect.render_options.draw_scores = config.render_scores;
  detect.jobs = jobs;
  const DetectOutcome found = run_detect(manifest, *backend, detect, out / "detect");

  EvalOptions eval;
  eval.iou_thresholds = config.coco_sweep ? coco_iou_thresholds() : std::vector<double>{config.eval_iou};
  eval.granularity = config.eval_mode;
  if (config.eval_mode == "patch") {
    return run_evaluate(tiles.patch_manifest, found.patch_detections, config.eval_split, eval,
                        out / "report.json");
  }
  return run_evaluate(manifest, found.slide_detections, config.eval_split, eval, out / "report.json");
}

}  // namespace mitodet
