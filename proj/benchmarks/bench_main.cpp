#include <benchmark/benchmark.h>

#include "mitodet/evaluation.hpp"
#include "mitodet/geometry.hpp"
#include "mitodet/random.hpp"
#include "mitodet/stain.hpp"
#include "mitodet/tiling.hpp"

using namespace mitodet;

namespace {

std::vector<Detection> random_detections(std::size_t n, std::uint64_t seed, double extent = 2000.0) {
  Rng rng(seed);
  std::vector<Detection> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = rng.uniform(0.0, extent), y = rng.uniform(0.0, extent);
    const double w = rng.uniform(20.0, 80.0), h = rng.uniform(20.0, 80.0);
    out.push_back({BoundingBox(x, y, x + w, y + h),
                   rng.uniform() < 0.5 ? CellClass::kMitotic : CellClass::kNonMitotic, rng.uniform()});
  }
  return out;
}

Image random_image(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& v : img.data()) v = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

void BM_Iou(benchmark::State& state) {
  const auto dets = random_detections(1024, 1, 200.0);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(iou(dets[i & 1023].box, dets[(i + 1) & 1023].box));
    ++i;
  }
}
BENCHMARK(BM_Iou);

void BM_Nms(benchmark::State& state) {
  const auto dets = random_detections(static_cast<std::size_t>(state.range(0)), 2, 600.0);
  for (auto _ : state) benchmark::DoNotOptimize(nms(dets, 0.5));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Nms)->RangeMultiplier(4)->Range(64, 4096)->Complexity();

void BM_EvaluateCocoSweep(benchmark::State& state) {
  DetectionSet dets;
  std::map<std::string, std::vector<GroundTruth>> gts;
  for (int img = 0; img < 20; ++img) {
    const std::string id = "img_" + std::to_string(img);
    auto truth = random_detections(40, 100 + img);
    for (const Detection& d : truth) gts[id].push_back({d.box, d.cell_class});
    auto found = random_detections(static_cast<std::size_t>(state.range(0)), 200 + img);
    for (std::size_t k = 0; k < truth.size(); k += 2) found.push_back(truth[k]);
    dets[id] = std::move(found);
  }
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(dets, gts, {}));
}
BENCHMARK(BM_EvaluateCocoSweep)->Arg(20)->Arg(100);

void BM_ReinhardNormalize(benchmark::State& state) {
  const Image img = random_image(1539, 1376, 3);
  const ChannelStats target{{150.0, 110.0, 170.0}, {30.0, 25.0, 20.0}};
  for (auto _ : state) benchmark::DoNotOptimize(reinhard_normalize(img, target));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * img.data().size());
}
BENCHMARK(BM_ReinhardNormalize)->Unit(benchmark::kMillisecond);

void BM_ExtractAndStitch(benchmark::State& state) {
  const Image img = random_image(1663, 1485, 4);
  const PatchGrid grid = PatchGrid::plan(img.width(), img.height(), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(stitch(extract_all(img, grid), grid));
}
BENCHMARK(BM_ExtractAndStitch)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
