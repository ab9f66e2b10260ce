#include "dynclean/clustering.hpp"
#include "dynclean/color.hpp"
#include "dynclean/correspondence.hpp"
#include "dynclean/evaluation.hpp"
#include "dynclean/features.hpp"
#include "dynclean/image_set.hpp"
#include "dynclean/scan_engine.hpp"

#include <benchmark/benchmark.h>

#include <algorithm>
#include <map>
#include <random>

namespace dynclean {
namespace {

SceneParams bench_scene(int width, int height) {
    SceneParams p = scene_preset("square-walk", 1);
    p.width = width;
    p.height = height;
    p.occluder_size = std::min(40, height / 3);
    p.occluder_x = 10.5;
    p.occluder_y = 10.5;
    p.occluder_step_x = std::max(1.0, (width - p.occluder_size - 21.0) / p.views);
    return p;
}

const SyntheticScene& scene(int width, int height) {
    static std::map<std::pair<int, int>, SyntheticScene> cache;
    auto it = cache.find({width, height});
    if (it == cache.end()) it = cache.emplace(std::make_pair(width, height), synth_scene(bench_scene(width, height))).first;
    return it->second;
}

void BM_DescriptorField(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const LabImage lab = rgb_to_lab(scene(w, w * 3 / 4).views[0]);
    for (auto _ : state) benchmark::DoNotOptimize(dense_descriptor_field(lab, 7));
    state.SetItemsProcessed(state.iterations() * lab.size());
}
BENCHMARK(BM_DescriptorField)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_DenseField(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const SyntheticScene& s = scene(w, w * 3 / 4);
    std::vector<DescriptorField> fields{dense_descriptor_field(rgb_to_lab(s.views[0]), 7),
                                        dense_descriptor_field(rgb_to_lab(s.views[1]), 7)};
    normalize_fields(fields);
    const Config config;
    for (auto _ : state) benchmark::DoNotOptimize(estimate_dense_field(fields[0], fields[1], 1, config, {}));
    state.SetItemsProcessed(state.iterations() * static_cast<long>(fields[0].color.size()));
}
BENCHMARK(BM_DenseField)->Arg(80)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_Precompute(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const ImageSet set = make_image_set(scene(w, w * 3 / 4).views, 0);
    const Config config = preset_run_config("square-walk");
    for (auto _ : state) benchmark::DoNotOptimize(precompute(set, config));
}
BENCHMARK(BM_Precompute)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_FirstScan(benchmark::State& state) {
    const int w = static_cast<int>(state.range(0));
    const ImageSet set = make_image_set(scene(w, w * 3 / 4).views, 0);
    const Config config = preset_run_config("square-walk");
    const Precomputed pre = precompute(set, config);
    for (auto _ : state) {
        state.PauseTiming();
        Scanner scanner(set, pre, config);
        state.ResumeTiming();
        benchmark::DoNotOptimize(scanner.run_scan(ScanDirection::Down));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long>(set.reference().size()));
}
BENCHMARK(BM_FirstScan)->Arg(160)->Arg(320)->Unit(benchmark::kMillisecond);

void BM_Dbscan(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> d(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) d[static_cast<std::size_t>(i) * n + j] = d[static_cast<std::size_t>(j) * n + i] = u(rng);
    for (auto _ : state) benchmark::DoNotOptimize(dbscan(d, n, 0.35, 1));
}
BENCHMARK(BM_Dbscan)->Arg(4)->Arg(8)->Arg(12);

} // namespace
} // namespace dynclean

BENCHMARK_MAIN();
