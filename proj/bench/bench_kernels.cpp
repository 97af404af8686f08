#include <benchmark/benchmark.h>

#include <random>

#include "irstd/detectors.hpp"
#include "irstd/imgproc.hpp"
#include "irstd/parallel.hpp"
#include "irstd/reference.hpp"

namespace {

irstd::GrayImage noise_image(int size) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> px(static_cast<std::size_t>(size) * size);
  for (double& v : px) v = u(rng);
  return {size, size, std::move(px)};
}

const irstd::GrayImage& image256() {
  static const irstd::GrayImage img = noise_image(256);
  return img;
}

// Arg(0) is the thread count for the parallel kernels.
void BM_BoxMean(benchmark::State& s) {
  irstd::ScopedThreads threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(irstd::box_mean(image256(), 9));
}
void BM_BoxMeanReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(irstd::reference::box_mean(image256(), 9));
}
void BM_Tophat(benchmark::State& s) {
  irstd::ScopedThreads threads(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(irstd::white_tophat(image256(), 11));
}
void BM_TophatReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(irstd::reference::white_tophat(image256(), 11));
}
void BM_MpcmShifted(benchmark::State& s) {
  irstd::ScopedThreads threads(static_cast<int>(s.range(0)));
  const irstd::MpcmConfig cfg;
  for (auto _ : s) benchmark::DoNotOptimize(irstd::mpcm_shifted(image256(), cfg));
}
void BM_MpcmNaive(benchmark::State& s) {
  irstd::ScopedThreads threads(static_cast<int>(s.range(0)));
  const irstd::MpcmConfig cfg;
  for (auto _ : s) benchmark::DoNotOptimize(irstd::mpcm_naive(image256(), cfg));
}
void BM_Patchify(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(irstd::patchify(image256(), {}));
}
void BM_PatchifyReference(benchmark::State& s) {
  for (auto _ : s) benchmark::DoNotOptimize(irstd::reference::patchify(image256(), {}));
}

}  // namespace

BENCHMARK(BM_BoxMean)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoxMeanReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Tophat)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TophatReference)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MpcmShifted)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MpcmNaive)->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Patchify)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PatchifyReference)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
