#include <benchmark/benchmark.h>

#include <map>

#include "promptsim/edt.hpp"
#include "promptsim/metrics.hpp"
#include "promptsim/morph.hpp"
#include "promptsim/phantom.hpp"
#include "promptsim/prompts.hpp"

namespace {

using namespace promptsim;

const Phantom& phantom(int edge) {
  static std::map<int, Phantom> cache;
  auto it = cache.find(edge);
  if (it == cache.end()) {
    PhantomSpec spec;
    spec.dims = {edge, edge, edge};
    const double f = edge / 64.0;
    spec.radii_mm = {17 * f, 13 * f, 10 * f};
    it = cache.emplace(edge, generate_phantom(spec, 0)).first;
  }
  return it->second;
}

BinaryMask shifted(const BinaryMask& m, std::int64_t dx) {
  BinaryMask out(m.dims(), m.spacing());
  const Dims& d = m.dims();
  for (std::int64_t k = 0; k < d.nz; ++k)
    for (std::int64_t j = 0; j < d.ny; ++j)
      for (std::int64_t i = dx; i < d.nx; ++i) out.set(i, j, k, m.at(i - dx, j, k));
  return out;
}

void BM_Edt(benchmark::State& state) {
  const auto& gt = phantom(static_cast<int>(state.range(0))).gt;
  for (auto _ : state) benchmark::DoNotOptimize(edt_3d(gt));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * gt.size()));
}
BENCHMARK(BM_Edt)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Score(benchmark::State& state) {
  const auto& gt = phantom(static_cast<int>(state.range(0))).gt;
  const auto pred = shifted(gt, 2);
  for (auto _ : state) benchmark::DoNotOptimize(score(pred, gt, 1.0));
}
BENCHMARK(BM_Score)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_Skeletonize(benchmark::State& state) {
  const auto& gt = phantom(64).gt;
  const auto slice = extract_slice(gt, SliceAxis::Transverse, 32);
  for (auto _ : state) benchmark::DoNotOptimize(skeletonize_2d(slice));
}
BENCHMARK(BM_Skeletonize)->Unit(benchmark::kMicrosecond);

void BM_BuildPromptSet(benchmark::State& state) {
  const auto& gt = phantom(64).gt;
  const auto pred = shifted(gt, 3);
  PromptConfig cfg;
  cfg.scribble_style = static_cast<ScribbleStyle>(state.range(0));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(build_prompt_set(gt, &pred, cfg, 1, ++seed));
}
BENCHMARK(BM_BuildPromptSet)
    ->Arg(static_cast<int>(ScribbleStyle::Centerline))
    ->Arg(static_cast<int>(ScribbleStyle::WarpedCenterline))
    ->Arg(static_cast<int>(ScribbleStyle::Boundary))
    ->Arg(static_cast<int>(ScribbleStyle::WarpedBoundary))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
