// Copyright 2026 The HAC Codec Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include <array>
#include <cmath>
#include <vector>

#include "hac/coder.h"
#include "hac/container.h"
#include "hac/hashgrid.h"
#include "hac/ratemodel.h"
#include "hac/rng.h"
#include "hac/scene.h"

namespace hac {
namespace {

void BM_BuildCdf(benchmark::State& state) {
  Rng rng(1);
  for (auto _ : state) {
    const double q = 0.2;
    CdfTable t = BuildCdf(rng.Uniform(-5.0, 5.0), q * rng.Uniform(0.5, 8.0), q);
    benchmark::DoNotOptimize(t.cum.data());
  }
}
BENCHMARK(BM_BuildCdf);

void BM_RangeEncode(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(2);
  std::vector<int32_t> symbols(n);
  for (auto& s : symbols) s = static_cast<int32_t>(std::lround(rng.Normal() * 3.0));
  CdfCache cache;
  const CdfRef ref = cache.Get(SnapParams(0.0, 3.0, 1.0));
  const CdfProvider tables = [&](size_t) { return ref; };
  for (auto _ : state) {
    auto bytes = RangeEncodeSymbols(symbols, tables);
    benchmark::DoNotOptimize(bytes.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}
BENCHMARK(BM_RangeEncode)->Arg(1 << 16);

void BM_RangeDecode(benchmark::State& state) {
  const size_t n = static_cast<size_t>(state.range(0));
  Rng rng(2);
  std::vector<int32_t> symbols(n);
  for (auto& s : symbols) s = static_cast<int32_t>(std::lround(rng.Normal() * 3.0));
  CdfCache cache;
  const CdfRef ref = cache.Get(SnapParams(0.0, 3.0, 1.0));
  const CdfProvider tables = [&](size_t) { return ref; };
  const auto bytes = RangeEncodeSymbols(symbols, tables);
  for (auto _ : state) {
    auto out = RangeDecodeSymbols(bytes, n, tables);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}
BENCHMARK(BM_RangeDecode)->Arg(1 << 16);

void BM_Interpolate(benchmark::State& state) {
  const HashGrid grid = HashGrid::Create(GridConfig::Standard(), 3);
  std::vector<double> feature(grid.config().feature_dim());
  Rng rng(3);
  for (auto _ : state) {
    Interpolate(grid, {rng.Uniform(), rng.Uniform(), rng.Uniform()}, feature);
    benchmark::DoNotOptimize(feature.data());
  }
}
BENCHMARK(BM_Interpolate);

void BM_ModelForward(benchmark::State& state) {
  const AttributeLayout layout{50, 10};
  const size_t input = GridConfig::Standard().feature_dim();
  const ContextModel model = ContextModel::Create(input, kDefaultHiddenWidth, layout, kDefaultQ0, 4);
  std::vector<double> x(input);
  Rng rng(4);
  for (double& v : x) v = rng.Uniform(-1.0, 1.0);
  for (auto _ : state) {
    RateParams p = ModelForward(x, model);
    benchmark::DoNotOptimize(p.mu.data());
  }
}
BENCHMARK(BM_ModelForward);

void BM_EncodeScene(benchmark::State& state) {
  const AnchorScene scene = SynthScene(5, static_cast<size_t>(state.range(0)), 50, 10, 0.9);
  CodecArtifacts art;
  art.grid = HashGrid::Create(GridConfig::Small(), 5);
  art.model = ContextModel::Create(art.grid.config().feature_dim(), kDefaultHiddenWidth,
                                   scene.layout(), kDefaultQ0, 5);
  art.masks = MaskSet::AllKept(scene.n, scene.k_offsets);
  art.bounds = SceneBounds(scene);
  for (auto _ : state) {
    auto blob = EncodeScene(scene, art);
    benchmark::DoNotOptimize(blob.data());
  }
  state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * scene.n));
}
BENCHMARK(BM_EncodeScene)->Arg(2048)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace hac

BENCHMARK_MAIN();
