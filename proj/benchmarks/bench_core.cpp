// Copyright 2026 The Pigeon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include <random>

#include "pigeon/mapping.hpp"
#include "pigeon/planner.hpp"
#include "pigeon/poi.hpp"
#include "pigeon/simulator.hpp"

using namespace pigeon;

namespace {

mapping::CostMap maze(int n, std::uint64_t seed) {
  mapping::CostMap cm(mapping::GridGeometry{0.1, {0, 0}, n, n}, 1.0);
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution wall(0.2);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      if (wall(rng)) cm.set({c, r}, mapping::CostMap::kImpassable);
  cm.set({0, 0}, 1.0);
  cm.set({n - 1, n - 1}, 1.0);
  return cm;
}

void BM_Astar(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto cm = maze(n, 7);
  for (auto _ : state) benchmark::DoNotOptimize(planner::astar(cm, Cell{0, 0}, Cell{n - 1, n - 1}));
}
BENCHMARK(BM_Astar)->Arg(50)->Arg(100)->Arg(200);

void BM_ExtractFrontiers(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  mapping::GridMap m(mapping::GridGeometry{0.1, {0, 0}, n, n}, mapping::CellState::Unknown);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, n - 1);
  for (int k = 0; k < 12; ++k) {
    const int c0 = pick(rng), r0 = pick(rng);
    for (int r = r0; r < std::min(n, r0 + n / 4); ++r)
      for (int c = c0; c < std::min(n, c0 + n / 4); ++c) m.set({c, r}, mapping::CellState::Free);
  }
  for (auto _ : state) benchmark::DoNotOptimize(poi::extract_frontiers(m, 3));
}
BENCHMARK(BM_ExtractFrontiers)->Arg(100)->Arg(200);

void BM_IntegrateScan(benchmark::State& state) {
  const auto scene = sim::load_scene(std::string(PIGEON_DATA_DIR) + "/scenes/artwork-trap.json");
  sim::Simulator simulator(scene, {}, 1);
  const auto scan = simulator.sense_scan();
  for (auto _ : state) {
    mapping::GridMap m(scene.truth.geometry(), mapping::CellState::Unknown);
    benchmark::DoNotOptimize(mapping::integrate_scan(m, scan));
  }
}
BENCHMARK(BM_IntegrateScan);

}  // namespace

BENCHMARK_MAIN();
