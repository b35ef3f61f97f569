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

#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "pigeon/mapping.hpp"
#include "pigeon/runner.hpp"
#include "pigeon/simulator.hpp"

namespace pigeon::render {

/// Layered SVG: ground-truth walls, explored area from `belief`,
/// trajectory, objects and every PoI labelled with its id. Map row 0 is
/// drawn at the top.
std::string trace_svg(const sim::Scene& scene, const mapping::GridMap& belief, const runner::EpisodeTrace& trace,
                      int pixels_per_cell = 4);

/// JSON array of {id, kind, x, y, heading, state, created_step}.
nlohmann::ordered_json poi_dump(const runner::EpisodeTrace& trace);

}  // namespace pigeon::render
