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

// Deliberately naive reference implementations. They share no code with the
// library beyond the plain data types.

#include <array>
#include <optional>
#include <random>
#include <vector>

#include "pigeon/camera.hpp"
#include "pigeon/geometry.hpp"
#include "pigeon/mapping.hpp"

namespace oracle {

/// Dijkstra over the 8-connected move model: orthogonal step costs the
/// destination cost, diagonal step costs sqrt(2) times it, and a diagonal
/// is forbidden when either orthogonal neighbour is impassable.
std::optional<double> dijkstra_cost(const pigeon::mapping::CostMap& costmap, pigeon::Cell start, pigeon::Cell goal);

/// Frontier representatives by exhaustive predicate evaluation and
/// union-find clustering, sorted by row-major index.
std::vector<pigeon::Cell> frontier_representatives(const pigeon::mapping::GridMap& map, int min_cluster);

/// Ideal line sampled along the major axis with the minor coordinate
/// rounded. `tie` is set when some sample sits exactly halfway.
std::vector<pigeon::Cell> rounded_line(pigeon::Cell from, pigeon::Cell to, bool* tie = nullptr);

/// Does the closed segment a-b touch the axis-aligned square of side
/// `side` centred at `c`? Liang-Barsky clipping.
bool segment_hits_square(pigeon::Point2 a, pigeon::Point2 b, pigeon::Point2 c, double side);

using Mat4 = std::array<std::array<double, 4>, 4>;
Mat4 mat_mul(const Mat4& a, const Mat4& b);

/// World-to-camera transform built as a product of elementary 4x4 matrices:
/// translation, yaw, the fixed axis swap and the pitch.
Mat4 world_to_camera(const pigeon::Pose& pose, double height);

/// Pixel of a world point via K (3x4) times the 4x4 transform, or nullopt
/// behind the camera.
std::optional<std::array<double, 2>> project(const pigeon::CameraIntrinsics& k, const Mat4& m, pigeon::Point3 p);

/// Random cost map: walls with probability `wall_p`, random costs in
/// {1, 2, 4} elsewhere.
pigeon::mapping::CostMap random_costmap(int w, int h, double wall_p, std::mt19937_64& rng);

/// Random belief with Unknown, Free and Occupied patches.
pigeon::mapping::GridMap random_belief(int w, int h, std::mt19937_64& rng);

}  // namespace oracle
