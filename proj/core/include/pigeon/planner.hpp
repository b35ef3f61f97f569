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

#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "pigeon/geometry.hpp"
#include "pigeon/mapping.hpp"
#include "pigeon/poi.hpp"

namespace pigeon::planner {

enum class Action { Forward, TurnLeft, TurnRight, LookUp, LookDown, Stop };

inline constexpr double kForwardStep = 0.25;
inline constexpr double kTurnAngle = deg_to_rad(30.0);
inline constexpr double kTiltAngle = deg_to_rad(30.0);

const char* to_string(Action a);
std::optional<Action> action_from_string(std::string_view s);

struct Path {
  std::vector<Cell> cells;
  std::vector<Point2> waypoints;
  /// Sum of step length (cells) times destination-cell cost.
  double cost = 0.0;

  bool empty() const { return cells.empty(); }
};

/// 8-connected A* with octile heuristic. Diagonal moves cost √2 times the
/// destination cost and may not cut past an impassable orthogonal neighbour.
/// Returns nullopt when the goal is unreachable; throws StartBlockedError
/// when the start cell is impassable.
std::optional<Path> astar(const mapping::CostMap& costmap, Cell start, Cell goal);
std::optional<Path> astar(const mapping::CostMap& costmap, Point2 start, Point2 goal);

/// Single-source (or multi-source) shortest path costs over the same move
/// model as `astar`. Sources themselves may be impassable; expansion only
/// enters passable cells. Unreached cells hold +inf.
std::vector<double> geodesic_field(const mapping::CostMap& costmap, std::span<const Cell> sources);

struct FollowerParams {
  double arrival_radius = 0.2;
  double heading_tolerance = deg_to_rad(15.0);
  /// Extra heading error tolerated while already driving forward, so lines
  /// between two heading quanta do not cause a turn every other step.
  double heading_hysteresis = deg_to_rad(10.0);
  /// The follower aims at the furthest path waypoint within this distance
  /// whose chord stays within `chord_tolerance` of the intermediate ones.
  double lookahead = 3.0;
  double chord_tolerance = 0.08;
  int stuck_window = 8;
  double stuck_displacement = 0.1;
  int max_replans = 2;
};

struct FollowerState {
  Path path;
  std::size_t target_index = 0;
  int stuck_counter = 0;
  int replans = 0;
  /// Positions at the most recent Forward attempts.
  std::deque<Point2> recent_forward;
  /// Cells found blocked while following; kept impassable on replans.
  std::vector<Cell> blocked;
  /// Last emitted action was Forward.
  bool driving = false;

  explicit FollowerState(Path p = {}) : path(std::move(p)) {}
  void record(Action a, const Pose& before, std::size_t window);
};

/// Forward when the aim point is within the heading tolerance, otherwise the
/// turn that reduces the error most. Stop once the final waypoint is within
/// the arrival radius.
Action next_action(FollowerState& state, const Pose& pose, const FollowerParams& params = {});

/// Twelve left turns.
std::vector<Action> full_rotation();

enum class StuckStatus { Progressing, Replanned, Escalate };

struct StuckOutcome {
  StuckStatus status = StuckStatus::Progressing;
  std::optional<Path> path;
};

/// When the last `stuck_window` Forward attempts moved less than
/// `stuck_displacement`, marks the cell ahead as blocked, doubles costs
/// around it and replans to the path's goal. After `max_replans` replans
/// the caller is told to escalate.
StuckOutcome detect_stuck_and_replan(FollowerState& state, const Pose& pose, const mapping::CostMap& costmap,
                                     const FollowerParams& params = {});

/// Applies the follower's blocked cells to a cost map.
void apply_blocked(const FollowerState& state, mapping::CostMap& costmap);

/// Selectable PoIs within `radius` of the pose, in greedy nearest-neighbour
/// tour order, or empty when fewer than `sweep_min` qualify.
std::vector<int> local_sweep(const poi::PoIStore& store, const Pose& pose, double radius = 1.5,
                             std::size_t sweep_min = 3);

}  // namespace pigeon::planner
