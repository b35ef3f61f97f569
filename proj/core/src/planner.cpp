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

#include "pigeon/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <tuple>

#include "pigeon/errors.hpp"

namespace pigeon::planner {

using mapping::CostMap;

const char* to_string(Action a) {
  switch (a) {
    case Action::Forward:
      return "FORWARD";
    case Action::TurnLeft:
      return "TURN_LEFT";
    case Action::TurnRight:
      return "TURN_RIGHT";
    case Action::LookUp:
      return "LOOK_UP";
    case Action::LookDown:
      return "LOOK_DOWN";
    case Action::Stop:
      return "STOP";
  }
  return "?";
}

std::optional<Action> action_from_string(std::string_view s) {
  for (Action a : {Action::Forward, Action::TurnLeft, Action::TurnRight, Action::LookUp, Action::LookDown,
                   Action::Stop})
    if (s == to_string(a)) return a;
  return std::nullopt;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kMoves[8][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}, {1, 1}, {1, -1}, {-1, 1}, {-1, -1}};

// Visits the legal successors of `c` as (neighbour, step length).
template <typename Fn>
void for_each_move(const CostMap& cm, Cell c, Fn&& fn) {
  for (const auto& m : kMoves) {
    const Cell n{c.col + m[0], c.row + m[1]};
    if (!cm.passable(n)) continue;
    const bool diagonal = m[0] != 0 && m[1] != 0;
    if (diagonal && (!cm.passable({c.col + m[0], c.row}) || !cm.passable({c.col, c.row + m[1]}))) continue;
    fn(n, diagonal ? std::numbers::sqrt2 : 1.0);
  }
}

double min_cost(const CostMap& cm) {
  double lo = kInf;
  for (double v : cm.costs())
    if (v < lo && v > 0.0) lo = v;
  return lo == kInf ? 1.0 : lo;
}

}  // namespace

std::optional<Path> astar(const CostMap& costmap, Cell start, Cell goal) {
  const auto& g = costmap.geometry();
  if (!costmap.passable(start)) throw StartBlockedError("A* start cell is not traversable");
  if (!costmap.passable(goal)) return std::nullopt;

  const double h_scale = min_cost(costmap);
  const int n = g.size();
  std::vector<double> best(n, kInf);
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);
  // (f, h, index): ties resolve towards the goal, then by index.
  using Entry = std::tuple<double, double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const int s = g.index(start);
  const int t = g.index(goal);
  best[s] = 0.0;
  open.emplace(octile(start, goal) * h_scale, octile(start, goal) * h_scale, s);
  while (!open.empty()) {
    const auto [f, h, cur] = open.top();
    open.pop();
    if (closed[cur]) continue;
    closed[cur] = 1;
    if (cur == t) break;
    const Cell c = g.cell_at(cur);
    for_each_move(costmap, c, [&](Cell nb, double step) {
      const int ni = g.index(nb);
      if (closed[ni]) return;
      const double cand = best[cur] + step * costmap.cost(ni);
      if (cand < best[ni]) {
        best[ni] = cand;
        parent[ni] = cur;
        const double hn = octile(nb, goal) * h_scale;
        open.emplace(cand + hn, hn, ni);
      }
    });
  }
  if (best[t] == kInf) return std::nullopt;

  Path path;
  path.cost = best[t];
  for (int i = t; i != -1; i = parent[i]) path.cells.push_back(g.cell_at(i));
  std::reverse(path.cells.begin(), path.cells.end());
  path.waypoints.reserve(path.cells.size());
  for (Cell c : path.cells) path.waypoints.push_back(g.world_of(c));
  return path;
}

std::optional<Path> astar(const CostMap& costmap, Point2 start, Point2 goal) {
  const auto& g = costmap.geometry();
  const Cell s = g.cell_of(start);
  if (!g.in_bounds(s)) throw StartBlockedError("A* start outside the map");
  return astar(costmap, s, g.cell_of(goal));
}

std::vector<double> geodesic_field(const CostMap& costmap, std::span<const Cell> sources) {
  const auto& g = costmap.geometry();
  std::vector<double> dist(static_cast<std::size_t>(g.size()), kInf);
  using Entry = std::pair<double, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  for (Cell c : sources) {
    if (!g.in_bounds(c)) continue;
    dist[g.index(c)] = 0.0;
    open.emplace(0.0, g.index(c));
  }
  while (!open.empty()) {
    const auto [d, cur] = open.top();
    open.pop();
    if (d > dist[cur]) continue;
    for_each_move(costmap, g.cell_at(cur), [&](Cell nb, double step) {
      const int ni = g.index(nb);
      const double cand = d + step * costmap.cost(ni);
      if (cand < dist[ni]) {
        dist[ni] = cand;
        open.emplace(cand, ni);
      }
    });
  }
  return dist;
}

void FollowerState::record(Action a, const Pose& before, std::size_t window) {
  if (a != Action::Forward) return;
  recent_forward.push_back(before.position());
  while (recent_forward.size() > window) recent_forward.pop_front();
}

namespace {

double point_segment_distance(Point2 p, Point2 a, Point2 b) {
  const double vx = b.x - a.x;
  const double vy = b.y - a.y;
  const double len2 = vx * vx + vy * vy;
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(((p.x - a.x) * vx + (p.y - a.y) * vy) / len2, 0.0, 1.0);
  return distance(p, {a.x + t * vx, a.y + t * vy});
}

}  // namespace

Action next_action(FollowerState& state, const Pose& pose, const FollowerParams& params) {
  const auto& wps = state.path.waypoints;
  if (wps.empty()) return Action::Stop;
  const Point2 here = pose.position();
  const std::size_t last = wps.size() - 1;
  if (distance(here, wps[last]) <= params.arrival_radius) return Action::Stop;

  // Progress: closest waypoint in the window ahead of the current target.
  std::size_t progress = std::min(state.target_index, last);
  double best = distance(here, wps[progress]);
  for (std::size_t i = progress + 1; i <= last; ++i) {
    const double d = distance(here, wps[i]);
    if (d > params.lookahead + 0.5) break;
    if (d < best) {
      best = d;
      progress = i;
    }
  }
  state.target_index = progress;

  // Aim point: furthest waypoint reached along a near-straight stretch of
  // the path.
  std::size_t aim = progress;
  for (std::size_t j = progress + 1; j <= last; ++j) {
    if (distance(here, wps[j]) > params.lookahead) break;
    bool hugs = true;
    for (std::size_t k = progress + 1; k < j; ++k) {
      if (point_segment_distance(wps[k], wps[progress], wps[j]) > params.chord_tolerance) {
        hugs = false;
        break;
      }
    }
    if (!hugs) break;
    aim = j;
  }
  while (aim < last && distance(here, wps[aim]) <= params.arrival_radius) ++aim;

  const Point2 target = wps[aim];
  const double err = wrap_angle(std::atan2(target.y - here.y, target.x - here.x) - pose.heading);
  const double tol = params.heading_tolerance + (state.driving ? params.heading_hysteresis : 0.0);
  state.driving = std::abs(err) <= tol;
  if (!state.driving) return err > 0 ? Action::TurnLeft : Action::TurnRight;
  return Action::Forward;
}

std::vector<Action> full_rotation() { return std::vector<Action>(12, Action::TurnLeft); }

void apply_blocked(const FollowerState& state, CostMap& costmap) {
  for (Cell c : state.blocked)
    if (costmap.geometry().in_bounds(c)) costmap.set(c, CostMap::kImpassable);
}

StuckOutcome detect_stuck_and_replan(FollowerState& state, const Pose& pose, const CostMap& costmap,
                                     const FollowerParams& params) {
  StuckOutcome out;
  if (state.recent_forward.size() < static_cast<std::size_t>(params.stuck_window)) return out;
  if (distance(state.recent_forward.front(), pose.position()) >= params.stuck_displacement) return out;

  ++state.stuck_counter;
  state.recent_forward.clear();
  if (state.replans >= params.max_replans || state.path.empty()) {
    out.status = StuckStatus::Escalate;
    return out;
  }

  const auto& g = costmap.geometry();
  const Point2 here = pose.position();
  const Point2 ahead{here.x + kForwardStep * std::cos(pose.heading), here.y + kForwardStep * std::sin(pose.heading)};
  const Cell own = g.cell_of(here);
  for (Cell c : mapping::trace_ray(g, here, ahead))
    if (c != own && std::find(state.blocked.begin(), state.blocked.end(), c) == state.blocked.end())
      state.blocked.push_back(c);

  CostMap adjusted = costmap;
  adjusted.scale_near(ahead, 0.3, 2.0);
  apply_blocked(state, adjusted);
  ++state.replans;

  std::optional<Path> path;
  try {
    path = astar(adjusted, own, state.path.cells.back());
  } catch (const StartBlockedError&) {
    path.reset();
  }
  if (!path) {
    out.status = StuckStatus::Escalate;
    return out;
  }
  state.path = *path;
  state.target_index = 0;
  out.status = StuckStatus::Replanned;
  out.path = std::move(path);
  return out;
}

std::vector<int> local_sweep(const poi::PoIStore& store, const Pose& pose, double radius, std::size_t sweep_min) {
  if (radius <= 0.0) throw InvalidInputError("sweep radius must be positive");
  std::vector<const poi::PoI*> nearby;
  for (const poi::PoI* p : store.selectable())
    if (distance(p->pose.position(), pose.position()) <= radius) nearby.push_back(p);
  if (nearby.empty() || nearby.size() < sweep_min) return {};

  std::vector<int> tour;
  Point2 at = pose.position();
  while (!nearby.empty()) {
    auto it = std::min_element(nearby.begin(), nearby.end(), [&](const poi::PoI* a, const poi::PoI* b) {
      const double da = distance(a->pose.position(), at);
      const double db = distance(b->pose.position(), at);
      return da < db || (da == db && a->id < b->id);
    });
    tour.push_back((*it)->id);
    at = (*it)->pose.position();
    nearby.erase(it);
  }
  return tour;
}

}  // namespace pigeon::planner
