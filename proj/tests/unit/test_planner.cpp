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

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "pigeon/errors.hpp"
#include "pigeon/planner.hpp"
#include "pigeon/poi.hpp"

using namespace pigeon;
using namespace pigeon::planner;
using mapping::CostMap;
using mapping::GridGeometry;

namespace {

CostMap open_map(int w, int h, double res = 0.1) { return CostMap(GridGeometry{res, {0.0, 0.0}, w, h}, 1.0); }

// Simple kinematics matching the simulator's action quanta, no collisions.
Pose apply(Pose p, Action a) {
  switch (a) {
    case Action::Forward:
      p.x += kForwardStep * std::cos(p.heading);
      p.y += kForwardStep * std::sin(p.heading);
      break;
    case Action::TurnLeft:
      p.heading = normalize_heading(p.heading + kTurnAngle);
      break;
    case Action::TurnRight:
      p.heading = normalize_heading(p.heading - kTurnAngle);
      break;
    default:
      break;
  }
  return p;
}

}  // namespace

TEST_CASE("straight path on an empty grid") {
  const auto cm = open_map(10, 10);
  const auto path = astar(cm, Cell{0, 0}, Cell{0, 9});
  REQUIRE(path);
  CHECK(path->cost == doctest::Approx(9.0));
  CHECK(path->cells.size() == 10);
  for (int r = 0; r < 10; ++r) CHECK(path->cells[r] == Cell{0, r});
}

TEST_CASE("path through a single gap matches the oracle") {
  auto cm = open_map(12, 12);
  for (int r = 0; r < 12; ++r)
    if (r != 8) cm.set({6, r}, CostMap::kImpassable);
  const auto path = astar(cm, Cell{1, 1}, Cell{10, 1});
  REQUIRE(path);
  CHECK(std::find(path->cells.begin(), path->cells.end(), Cell{6, 8}) != path->cells.end());
  const auto ref = oracle::dijkstra_cost(cm, {1, 1}, {10, 1});
  REQUIRE(ref);
  CHECK(path->cost == doctest::Approx(*ref).epsilon(1e-12));
}

TEST_CASE("sealed goal has no path and a blocked start throws") {
  auto cm = open_map(9, 9);
  for (int c = 5; c <= 7; ++c) {
    cm.set({c, 5}, CostMap::kImpassable);
    cm.set({c, 7}, CostMap::kImpassable);
  }
  cm.set({5, 6}, CostMap::kImpassable);
  cm.set({7, 6}, CostMap::kImpassable);
  CHECK_FALSE(astar(cm, Cell{0, 0}, Cell{6, 6}));
  CHECK_THROWS_AS(astar(cm, Cell{5, 5}, Cell{0, 0}), StartBlockedError);
}

TEST_CASE("no corner cutting between two blocked orthogonals") {
  auto cm = open_map(3, 3);
  cm.set({1, 0}, CostMap::kImpassable);
  cm.set({0, 1}, CostMap::kImpassable);
  CHECK_FALSE(astar(cm, Cell{0, 0}, Cell{1, 1}));
}

TEST_CASE("A* equals Dijkstra on random weighted grids and paths are valid") {
  std::mt19937_64 rng(42);
  std::uniform_int_distribution<int> pick(0, 19);
  for (int i = 0; i < 200; ++i) {
    const auto cm = oracle::random_costmap(20, 20, 0.25, rng);
    Cell s{pick(rng), pick(rng)};
    Cell t{pick(rng), pick(rng)};
    if (!cm.passable(s)) {
      CHECK_THROWS_AS(astar(cm, s, t), StartBlockedError);
      continue;
    }
    const auto path = astar(cm, s, t);
    const auto ref = oracle::dijkstra_cost(cm, s, t);
    REQUIRE(path.has_value() == ref.has_value());
    if (!path) continue;
    CHECK(path->cost == doctest::Approx(*ref).epsilon(1e-12));
    CHECK(path->cells.front() == s);
    CHECK(path->cells.back() == t);
    for (Cell c : path->cells) CHECK(cm.passable(c));
  }
}

TEST_CASE("geodesic field agrees with A* costs") {
  std::mt19937_64 rng(9);
  auto cm = oracle::random_costmap(15, 15, 0.2, rng);
  const Cell src{7, 7};
  cm.set(src, 1.0);
  const std::vector<Cell> sources{src};
  const auto field = geodesic_field(cm, sources);
  for (int i = 0; i < 15 * 15; ++i) {
    const Cell c = cm.geometry().cell_at(i);
    const auto ref = oracle::dijkstra_cost(cm, src, c);
    if (!ref) {
      CHECK_FALSE(std::isfinite(field[i]));
    } else {
      CHECK(field[i] == doctest::Approx(*ref).epsilon(1e-12));
    }
  }
}

TEST_CASE("follower action choice") {
  FollowerParams fp;
  SUBCASE("waypoint ahead") {
    FollowerState st(Path{{}, {{1.0, 0.0}, {2.0, 0.0}}, 0.0});
    CHECK(next_action(st, {0.0, 0.0, 0.0}, fp) == Action::Forward);
  }
  SUBCASE("waypoint to the left") {
    FollowerState st(Path{{}, {{0.0, 2.0}}, 0.0});
    CHECK(next_action(st, {0.0, 0.0, 0.0}, fp) == Action::TurnLeft);
  }
  SUBCASE("waypoint to the right") {
    FollowerState st(Path{{}, {{0.0, -2.0}}, 0.0});
    CHECK(next_action(st, {0.0, 0.0, 0.0}, fp) == Action::TurnRight);
  }
  SUBCASE("arrived") {
    FollowerState st(Path{{}, {{0.1, 0.1}}, 0.0});
    CHECK(next_action(st, {0.0, 0.0, 0.0}, fp) == Action::Stop);
  }
}

TEST_CASE("follower reaches the end of a straight path within the action bound") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Point2 start{10.0 * u(rng), 10.0 * u(rng)};
    const double len = 0.5 + 8.0 * u(rng);
    const double dir = kTwoPi * u(rng);
    const Point2 goal{start.x + len * std::cos(dir), start.y + len * std::sin(dir)};
    Path path;
    const int n = static_cast<int>(std::ceil(len / 0.1));
    for (int k = 1; k <= n; ++k)
      path.waypoints.push_back({start.x + (goal.x - start.x) * k / n, start.y + (goal.y - start.y) * k / n});
    FollowerState st(path);
    Pose p{start.x, start.y, kTwoPi * u(rng)};
    const int bound = static_cast<int>(std::ceil(len / kForwardStep)) + 12;
    int actions = 0;
    Action a = Action::Forward;
    while ((a = next_action(st, p)) != Action::Stop && actions <= bound) {
      p = apply(p, a);
      ++actions;
    }
    CAPTURE(trial);
    CHECK(a == Action::Stop);
    CHECK(actions <= bound);
    CHECK(distance(p.position(), goal) <= FollowerParams{}.arrival_radius);
  }
}

TEST_CASE("follower walks an A* staircase to its end") {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto cm = open_map(80, 80);
  for (int trial = 0; trial < 30; ++trial) {
    const Point2 start{0.55 + 0.1 * static_cast<int>(u(rng) * 10), 0.55 + 0.1 * static_cast<int>(u(rng) * 10)};
    const Point2 goal{start.x + 0.1 * static_cast<int>(u(rng) * 55), start.y + 0.1 * static_cast<int>(u(rng) * 55)};
    const auto path = astar(cm, start, goal);
    REQUIRE(path);
    FollowerState st(*path);
    Pose p{start.x, start.y, kTwoPi * u(rng)};
    int actions = 0;
    Action a = Action::Forward;
    while ((a = next_action(st, p)) != Action::Stop && actions < 500) {
      p = apply(p, a);
      ++actions;
    }
    CHECK(a == Action::Stop);
    CHECK(distance(p.position(), path->waypoints.back()) <= FollowerParams{}.arrival_radius);
  }
}

TEST_CASE("full rotation is twelve turns returning to the start heading") {
  const auto macro = full_rotation();
  CHECK(macro.size() == 12);
  Pose p{0, 0, 1.0};
  for (Action a : macro) p = apply(p, a);
  CHECK(std::abs(wrap_angle(p.heading - 1.0)) < 1e-9);
}

TEST_CASE("stuck detection") {
  auto cm = open_map(30, 30);
  const auto path = astar(cm, Point2{0.55, 1.55}, Point2{2.55, 1.55});
  REQUIRE(path);
  FollowerParams fp;

  SUBCASE("free corridor never triggers") {
    FollowerState st(*path);
    Pose p{0.55, 1.55, 0.0};
    for (int i = 0; i < 100; ++i) {
      const Action a = next_action(st, p, fp);
      if (a == Action::Stop) break;
      st.record(a, p, fp.stuck_window);
      p = apply(p, a);
      CHECK(detect_stuck_and_replan(st, p, cm, fp).status == StuckStatus::Progressing);
    }
  }

  SUBCASE("wedged agent replans around the blocked cell then escalates") {
    FollowerState st(*path);
    const Pose p{0.55, 1.55, 0.0};
    for (int i = 0; i < fp.stuck_window; ++i) st.record(Action::Forward, p, fp.stuck_window);
    const auto first = detect_stuck_and_replan(st, p, cm, fp);
    REQUIRE(first.status == StuckStatus::Replanned);
    REQUIRE(first.path);
    CHECK(first.path->cells != path->cells);
    for (Cell b : st.blocked)
      CHECK(std::find(first.path->cells.begin(), first.path->cells.end(), b) == first.path->cells.end());

    for (int i = 0; i < fp.stuck_window; ++i) st.record(Action::Forward, p, fp.stuck_window);
    CHECK(detect_stuck_and_replan(st, p, cm, fp).status == StuckStatus::Replanned);
    for (int i = 0; i < fp.stuck_window; ++i) st.record(Action::Forward, p, fp.stuck_window);
    CHECK(detect_stuck_and_replan(st, p, cm, fp).status == StuckStatus::Escalate);
  }
}

TEST_CASE("local sweep") {
  poi::PoIStore store;
  auto add = [&](double x, double y) {
    poi::PoI p;
    p.pose = {x, y, 0.0};
    return store.add(p);
  };
  const Pose agent{0.0, 0.0, 0.0};
  CHECK(local_sweep(store, agent).empty());

  // Collinear PoIs: the greedy tour walks them in line order. Brute force
  // over all tours confirms greedy is also the shortest here.
  const int a = add(1.2, 0.0);
  const int b = add(0.4, 0.0);
  const int c = add(0.8, 0.0);
  const auto tour = local_sweep(store, agent);
  CHECK(tour == std::vector<int>{b, c, a});
  std::vector<int> ids{a, b, c};
  std::sort(ids.begin(), ids.end());
  double best = 1e9;
  std::vector<int> best_tour;
  do {
    double len = 0.0;
    Point2 at{0, 0};
    for (int id : ids) {
      len += distance(at, store.get(id).pose.position());
      at = store.get(id).pose.position();
    }
    if (len < best - 1e-12) {
      best = len;
      best_tour = ids;
    }
  } while (std::next_permutation(ids.begin(), ids.end()));
  CHECK(best_tour == tour);

  add(1.51, 0.0);
  CHECK(local_sweep(store, agent).size() == 3);
  CHECK(local_sweep(store, agent, 1.5, 4).empty());
}
