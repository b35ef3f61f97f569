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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

namespace oracle {

using pigeon::Cell;
using pigeon::Point2;
using pigeon::mapping::CellState;
using pigeon::mapping::CostMap;
using pigeon::mapping::GridMap;

std::optional<double> dijkstra_cost(const CostMap& cm, Cell start, Cell goal) {
  const auto& g = cm.geometry();
  const int n = g.width * g.height;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, inf);
  std::vector<bool> done(n, false);
  auto idx = [&](Cell c) { return c.row * g.width + c.col; };
  auto ok = [&](int col, int row) {
    return col >= 0 && row >= 0 && col < g.width && row < g.height && std::isfinite(cm.cost(Cell{col, row}));
  };
  if (!ok(start.col, start.row)) return std::nullopt;
  dist[idx(start)] = 0.0;
  // O(n^2) selection keeps this obviously correct.
  for (int it = 0; it < n; ++it) {
    int best = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && std::isfinite(dist[i]) && (best < 0 || dist[i] < dist[best])) best = i;
    if (best < 0) break;
    done[best] = true;
    const int bc = best % g.width;
    const int br = best / g.width;
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        if (dr == 0 && dc == 0) continue;
        const int nc = bc + dc;
        const int nr = br + dr;
        if (!ok(nc, nr)) continue;
        if (dr != 0 && dc != 0 && (!ok(bc + dc, br) || !ok(bc, br + dr))) continue;
        const double step = (dr != 0 && dc != 0) ? std::sqrt(2.0) : 1.0;
        const double nd = dist[best] + step * cm.cost(Cell{nc, nr});
        const int ni = nr * g.width + nc;
        if (nd < dist[ni]) dist[ni] = nd;
      }
    }
  }
  const double d = dist[idx(goal)];
  if (!std::isfinite(d)) return std::nullopt;
  return d;
}

namespace {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

std::vector<Cell> frontier_representatives(const GridMap& map, int min_cluster) {
  const int w = map.width();
  const int h = map.height();
  auto state = [&](int c, int r) { return map.at(Cell{c, r}); };
  std::vector<bool> fr(w * h, false);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (state(c, r) != CellState::Free) continue;
      bool unknown_nb = (c > 0 && state(c - 1, r) == CellState::Unknown) ||
                        (c + 1 < w && state(c + 1, r) == CellState::Unknown) ||
                        (r > 0 && state(c, r - 1) == CellState::Unknown) ||
                        (r + 1 < h && state(c, r + 1) == CellState::Unknown);
      fr[r * w + c] = unknown_nb;
    }
  }
  UnionFind uf(w * h);
  for (int a = 0; a < w * h; ++a) {
    if (!fr[a]) continue;
    for (int b = a + 1; b < w * h; ++b) {
      if (!fr[b]) continue;
      if (std::abs(a % w - b % w) <= 1 && std::abs(a / w - b / w) <= 1) uf.unite(a, b);
    }
  }
  std::vector<std::vector<int>> groups(w * h);
  for (int i = 0; i < w * h; ++i)
    if (fr[i]) groups[uf.find(i)].push_back(i);
  std::vector<Cell> reps;
  for (const auto& grp : groups) {
    if (grp.empty() || static_cast<int>(grp.size()) < min_cluster) continue;
    double mx = 0;
    double my = 0;
    for (int i : grp) {
      mx += i % w;
      my += i / w;
    }
    mx /= grp.size();
    my /= grp.size();
    int best = -1;
    double bd = 0;
    for (int i : grp) {
      const double d = (i % w - mx) * (i % w - mx) + (i / w - my) * (i / w - my);
      if (best < 0 || d < bd || (d == bd && i < best)) {
        best = i;
        bd = d;
      }
    }
    reps.push_back({best % w, best / w});
  }
  std::sort(reps.begin(), reps.end(), [&](Cell a, Cell b) { return a.row * w + a.col < b.row * w + b.col; });
  return reps;
}

std::vector<Cell> rounded_line(Cell from, Cell to, bool* tie) {
  const int dx = to.col - from.col;
  const int dy = to.row - from.row;
  const int steps = std::max(std::abs(dx), std::abs(dy));
  if (tie) *tie = false;
  std::vector<Cell> out;
  if (steps == 0) return {from};
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const double x = from.col + t * dx;
    const double y = from.row + t * dy;
    // Exact halves only arise as k/2 with integer k.
    const auto half = [](double v) { return std::abs(v * 2.0 - std::round(v * 2.0)) < 1e-12 && std::abs(v - std::round(v)) > 0.25; };
    if (tie && (half(x) || half(y))) *tie = true;
    out.push_back({static_cast<int>(std::lround(x)), static_cast<int>(std::lround(y))});
  }
  return out;
}

bool segment_hits_square(Point2 a, Point2 b, Point2 c, double side) {
  const double lo_x = c.x - side / 2;
  const double hi_x = c.x + side / 2;
  const double lo_y = c.y - side / 2;
  const double hi_y = c.y + side / 2;
  double t0 = 0.0;
  double t1 = 1.0;
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.x - lo_x, hi_x - a.x, a.y - lo_y, hi_y - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0)
      t0 = std::max(t0, r);
    else
      t1 = std::min(t1, r);
    if (t0 > t1) return false;
  }
  return true;
}

Mat4 mat_mul(const Mat4& a, const Mat4& b) {
  Mat4 out{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) out[i][j] += a[i][k] * b[k][j];
  return out;
}

Mat4 world_to_camera(const pigeon::Pose& pose, double height) {
  const Mat4 translate{{{1, 0, 0, -pose.x}, {0, 1, 0, -pose.y}, {0, 0, 1, -height}, {0, 0, 0, 1}}};
  const double c = std::cos(-pose.heading);
  const double s = std::sin(-pose.heading);
  const Mat4 yaw{{{c, -s, 0, 0}, {s, c, 0, 0}, {0, 0, 1, 0}, {0, 0, 0, 1}}};
  // Body frame (x forward, y left, z up) to camera frame (x right, y down,
  // z forward).
  const Mat4 swap{{{0, -1, 0, 0}, {0, 0, -1, 0}, {1, 0, 0, 0}, {0, 0, 0, 1}}};
  const double cp = std::cos(pose.pitch);
  const double sp = std::sin(pose.pitch);
  const Mat4 pitch{{{1, 0, 0, 0}, {0, cp, sp, 0}, {0, -sp, cp, 0}, {0, 0, 0, 1}}};
  return mat_mul(pitch, mat_mul(swap, mat_mul(yaw, translate)));
}

std::optional<std::array<double, 2>> project(const pigeon::CameraIntrinsics& k, const Mat4& m, pigeon::Point3 p) {
  const double hp[4] = {p.x, p.y, p.z, 1.0};
  const double kmat[3][4] = {{k.fx, 0, k.cx, 0}, {0, k.fy, k.cy, 0}, {0, 0, 1, 0}};
  double cam[4] = {0, 0, 0, 0};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) cam[i] += m[i][j] * hp[j];
  double s[3] = {0, 0, 0};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 4; ++j) s[i] += kmat[i][j] * cam[j];
  if (!(s[2] > 0.0)) return std::nullopt;
  return std::array<double, 2>{s[0] / s[2], s[1] / s[2]};
}

CostMap random_costmap(int w, int h, double wall_p, std::mt19937_64& rng) {
  pigeon::mapping::GridGeometry g{0.1, {0.0, 0.0}, w, h};
  CostMap cm(g, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double costs[3] = {1.0, 2.0, 4.0};
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      cm.set({c, r}, u(rng) < wall_p ? CostMap::kImpassable : costs[static_cast<int>(u(rng) * 3) % 3]);
  return cm;
}

GridMap random_belief(int w, int h, std::mt19937_64& rng) {
  pigeon::mapping::GridGeometry g{0.1, {0.0, 0.0}, w, h};
  GridMap m(g, CellState::Unknown);
  std::uniform_int_distribution<int> col(0, w - 1);
  std::uniform_int_distribution<int> row(0, h - 1);
  std::uniform_int_distribution<int> len(2, std::max(3, w / 2));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  // Free rectangles then scattered obstacles.
  for (int k = 0; k < 6; ++k) {
    const int c0 = col(rng);
    const int r0 = row(rng);
    const int cw = len(rng);
    const int rh = len(rng);
    for (int r = r0; r < std::min(h, r0 + rh); ++r)
      for (int c = c0; c < std::min(w, c0 + cw); ++c) m.set({c, r}, CellState::Free);
  }
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      if (u(rng) < 0.08) m.set({c, r}, CellState::Occupied);
  return m;
}

}  // namespace oracle
