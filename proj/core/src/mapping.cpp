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

#include "pigeon/mapping.hpp"

#include <algorithm>
#include <cmath>

#include "pigeon/errors.hpp"

namespace pigeon::mapping {

Cell GridGeometry::cell_of(Point2 p) const {
  return {static_cast<int>(std::floor((p.x - origin.x) / resolution)),
          static_cast<int>(std::floor((p.y - origin.y) / resolution))};
}

Point2 GridGeometry::world_of(Cell c) const {
  return {origin.x + (c.col + 0.5) * resolution, origin.y + (c.row + 0.5) * resolution};
}

GridMap::GridMap(GridGeometry geometry, CellState fill) : geometry_(geometry) {
  if (geometry.resolution <= 0.0 || geometry.width <= 0 || geometry.height <= 0)
    throw InvalidInputError("grid geometry must have positive resolution and size");
  cells_.assign(static_cast<std::size_t>(geometry.size()), fill);
}

int GridMap::count(CellState s) const {
  return static_cast<int>(std::count(cells_.begin(), cells_.end(), s));
}

bool Frustum::contains(int id) const { return std::binary_search(cell_ids.begin(), cell_ids.end(), id); }

bool Frustum::overlaps(const Frustum& other) const {
  auto a = cell_ids.begin();
  auto b = other.cell_ids.begin();
  while (a != cell_ids.end() && b != other.cell_ids.end()) {
    if (*a == *b) return true;
    if (*a < *b)
      ++a;
    else
      ++b;
  }
  return false;
}

std::vector<Cell> trace_ray(const GridGeometry& g, Point2 from, Point2 to) {
  std::vector<Cell> out;
  const double ux0 = (from.x - g.origin.x) / g.resolution;
  const double uy0 = (from.y - g.origin.y) / g.resolution;
  const double ux1 = (to.x - g.origin.x) / g.resolution;
  const double uy1 = (to.y - g.origin.y) / g.resolution;
  Cell cur{static_cast<int>(std::floor(ux0)), static_cast<int>(std::floor(uy0))};
  const Cell end{static_cast<int>(std::floor(ux1)), static_cast<int>(std::floor(uy1))};
  if (!g.in_bounds(cur)) return out;

  const double dx = ux1 - ux0;
  const double dy = uy1 - uy0;
  const int step_x = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int step_y = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double t_max_x = step_x > 0 ? (cur.col + 1 - ux0) / dx : (step_x < 0 ? (ux0 - cur.col) / -dx : kInf);
  double t_max_y = step_y > 0 ? (cur.row + 1 - uy0) / dy : (step_y < 0 ? (uy0 - cur.row) / -dy : kInf);
  const double t_delta_x = step_x != 0 ? 1.0 / std::abs(dx) : kInf;
  const double t_delta_y = step_y != 0 ? 1.0 / std::abs(dy) : kInf;

  const int limit = std::abs(end.col - cur.col) + std::abs(end.row - cur.row) + 2;
  for (int i = 0; i <= limit * 2; ++i) {
    out.push_back(cur);
    if (cur == end) break;
    if (t_max_x < t_max_y) {
      if (t_max_x > 1.0) break;
      cur.col += step_x;
      t_max_x += t_delta_x;
    } else if (t_max_y < t_max_x) {
      if (t_max_y > 1.0) break;
      cur.row += step_y;
      t_max_y += t_delta_y;
    } else {
      if (t_max_x > 1.0) break;
      // Exact corner crossing: cover both side cells.
      const Cell side_a{cur.col + step_x, cur.row};
      const Cell side_b{cur.col, cur.row + step_y};
      if (g.in_bounds(side_a)) out.push_back(side_a);
      if (g.in_bounds(side_b)) out.push_back(side_b);
      cur.col += step_x;
      cur.row += step_y;
      t_max_x += t_delta_x;
      t_max_y += t_delta_y;
    }
    if (!g.in_bounds(cur)) break;
  }
  return out;
}

std::vector<Cell> bresenham_line(Cell from, Cell to) {
  std::vector<Cell> out;
  int x = from.col;
  int y = from.row;
  const int dx = std::abs(to.col - x);
  const int dy = -std::abs(to.row - y);
  const int sx = x < to.col ? 1 : -1;
  const int sy = y < to.row ? 1 : -1;
  int err = dx + dy;
  while (true) {
    out.push_back({x, y});
    if (x == to.col && y == to.row) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y += sy;
    }
  }
  return out;
}

int integrate_scan(GridMap& map, const DepthScan& scan) {
  const auto& g = map.geometry();
  const Point2 origin = scan.pose.position();
  const Cell agent = g.cell_of(origin);
  if (!g.in_bounds(agent)) throw MapBoundsError("scan pose outside map bounds");
  if (scan.beam_angles.size() != scan.ranges.size())
    throw InvalidInputError("scan beam_angles and ranges differ in length");

  // 0 = untouched, 1 = passed through, 2 = hit.
  std::vector<std::uint8_t> evidence(static_cast<std::size_t>(g.size()), 0);
  evidence[g.index(agent)] = 1;

  for (std::size_t i = 0; i < scan.ranges.size(); ++i) {
    const double angle = scan.pose.heading + scan.beam_angles[i];
    const Point2 dir{std::cos(angle), std::sin(angle)};
    const double range = std::clamp(scan.ranges[i], 0.0, scan.max_range);
    const bool hit = range < scan.max_range;
    // Nudge past the surface so the endpoint lands inside the struck cell.
    const double reach = hit ? range + 1e-6 : range;
    const Point2 end{origin.x + reach * dir.x, origin.y + reach * dir.y};
    const auto cells = trace_ray(g, origin, end);
    if (cells.empty()) continue;
    const bool hit_in_map = hit && cells.back() == g.cell_of(end);
    const std::size_t n_free = hit_in_map ? cells.size() - 1 : cells.size();
    for (std::size_t k = 0; k < n_free; ++k) {
      auto& e = evidence[g.index(cells[k])];
      e = std::max<std::uint8_t>(e, 1);
    }
    if (hit_in_map) evidence[g.index(cells.back())] = 2;
  }

  int changed = 0;
  for (int idx = 0; idx < g.size(); ++idx) {
    if (evidence[idx] == 0) continue;
    const CellState next = evidence[idx] == 2 ? CellState::Occupied : CellState::Free;
    const Cell c = g.cell_at(idx);
    if (map.at(c) != next) {
      map.set(c, next);
      ++changed;
    }
  }
  return changed;
}

Frustum frustum_cells(const GridMap& map, const Pose& pose, double fov, double max_range) {
  const auto& g = map.geometry();
  Frustum f;
  const Point2 p = pose.position();
  const Cell agent = g.cell_of(p);
  if (!g.in_bounds(agent)) return f;
  const bool full_circle = fov >= kTwoPi - 1e-12;
  const double half = fov / 2.0;
  const int reach = static_cast<int>(std::ceil(std::max(max_range, 0.0) / g.resolution)) + 1;

  for (int row = std::max(0, agent.row - reach); row <= std::min(g.height - 1, agent.row + reach); ++row) {
    for (int col = std::max(0, agent.col - reach); col <= std::min(g.width - 1, agent.col + reach); ++col) {
      const Cell c{col, row};
      if (c == agent) {
        f.cell_ids.push_back(g.index(c));
        continue;
      }
      if (map.at(c) == CellState::Unknown) continue;
      const Point2 w = g.world_of(c);
      if (distance(p, w) > max_range) continue;
      if (!full_circle && std::abs(wrap_angle(std::atan2(w.y - p.y, w.x - p.x) - pose.heading)) > half + 1e-12)
        continue;
      const auto line = bresenham_line(agent, c);
      bool clear = true;
      for (std::size_t k = 1; k + 1 < line.size(); ++k) {
        if (map.at(line[k]) != CellState::Free) {
          clear = false;
          break;
        }
      }
      if (clear) f.cell_ids.push_back(g.index(c));
    }
  }
  std::sort(f.cell_ids.begin(), f.cell_ids.end());
  return f;
}

double explored_fraction(const GridMap& map) {
  const int total = map.geometry().size();
  if (total == 0) return 0.0;
  return static_cast<double>(total - map.count(CellState::Unknown)) / total;
}

CostMap::CostMap(GridGeometry geometry, double fill) : geometry_(geometry) {
  costs_.assign(static_cast<std::size_t>(geometry.size()), fill);
}

void CostMap::scale_near(Point2 center, double radius, double factor) {
  const Cell c0 = geometry_.cell_of(center);
  const int reach = static_cast<int>(std::ceil(radius / geometry_.resolution)) + 1;
  for (int row = c0.row - reach; row <= c0.row + reach; ++row) {
    for (int col = c0.col - reach; col <= c0.col + reach; ++col) {
      const Cell c{col, row};
      if (!geometry_.in_bounds(c)) continue;
      if (distance(geometry_.world_of(c), center) > radius) continue;
      auto& v = costs_[geometry_.index(c)];
      if (v < kImpassable) v *= factor;
    }
  }
}

CostMap inflate_obstacles(const GridMap& map, const InflationParams& params) {
  if (params.radius < 0.0) throw InvalidInputError("inflation radius must be non-negative");
  const auto& g = map.geometry();
  CostMap out(g, 1.0);
  std::vector<std::uint8_t> inflated(static_cast<std::size_t>(g.size()), 0);
  const double r_cells = params.radius / g.resolution;
  const int reach = static_cast<int>(std::floor(r_cells + 1e-9));
  const double r2 = r_cells * r_cells + 1e-9;

  for (int idx = 0; idx < g.size(); ++idx) {
    if (map.at(idx) != CellState::Occupied) continue;
    const Cell c = g.cell_at(idx);
    for (int dr = -reach; dr <= reach; ++dr) {
      for (int dc = -reach; dc <= reach; ++dc) {
        if (dc * dc + dr * dr > r2) continue;
        const Cell n{c.col + dc, c.row + dr};
        if (g.in_bounds(n)) inflated[g.index(n)] = 1;
      }
    }
  }

  for (int idx = 0; idx < g.size(); ++idx) {
    const Cell c = g.cell_at(idx);
    switch (map.at(idx)) {
      case CellState::Occupied:
        out.set(c, CostMap::kImpassable);
        break;
      case CellState::Unknown:
        if (!params.unknown_cost) {
          out.set(c, CostMap::kImpassable);
        } else {
          out.set(c, inflated[idx] ? std::max(*params.unknown_cost, params.inflated_cost) : *params.unknown_cost);
        }
        break;
      case CellState::Free:
        out.set(c, inflated[idx] ? params.inflated_cost : 1.0);
        break;
    }
  }
  return out;
}

std::string to_pgm(const GridMap& map) {
  std::string out = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  out.reserve(out.size() + map.cells().size());
  for (CellState s : map.cells()) {
    switch (s) {
      case CellState::Unknown:
        out.push_back(static_cast<char>(127));
        break;
      case CellState::Free:
        out.push_back(static_cast<char>(255));
        break;
      case CellState::Occupied:
        out.push_back(static_cast<char>(0));
        break;
    }
  }
  return out;
}

}  // namespace pigeon::mapping
