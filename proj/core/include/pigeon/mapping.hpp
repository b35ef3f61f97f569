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

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "pigeon/geometry.hpp"

namespace pigeon::mapping {

/// Merge order: Occupied > Free > Unknown.
enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

/// Placement and size of a regular grid in world coordinates. `origin` is
/// the lower-left corner of cell (0, 0); cell (c, r) covers
/// [origin.x + c*res, origin.x + (c+1)*res) x [origin.y + r*res, ...).
struct GridGeometry {
  double resolution = 0.1;
  Point2 origin;
  int width = 0;
  int height = 0;

  int size() const { return width * height; }
  bool in_bounds(Cell c) const { return c.col >= 0 && c.row >= 0 && c.col < width && c.row < height; }
  int index(Cell c) const { return c.row * width + c.col; }
  Cell cell_at(int index) const { return {index % width, index / width}; }
  /// Cell containing a world point (may be out of bounds).
  Cell cell_of(Point2 p) const;
  /// Center of a cell in world coordinates.
  Point2 world_of(Cell c) const;
  bool contains(Point2 p) const { return in_bounds(cell_of(p)); }

  friend bool operator==(const GridGeometry&, const GridGeometry&) = default;
};

/// Dense occupancy belief. Serves both as the traversability map and, via
/// the Unknown/known partition, as the exploration map.
class GridMap {
 public:
  GridMap() = default;
  explicit GridMap(GridGeometry geometry, CellState fill = CellState::Unknown);

  const GridGeometry& geometry() const { return geometry_; }
  int width() const { return geometry_.width; }
  int height() const { return geometry_.height; }
  double resolution() const { return geometry_.resolution; }

  CellState at(Cell c) const { return cells_[geometry_.index(c)]; }
  CellState at(int index) const { return cells_[index]; }
  void set(Cell c, CellState s) { cells_[geometry_.index(c)] = s; }
  const std::vector<CellState>& cells() const { return cells_; }

  int count(CellState s) const;

  friend bool operator==(const GridMap&, const GridMap&) = default;

 private:
  GridGeometry geometry_;
  std::vector<CellState> cells_;
};

/// Planar depth scan. Beam angles are relative to the pose heading; a range
/// equal to `max_range` means the beam hit nothing.
struct DepthScan {
  Pose pose;
  double fov = 0.0;
  std::vector<double> beam_angles;
  std::vector<double> ranges;
  double max_range = 0.0;
};

/// Sorted, de-duplicated set of cell indices.
struct Frustum {
  std::vector<int> cell_ids;

  bool contains(int id) const;
  bool overlaps(const Frustum& other) const;
  bool empty() const { return cell_ids.empty(); }

  friend bool operator==(const Frustum&, const Frustum&) = default;
};

/// Cells crossed by the segment `from`→`to`, in traversal order, stopping
/// at the map boundary. Exact corner crossings include both side cells so a
/// ray never slips diagonally between two blocked cells.
std::vector<Cell> trace_ray(const GridGeometry& g, Point2 from, Point2 to);

/// Integer Bresenham line between two cells, endpoints included.
std::vector<Cell> bresenham_line(Cell from, Cell to);

/// Folds one scan into the map and returns the number of cells whose state
/// changed. Within a scan, hits take precedence over pass-through evidence.
/// Across scans the latest observation wins, except that a cell is only
/// cleared from Occupied when a beam passes strictly through it.
/// Throws MapBoundsError when the scan pose is outside the map.
int integrate_scan(GridMap& map, const DepthScan& scan);

/// Cells whose centers lie within `max_range` of the pose, inside the
/// heading-centred wedge of width `fov`, are known, and are reachable by an
/// unobstructed Bresenham line (all intermediate cells Free). The agent's
/// own cell is always included.
Frustum frustum_cells(const GridMap& map, const Pose& pose, double fov, double max_range);

/// Fraction of cells that are not Unknown.
double explored_fraction(const GridMap& map);

/// Per-cell traversal cost. Infinity marks impassable cells.
class CostMap {
 public:
  static constexpr double kImpassable = std::numeric_limits<double>::infinity();

  CostMap() = default;
  CostMap(GridGeometry geometry, double fill);

  const GridGeometry& geometry() const { return geometry_; }
  double cost(Cell c) const { return costs_[geometry_.index(c)]; }
  double cost(int index) const { return costs_[index]; }
  void set(Cell c, double v) { costs_[geometry_.index(c)] = v; }
  bool passable(Cell c) const { return geometry_.in_bounds(c) && costs_[geometry_.index(c)] < kImpassable; }

  /// Multiplies the cost of every passable cell within `radius` meters of
  /// `center` by `factor`.
  void scale_near(Point2 center, double radius, double factor);

  const std::vector<double>& costs() const { return costs_; }

 private:
  GridGeometry geometry_;
  std::vector<double> costs_;
};

struct InflationParams {
  double radius = 0.3;
  /// Cost of a Free cell inside the inflation radius.
  double inflated_cost = 4.0;
  /// When set, Unknown cells are traversable at this cost; otherwise they
  /// are impassable.
  std::optional<double> unknown_cost;
};

/// Free cells cost 1; cells whose centre lies within `radius` of an
/// Occupied cell centre cost `inflated_cost`; Occupied cells are impassable.
CostMap inflate_obstacles(const GridMap& map, const InflationParams& params);

/// Binary PGM (P5) with Unknown=127, Free=255, Occupied=0. Row 0 of the map
/// is written as the first image row.
std::string to_pgm(const GridMap& map);

}  // namespace pigeon::mapping
