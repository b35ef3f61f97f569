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

#include "pigeon/poi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pigeon/errors.hpp"
#include "pigeon/planner.hpp"

namespace pigeon::poi {

using mapping::CellState;
using mapping::CostMap;
using mapping::GridMap;

const char* to_string(PoiKind k) { return k == PoiKind::Frontier ? "frontier" : "object"; }
const char* to_string(PoiState s) { return s == PoiState::Selectable ? "selectable" : "archived"; }

int PoIStore::add(PoI poi) {
  poi.id = next_id_++;
  poi.state = PoiState::Selectable;
  const int id = poi.id;
  pois_.emplace(id, std::move(poi));
  return id;
}

bool PoIStore::archive(int id) {
  auto it = pois_.find(id);
  if (it == pois_.end()) throw NotFoundError("unknown PoI id " + std::to_string(id));
  if (it->second.state == PoiState::Archived) return false;
  it->second.state = PoiState::Archived;
  return true;
}

const PoI& PoIStore::get(int id) const {
  auto it = pois_.find(id);
  if (it == pois_.end()) throw NotFoundError("unknown PoI id " + std::to_string(id));
  return it->second;
}

std::vector<const PoI*> PoIStore::selectable() const {
  std::vector<const PoI*> out;
  for (const auto& [id, p] : pois_)
    if (p.state == PoiState::Selectable) out.push_back(&p);
  return out;
}

std::vector<const PoI*> PoIStore::archived() const {
  std::vector<const PoI*> out;
  for (const auto& [id, p] : pois_)
    if (p.state == PoiState::Archived) out.push_back(&p);
  return out;
}

std::vector<const PoI*> PoIStore::all() const {
  std::vector<const PoI*> out;
  for (const auto& [id, p] : pois_) out.push_back(&p);
  return out;
}

std::size_t PoIStore::selectable_count() const {
  return static_cast<std::size_t>(
      std::count_if(pois_.begin(), pois_.end(), [](const auto& kv) { return kv.second.state == PoiState::Selectable; }));
}

std::size_t PoIStore::archived_count() const { return pois_.size() - selectable_count(); }

bool is_frontier_cell(const GridMap& map, Cell c) {
  const auto& g = map.geometry();
  if (!g.in_bounds(c) || map.at(c) != CellState::Free) return false;
  constexpr int kN4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  for (const auto& d : kN4) {
    const Cell n{c.col + d[0], c.row + d[1]};
    if (g.in_bounds(n) && map.at(n) == CellState::Unknown) return true;
  }
  return false;
}

std::vector<FrontierCluster> extract_frontiers(const GridMap& map, int min_cluster) {
  const auto& g = map.geometry();
  std::vector<char> frontier(static_cast<std::size_t>(g.size()), 0);
  for (int i = 0; i < g.size(); ++i) frontier[i] = is_frontier_cell(map, g.cell_at(i)) ? 1 : 0;

  std::vector<char> seen(frontier.size(), 0);
  std::vector<FrontierCluster> clusters;
  std::vector<int> stack;
  for (int i = 0; i < g.size(); ++i) {
    if (!frontier[i] || seen[i]) continue;
    FrontierCluster cl;
    stack.assign(1, i);
    seen[i] = 1;
    while (!stack.empty()) {
      const int cur = stack.back();
      stack.pop_back();
      const Cell c = g.cell_at(cur);
      cl.cells.push_back(c);
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const Cell n{c.col + dc, c.row + dr};
          if ((dc == 0 && dr == 0) || !g.in_bounds(n)) continue;
          const int ni = g.index(n);
          if (frontier[ni] && !seen[ni]) {
            seen[ni] = 1;
            stack.push_back(ni);
          }
        }
      }
    }
    if (static_cast<int>(cl.cells.size()) < min_cluster) continue;
    double sx = 0.0;
    double sy = 0.0;
    for (Cell c : cl.cells) {
      sx += c.col;
      sy += c.row;
    }
    const double cx = sx / cl.cells.size();
    const double cy = sy / cl.cells.size();
    std::sort(cl.cells.begin(), cl.cells.end(), [&](Cell a, Cell b) { return g.index(a) < g.index(b); });
    double best = std::numeric_limits<double>::infinity();
    for (Cell c : cl.cells) {
      const double d = (c.col - cx) * (c.col - cx) + (c.row - cy) * (c.row - cy);
      if (d < best) {
        best = d;
        cl.representative = c;
      }
    }
    clusters.push_back(std::move(cl));
  }
  std::sort(clusters.begin(), clusters.end(), [&](const FrontierCluster& a, const FrontierCluster& b) {
    return g.index(a.representative) < g.index(b.representative);
  });
  return clusters;
}

std::vector<Cell> new_frontier_sites(const PoIStore& store, const GridMap& map, const std::vector<int>& newly_known,
                                     int min_cluster) {
  const auto& g = map.geometry();
  std::vector<char> fresh(static_cast<std::size_t>(g.size()), 0);
  for (int idx : newly_known) {
    const Cell c = g.cell_at(idx);
    for (int dr = -1; dr <= 1; ++dr)
      for (int dc = -1; dc <= 1; ++dc) {
        const Cell n{c.col + dc, c.row + dr};
        if (g.in_bounds(n)) fresh[g.index(n)] = 1;
      }
  }
  std::vector<char> owned(fresh.size(), 0);
  for (const PoI* p : store.selectable()) {
    if (p->kind != PoiKind::Frontier) continue;
    const Cell c = g.cell_of(p->pose.position());
    if (g.in_bounds(c)) owned[g.index(c)] = 1;
  }

  std::vector<Cell> sites;
  for (const auto& cl : extract_frontiers(map, min_cluster)) {
    bool touches = false;
    bool has_poi = false;
    for (Cell c : cl.cells) {
      touches = touches || fresh[g.index(c)];
      has_poi = has_poi || owned[g.index(c)];
    }
    if (touches && !has_poi) sites.push_back(cl.representative);
  }
  return sites;
}

std::optional<PoI> create_object_poi(const Detection& detection, const Pose& observer, const GridMap& map,
                                     const CostMap& costmap, const PoIStore& store, const ObjectPoiParams& params) {
  const auto& g = map.geometry();
  const Point2 centroid = detection.centroid_from(observer.position());
  const Cell center = g.cell_of(centroid);

  int owned = 0;
  for (const PoI* p : store.all())
    if (p->kind == PoiKind::Object && p->object_id == detection.object_id) ++owned;
  if (owned >= params.max_per_object) return std::nullopt;

  const int reach = static_cast<int>(std::ceil(params.standoff_max / g.resolution)) + 1;
  std::optional<Cell> best;
  std::tuple<double, double, int> best_key{};
  for (int row = center.row - reach; row <= center.row + reach; ++row) {
    for (int col = center.col - reach; col <= center.col + reach; ++col) {
      const Cell c{col, row};
      if (!g.in_bounds(c) || map.at(c) != CellState::Free || costmap.cost(c) != 1.0) continue;
      const Point2 w = g.world_of(c);
      const double d = distance(w, centroid);
      if (d < params.standoff_min || d > params.standoff_max) continue;
      bool visible = true;
      for (Cell l : mapping::bresenham_line(c, center)) {
        if (l == c || l == center) continue;
        if (map.at(l) == CellState::Free) continue;
        if (map.at(l) == CellState::Occupied && distance(g.world_of(l), centroid) <= params.object_radius) continue;
        visible = false;
        break;
      }
      if (!visible) continue;
      const std::tuple<double, double, int> key{std::abs(d - params.standoff), distance(w, observer.position()),
                                                g.index(c)};
      if (!best || key < best_key) {
        best = c;
        best_key = key;
      }
    }
  }
  if (!best) return std::nullopt;

  const Point2 spot = g.world_of(*best);
  for (const PoI* p : store.all())
    if (p->kind == PoiKind::Object && p->object_id == detection.object_id &&
        distance(p->pose.position(), spot) <= params.dedup_radius)
      return std::nullopt;

  PoI poi;
  poi.kind = PoiKind::Object;
  poi.object_id = detection.object_id;
  poi.label = detection.label;
  poi.object_centroid = centroid;
  poi.face_heading = normalize_heading(std::atan2(centroid.y - spot.y, centroid.x - spot.x));
  poi.pose = Pose{spot.x, spot.y, poi.face_heading, 0.0};
  return poi;
}

std::vector<int> refresh(PoIStore& store, const GridMap& map, std::optional<int> arrived) {
  if (arrived && !store.contains(*arrived)) throw NotFoundError("unknown arrived PoI id " + std::to_string(*arrived));
  std::vector<int> out;
  const auto& g = map.geometry();
  for (const PoI* p : store.selectable()) {
    if (p->kind != PoiKind::Frontier) continue;
    if (!is_frontier_cell(map, g.cell_of(p->pose.position()))) out.push_back(p->id);
  }
  for (int id : out) store.archive(id);
  if (arrived && store.archive(*arrived)) out.push_back(*arrived);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ViewGroup> group_views(const std::vector<PoI>& candidates, const PoIStore& store) {
  std::vector<ViewGroup> views;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    const auto& snap = candidates[i].snapshot;
    auto it = std::find_if(views.begin(), views.end(),
                           [&](const ViewGroup& v) { return snap && v.snapshot && v.snapshot->id == snap->id; });
    if (it == views.end()) {
      ViewGroup v;
      v.snapshot = snap;
      v.candidate_indices.push_back(i);
      views.push_back(std::move(v));
    } else {
      it->candidate_indices.push_back(i);
    }
  }

  const auto archived = store.archived();
  for (auto& v : views) {
    const PoI& lead = candidates[v.candidate_indices.front()];
    const PoI* pick = nullptr;
    for (const PoI* a : archived) {
      if (!a->snapshot) continue;
      if (v.snapshot && a->snapshot->id == v.snapshot->id) continue;
      if (!a->frustum.overlaps(lead.frustum)) continue;
      if (!pick || a->created_step > pick->created_step ||
          (a->created_step == pick->created_step && a->id > pick->id))
        pick = a;
    }
    if (pick) v.context = *pick;
  }
  return views;
}

CandidateSet sample_candidates(const PoIStore& store, int tau_choice, const Pose& agent, const CostMap& costmap) {
  const auto& g = costmap.geometry();
  std::vector<double> field;
  const Cell here = g.cell_of(agent.position());
  if (g.in_bounds(here)) {
    const Cell src[1] = {here};
    field = planner::geodesic_field(costmap, src);
  }
  const auto geodesic = [&](const PoI& p) {
    const Cell c = g.cell_of(p.pose.position());
    if (field.empty() || !g.in_bounds(c)) return std::numeric_limits<double>::infinity();
    return field[g.index(c)] * g.resolution;
  };

  CandidateSet out;
  std::vector<std::pair<double, const PoI*>> old;
  for (const PoI* p : store.selectable()) {
    if (p->created_step > store.last_waypoint_step()) {
      out.candidates.push_back(*p);
      out.agent_distances.push_back(geodesic(*p));
    } else {
      old.emplace_back(geodesic(*p), p);
    }
  }
  std::sort(old.begin(), old.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second->id < b.second->id);
  });
  for (const auto& [d, p] : old) {
    if (static_cast<int>(out.candidates.size()) >= tau_choice) break;
    if (!std::isfinite(d)) continue;
    out.candidates.push_back(*p);
    out.agent_distances.push_back(d);
  }
  out.views = group_views(out.candidates, store);
  return out;
}

}  // namespace pigeon::poi
