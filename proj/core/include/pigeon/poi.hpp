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

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pigeon/geometry.hpp"
#include "pigeon/image.hpp"
#include "pigeon/mapping.hpp"
#include "pigeon/perception.hpp"

namespace pigeon::poi {

enum class PoiKind { Frontier, Object };
enum class PoiState { Selectable, Archived };

const char* to_string(PoiKind k);
const char* to_string(PoiState s);

/// A navigable decision point. Object PoIs face their object; frontier PoIs
/// are non-directional.
struct PoI {
  int id = -1;
  PoiKind kind = PoiKind::Frontier;
  int object_id = -1;
  std::string label;
  Point2 object_centroid;
  double face_heading = 0.0;
  Pose pose;
  /// Camera pose when the snapshot was taken.
  Pose extrinsics;
  SnapshotRef snapshot;
  mapping::Frustum frustum;
  int created_step = 0;
  PoiState state = PoiState::Selectable;
};

/// Selectable and archived PoIs of one episode. Ids are assigned on insert
/// and never reused; archiving is one-way.
class PoIStore {
 public:
  int add(PoI poi);
  /// Returns false when the PoI was already archived.
  bool archive(int id);

  const PoI& get(int id) const;
  bool contains(int id) const { return pois_.count(id) != 0; }

  std::vector<const PoI*> selectable() const;
  std::vector<const PoI*> archived() const;
  std::vector<const PoI*> all() const;
  std::size_t selectable_count() const;
  std::size_t archived_count() const;

  int last_waypoint_step() const { return last_waypoint_step_; }
  void set_last_waypoint_step(int step) { last_waypoint_step_ = step; }

 private:
  std::map<int, PoI> pois_;
  int next_id_ = 1;
  int last_waypoint_step_ = -1;
};

/// Free cell with at least one 4-neighbour Unknown.
bool is_frontier_cell(const mapping::GridMap& map, Cell c);

struct FrontierCluster {
  Cell representative;
  std::vector<Cell> cells;
};

/// 8-connected clusters of frontier cells with at least `min_cluster`
/// members. The representative is the member nearest the cluster centroid
/// (ties: lowest row-major index). Clusters are ordered by representative
/// index.
std::vector<FrontierCluster> extract_frontiers(const mapping::GridMap& map, int min_cluster = 3);

/// Representatives of clusters touching `newly_known` cells (or 8-adjacent
/// to them) that do not already contain a selectable frontier PoI.
std::vector<Cell> new_frontier_sites(const PoIStore& store, const mapping::GridMap& map,
                                     const std::vector<int>& newly_known, int min_cluster = 3);

struct ObjectPoiParams {
  double standoff = 0.8;
  double standoff_min = 0.7;
  double standoff_max = 1.5;
  double dedup_radius = 0.5;
  int max_per_object = 3;
  /// Occupied cells closer than this to the centroid count as the object
  /// itself when checking line of sight.
  double object_radius = 0.35;
};

/// Object-facing PoI around the detected object, or nullopt when no Free,
/// non-inflated cell with line of sight lies in the standoff band or the
/// object already owns a PoI near the chosen cell. Id, snapshot, frustum
/// and step are left for the caller.
std::optional<PoI> create_object_poi(const Detection& detection, const Pose& observer,
                                     const mapping::GridMap& map, const mapping::CostMap& costmap,
                                     const PoIStore& store, const ObjectPoiParams& params = {});

/// Archives stale frontier PoIs and the arrived PoI. Returns archived ids in
/// ascending order. Throws NotFoundError for an unknown `arrived` id.
std::vector<int> refresh(PoIStore& store, const mapping::GridMap& map, std::optional<int> arrived);

/// Candidates that share one source image.
struct ViewGroup {
  SnapshotRef snapshot;
  std::vector<std::size_t> candidate_indices;
  /// Historical PoI whose image accompanies this view.
  std::optional<PoI> context;
};

struct CandidateSet {
  std::vector<PoI> candidates;
  /// Geodesic distance (meters) from the agent to each candidate.
  std::vector<double> agent_distances;
  std::vector<ViewGroup> views;
};

/// New PoIs (created after the last waypoint) in id order, topped up with
/// the geodesically nearest older ones until `tau_choice` is reached.
/// Unreachable old PoIs are skipped.
CandidateSet sample_candidates(const PoIStore& store, int tau_choice, const Pose& agent,
                               const mapping::CostMap& costmap);

/// Groups candidates by snapshot and attaches, per view, the most recent
/// archived PoI whose frustum overlaps the view's frustum.
std::vector<ViewGroup> group_views(const std::vector<PoI>& candidates, const PoIStore& store);

}  // namespace pigeon::poi
