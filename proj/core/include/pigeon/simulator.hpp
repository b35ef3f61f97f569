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
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pigeon/camera.hpp"
#include "pigeon/geometry.hpp"
#include "pigeon/image.hpp"
#include "pigeon/mapping.hpp"
#include "pigeon/perception.hpp"
#include "pigeon/planner.hpp"

namespace pigeon::sim {

enum class HeightBand { Floor, Mid, High };

const char* to_string(HeightBand b);

struct SceneObject {
  int id = 0;
  std::string category;
  /// What the detector reports. Differs from `category` for look-alikes.
  std::string visual_label;
  Point2 centroid;
  Point2 size{0.4, 0.4};
  std::vector<Cell> footprint;
  double base_confidence = 0.8;
  HeightBand height_band = HeightBand::Mid;
  bool solid = true;
};

/// Ground truth of one single-floor episode. Immutable once loaded.
struct Scene {
  std::string name;
  mapping::GridMap truth;
  std::vector<SceneObject> objects;
  Pose start;
  std::vector<std::string> goal_categories;
  double success_radius = 1.0;
  int max_steps = 500;

  bool is_goal(const SceneObject& o) const;
  const SceneObject* find_object(int id) const;
};

/// Parses a "scene/1" document. Throws SceneParseError on malformed JSON,
/// SceneSchemaError on schema violations, SceneStartBlockedError when the
/// start is not on free floor, UnreachableGoalError when no goal object can
/// be reached from the start.
Scene parse_scene(const std::string& text);
/// Reads and parses a scene file; a missing file is a NotFoundError.
Scene load_scene(const std::filesystem::path& path);

struct SensorParams {
  double fov = deg_to_rad(90.0);
  int beams = 90;
  double max_range = 5.0;
  double range_noise = 0.0;
};

struct DetectorParams {
  double fov = deg_to_rad(90.0);
  double max_range = 5.0;
  double confidence_noise = 0.0;
  /// Floor-level objects closer than this need the camera tilted down.
  double floor_near = 1.0;
  /// High objects closer than this need the camera tilted up.
  double high_near = 2.0;
};

struct SimParams {
  SensorParams sensor;
  DetectorParams detector;
  CameraIntrinsics camera;
};

struct Observation {
  mapping::DepthScan scan;
  std::vector<Detection> detections;
  Pose pose;
};

struct StepRecord {
  int step = 0;
  planner::Action action = planner::Action::Stop;
  Pose pose;
  bool collision = false;
  int n_detections = 0;
};

struct EpisodeState {
  Pose pose;
  int step = 0;
  bool stopped = false;
  bool timed_out = false;
  bool collision = false;
  /// Executed Forward displacement only.
  double path_length = 0.0;
  std::vector<StepRecord> log;
};

/// Independent random stream derived from the episode seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name);

/// Geodesic distance (meters) on the ground truth from any free cell to the
/// nearest footprint cell of the target categories.
class DistanceOracle {
 public:
  DistanceOracle(const Scene& scene, const std::vector<std::string>& categories);

  /// Throws StartBlockedError when `from` is not on free floor. Returns +inf
  /// when no target is reachable.
  double distance(Point2 from) const;

 private:
  const Scene* scene_;
  std::vector<double> field_;
};

double oracle_distance(const Scene& scene, Point2 from, const std::vector<std::string>& categories);

/// Ground truth as a cost map: free floor costs 1, walls and solid objects
/// are impassable.
mapping::CostMap truth_costmap(const Scene& scene);

class Simulator {
 public:
  Simulator(const Scene& scene, SimParams params, std::uint64_t seed);

  const Scene& scene() const { return *scene_; }
  const EpisodeState& state() const { return state_; }
  const SimParams& params() const { return params_; }

  /// Applies one action and returns the observation from the new pose.
  /// Throws ContractViolation after Stop.
  Observation step(planner::Action action);
  /// Observation at the current pose without acting.
  Observation observe();

  mapping::DepthScan sense_scan();
  std::vector<Detection> sense_detect();

  /// Marks the episode as ended by the step budget.
  void force_timeout();

  /// Schematic egocentric render of the ground truth.
  Image render(const Pose& pose) const;

 private:
  const Scene* scene_;
  SimParams params_;
  EpisodeState state_;
  std::mt19937_64 sensor_rng_;
  std::mt19937_64 detector_rng_;
};

struct SuccessCheck {
  bool success = false;
  double distance = 0.0;
};

/// Success iff stopped within the scene's success radius (geodesic) of a
/// goal object. Timed-out episodes report failure with the distance.
/// Throws ContractViolation while the episode is still running.
SuccessCheck check_success(const Scene& scene, const EpisodeState& state, const DistanceOracle& oracle);

/// Exact distance along the ray to the first occupied ground-truth cell, or
/// `max_range` when nothing is hit.
double raycast(const mapping::GridMap& truth, Point2 origin, double angle, double max_range);

/// Objects whose footprint intersects the view wedge with line of sight,
/// ignoring pitch gating. Used to cross-check the detector.
bool object_in_view(const Scene& scene, const SceneObject& object, const Pose& pose, double fov, double max_range);

}  // namespace pigeon::sim
