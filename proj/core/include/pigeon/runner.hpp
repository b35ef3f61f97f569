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
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigeon/metrics.hpp"
#include "pigeon/planner.hpp"
#include "pigeon/poi.hpp"
#include "pigeon/policy.hpp"
#include "pigeon/prompting.hpp"
#include "pigeon/rlvr.hpp"
#include "pigeon/simulator.hpp"
#include "pigeon/vlm_client.hpp"

namespace pigeon::runner {

/// Detector labels that count as evidence for each goal category. A goal
/// category is always associated with itself.
class Associations {
 public:
  static Associations defaults();
  /// JSON object mapping a goal category to a list of labels.
  static Associations load(const std::filesystem::path& path);

  bool associated(const std::string& label, const std::string& goal) const;
  bool associated_any(const std::string& label, const std::vector<std::string>& goals) const;

 private:
  std::map<std::string, std::vector<std::string>> table_;
};

struct RunConfig {
  std::string policy = "greedy";
  double tau_sus = 0.5;
  int tau_choice = 8;
  int tau_confirm = 3;
  double t_prob = 0.8;
  std::uint64_t seed = 0;
  /// Overrides the scene's step budget when set.
  std::optional<int> max_steps;
  int jobs = 1;

  sim::SimParams sim;
  mapping::InflationParams inflation;
  /// Unknown-cell cost when heading for a frontier.
  double frontier_unknown_cost = 2.0;
  poi::ObjectPoiParams object_poi;
  planner::FollowerParams follower;
  int min_cluster = 3;
  double sweep_radius = 1.5;
  std::size_t sweep_min = 3;
  /// A confirmed object ends the episode once the agent is this close to
  /// its centroid.
  double stop_radius = 0.9;

  prompting::PromptTemplate templates = prompting::PromptTemplate::defaults();
  Associations associations = Associations::defaults();
  policy::RemoteVlmConfig remote;
  /// Canned replies for the scripted policy, consumed in order.
  std::vector<std::string> scripted_decisions;
  std::vector<std::string> scripted_confirmations;

  /// Throws InvalidInputError when a threshold is out of range.
  void validate() const;
};

/// Overrides fields from a config document (see docs/config.md). Unknown
/// keys throw InvalidInputError so typos do not pass silently.
void apply_config(const nlohmann::json& doc, RunConfig& cfg);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Builds the policy named in the config. Throws InvalidInputError for an
/// unknown kind and OfflineViolation for remote-vlm while networking is
/// disabled.
std::unique_ptr<policy::DecisionPolicy> make_policy(const RunConfig& cfg);

struct DecisionEvent {
  int step = 0;
  int waypoint = 0;
  std::vector<int> candidate_ids;
  std::vector<double> goal_distances;
  std::vector<double> agent_distances;
  policy::Decision decision;
  /// Target actually used; -1 for Rotate.
  int target_poi = -1;
  /// "", "rotate-twice" or "uncertain".
  std::string fallback;
  std::string prompt_dir;
};

struct PoiEvent {
  int step = 0;
  int poi_id = 0;
  std::string event;
  poi::PoiKind kind = poi::PoiKind::Frontier;
  Pose pose;
};

struct ConfirmationEvent {
  int step = 0;
  int object_id = 0;
  std::string label;
  bool multi_view = false;
  int images = 0;
  policy::ConfirmResult result = policy::ConfirmResult::Unsure;
};

struct PoiSummary {
  int id = 0;
  poi::PoiKind kind = poi::PoiKind::Frontier;
  int object_id = -1;
  Pose pose;
  poi::PoiState state = poi::PoiState::Selectable;
  int created_step = 0;
};

struct EpisodeTrace {
  std::string scene;
  std::string scene_path;
  std::uint64_t seed = 0;
  std::string policy;
  std::vector<sim::StepRecord> steps;
  std::vector<DecisionEvent> decisions;
  std::vector<PoiEvent> poi_events;
  std::vector<ConfirmationEvent> confirmations;
  std::vector<PoiSummary> pois;
  Pose final_pose;
  /// stop, confirmed-stop, exhausted, timeout or error.
  std::string termination;
  int waypoint_events = 0;
  int rotate_reprompts = 0;
  metrics::EpisodeRecord record;

  int rejected_count() const;
};

/// Called for every policy decision with the prompt that produced it.
/// Returns the prompt archive directory it wrote, or an empty string.
using DecisionHook =
    std::function<std::string(const DecisionEvent&, const prompting::DecisionPrompt&, const poi::CandidateSet&)>;

struct EpisodeOptions {
  std::string scene_path;
  DecisionHook on_decision;
  /// Supplies a policy instead of `make_policy` (tests).
  policy::DecisionPolicy* policy = nullptr;
};

/// Runs one episode to Stop or the step budget. Policy errors end the
/// episode with the cause in `record.failure`.
EpisodeTrace run_episode(const sim::Scene& scene, const RunConfig& cfg, const EpisodeOptions& opts = {});

/// trace/1 document. Wall time is left out so traces are reproducible.
nlohmann::ordered_json trace_to_json(const EpisodeTrace& trace);
EpisodeTrace trace_from_json(const nlohmann::json& j);
/// One line per step: {step, action, x, y, heading, collision, n_detections}.
std::string trajectory_jsonl(const EpisodeTrace& trace);

/// Re-simulates the action log. Returns the final pose and the belief map
/// rebuilt from the replayed observations.
struct Replay {
  Pose final_pose;
  mapping::GridMap map;
  /// Start pose, then the pose after each action.
  std::vector<Pose> poses;
};
Replay replay(const sim::Scene& scene, const RunConfig& cfg, std::uint64_t seed,
              const std::vector<planner::Action>& actions);


struct BatchResult {
  /// Ordered by (scene path, seed) regardless of completion order.
  std::vector<EpisodeTrace> traces;
  std::vector<metrics::EpisodeRecord> records;
  std::vector<std::string> load_failures;
  metrics::Report report;
};

/// Runs every (scene, seed) pair on up to `cfg.jobs` threads. Scenes that
/// fail to load are noted and skipped.
BatchResult run_batch(const std::vector<std::filesystem::path>& scenes, const std::vector<std::uint64_t>& seeds,
                      const RunConfig& cfg, bool include_timing = false);

struct DatasetResult {
  std::vector<std::string> lines;
  int episodes = 0;
  int failed_episodes = 0;
};

/// Runs epsilon-greedy episodes and records one sample per decision. Prompt
/// archives go under `out_dir`/prompts; the JSONL is written to
/// `out_dir`/dataset.jsonl.
DatasetResult collect_dataset(const std::vector<std::filesystem::path>& scenes,
                              const std::vector<std::uint64_t>& seeds, RunConfig cfg,
                              const std::filesystem::path& out_dir);

}  // namespace pigeon::runner
