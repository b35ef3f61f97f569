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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pigeon::metrics {

struct EpisodeRecord {
  std::string scene;
  std::uint64_t seed = 0;
  bool success = false;
  /// Executed path length p.
  double path_length = 0.0;
  /// Ground-truth shortest path l from the start.
  double shortest_path = 0.0;
  double final_distance = 0.0;
  double initial_distance = 0.0;
  int steps = 0;
  int decision_count = 0;
  int vlm_calls = 0;
  double wall_time = 0.0;
  /// Why the episode ended early, empty when it ran normally.
  std::string failure;
};

/// Success rate in percent. Throws InvalidInputError when empty.
double success_rate(std::span<const EpisodeRecord> records);

/// Mean of S * l / max(l, p) in percent. Throws InvalidInputError when empty
/// or when any shortest path is not positive.
double spl(std::span<const EpisodeRecord> records);

/// Same weighting with S = clamp(1 - d_T / d_init, 0, 1). Episodes with
/// d_init = 0 are left out; the result is 0 when none remain.
double soft_spl(std::span<const EpisodeRecord> records);
/// Number of episodes `soft_spl` leaves out.
int soft_spl_excluded(std::span<const EpisodeRecord> records);

struct Report {
  int episodes = 0;
  double sr = 0.0;
  double spl = 0.0;
  double soft_spl = 0.0;
  double mean_steps = 0.0;
  double mean_decisions = 0.0;
  double mean_vlm_calls = 0.0;
  /// Absent when timing is withheld to keep the report reproducible.
  std::optional<double> mean_wall_time;
  std::vector<std::string> notes;

  friend bool operator==(const Report&, const Report&) = default;
};

/// Independent of record order.
Report aggregate_report(std::span<const EpisodeRecord> records, bool include_timing = true);

std::string format_table(const Report& report);
nlohmann::ordered_json to_json(const Report& report);
Report report_from_json(const nlohmann::json& j);

nlohmann::ordered_json to_json(const EpisodeRecord& record, bool include_timing = true);

}  // namespace pigeon::metrics
