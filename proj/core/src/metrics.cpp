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

#include "pigeon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "pigeon/errors.hpp"

namespace pigeon::metrics {

namespace {

void require_records(std::span<const EpisodeRecord> records) {
  if (records.empty()) throw InvalidInputError("no episode records");
}

// Sum in sorted order so the result does not depend on record order.
double ordered_mean(std::vector<double> terms) {
  if (terms.empty()) return 0.0;
  std::sort(terms.begin(), terms.end());
  return std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(terms.size());
}

double path_weight(const EpisodeRecord& r) {
  if (!(r.shortest_path > 0.0)) throw InvalidInputError("shortest path must be positive (scene " + r.scene + ")");
  return r.shortest_path / std::max(r.shortest_path, r.path_length);
}

}  // namespace

double success_rate(std::span<const EpisodeRecord> records) {
  require_records(records);
  const auto n = std::count_if(records.begin(), records.end(), [](const EpisodeRecord& r) { return r.success; });
  return 100.0 * static_cast<double>(n) / static_cast<double>(records.size());
}

double spl(std::span<const EpisodeRecord> records) {
  require_records(records);
  std::vector<double> terms;
  for (const auto& r : records) {
    const double w = path_weight(r);
    terms.push_back(r.success ? w : 0.0);
  }
  return 100.0 * ordered_mean(std::move(terms));
}

double soft_spl(std::span<const EpisodeRecord> records) {
  require_records(records);
  std::vector<double> terms;
  for (const auto& r : records) {
    if (!(r.initial_distance > 0.0)) continue;
    const double s = std::clamp(1.0 - r.final_distance / r.initial_distance, 0.0, 1.0);
    terms.push_back(s * path_weight(r));
  }
  return 100.0 * ordered_mean(std::move(terms));
}

int soft_spl_excluded(std::span<const EpisodeRecord> records) {
  return static_cast<int>(
      std::count_if(records.begin(), records.end(), [](const EpisodeRecord& r) { return !(r.initial_distance > 0.0); }));
}

Report aggregate_report(std::span<const EpisodeRecord> records, bool include_timing) {
  require_records(records);
  Report rep;
  rep.episodes = static_cast<int>(records.size());
  rep.sr = success_rate(records);
  rep.spl = spl(records);
  rep.soft_spl = soft_spl(records);
  std::vector<double> steps, decisions, calls, wall;
  for (const auto& r : records) {
    steps.push_back(r.steps);
    decisions.push_back(r.decision_count);
    calls.push_back(r.vlm_calls);
    wall.push_back(r.wall_time);
    if (!r.failure.empty()) rep.notes.push_back(r.scene + " seed " + std::to_string(r.seed) + ": " + r.failure);
  }
  rep.mean_steps = ordered_mean(steps);
  rep.mean_decisions = ordered_mean(decisions);
  rep.mean_vlm_calls = ordered_mean(calls);
  if (include_timing) rep.mean_wall_time = ordered_mean(wall);
  if (const int excluded = soft_spl_excluded(records); excluded > 0)
    rep.notes.push_back(std::to_string(excluded) + " episode(s) with zero initial distance left out of Soft-SPL");
  std::sort(rep.notes.begin(), rep.notes.end());
  return rep;
}

std::string format_table(const Report& r) {
  char buf[256];
  std::ostringstream out;
  std::snprintf(buf, sizeof buf, "%-10s %8s %8s %9s %10s %10s %10s %12s\n", "episodes", "SR", "SPL", "Soft-SPL",
                "steps", "decisions", "vlm_calls", "wall_time_s");
  out << buf;
  std::string wall = "-";
  if (r.mean_wall_time) {
    std::snprintf(buf, sizeof buf, "%.3f", *r.mean_wall_time);
    wall = buf;
  }
  std::snprintf(buf, sizeof buf, "%-10d %8.2f %8.2f %9.2f %10.2f %10.2f %10.2f %12s\n", r.episodes, r.sr, r.spl,
                r.soft_spl, r.mean_steps, r.mean_decisions, r.mean_vlm_calls, wall.c_str());
  out << buf;
  for (const auto& n : r.notes) out << "note: " << n << "\n";
  return out.str();
}

nlohmann::ordered_json to_json(const Report& r) {
  nlohmann::ordered_json j;
  j["episodes"] = r.episodes;
  j["sr"] = r.sr;
  j["spl"] = r.spl;
  j["soft_spl"] = r.soft_spl;
  j["mean_steps"] = r.mean_steps;
  j["mean_decisions"] = r.mean_decisions;
  j["mean_vlm_calls"] = r.mean_vlm_calls;
  if (r.mean_wall_time)
    j["mean_wall_time"] = *r.mean_wall_time;
  else
    j["mean_wall_time"] = nullptr;
  j["notes"] = r.notes;
  return j;
}

Report report_from_json(const nlohmann::json& j) {
  try {
    Report r;
    r.episodes = j.at("episodes").get<int>();
    r.sr = j.at("sr").get<double>();
    r.spl = j.at("spl").get<double>();
    r.soft_spl = j.at("soft_spl").get<double>();
    r.mean_steps = j.at("mean_steps").get<double>();
    r.mean_decisions = j.at("mean_decisions").get<double>();
    r.mean_vlm_calls = j.at("mean_vlm_calls").get<double>();
    if (j.contains("mean_wall_time") && !j["mean_wall_time"].is_null())
      r.mean_wall_time = j["mean_wall_time"].get<double>();
    r.notes = j.value("notes", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed report: ") + e.what());
  }
}

nlohmann::ordered_json to_json(const EpisodeRecord& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["scene"] = r.scene;
  j["seed"] = r.seed;
  j["success"] = r.success;
  j["path_length"] = r.path_length;
  j["shortest_path"] = r.shortest_path;
  j["final_distance"] = std::isfinite(r.final_distance) ? nlohmann::ordered_json(r.final_distance) : nlohmann::ordered_json();
  j["initial_distance"] = r.initial_distance;
  j["steps"] = r.steps;
  j["decision_count"] = r.decision_count;
  j["vlm_calls"] = r.vlm_calls;
  if (include_timing) j["wall_time"] = r.wall_time;
  j["failure"] = r.failure;
  return j;
}

}  // namespace pigeon::metrics
