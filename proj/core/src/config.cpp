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

#include <fstream>
#include <set>

#include "pigeon/errors.hpp"
#include "pigeon/runner.hpp"

namespace pigeon::runner {

namespace {

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw InvalidInputError(where + " must be a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw InvalidInputError("unknown config key '" + where + "." + k + "'");
}

template <typename T>
void take(const nlohmann::json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

}  // namespace

void apply_config(const nlohmann::json& doc, RunConfig& cfg) {
  try {
    check_keys(doc,
               {"policy", "seed", "tau_sus", "tau_choice", "tau_confirm", "t_prob", "max_steps", "jobs", "prompts_dir",
                "associations", "remote", "sensor", "detector", "inflation_radius", "stop_radius", "sweep_radius",
                "sweep_min", "min_cluster", "scripted"},
               "config");
    take(doc, "policy", cfg.policy);
    take(doc, "seed", cfg.seed);
    take(doc, "tau_sus", cfg.tau_sus);
    take(doc, "tau_choice", cfg.tau_choice);
    take(doc, "tau_confirm", cfg.tau_confirm);
    take(doc, "t_prob", cfg.t_prob);
    if (doc.contains("max_steps")) cfg.max_steps = doc["max_steps"].get<int>();
    take(doc, "jobs", cfg.jobs);
    take(doc, "inflation_radius", cfg.inflation.radius);
    take(doc, "stop_radius", cfg.stop_radius);
    take(doc, "sweep_radius", cfg.sweep_radius);
    take(doc, "sweep_min", cfg.sweep_min);
    take(doc, "min_cluster", cfg.min_cluster);
    if (doc.contains("prompts_dir")) cfg.templates = prompting::PromptTemplate::load(doc["prompts_dir"].get<std::string>());
    if (doc.contains("associations")) cfg.associations = Associations::load(doc["associations"].get<std::string>());
    if (doc.contains("remote")) {
      const auto& r = doc["remote"];
      check_keys(r, {"endpoint", "model", "token_env", "timeout_s", "max_retries", "temperature", "max_concurrency"},
                 "remote");
      take(r, "endpoint", cfg.remote.endpoint);
      take(r, "model", cfg.remote.model);
      take(r, "token_env", cfg.remote.token_env);
      take(r, "timeout_s", cfg.remote.timeout_s);
      take(r, "max_retries", cfg.remote.max_retries);
      take(r, "temperature", cfg.remote.temperature);
      take(r, "max_concurrency", cfg.remote.max_concurrency);
    }
    if (doc.contains("sensor")) {
      const auto& s = doc["sensor"];
      check_keys(s, {"fov_deg", "beams", "max_range", "range_noise"}, "sensor");
      if (s.contains("fov_deg")) cfg.sim.sensor.fov = deg_to_rad(s["fov_deg"].get<double>());
      take(s, "beams", cfg.sim.sensor.beams);
      take(s, "max_range", cfg.sim.sensor.max_range);
      take(s, "range_noise", cfg.sim.sensor.range_noise);
    }
    if (doc.contains("detector")) {
      const auto& d = doc["detector"];
      check_keys(d, {"fov_deg", "max_range", "confidence_noise"}, "detector");
      if (d.contains("fov_deg")) cfg.sim.detector.fov = deg_to_rad(d["fov_deg"].get<double>());
      take(d, "max_range", cfg.sim.detector.max_range);
      take(d, "confidence_noise", cfg.sim.detector.confidence_noise);
    }
    if (doc.contains("scripted")) {
      const auto& s = doc["scripted"];
      check_keys(s, {"decisions", "confirmations"}, "scripted");
      take(s, "decisions", cfg.scripted_decisions);
      take(s, "confirmations", cfg.scripted_confirmations);
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("bad config value: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open config file " + path.string());
  const auto doc = nlohmann::json::parse(f, nullptr, false);
  if (doc.is_discarded()) throw InvalidInputError("config file " + path.string() + " is not valid JSON");
  apply_config(doc, base);
  return base;
}

}  // namespace pigeon::runner
