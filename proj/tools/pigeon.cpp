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

// Command-line front end: run, batch, gen-data, train-toy, render and
// validate-scene.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pigeon/errors.hpp"
#include "pigeon/mapping.hpp"
#include "pigeon/metrics.hpp"
#include "pigeon/render.hpp"
#include "pigeon/rlvr.hpp"
#include "pigeon/runner.hpp"
#include "pigeon/simulator.hpp"
#include "pigeon/vlm_client.hpp"

namespace fs = std::filesystem;
using namespace pigeon;

namespace {

enum Exit : int {
  kOk = 0,
  kGeneric = 1,
  kUsage = 2,
  kSceneLoad = 3,
  kOffline = 4,
  kRuntime = 5,
  kInvalidScene = 6,
};

struct Common {
  std::string config;
  bool offline = false;
  std::string policy = "greedy";
  std::uint64_t seed = 0;
  int max_steps = 0;
  double tau_sus = 0.5;
  int tau_choice = 8;
  int tau_confirm = 3;
  double t_prob = 0.8;
  std::string prompts_dir;
  std::string associations;
  std::string endpoint;
  std::string model;
  double timeout = 30.0;
  int retries = 2;
  int jobs = 1;
};

void add_run_flags(CLI::App* cmd, Common& c) {
  cmd->add_option("--policy", c.policy, "greedy | random | epsilon | nearest-frontier | scripted | remote-vlm")
      ->capture_default_str();
  cmd->add_option("--max-steps", c.max_steps, "Override the scene step budget");
  cmd->add_option("--tau-sus", c.tau_sus, "Detection confidence trigger")->capture_default_str();
  cmd->add_option("--tau-choice", c.tau_choice, "Candidate set size floor")->capture_default_str();
  cmd->add_option("--tau-confirm", c.tau_confirm, "Single-image confirmation budget")->capture_default_str();
  cmd->add_option("--t-prob", c.t_prob, "Greedy probability for epsilon-greedy")->capture_default_str();
  cmd->add_option("--prompts", c.prompts_dir, "Directory with decision.txt and confirmation.txt");
  cmd->add_option("--associations", c.associations, "Label association table (JSON)");
  cmd->add_option("--endpoint", c.endpoint, "Chat-completions base URL for remote-vlm");
  cmd->add_option("--model", c.model, "Model name for remote-vlm");
  cmd->add_option("--timeout", c.timeout, "Remote request timeout, seconds")->capture_default_str();
  cmd->add_option("--retries", c.retries, "Remote request retries")->capture_default_str();
}

runner::RunConfig make_config(const Common& c) {
  runner::RunConfig cfg;
  cfg.policy = c.policy;
  cfg.seed = c.seed;
  if (c.max_steps > 0) cfg.max_steps = c.max_steps;
  cfg.tau_sus = c.tau_sus;
  cfg.tau_choice = c.tau_choice;
  cfg.tau_confirm = c.tau_confirm;
  cfg.t_prob = c.t_prob;
  cfg.jobs = c.jobs;
  if (!c.prompts_dir.empty()) cfg.templates = prompting::PromptTemplate::load(c.prompts_dir);
  if (!c.associations.empty()) cfg.associations = runner::Associations::load(c.associations);
  if (!c.endpoint.empty()) cfg.remote.endpoint = c.endpoint;
  if (!c.model.empty()) cfg.remote.model = c.model;
  cfg.remote.timeout_s = c.timeout;
  cfg.remote.max_retries = c.retries;
  // The config file has the last word.
  if (!c.config.empty()) cfg = runner::load_config(c.config, cfg);
  if (c.offline && cfg.policy == "remote-vlm")
    throw OfflineViolation("--offline forbids the remote-vlm policy; use greedy or scripted");
  cfg.validate();
  return cfg;
}

std::vector<fs::path> expand_scenes(const std::vector<std::string>& args) {
  std::vector<fs::path> out;
  for (const auto& a : args) {
    const fs::path p(a);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    } else {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path.string());
  f << text;
}

std::string read_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw NotFoundError("cannot open " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::string trace_name(const runner::EpisodeTrace& t) { return t.scene + "_s" + std::to_string(t.seed) + ".json"; }

int cmd_run(const Common& c, const std::string& scene_path, const std::string& out) {
  const auto cfg = make_config(c);
  const auto scene = sim::load_scene(scene_path);
  runner::EpisodeOptions opts;
  opts.scene_path = scene_path;
  const auto trace = runner::run_episode(scene, cfg, opts);
  write_file(fs::path(out) / "trace.json", runner::trace_to_json(trace).dump(2) + "\n");
  write_file(fs::path(out) / "trajectory.jsonl", runner::trajectory_jsonl(trace));
  const std::vector<metrics::EpisodeRecord> recs{trace.record};
  const auto report = metrics::aggregate_report(recs, false);
  write_file(fs::path(out) / "report.json", metrics::to_json(report).dump(2) + "\n");
  nlohmann::ordered_json timing;
  timing["wall_time"] = trace.record.wall_time;
  write_file(fs::path(out) / "timing.json", timing.dump(2) + "\n");

  std::printf("scene %s seed %llu policy %s: %s after %d steps, %d decisions, distance %.2f m (%s)\n",
              trace.scene.c_str(), static_cast<unsigned long long>(trace.seed), trace.policy.c_str(),
              trace.record.success ? "SUCCESS" : "FAILURE", trace.record.steps, trace.record.decision_count,
              trace.record.final_distance, trace.termination.c_str());
  if (!trace.record.failure.empty()) {
    std::fprintf(stderr, "episode error: %s\n", trace.record.failure.c_str());
    if (trace.record.failure.find("offline") != std::string::npos) return kOffline;
    return kRuntime;
  }
  return kOk;
}

std::vector<std::uint64_t> parse_seeds(const std::vector<std::string>& raw) {
  std::vector<std::uint64_t> out;
  for (const auto& r : raw) {
    std::stringstream ss(r);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto dash = item.find('-');
      if (dash != std::string::npos && dash > 0) {
        const auto lo = std::stoull(item.substr(0, dash));
        const auto hi = std::stoull(item.substr(dash + 1));
        for (auto s = lo; s <= hi; ++s) out.push_back(s);
      } else {
        out.push_back(std::stoull(item));
      }
    }
  }
  return out;
}

int cmd_batch(const Common& c, const std::vector<std::string>& scenes, const std::vector<std::string>& seeds_raw,
              const std::string& out) {
  const auto cfg = make_config(c);
  auto seeds = parse_seeds(seeds_raw);
  if (seeds.empty()) seeds.push_back(cfg.seed);
  const auto result = runner::run_batch(expand_scenes(scenes), seeds, cfg, false);
  const fs::path dir(out);
  for (const auto& t : result.traces)
    write_file(dir / "traces" / trace_name(t), runner::trace_to_json(t).dump(2) + "\n");
  write_file(dir / "report.json", metrics::to_json(result.report).dump(2) + "\n");
  write_file(dir / "report.txt", metrics::format_table(result.report));
  nlohmann::ordered_json timing = nlohmann::ordered_json::array();
  for (const auto& r : result.records)
    timing.push_back({{"scene", r.scene}, {"seed", r.seed}, {"wall_time", r.wall_time}});
  write_file(dir / "timing.json", timing.dump(2) + "\n");
  std::cout << metrics::format_table(result.report);
  if (result.records.empty()) {
    std::fprintf(stderr, "no episode could be run\n");
    return kSceneLoad;
  }
  return kOk;
}

int cmd_gen_data(const Common& c, const std::vector<std::string>& scenes, int episodes, const std::string& out) {
  auto cfg = make_config(c);
  if (episodes < 1) throw InvalidInputError("--episodes must be positive");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < episodes; ++i) seeds.push_back(cfg.seed + static_cast<std::uint64_t>(i));
  const auto res = runner::collect_dataset(expand_scenes(scenes), seeds, cfg, out);
  std::printf("%zu samples from %d episodes (%d failed) -> %s\n", res.lines.size(), res.episodes,
              res.failed_episodes, (fs::path(out) / "dataset.jsonl").string().c_str());
  return kOk;
}

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  return out;
}

int cmd_train(const std::string& dataset, bool live, const std::string& distances, rlvr::GrpoConfig gcfg, int iters,
              std::uint64_t seed, const std::string& reward, const std::string& out) {
  if (reward == "binary")
    gcfg.reward = rlvr::RewardKind::Binary;
  else if (reward != "soft")
    throw InvalidInputError("--reward must be soft or binary");
  std::vector<rlvr::ToyPrompt> prompts;
  if (!dataset.empty())
    prompts = rlvr::load_toy_prompts(dataset);
  else if (live)
    prompts.push_back(rlvr::make_toy_prompt(parse_list(distances)));
  else
    throw InvalidInputError("train-toy needs --dataset or --live");
  if (prompts.empty()) throw InvalidInputError("no prompts to train on");
  const auto res = rlvr::train_toy(prompts, gcfg, iters, seed);
  const double final_expected = res.expected_reward.empty() ? 0.0 : res.expected_reward.back();
  std::printf("prompts %zu iterations %d final expected reward %.4f theta [%.4f %.4f %.4f %.4f]\n", prompts.size(),
              iters, final_expected, res.policy.theta()[0], res.policy.theta()[1], res.policy.theta()[2],
              res.policy.theta()[3]);
  if (!out.empty()) {
    nlohmann::ordered_json j;
    j["iterations"] = iters;
    j["mean_reward"] = res.mean_reward;
    j["expected_reward"] = res.expected_reward;
    j["theta"] = res.policy.theta();
    write_file(out, j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_render(const std::string& trace_path, const std::string& scene_override, const std::string& out,
               const std::string& poi_json, const std::string& config) {
  const auto doc = nlohmann::json::parse(read_file(trace_path), nullptr, false);
  if (doc.is_discarded()) throw InvalidInputError(trace_path + " is not valid JSON");
  const auto trace = runner::trace_from_json(doc);
  fs::path scene_path = scene_override.empty() ? fs::path(trace.scene_path) : fs::path(scene_override);
  if (scene_path.empty()) throw InvalidInputError("trace has no scene path; pass --scene");
  const auto scene = sim::load_scene(scene_path);
  runner::RunConfig cfg;
  if (!config.empty()) cfg = runner::load_config(config, cfg);
  std::vector<planner::Action> actions;
  for (const auto& s : trace.steps) actions.push_back(s.action);
  const auto rep = runner::replay(scene, cfg, trace.seed, actions);
  fs::path base(out);
  if (base.extension() == ".svg") base.replace_extension();
  write_file(base.string() + ".svg", render::trace_svg(scene, rep.map, trace));
  write_file(base.string() + ".pgm", mapping::to_pgm(rep.map));
  if (!poi_json.empty()) write_file(poi_json, render::poi_dump(trace).dump(2) + "\n");
  std::printf("wrote %s.svg and %s.pgm\n", base.string().c_str(), base.string().c_str());
  return kOk;
}

int cmd_validate(const std::vector<std::string>& files) {
  int code = kOk;
  for (const auto& f : expand_scenes(files)) {
    try {
      const auto s = sim::load_scene(f);
      std::printf("OK %s (%s, %dx%d cells, %zu objects)\n", f.string().c_str(), s.name.c_str(), s.truth.width(),
                  s.truth.height(), s.objects.size());
    } catch (const NotFoundError& e) {
      std::printf("MISSING %s: %s\n", f.string().c_str(), e.what());
      if (code == kOk) code = kSceneLoad;
    } catch (const Error& e) {
      std::printf("INVALID %s: %s\n", f.string().c_str(), e.what());
      code = kInvalidScene;
    }
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Waypoint object-navigation agent with point-of-interest memory"};
  app.require_subcommand(1);
  Common c;
  app.add_option("--config", c.config, "JSON config file; its values override flags");
  app.add_flag("--offline", c.offline, "Forbid network access");

  auto* run = app.add_subcommand("run", "Run one episode");
  std::string scene, out = "out/run";
  run->add_option("--scene", scene, "Scene file")->required();
  run->add_option("--seed", c.seed, "Episode seed")->capture_default_str();
  run->add_option("--out", out, "Output directory")->capture_default_str();
  add_run_flags(run, c);

  auto* batch = app.add_subcommand("batch", "Run scenes x seeds and aggregate metrics");
  std::vector<std::string> scenes, seeds;
  std::string batch_out = "out/batch";
  batch->add_option("--scenes", scenes, "Scene files or directories")->required();
  batch->add_option("--seeds", seeds, "Seeds, e.g. 1,2,3 or 0-9");
  batch->add_option("--jobs", c.jobs, "Parallel episodes")->capture_default_str();
  batch->add_option("--out", batch_out, "Output directory")->capture_default_str();
  add_run_flags(batch, c);

  auto* gen = app.add_subcommand("gen-data", "Collect an RLVR dataset with the epsilon-greedy policy");
  std::vector<std::string> gen_scenes;
  int episodes = 1;
  std::string gen_out = "out/data";
  gen->add_option("--scenes", gen_scenes, "Scene files or directories")->required();
  gen->add_option("--episodes", episodes, "Episodes (seeds) per scene")->capture_default_str();
  gen->add_option("--seed", c.seed, "First seed")->capture_default_str();
  gen->add_option("--t-prob", c.t_prob, "Greedy probability")->capture_default_str();
  gen->add_option("--jobs", c.jobs, "Parallel episodes")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  auto* train = app.add_subcommand("train-toy", "GRPO on the toy categorical policy");
  std::string dataset, distances = "2,4,6", reward = "soft", curve_out;
  bool live = false;
  rlvr::GrpoConfig gcfg;
  int iters = 200;
  std::uint64_t train_seed = 0;
  train->add_option("--dataset", dataset, "Dataset JSONL from gen-data");
  train->add_flag("--live", live, "Train on a fixed prompt instead of a dataset");
  train->add_option("--distances", distances, "Distances of the fixed prompt")->capture_default_str();
  train->add_option("--group-size", gcfg.group_size, "Group size G")->capture_default_str();
  train->add_option("--beta", gcfg.beta, "KL coefficient")->capture_default_str();
  train->add_option("--clip", gcfg.clip_epsilon, "Clip epsilon")->capture_default_str();
  train->add_option("--lr", gcfg.learning_rate, "Learning rate")->capture_default_str();
  train->add_option("--ref-refresh", gcfg.ref_refresh, "Reference refresh interval")->capture_default_str();
  train->add_option("--iters", iters, "Iterations")->capture_default_str();
  train->add_option("--seed", train_seed, "Sampling seed")->capture_default_str();
  train->add_option("--reward", reward, "soft or binary")->capture_default_str();
  train->add_option("--out", curve_out, "Write the learning curve as JSON");

  auto* rend = app.add_subcommand("render", "Draw a trace as SVG and PGM");
  std::string trace_path, render_out = "out/render", render_scene, poi_json;
  rend->add_option("--trace", trace_path, "trace.json from run or batch")->required();
  rend->add_option("--out", render_out, "Output path prefix")->capture_default_str();
  rend->add_option("--scene", render_scene, "Scene file (defaults to the one named in the trace)");
  rend->add_option("--poi-json", poi_json, "Also dump PoIs as JSON");

  auto* val = app.add_subcommand("validate-scene", "Check scene files");
  std::vector<std::string> val_files;
  val->add_option("files", val_files, "Scene files or directories")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  policy::set_network_enabled(!c.offline);
  try {
    if (*run) return cmd_run(c, scene, out);
    if (*batch) return cmd_batch(c, scenes, seeds, batch_out);
    if (*gen) return cmd_gen_data(c, gen_scenes, episodes, gen_out);
    if (*train) return cmd_train(dataset, live, distances, gcfg, iters, train_seed, reward, curve_out);
    if (*rend) return cmd_render(trace_path, render_scene, render_out, poi_json, c.config);
    if (*val) return cmd_validate(val_files);
  } catch (const OfflineViolation& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOffline;
  } catch (const NotFoundError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kSceneLoad;
  } catch (const SceneParseError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidScene;
  } catch (const SceneSchemaError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidScene;
  } catch (const SceneStartBlockedError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidScene;
  } catch (const UnreachableGoalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInvalidScene;
  } catch (const InvalidInputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kGeneric;
}
