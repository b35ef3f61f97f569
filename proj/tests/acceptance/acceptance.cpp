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

// Acceptance suite. One PASS/FAIL line per criterion; exit status is the
// number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "pigeon/camera.hpp"
#include "pigeon/errors.hpp"
#include "pigeon/metrics.hpp"
#include "pigeon/planner.hpp"
#include "pigeon/poi.hpp"
#include "pigeon/prompting.hpp"
#include "pigeon/rlvr.hpp"
#include "pigeon/runner.hpp"
#include "pigeon/vlm_client.hpp"
#include "scripted_server.hpp"

using namespace pigeon;
namespace fs = std::filesystem;

namespace {

const fs::path kScenes = fs::path(PIGEON_DATA_DIR) / "scenes";

// Pinned tolerances and limits.
constexpr double kCostTol = 1e-9;
constexpr double kRewardTol = 1e-12;
constexpr double kAdvTol = 1e-9;
constexpr double kGradRelTol = 1e-4;
constexpr double kPixelTol = 1e-9;
constexpr double kMetricTol = 1e-12;
constexpr double kLearnTarget = 0.9;
constexpr double kAblationGap = 5.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (limit_s > 0 && secs > limit_s) {
    o.pass = false;
    o.detail += " (over time limit " + std::to_string(limit_s) + " s)";
  }
  if (!o.pass) ++failures;
  std::printf("%s %2d %-28s %7.2fs  %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

std::vector<fs::path> scenes_in(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".json") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Outcome planner_equivalence() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> pick(0, 19);
  int compared = 0;
  for (int i = 0; i < 200; ++i) {
    const auto cm = oracle::random_costmap(20, 20, 0.25, rng);
    Cell s{pick(rng), pick(rng)};
    const Cell t{pick(rng), pick(rng)};
    while (!cm.passable(s)) s = {pick(rng), pick(rng)};
    const auto path = planner::astar(cm, s, t);
    const auto ref = oracle::dijkstra_cost(cm, s, t);
    if (path.has_value() != ref.has_value()) return {false, "reachability differs on grid " + std::to_string(i)};
    if (path && std::abs(path->cost - *ref) > kCostTol)
      return {false, fmt("cost %.12f vs %.12f", path->cost, *ref)};
    compared += path.has_value();
  }
  return {true, std::to_string(compared) + " paths equal to Dijkstra, 200 grids"};
}

Outcome frontier_equivalence() {
  std::mt19937_64 rng(202);
  std::size_t reps = 0;
  for (int i = 0; i < 100; ++i) {
    const auto m = oracle::random_belief(32, 24, rng);
    std::vector<Cell> got;
    for (const auto& c : poi::extract_frontiers(m, 3)) got.push_back(c.representative);
    if (got != oracle::frontier_representatives(m, 3)) return {false, "map " + std::to_string(i) + " differs"};
    reps += got.size();
  }
  return {true, std::to_string(reps) + " representatives matched over 100 maps"};
}

Outcome reward_suite() {
  const std::vector<double> d{2, 4, 6};
  if (rlvr::soft_reward(d, 0) != 1.0 || rlvr::soft_reward(d, 1) != 0.5 || rlvr::soft_reward(d, 2) != 0.0)
    return {false, "D=(2,4,6) rewards wrong"};
  if (rlvr::soft_reward(d, std::nullopt) != 0.5) return {false, "invalid choice reward wrong"};
  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(0.0, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> x(2 + i % 9);
    for (double& v : x) v = u(rng);
    const double a = 1e-3 + u(rng);
    const double b = u(rng);
    std::vector<double> y = x;
    for (double& v : y) v = a * v + b;
    for (std::size_t j = 0; j < x.size(); ++j)
      worst = std::max(worst, std::abs(rlvr::soft_reward(x, j) - rlvr::soft_reward(y, j)));
  }
  if (worst > kRewardTol) return {false, fmt("affine deviation %.3g", worst)};
  return {true, fmt("examples exact, affine max deviation %.3g", worst)};
}

Outcome advantage_suite() {
  std::mt19937_64 rng(404);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> r(2 + i % 31);
    for (double& v : r) v = u(rng);
    const auto a = rlvr::group_advantages(r);
    const double m = std::accumulate(a.begin(), a.end(), 0.0) / static_cast<double>(a.size());
    double s = 0.0;
    for (double v : a) s += (v - m) * (v - m);
    s = std::sqrt(s / static_cast<double>(a.size()));
    worst = std::max({worst, std::abs(m), std::abs(s - 1.0)});
  }
  const auto flat = rlvr::group_advantages(std::vector<double>{0.4, 0.4, 0.4, 0.4});
  if (std::any_of(flat.begin(), flat.end(), [](double v) { return v != 0.0; })) return {false, "sigma guard"};
  if (worst > kAdvTol) return {false, fmt("moment deviation %.3g", worst)};
  return {true, fmt("max moment deviation %.3g, guard returns zeros", worst)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> pos(0.5, 10.0);
  const double h = 1e-6;
  double worst = 0.0;
  int configs = 0, skipped = 0;
  while (configs < 100) {
    auto prompt = rlvr::make_toy_prompt({pos(rng), pos(rng), pos(rng), pos(rng), pos(rng)});
    for (std::size_t k = 0; k < prompt.n(); ++k) {
      prompt.kinds[k] = static_cast<double>((k + configs) % 2);
      prompt.bearings[k] = u(rng);
    }
    rlvr::GrpoConfig cfg;
    cfg.beta = 0.5 * (u(rng) + 1.5);
    const rlvr::ToyPolicy old(rlvr::Theta{u(rng), u(rng), u(rng), u(rng)});
    const rlvr::ToyPolicy ref(rlvr::Theta{u(rng), u(rng), u(rng), u(rng)});
    rlvr::Theta th = old.theta();
    for (double& v : th) v += 0.3 * u(rng);
    const rlvr::ToyPolicy pol(th);
    const auto g = rlvr::rollout(old, prompt, cfg, rng);
    const auto p = pol.probabilities(prompt);
    const auto po = old.probabilities(prompt);
    bool kink = false;
    for (std::size_t o : g.choices) {
      const double w = p[o] / po[o];
      kink = kink || std::abs(w - (1 - cfg.clip_epsilon)) < 1e-4 || std::abs(w - (1 + cfg.clip_epsilon)) < 1e-4;
    }
    if (kink) {
      ++skipped;
      continue;
    }
    const auto obj = rlvr::grpo_objective(pol, old, ref, prompt, g, cfg);
    for (std::size_t d = 0; d < rlvr::kToyDims; ++d) {
      rlvr::Theta a = th, b = th;
      a[d] += h;
      b[d] -= h;
      const double fd = (rlvr::grpo_objective(rlvr::ToyPolicy(a), old, ref, prompt, g, cfg).value -
                         rlvr::grpo_objective(rlvr::ToyPolicy(b), old, ref, prompt, g, cfg).value) /
                        (2 * h);
      worst = std::max(worst, std::abs(obj.gradient[d] - fd) / std::max(std::abs(fd), 1e-3));
    }
    ++configs;
  }
  if (worst > kGradRelTol) return {false, fmt("max relative error %.3g", worst)};
  return {true, fmt("100 configs, max relative error %.3g, %.0f on a clip kink skipped", worst, skipped)};
}

Outcome learning_check() {
  const auto prompt = rlvr::make_toy_prompt({2, 4, 6});
  rlvr::GrpoConfig cfg;
  double lowest = 1.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto res = rlvr::train_toy({prompt}, cfg, 200, seed);
    lowest = std::min(lowest, res.expected_reward.back());
  }
  if (lowest < kLearnTarget) return {false, fmt("lowest final mean reward %.4f", lowest)};
  return {true, fmt("5/5 seeds, lowest final mean soft reward %.4f", lowest)};
}

Outcome projection_check() {
  const CameraIntrinsics k;
  const auto id = project(k, CameraExtrinsics::identity(), {0.0, 0.0, 2.5});
  if (!id || id->u != k.cx || id->v != k.cy) return {false, "optical axis does not hit the principal point"};
  std::mt19937_64 rng(707);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  std::uniform_real_distribution<double> ang(-kPi, kPi);
  // Pairs are drawn until 1000 land inside the image at depth >= 0.1 m;
  // far off-image pixels are not meaningful at a fixed absolute tolerance.
  double worst = 0.0;
  int projected = 0, drawn = 0;
  while (projected < 1000) {
    const Pose pose{u(rng), u(rng), ang(rng), ang(rng) / 6};
    const Point3 p{u(rng), u(rng), u(rng) / 2 + 1.0};
    ++drawn;
    const auto lib = project(k, CameraExtrinsics::from_pose(pose, kCameraHeight), p);
    const auto ref = oracle::project(k, oracle::world_to_camera(pose, kCameraHeight), p);
    if (lib.has_value() != ref.has_value()) return {false, "visibility differs on draw " + std::to_string(drawn)};
    if (!ref || lib->depth < 0.1 || (*ref)[0] < 0 || (*ref)[0] >= k.width || (*ref)[1] < 0 || (*ref)[1] >= k.height)
      continue;
    ++projected;
    worst = std::max({worst, std::abs(lib->u - (*ref)[0]), std::abs(lib->v - (*ref)[1])});
  }
  if (worst > kPixelTol) return {false, fmt("max pixel deviation %.3g", worst)};
  return {true, fmt("%.0f in-image projections of %.0f draws, max deviation %.3g px", projected, drawn, worst)};
}

metrics::EpisodeRecord rec(bool s, double p, double l, double dt, double di) {
  metrics::EpisodeRecord r;
  r.success = s;
  r.path_length = p;
  r.shortest_path = l;
  r.final_distance = dt;
  r.initial_distance = di;
  return r;
}

Outcome metric_check() {
  // success p=l, success p=2l, failure p=l with d_T = d_init/2,
  // failure with d_T = d_init, failure ending farther than it started.
  const std::vector<metrics::EpisodeRecord> t{rec(true, 4, 4, 0.5, 4), rec(true, 6, 3, 0, 3), rec(false, 5, 5, 2, 4),
                                              rec(false, 2, 6, 6, 6), rec(false, 1, 2, 9, 3)};
  const double want_spl = 100.0 * 1.5 / 5.0;
  const double want_soft = 100.0 * (0.875 + 0.5 + 0.5) / 5.0;
  if (std::abs(metrics::spl(t) - want_spl) > kMetricTol) return {false, "SPL micro-table"};
  if (std::abs(metrics::soft_spl(t) - want_soft) > kMetricTol) return {false, "Soft-SPL micro-table"};
  if (std::abs(metrics::success_rate(t) - 40.0) > kMetricTol) return {false, "SR micro-table"};
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> u(0.01, 20.0);
  std::bernoulli_distribution coin(0.5);
  for (int i = 0; i < 2000; ++i) {
    std::vector<metrics::EpisodeRecord> rs(1 + i % 17);
    for (auto& r : rs) r = rec(coin(rng), u(rng), u(rng), u(rng), u(rng));
    const double s = metrics::spl(rs);
    if (s < 0.0 || s > metrics::success_rate(rs) + kMetricTol) return {false, "0 <= SPL <= SR violated"};
  }
  return {true, fmt("micro-table exact (SPL %.1f, Soft-SPL %.1f), 2000 fuzzed sets", want_spl, want_soft)};
}

Outcome suite_success() {
  runner::RunConfig cfg;
  cfg.policy = "greedy";
  const auto b = runner::run_batch(scenes_in(kScenes / "suite"), {1, 2, 3}, cfg);
  if (b.records.size() != 30) return {false, std::to_string(b.records.size()) + " episodes ran"};
  if (b.report.sr != 100.0) return {false, fmt("SR %.1f", b.report.sr)};
  return {true, fmt("SR %.1f over %.0f episodes, SPL %.1f", b.report.sr, 30, b.report.spl)};
}

Outcome ablation_direction() {
  const auto scenes = scenes_in(kScenes / "ablation");
  if (scenes.size() != 20) return {false, std::to_string(scenes.size()) + " ablation scenes"};
  runner::RunConfig cfg = runner::load_config(fs::path(PIGEON_DATA_DIR) / "configs" / "noisy.json");
  std::string detail;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed : {1, 2, 3}) {
    cfg.policy = "greedy";
    const double greedy = runner::run_batch(scenes, {seed}, cfg).report.spl;
    cfg.policy = "nearest-frontier";
    const double nearest = runner::run_batch(scenes, {seed}, cfg).report.spl;
    min_gap = std::min(min_gap, greedy - nearest);
    detail += fmt("seed %.0f: %.1f vs %.1f; ", static_cast<double>(seed), greedy, nearest);
  }
  detail += fmt("min gap %.1f", min_gap);
  return {min_gap >= kAblationGap, detail};
}

Outcome determinism() {
  runner::RunConfig cfg;
  const auto scenes = scenes_in(kScenes / "suite");
  const auto serial = runner::run_batch(scenes, {1, 2}, cfg);
  cfg.jobs = 4;
  const auto parallel = runner::run_batch(scenes, {1, 2}, cfg);
  if (metrics::to_json(serial.report).dump() != metrics::to_json(parallel.report).dump())
    return {false, "serial and parallel reports differ"};
  for (std::size_t i = 0; i < serial.traces.size(); ++i)
    if (runner::trace_to_json(serial.traces[i]).dump() != runner::trace_to_json(parallel.traces[i]).dump())
      return {false, "trace " + std::to_string(i) + " differs"};

  const auto root = fs::temp_directory_path() / "pigeon_acceptance_gen";
  fs::remove_all(root);
  runner::RunConfig gcfg;
  const std::vector<fs::path> gen{scenes[0], scenes[1], scenes[2]};
  runner::collect_dataset(gen, {11, 12, 13}, gcfg, root / "a");
  gcfg.jobs = 3;
  const auto r = runner::collect_dataset(gen, {11, 12, 13}, gcfg, root / "b");
  const auto a = slurp(root / "a" / "dataset.jsonl");
  const bool same = !a.empty() && a == slurp(root / "b" / "dataset.jsonl");
  fs::remove_all(root);
  if (!same) return {false, "gen-data output differs"};
  return {true, fmt("%.0f traces identical, %.0f dataset lines identical", static_cast<double>(serial.traces.size()),
                    static_cast<double>(r.lines.size()))};
}

Outcome remote_client() {
  policy::set_network_enabled(true);
  fixture::ScriptedServer server;
  policy::RemoteVlmConfig cfg;
  cfg.endpoint = server.endpoint();
  cfg.timeout_s = 5.0;
  cfg.max_retries = 2;

  auto snap = std::make_shared<Snapshot>();
  snap->image = Image(32, 24, Rgb{10, 20, 30});
  poi::CandidateSet cs;
  for (int i = 0; i < 3; ++i) {
    poi::PoI p;
    p.id = i + 1;
    p.pose = {2.0, 0.5 * i, 0.0};
    p.snapshot = snap;
    cs.candidates.push_back(p);
    cs.agent_distances.push_back(1.0);
  }
  cs.views = poi::group_views(cs.candidates, poi::PoIStore{});
  const auto prompt = prompting::assemble_decision_prompt(cs, "bed", prompting::PromptTemplate::defaults(),
                                                          CameraIntrinsics{}, {});
  policy::DecisionContext ctx;
  ctx.prompt = &prompt;
  ctx.candidates = &cs;

  policy::RemoteVlmPolicy pol(cfg);
  server.push({500, "", ""});
  server.push({200, "The bed is behind marker 2.\nANSWER: 2", ""});
  if (!(pol.decide(ctx) == policy::Decision::choose(2))) return {false, "ANSWER: k not parsed after a retry"};
  if (pol.client().attempts() != 2) return {false, "retry count"};
  server.push({200, "0", ""});
  if (!(pol.decide(ctx) == policy::Decision::rotate())) return {false, "0 did not map to Rotate"};
  server.push({200, "purple monkey dishwasher", ""});
  if (!(pol.decide(ctx) == policy::Decision::uncertain())) return {false, "garbage did not map to Uncertain"};

  const auto body = nlohmann::json::parse(server.requests().at(0));
  const auto& parts = body.at("messages").at(0).at("content");
  const bool schema = body.contains("model") && parts.at(0).at("type") == "text" &&
                      parts.at(1).at("type") == "image_url" &&
                      parts.at(1).at("image_url").at("url").get<std::string>().rfind("data:image/png;base64,", 0) == 0;
  if (!schema) return {false, "request body does not follow the schema"};

  policy::set_network_enabled(false);
  bool refused = false;
  try {
    pol.decide(ctx);
  } catch (const OfflineViolation&) {
    refused = true;
  }
  if (!refused) return {false, "offline switch did not block the client"};
  return {true, "1-11 ran offline; schema, retry, ANSWER: k, 0 -> Rotate, garbage -> Uncertain"};
}

}  // namespace

int main() {
  // Criteria 1-11 run with networking disabled; any request throws.
  policy::set_network_enabled(false);
  report(1, "planner oracle equivalence", 5, planner_equivalence);
  report(2, "frontier oracle equivalence", 5, frontier_equivalence);
  report(3, "soft reward suite", 0, reward_suite);
  report(4, "advantage suite", 0, advantage_suite);
  report(5, "objective gradient check", 30, gradient_check);
  report(6, "toy learning", 60, learning_check);
  report(7, "camera projection", 0, projection_check);
  report(8, "metric formulas", 0, metric_check);
  report(9, "end-to-end success", 60, suite_success);
  report(10, "ablation direction", 300, ablation_direction);
  report(11, "determinism", 0, determinism);
  const int offline_failures = failures;
  report(12, "offline integrity", 0, [&] {
    if (offline_failures > 0) return Outcome{false, std::to_string(offline_failures) + " offline criteria failed"};
    return remote_client();
  });
  std::printf("%d failure(s)\n", failures);
  return failures;
}
