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

#include "pigeon/rlvr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "pigeon/errors.hpp"
#include "pigeon/geometry.hpp"
#include "pigeon/policy.hpp"

namespace pigeon::rlvr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_nonempty(std::span<const double> d) {
  if (d.empty()) throw InvalidInputError("distance list is empty");
}

double valid_soft(std::span<const double> d, std::size_t j, double dmin, double dmax) {
  if (!std::isfinite(d[j])) return 0.0;
  if (dmax == dmin) return 0.5;
  return (dmax - d[j]) / (dmax - dmin);
}

}  // namespace

double soft_reward(std::span<const double> distances, std::optional<std::size_t> choice) {
  require_nonempty(distances);
  double dmin = kInf;
  double dmax = -kInf;
  for (double v : distances) {
    if (std::isnan(v) || v < 0.0) throw InvalidInputError("distances must be non-negative");
    if (!std::isfinite(v)) continue;
    dmin = std::min(dmin, v);
    dmax = std::max(dmax, v);
  }
  if (choice && *choice < distances.size()) return valid_soft(distances, *choice, dmin, dmax);
  double sum = 0.0;
  for (std::size_t j = 0; j < distances.size(); ++j) sum += valid_soft(distances, j, dmin, dmax);
  return sum / static_cast<double>(distances.size());
}

double binary_reward(std::span<const double> distances, std::optional<std::size_t> choice) {
  require_nonempty(distances);
  if (!choice || *choice >= distances.size()) return 0.0;
  const double best = *std::min_element(distances.begin(), distances.end());
  const double d = distances[*choice];
  return std::isfinite(d) && d == best ? 1.0 : 0.0;
}

double reward(RewardKind kind, std::span<const double> distances, std::optional<std::size_t> choice) {
  return kind == RewardKind::Soft ? soft_reward(distances, choice) : binary_reward(distances, choice);
}

std::vector<double> group_advantages(std::span<const double> rewards) {
  if (rewards.size() < 2) throw InvalidInputError("a group needs at least two rewards");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double var = 0.0;
  for (double r : rewards) var += (r - mean) * (r - mean);
  const double sigma = std::sqrt(var / n);
  std::vector<double> out(rewards.size(), 0.0);
  if (sigma < 1e-8) return out;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / sigma;
  return out;
}

ToyPrompt make_toy_prompt(std::vector<double> distances) {
  ToyPrompt p;
  p.kinds.assign(distances.size(), 0.0);
  p.bearings.assign(distances.size(), 0.0);
  p.distances = std::move(distances);
  return p;
}

std::vector<Theta> ToyPolicy::features(const ToyPrompt& prompt) {
  const std::size_t n = prompt.n();
  if (n == 0) throw InvalidInputError("toy prompt has no candidates");
  if (prompt.kinds.size() != n || prompt.bearings.size() != n)
    throw InvalidInputError("toy prompt feature lists differ in length");
  std::vector<Theta> f(n + 1, Theta{});
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t rank = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (prompt.distances[j] < prompt.distances[i]) ++rank;
    f[i][0] = n > 1 ? static_cast<double>(rank) / static_cast<double>(n - 1) : 0.0;
    f[i][1] = prompt.kinds[i];
    f[i][2] = prompt.bearings[i] / kPi;
  }
  f[n][3] = 1.0;
  return f;
}

namespace {

std::vector<double> softmax_probs(const Theta& theta, const std::vector<Theta>& f) {
  std::vector<double> logits(f.size());
  for (std::size_t k = 0; k < f.size(); ++k)
    for (std::size_t d = 0; d < kToyDims; ++d) logits[k] += theta[d] * f[k][d];
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) {
    l = std::exp(l - mx);
    z += l;
  }
  for (double& l : logits) l /= z;
  return logits;
}

}  // namespace

std::vector<double> ToyPolicy::probabilities(const ToyPrompt& prompt) const {
  return softmax_probs(theta_, features(prompt));
}

std::size_t ToyPolicy::sample(const ToyPrompt& prompt, std::mt19937_64& rng) const {
  const auto p = probabilities(prompt);
  std::discrete_distribution<std::size_t> dist(p.begin(), p.end());
  return dist(rng);
}

double expected_reward(const ToyPolicy& policy, const ToyPrompt& prompt, RewardKind kind) {
  const auto p = policy.probabilities(prompt);
  double e = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto choice = k < prompt.n() ? std::optional<std::size_t>(k) : std::nullopt;
    e += p[k] * reward(kind, prompt.distances, choice);
  }
  return e;
}

double categorical_kl(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidInputError("KL of distributions with different support");
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] <= 0.0) continue;
    if (q[k] <= 0.0) return kInf;
    kl += p[k] * std::log(p[k] / q[k]);
  }
  return kl;
}

void GrpoConfig::validate() const {
  if (group_size < 2) throw InvalidInputError("group size must be at least 2");
  if (!(clip_epsilon > 0.0 && clip_epsilon < 1.0)) throw InvalidInputError("clip epsilon must lie in (0, 1)");
  if (!(beta >= 0.0)) throw InvalidInputError("beta must be non-negative");
  if (!(learning_rate > 0.0)) throw InvalidInputError("learning rate must be positive");
  if (ref_refresh < 1) throw InvalidInputError("reference refresh interval must be at least 1");
  if (updates_per_iteration < 1) throw InvalidInputError("updates per iteration must be at least 1");
}

GroupRollout rollout(const ToyPolicy& old_policy, const ToyPrompt& prompt, const GrpoConfig& cfg,
                     std::mt19937_64& rng) {
  GroupRollout g;
  const int n = static_cast<int>(prompt.n());
  for (int i = 0; i < cfg.group_size; ++i) {
    const std::size_t k = old_policy.sample(prompt, rng);
    const auto d = k < prompt.n() ? policy::Decision::choose(static_cast<int>(k) + 1) : policy::Decision::uncertain();
    g.responses.push_back(policy::format_decision(d));
    const auto parsed = policy::parse_decision(g.responses.back(), n);
    const std::size_t choice =
        parsed.kind == policy::Decision::Kind::Choose ? static_cast<std::size_t>(parsed.number - 1) : prompt.invalid();
    g.choices.push_back(choice);
    const auto c = choice < prompt.n() ? std::optional<std::size_t>(choice) : std::nullopt;
    g.rewards.push_back(reward(cfg.reward, prompt.distances, c));
  }
  g.advantages = group_advantages(g.rewards);
  return g;
}

Objective grpo_objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& ref_policy,
                         const ToyPrompt& prompt, const GroupRollout& group, const GrpoConfig& cfg) {
  if (group.choices.size() != group.advantages.size() || group.choices.empty())
    throw InvalidInputError("group choices and advantages differ in length");
  const auto f = ToyPolicy::features(prompt);
  const auto p = softmax_probs(policy.theta(), f);
  const auto p_old = softmax_probs(old_policy.theta(), f);
  const auto p_ref = softmax_probs(ref_policy.theta(), f);

  Theta mean_f{};
  for (std::size_t k = 0; k < f.size(); ++k)
    for (std::size_t d = 0; d < kToyDims; ++d) mean_f[d] += p[k] * f[k][d];

  Objective out;
  const double G = static_cast<double>(group.choices.size());
  const double lo = 1.0 - cfg.clip_epsilon;
  const double hi = 1.0 + cfg.clip_epsilon;
  for (std::size_t i = 0; i < group.choices.size(); ++i) {
    const std::size_t o = group.choices[i];
    if (o >= f.size()) throw InvalidInputError("sampled outcome out of range");
    if (!(p_old[o] > 0.0)) throw NumericalError("old policy assigns zero probability to a sampled outcome");
    const double A = group.advantages[i];
    const double w = p[o] / p_old[o];
    const double wc = std::clamp(w, lo, hi);
    const double unclipped = w * A;
    const double clipped = wc * A;
    out.value += std::min(unclipped, clipped) / G;
    // The clipped branch is constant in theta when it is active.
    if (unclipped <= clipped)
      for (std::size_t d = 0; d < kToyDims; ++d) out.gradient[d] += A * w * (f[o][d] - mean_f[d]) / G;
  }

  if (cfg.beta > 0.0) {
    double kl = 0.0;
    Theta kl_grad{};
    for (std::size_t k = 0; k < f.size(); ++k) {
      if (!(p_ref[k] > 0.0)) throw NumericalError("reference policy assigns zero probability");
      if (p[k] <= 0.0) continue;
      const double lr = std::log(p[k] / p_ref[k]);
      kl += p[k] * lr;
      for (std::size_t d = 0; d < kToyDims; ++d) kl_grad[d] += p[k] * lr * (f[k][d] - mean_f[d]);
    }
    out.value -= cfg.beta * kl;
    for (std::size_t d = 0; d < kToyDims; ++d) out.gradient[d] -= cfg.beta * kl_grad[d];
  }
  return out;
}

TrainResult train_toy(const std::vector<ToyPrompt>& prompts, const GrpoConfig& cfg, int iterations,
                      std::uint64_t seed, ToyPolicy init) {
  cfg.validate();
  if (prompts.empty()) throw InvalidInputError("training needs at least one prompt");
  if (iterations < 0) throw InvalidInputError("iterations must be non-negative");
  std::mt19937_64 rng(seed);
  TrainResult res;
  res.policy = init;
  res.reference = init;
  const double np = static_cast<double>(prompts.size());

  for (int it = 0; it < iterations; ++it) {
    if (it > 0 && it % cfg.ref_refresh == 0) res.reference = res.policy;
    const ToyPolicy old = res.policy;
    std::vector<GroupRollout> groups;
    double sampled = 0.0;
    for (const auto& prompt : prompts) {
      groups.push_back(rollout(old, prompt, cfg, rng));
      sampled += std::accumulate(groups.back().rewards.begin(), groups.back().rewards.end(), 0.0) /
                 static_cast<double>(cfg.group_size);
    }
    for (int u = 0; u < cfg.updates_per_iteration; ++u) {
      Theta step{};
      for (std::size_t j = 0; j < prompts.size(); ++j) {
        const auto obj = grpo_objective(res.policy, old, res.reference, prompts[j], groups[j], cfg);
        for (std::size_t d = 0; d < kToyDims; ++d) step[d] += obj.gradient[d] / np;
      }
      for (std::size_t d = 0; d < kToyDims; ++d) res.policy.theta()[d] += cfg.learning_rate * step[d];
    }
    double expected = 0.0;
    for (const auto& prompt : prompts) expected += expected_reward(res.policy, prompt, cfg.reward) / np;
    sampled /= np;
    if (std::isnan(sampled) || std::isnan(expected) ||
        std::any_of(res.policy.theta().begin(), res.policy.theta().end(), [](double v) { return !std::isfinite(v); }))
      throw NumericalError("toy training diverged at iteration " + std::to_string(it));
    res.mean_reward.push_back(sampled);
    res.expected_reward.push_back(expected);
  }
  return res;
}

std::string to_jsonl(const RlvrSample& s) {
  nlohmann::ordered_json j;
  j["scene"] = s.scene;
  j["episode"] = s.episode;
  j["waypoint"] = s.waypoint;
  j["prompt_dir"] = s.prompt_dir;
  auto d = nlohmann::ordered_json::array();
  for (double v : s.distances) {
    if (std::isfinite(v))
      d.push_back(v);
    else
      d.push_back(nullptr);
  }
  j["distances"] = d;
  j["chosen"] = s.chosen;
  j["t_prob"] = s.t_prob;
  j["seed"] = s.seed;
  return j.dump();
}

RlvrSample sample_from_jsonl(const std::string& line) {
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw InvalidInputError("dataset line is not a JSON object");
  try {
    RlvrSample s;
    s.scene = j.at("scene").get<std::string>();
    s.episode = j.at("episode").get<int>();
    s.waypoint = j.at("waypoint").get<int>();
    s.prompt_dir = j.at("prompt_dir").get<std::string>();
    for (const auto& v : j.at("distances")) s.distances.push_back(v.is_null() ? kInf : v.get<double>());
    s.chosen = j.at("chosen").get<int>();
    s.t_prob = j.at("t_prob").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidInputError(std::string("malformed dataset line: ") + e.what());
  }
}

std::vector<RlvrSample> read_dataset(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw NotFoundError("cannot open dataset " + path.string());
  std::vector<RlvrSample> out;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) out.push_back(sample_from_jsonl(line));
  return out;
}

std::vector<ToyPrompt> load_toy_prompts(const std::filesystem::path& dataset) {
  std::vector<ToyPrompt> out;
  for (const auto& s : read_dataset(dataset)) {
    if (s.distances.empty()) continue;
    ToyPrompt p = make_toy_prompt(s.distances);
    const auto manifest = dataset.parent_path() / s.prompt_dir / "manifest.json";
    std::ifstream mf(manifest);
    if (mf) {
      const auto m = nlohmann::json::parse(mf, nullptr, false);
      if (!m.is_discarded() && m.contains("candidates")) {
        for (const auto& c : m["candidates"]) {
          const int k = c.value("number", 0) - 1;
          if (k < 0 || k >= static_cast<int>(p.n())) continue;
          p.kinds[k] = c.value("kind", "frontier") == "object" ? 1.0 : 0.0;
          p.bearings[k] = c.value("bearing", 0.0);
        }
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace pigeon::rlvr
