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

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace pigeon::rlvr {

/// Distance-normalised reward of choosing candidate `choice` (0-based);
/// nullopt or an out-of-range index is an invalid answer and earns the mean
/// of every candidate's reward. Infinite distances are left out of the
/// normalisation and earn 0. Equal finite distances earn 0.5.
/// Throws InvalidInputError on an empty list.
double soft_reward(std::span<const double> distances, std::optional<std::size_t> choice);

/// 1 when the chosen distance equals the minimum (ties count), else 0.
double binary_reward(std::span<const double> distances, std::optional<std::size_t> choice);

/// (R - mean) / population std, or all zeros when std < 1e-8. Throws
/// InvalidInputError for fewer than two rewards.
std::vector<double> group_advantages(std::span<const double> rewards);

enum class RewardKind { Soft, Binary };

double reward(RewardKind kind, std::span<const double> distances, std::optional<std::size_t> choice);

/// One decision as seen by the toy policy.
struct ToyPrompt {
  std::vector<double> distances;
  /// 1 for object candidates, 0 for frontiers.
  std::vector<double> kinds;
  /// Relative bearing, radians.
  std::vector<double> bearings;

  std::size_t n() const { return distances.size(); }
  /// Index of the "invalid answer" outcome.
  std::size_t invalid() const { return distances.size(); }
};

/// Prompt with the given distances, frontier kind and zero bearings.
ToyPrompt make_toy_prompt(std::vector<double> distances);

inline constexpr std::size_t kToyDims = 4;
using Theta = std::array<double, kToyDims>;

/// Linear-softmax policy over n candidates plus one invalid outcome.
/// Candidate features: distance rank / (n - 1), kind flag, bearing / pi, 0.
/// Invalid outcome features: 0, 0, 0, 1.
class ToyPolicy {
 public:
  ToyPolicy() = default;
  explicit ToyPolicy(Theta theta) : theta_(theta) {}

  const Theta& theta() const { return theta_; }
  Theta& theta() { return theta_; }

  static std::vector<Theta> features(const ToyPrompt& prompt);
  /// n + 1 probabilities.
  std::vector<double> probabilities(const ToyPrompt& prompt) const;
  std::size_t sample(const ToyPrompt& prompt, std::mt19937_64& rng) const;

 private:
  Theta theta_{};
};

/// Expected reward of the policy on one prompt.
double expected_reward(const ToyPolicy& policy, const ToyPrompt& prompt, RewardKind kind = RewardKind::Soft);

/// Exact KL(p || q) of two categorical distributions.
double categorical_kl(std::span<const double> p, std::span<const double> q);

struct GrpoConfig {
  int group_size = 8;
  double clip_epsilon = 0.2;
  double beta = 0.04;
  double learning_rate = 2.0;
  int ref_refresh = 50;
  /// Gradient steps per sampled group before the old policy is refreshed.
  int updates_per_iteration = 2;
  RewardKind reward = RewardKind::Soft;

  /// Throws InvalidInputError on out-of-range settings.
  void validate() const;
};

/// G sampled single-token responses with their rewards and advantages.
struct GroupRollout {
  std::vector<std::string> responses;
  /// Outcome index per response: 0..n-1 candidate, n invalid.
  std::vector<std::size_t> choices;
  std::vector<double> rewards;
  std::vector<double> advantages;
};

/// Samples a group from `old_policy` and scores it. Responses are rendered
/// in the canonical answer format and parsed back into choices.
GroupRollout rollout(const ToyPolicy& old_policy, const ToyPrompt& prompt, const GrpoConfig& cfg,
                     std::mt19937_64& rng);

struct Objective {
  double value = 0.0;
  Theta gradient{};
};

/// Clipped surrogate minus beta * KL(pi_theta || pi_ref), averaged over the
/// group, with its exact gradient in theta. Throws NumericalError when an
/// old-policy probability of a sampled outcome is zero.
Objective grpo_objective(const ToyPolicy& policy, const ToyPolicy& old_policy, const ToyPolicy& ref_policy,
                         const ToyPrompt& prompt, const GroupRollout& group, const GrpoConfig& cfg);

struct TrainResult {
  /// Mean sampled reward per iteration.
  std::vector<double> mean_reward;
  /// Expected reward of the updated policy after each iteration, averaged
  /// over prompts.
  std::vector<double> expected_reward;
  ToyPolicy policy;
  ToyPolicy reference;
};

/// GRPO on the toy policy. Throws NumericalError if rewards or parameters
/// become NaN.
TrainResult train_toy(const std::vector<ToyPrompt>& prompts, const GrpoConfig& cfg, int iterations,
                      std::uint64_t seed, ToyPolicy init = {});

/// One recorded waypoint decision.
struct RlvrSample {
  std::string scene;
  int episode = 0;
  int waypoint = 0;
  std::string prompt_dir;
  /// +inf for unreachable candidates (null in JSON).
  std::vector<double> distances;
  /// 1-based display number.
  int chosen = 0;
  double t_prob = 0.0;
  std::uint64_t seed = 0;
};

/// One JSON line with a fixed key order, no trailing newline.
std::string to_jsonl(const RlvrSample& sample);
RlvrSample sample_from_jsonl(const std::string& line);
std::vector<RlvrSample> read_dataset(const std::filesystem::path& path);

/// Toy prompts from a dataset. Kinds and bearings come from each sample's
/// prompt manifest (resolved relative to the dataset file) when present.
std::vector<ToyPrompt> load_toy_prompts(const std::filesystem::path& dataset);

}  // namespace pigeon::rlvr
