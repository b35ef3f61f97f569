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
#include <deque>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pigeon/poi.hpp"
#include "pigeon/prompting.hpp"

namespace pigeon::policy {

/// A waypoint decision: a display number, the look-around token, or no
/// usable answer.
struct Decision {
  enum class Kind { Choose, Rotate, Uncertain };
  Kind kind = Kind::Uncertain;
  int number = 0;

  static Decision choose(int n) { return {Kind::Choose, n}; }
  static Decision rotate() { return {Kind::Rotate, 0}; }
  static Decision uncertain() { return {Kind::Uncertain, 0}; }

  friend bool operator==(const Decision&, const Decision&) = default;
};

std::string to_string(const Decision& d);

enum class ConfirmResult { Confirmed, Rejected, Unsure };

const char* to_string(ConfirmResult r);

/// Choose(argmin + 1); ties go to the lowest display number. Throws
/// InvalidInputError on an empty list.
Decision greedy_oracle_decide(std::span<const double> distances);

/// Greedy with probability `t_prob`, otherwise a uniformly random choice.
Decision epsilon_greedy_decide(std::span<const double> distances, double t_prob, std::mt19937_64& rng);

/// Reads a reply: a final "ANSWER: k" line wins; otherwise the last
/// standalone integer in [0, n_choices]. 0 is Rotate; nothing usable is
/// Uncertain.
Decision parse_decision(std::string_view text, int n_choices);

/// Canonical reply text ("ANSWER: k").
std::string format_decision(const Decision& d);

/// yes / no / unsure keywords, preferring a final "ANSWER:" line.
ConfirmResult parse_confirmation(std::string_view text);

/// What a policy may look at when asked for a waypoint.
struct DecisionContext {
  const prompting::DecisionPrompt* prompt = nullptr;
  const poi::CandidateSet* candidates = nullptr;
  /// Ground-truth geodesic distance from each candidate to the goal.
  std::vector<double> goal_distances;
  std::mt19937_64* rng = nullptr;
  std::string goal;
};

struct ConfirmContext {
  const prompting::ConfirmationPrompt* prompt = nullptr;
  int object_id = -1;
  std::string label;
  /// Ground truth, only consulted by simulated responders.
  bool is_goal = false;
};

class DecisionPolicy {
 public:
  virtual ~DecisionPolicy() = default;
  virtual std::string name() const = 0;
  virtual Decision decide(const DecisionContext& ctx) = 0;
  virtual ConfirmResult confirm(const ConfirmContext& ctx) = 0;
  /// Number of model requests issued so far.
  virtual int calls() const { return 0; }
};

/// Decides from ground-truth distances; confirms from ground truth.
class GreedyOraclePolicy : public DecisionPolicy {
 public:
  std::string name() const override { return "greedy"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
};

class EpsilonGreedyPolicy : public DecisionPolicy {
 public:
  explicit EpsilonGreedyPolicy(double t_prob);
  std::string name() const override { return "epsilon"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
  double t_prob() const { return t_prob_; }

 private:
  double t_prob_;
};

class RandomPolicy : public DecisionPolicy {
 public:
  std::string name() const override { return "random"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
};

/// Always the candidate frontier closest to the agent (any candidate when
/// no frontier is offered). Baseline without semantic guidance.
class NearestFrontierPolicy : public DecisionPolicy {
 public:
  std::string name() const override { return "nearest-frontier"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
};

/// Deterministic stand-in for a model: produces reply text from a queue of
/// canned replies or from rules, then parses it like a remote reply.
class ScriptedResponder {
 public:
  void queue_decision_reply(std::string text) { decision_replies_.push_back(std::move(text)); }
  void queue_confirmation_reply(std::string text) { confirmation_replies_.push_back(std::move(text)); }

  std::string decision_reply(const DecisionContext& ctx);
  std::string confirmation_reply(const ConfirmContext& ctx);

 private:
  std::deque<std::string> decision_replies_;
  std::deque<std::string> confirmation_replies_;
};

class ScriptedPolicy : public DecisionPolicy {
 public:
  explicit ScriptedPolicy(ScriptedResponder responder = {}) : responder_(std::move(responder)) {}
  std::string name() const override { return "scripted"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
  int calls() const override { return calls_; }
  ScriptedResponder& responder() { return responder_; }

 private:
  ScriptedResponder responder_;
  int calls_ = 0;
};

/// Single-image confirmation attempts per object are capped at
/// `tau_confirm`; multi-view confirmations are not counted.
class ConfirmationBudget {
 public:
  explicit ConfirmationBudget(int tau_confirm = 3) : tau_confirm_(tau_confirm) {}
  bool can_attempt(int object_id) const;
  void record(int object_id) { ++attempts_[object_id]; }
  int attempts(int object_id) const;

 private:
  int tau_confirm_;
  std::map<int, int> attempts_;
};

/// Dispatches a confirmation through the policy. Single-image requests over
/// budget return Unsure without contacting the policy.
ConfirmResult confirm_object(DecisionPolicy& policy, const ConfirmContext& ctx, ConfirmationBudget& budget,
                             bool single_image);

}  // namespace pigeon::policy
