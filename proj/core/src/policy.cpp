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

#include "pigeon/policy.hpp"

#include <algorithm>
#include <cctype>
#include <limits>

#include "pigeon/errors.hpp"

namespace pigeon::policy {

std::string to_string(const Decision& d) {
  switch (d.kind) {
    case Decision::Kind::Choose:
      return "choose(" + std::to_string(d.number) + ")";
    case Decision::Kind::Rotate:
      return "rotate";
    case Decision::Kind::Uncertain:
      return "uncertain";
  }
  return "?";
}

const char* to_string(ConfirmResult r) {
  switch (r) {
    case ConfirmResult::Confirmed:
      return "confirmed";
    case ConfirmResult::Rejected:
      return "rejected";
    case ConfirmResult::Unsure:
      return "unsure";
  }
  return "?";
}

Decision greedy_oracle_decide(std::span<const double> distances) {
  if (distances.empty()) throw InvalidInputError("greedy decision needs at least one distance");
  std::size_t best = 0;
  for (std::size_t i = 1; i < distances.size(); ++i)
    if (distances[i] < distances[best]) best = i;
  return Decision::choose(static_cast<int>(best) + 1);
}

Decision epsilon_greedy_decide(std::span<const double> distances, double t_prob, std::mt19937_64& rng) {
  if (distances.empty()) throw InvalidInputError("epsilon-greedy decision needs at least one distance");
  if (!(t_prob >= 0.0 && t_prob <= 1.0)) throw InvalidInputError("T_prob must lie in [0, 1]");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < t_prob) return greedy_oracle_decide(distances);
  std::uniform_int_distribution<int> pick(1, static_cast<int>(distances.size()));
  return Decision::choose(pick(rng));
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string_view last_line(std::string_view text) {
  text = trim(text);
  const auto pos = text.find_last_of('\n');
  return trim(pos == std::string_view::npos ? text : text.substr(pos + 1));
}

// Value after a leading "ANSWER:" on the final line.
std::optional<std::string> answer_field(std::string_view text) {
  const std::string line = lower(last_line(text));
  std::string_view v(line);
  while (!v.empty() && !std::isalpha(static_cast<unsigned char>(v.front()))) v.remove_prefix(1);
  if (v.substr(0, 6) != "answer") return std::nullopt;
  v.remove_prefix(6);
  v = trim(v);
  if (v.empty() || v.front() != ':') return std::nullopt;
  v.remove_prefix(1);
  v = trim(v);
  std::size_t end = 0;
  while (end < v.size() && std::isalnum(static_cast<unsigned char>(v[end]))) ++end;
  return std::string(v.substr(0, end));
}

bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

Decision from_number(long k, int n) {
  if (k == 0) return Decision::rotate();
  if (k >= 1 && k <= n) return Decision::choose(static_cast<int>(k));
  return Decision::uncertain();
}

}  // namespace

Decision parse_decision(std::string_view text, int n_choices) {
  if (n_choices < 1) throw InvalidInputError("n_choices must be at least 1");
  if (auto ans = answer_field(text)) {
    if (!ans->empty() && std::all_of(ans->begin(), ans->end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }) &&
        ans->size() < 9)
      return from_number(std::stol(*ans), n_choices);
    return Decision::uncertain();
  }

  std::optional<long> last;
  for (std::size_t i = 0; i < text.size();) {
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
    const bool clean_left = i == 0 || (!is_word_char(text[i - 1]) && text[i - 1] != '.');
    const bool decimal = j + 1 < text.size() && text[j] == '.' && std::isdigit(static_cast<unsigned char>(text[j + 1]));
    const bool clean_right = j == text.size() || (!is_word_char(text[j]) && !decimal);
    if (clean_left && clean_right && j - i < 9) {
      const long k = std::stol(std::string(text.substr(i, j - i)));
      if (k >= 0 && k <= n_choices) last = k;
    }
    i = j;
  }
  if (!last) return Decision::uncertain();
  return from_number(*last, n_choices);
}

std::string format_decision(const Decision& d) {
  switch (d.kind) {
    case Decision::Kind::Choose:
      return "ANSWER: " + std::to_string(d.number);
    case Decision::Kind::Rotate:
      return "ANSWER: 0";
    case Decision::Kind::Uncertain:
      return "ANSWER: unsure";
  }
  return "";
}

ConfirmResult parse_confirmation(std::string_view text) {
  if (auto ans = answer_field(text)) {
    if (*ans == "yes") return ConfirmResult::Confirmed;
    if (*ans == "no") return ConfirmResult::Rejected;
    return ConfirmResult::Unsure;
  }
  std::vector<std::string> words;
  std::string cur;
  for (char c : text) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      words.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) words.push_back(std::move(cur));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (w == "unsure" || w == "uncertain" || w == "maybe") return ConfirmResult::Unsure;
    if (w == "not" && i + 1 < words.size() && (words[i + 1] == "sure" || words[i + 1] == "certain"))
      return ConfirmResult::Unsure;
    if (w == "yes") return ConfirmResult::Confirmed;
    if (w == "no" || w == "not") return ConfirmResult::Rejected;
  }
  return ConfirmResult::Unsure;
}

namespace {

ConfirmResult truth_confirm(const ConfirmContext& ctx) {
  return ctx.is_goal ? ConfirmResult::Confirmed : ConfirmResult::Rejected;
}

}  // namespace

Decision GreedyOraclePolicy::decide(const DecisionContext& ctx) { return greedy_oracle_decide(ctx.goal_distances); }
ConfirmResult GreedyOraclePolicy::confirm(const ConfirmContext& ctx) { return truth_confirm(ctx); }

EpsilonGreedyPolicy::EpsilonGreedyPolicy(double t_prob) : t_prob_(t_prob) {
  if (!(t_prob >= 0.0 && t_prob <= 1.0)) throw InvalidInputError("T_prob must lie in [0, 1]");
}

Decision EpsilonGreedyPolicy::decide(const DecisionContext& ctx) {
  if (!ctx.rng) throw InvalidInputError("epsilon-greedy policy needs a random stream");
  return epsilon_greedy_decide(ctx.goal_distances, t_prob_, *ctx.rng);
}
ConfirmResult EpsilonGreedyPolicy::confirm(const ConfirmContext& ctx) { return truth_confirm(ctx); }

Decision RandomPolicy::decide(const DecisionContext& ctx) {
  if (!ctx.rng) throw InvalidInputError("random policy needs a random stream");
  return epsilon_greedy_decide(ctx.goal_distances, 0.0, *ctx.rng);
}
ConfirmResult RandomPolicy::confirm(const ConfirmContext& ctx) { return truth_confirm(ctx); }

Decision NearestFrontierPolicy::decide(const DecisionContext& ctx) {
  if (!ctx.candidates || ctx.candidates->candidates.empty())
    throw InvalidInputError("nearest-frontier policy needs candidates");
  const auto& c = *ctx.candidates;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < c.candidates.size(); ++i) {
    if (c.candidates[i].kind != poi::PoiKind::Frontier) continue;
    if (!best || c.agent_distances[i] < c.agent_distances[*best]) best = i;
  }
  if (!best) return greedy_oracle_decide(c.agent_distances);
  return Decision::choose(static_cast<int>(*best) + 1);
}
ConfirmResult NearestFrontierPolicy::confirm(const ConfirmContext& ctx) { return truth_confirm(ctx); }

std::string ScriptedResponder::decision_reply(const DecisionContext& ctx) {
  if (!decision_replies_.empty()) {
    std::string r = std::move(decision_replies_.front());
    decision_replies_.pop_front();
    return r;
  }
  if (ctx.goal_distances.empty()) return "I cannot tell.";
  return "The marked place closest to a likely " + ctx.goal + " looks best.\n" +
         format_decision(greedy_oracle_decide(ctx.goal_distances));
}

std::string ScriptedResponder::confirmation_reply(const ConfirmContext& ctx) {
  if (!confirmation_replies_.empty()) {
    std::string r = std::move(confirmation_replies_.front());
    confirmation_replies_.pop_front();
    return r;
  }
  if (ctx.is_goal) return "Yes, that is the object being searched for.\nANSWER: yes";
  return "No, it only resembles it (" + ctx.label + ").\nANSWER: no";
}

Decision ScriptedPolicy::decide(const DecisionContext& ctx) {
  ++calls_;
  const int n = ctx.prompt ? ctx.prompt->n_choices : static_cast<int>(ctx.goal_distances.size());
  return parse_decision(responder_.decision_reply(ctx), std::max(n, 1));
}

ConfirmResult ScriptedPolicy::confirm(const ConfirmContext& ctx) {
  ++calls_;
  return parse_confirmation(responder_.confirmation_reply(ctx));
}

bool ConfirmationBudget::can_attempt(int object_id) const { return attempts(object_id) < tau_confirm_; }

int ConfirmationBudget::attempts(int object_id) const {
  auto it = attempts_.find(object_id);
  return it == attempts_.end() ? 0 : it->second;
}

ConfirmResult confirm_object(DecisionPolicy& policy, const ConfirmContext& ctx, ConfirmationBudget& budget,
                             bool single_image) {
  if (single_image) {
    if (!budget.can_attempt(ctx.object_id)) return ConfirmResult::Unsure;
    budget.record(ctx.object_id);
  }
  return policy.confirm(ctx);
}

}  // namespace pigeon::policy
