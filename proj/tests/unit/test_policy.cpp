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

#include <doctest.h>

#include <limits>
#include <random>
#include <vector>

#include "pigeon/errors.hpp"
#include "pigeon/policy.hpp"

using namespace pigeon;
using namespace pigeon::policy;

TEST_CASE("greedy oracle picks the argmin with lowest-number ties") {
  CHECK(greedy_oracle_decide(std::vector<double>{3.0, 1.0, 2.0}) == Decision::choose(2));
  CHECK(greedy_oracle_decide(std::vector<double>{1.0, 1.0}) == Decision::choose(1));
  CHECK(greedy_oracle_decide(std::vector<double>{5.0}) == Decision::choose(1));
  CHECK(greedy_oracle_decide(std::vector<double>{std::numeric_limits<double>::infinity(), 4.0}) == Decision::choose(2));
  CHECK_THROWS_AS(greedy_oracle_decide(std::vector<double>{}), InvalidInputError);
}

TEST_CASE("greedy choice is invariant to positive scaling") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 20.0);
  for (int i = 0; i < 500; ++i) {
    std::vector<double> d(1 + i % 9);
    for (double& x : d) x = u(rng);
    const double a = u(rng);
    std::vector<double> scaled = d;
    for (double& x : scaled) x *= a;
    CHECK(greedy_oracle_decide(d) == greedy_oracle_decide(scaled));
  }
}

TEST_CASE("epsilon greedy") {
  const std::vector<double> d{4.0, 2.0, 9.0, 7.0};
  SUBCASE("t_prob 1 is greedy") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      std::mt19937_64 rng(seed);
      CHECK(epsilon_greedy_decide(d, 1.0, rng) == Decision::choose(2));
    }
  }
  SUBCASE("t_prob 0 is uniform") {
    std::mt19937_64 rng(99);
    std::vector<int> counts(4, 0);
    const int n = 10000;
    for (int i = 0; i < n; ++i) ++counts[epsilon_greedy_decide(d, 0.0, rng).number - 1];
    double chi2 = 0.0;
    for (int c : counts) chi2 += (c - n / 4.0) * (c - n / 4.0) / (n / 4.0);
    // 3 degrees of freedom, p = 0.001.
    CHECK(chi2 < 16.27);
  }
  SUBCASE("fixed seed reproduces the sequence") {
    std::mt19937_64 a(5);
    std::mt19937_64 b(5);
    for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy_decide(d, 0.5, a) == epsilon_greedy_decide(d, 0.5, b));
  }
}

TEST_CASE("decision parsing") {
  CHECK(parse_decision("ANSWER: 2", 4) == Decision::choose(2));
  CHECK(parse_decision("options 1 and 2 are bad, go to 3", 3) == Decision::choose(3));
  CHECK(parse_decision("7", 3) == Decision::uncertain());
  CHECK(parse_decision("I choose 3.", 5) == Decision::choose(3));
  CHECK(parse_decision("0 - I need to look around", 4) == Decision::rotate());
  CHECK(parse_decision("maybe the kitchen?", 4) == Decision::uncertain());
  CHECK(parse_decision("", 4) == Decision::uncertain());
  CHECK(parse_decision("Marker 2 is close.\nANSWER: 1", 4) == Decision::choose(1));
  CHECK(parse_decision("go 2.5 meters", 4) == Decision::uncertain());
  CHECK(parse_decision("room4 then 2", 4) == Decision::choose(2));
}

TEST_CASE("canonical answer format round trips") {
  for (int n = 1; n <= 12; ++n)
    for (int k = 1; k <= n; ++k) CHECK(parse_decision(format_decision(Decision::choose(k)), n) == Decision::choose(k));
  CHECK(parse_decision(format_decision(Decision::rotate()), 3) == Decision::rotate());
  CHECK(parse_decision(format_decision(Decision::uncertain()), 3) == Decision::uncertain());
}

TEST_CASE("confirmation parsing") {
  CHECK(parse_confirmation("Yes, that is a potted plant") == ConfirmResult::Confirmed);
  CHECK(parse_confirmation("No - it is a painting of flowers") == ConfirmResult::Rejected);
  CHECK(parse_confirmation("I am not sure") == ConfirmResult::Unsure);
  CHECK(parse_confirmation("hmm") == ConfirmResult::Unsure);
  CHECK(parse_confirmation("It looks like one.\nANSWER: no") == ConfirmResult::Rejected);
  CHECK(parse_confirmation("Eyes on it.\nANSWER: yes") == ConfirmResult::Confirmed);
}

TEST_CASE("confirmation budget caps single-image requests") {
  ScriptedPolicy pol;
  ConfirmationBudget budget(2);
  ConfirmContext ctx;
  ctx.object_id = 3;
  ctx.is_goal = true;
  CHECK(confirm_object(pol, ctx, budget, true) == ConfirmResult::Confirmed);
  CHECK(confirm_object(pol, ctx, budget, true) == ConfirmResult::Confirmed);
  const int calls = pol.calls();
  CHECK(confirm_object(pol, ctx, budget, true) == ConfirmResult::Unsure);
  CHECK(pol.calls() == calls);
  // Multi-view requests are not budgeted.
  CHECK(confirm_object(pol, ctx, budget, false) == ConfirmResult::Confirmed);
  CHECK(budget.attempts(3) == 2);
}

TEST_CASE("scripted responder uses queued replies before its rules") {
  ScriptedResponder r;
  r.queue_decision_reply("0");
  r.queue_confirmation_reply("No, a painting.");
  ScriptedPolicy pol(r);
  DecisionContext dctx;
  dctx.goal_distances = {3.0, 1.0};
  CHECK(pol.decide(dctx) == Decision::rotate());
  CHECK(pol.decide(dctx) == Decision::choose(2));
  ConfirmContext cctx;
  cctx.is_goal = true;
  CHECK(pol.confirm(cctx) == ConfirmResult::Rejected);
  CHECK(pol.confirm(cctx) == ConfirmResult::Confirmed);
  cctx.is_goal = false;
  CHECK(pol.confirm(cctx) == ConfirmResult::Rejected);
  CHECK(pol.calls() == 5);
}

TEST_CASE("nearest frontier prefers frontier candidates") {
  poi::CandidateSet cs;
  cs.candidates.resize(3);
  cs.candidates[0].kind = poi::PoiKind::Object;
  cs.candidates[1].kind = poi::PoiKind::Frontier;
  cs.candidates[2].kind = poi::PoiKind::Frontier;
  cs.agent_distances = {0.5, 3.0, 2.0};
  DecisionContext ctx;
  ctx.candidates = &cs;
  ctx.goal_distances = {0.1, 9.0, 9.0};
  NearestFrontierPolicy pol;
  CHECK(pol.decide(ctx) == Decision::choose(3));
}
