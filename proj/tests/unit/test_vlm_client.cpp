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

#include <cstdlib>
#include <memory>

#include <nlohmann/json.hpp>

#include "pigeon/errors.hpp"
#include "pigeon/prompting.hpp"
#include "pigeon/runner.hpp"
#include "pigeon/vlm_client.hpp"
#include "scripted_server.hpp"

using namespace pigeon;
using namespace pigeon::policy;
using nlohmann::json;

namespace {

struct PromptFixture {
  poi::CandidateSet cs;
  prompting::DecisionPrompt prompt;

  explicit PromptFixture(int n) {
    auto snap = std::make_shared<Snapshot>();
    snap->id = 1;
    snap->image = Image(64, 48, Rgb{40, 80, 120});
    for (int i = 0; i < n; ++i) {
      poi::PoI p;
      p.id = 10 + i;
      p.pose = {2.0, -0.5 + 0.5 * i, 0.0};
      p.extrinsics = {0, 0, 0, 0};
      p.snapshot = snap;
      cs.candidates.push_back(p);
      cs.agent_distances.push_back(1.0 + i);
    }
    cs.views = poi::group_views(cs.candidates, poi::PoIStore{});
    prompt = prompting::assemble_decision_prompt(cs, "toilet", prompting::PromptTemplate::defaults(),
                                                 CameraIntrinsics{}, {0, 0, 0});
  }

  DecisionContext ctx() const {
    DecisionContext c;
    c.prompt = &prompt;
    c.candidates = &cs;
    c.goal = "toilet";
    return c;
  }
};

RemoteVlmConfig config_for(const fixture::ScriptedServer& s) {
  RemoteVlmConfig cfg;
  cfg.endpoint = s.endpoint();
  cfg.model = "test-model";
  cfg.timeout_s = 5.0;
  cfg.max_retries = 2;
  cfg.token_env = "PIGEON_TEST_TOKEN";
  return cfg;
}

}  // namespace

TEST_CASE("request follows the chat-completions schema") {
  fixture::ScriptedServer server;
  ::setenv("PIGEON_TEST_TOKEN", "sekrit", 1);
  PromptFixture f(3);
  RemoteVlmPolicy pol(config_for(server));
  CHECK(pol.decide(f.ctx()) == Decision::choose(1));
  ::unsetenv("PIGEON_TEST_TOKEN");

  const auto reqs = server.requests();
  REQUIRE(reqs.size() == 1);
  const auto body = json::parse(reqs[0]);
  CHECK(body["model"] == "test-model");
  REQUIRE(body["messages"].size() == 1);
  const auto& msg = body["messages"][0];
  CHECK(msg["role"] == "user");
  const auto& parts = msg["content"];
  REQUIRE(parts.size() >= 2);
  CHECK(parts[0]["type"] == "text");
  CHECK(parts[0]["text"].get<std::string>().find("toilet") != std::string::npos);
  for (std::size_t i = 1; i < parts.size(); ++i) {
    CHECK(parts[i]["type"] == "image_url");
    CHECK(parts[i]["image_url"]["url"].get<std::string>().rfind("data:image/png;base64,", 0) == 0);
  }
  CHECK(server.auth_headers()[0] == "Bearer sekrit");
}

TEST_CASE("reply parsing through the client") {
  fixture::ScriptedServer server;
  PromptFixture f(4);
  RemoteVlmPolicy pol(config_for(server));
  server.push({200, "Marker 3 looks like a bathroom.\nANSWER: 3", ""});
  CHECK(pol.decide(f.ctx()) == Decision::choose(3));
  server.push({200, "0", ""});
  CHECK(pol.decide(f.ctx()) == Decision::rotate());
  server.push({200, "the weather is nice", ""});
  CHECK(pol.decide(f.ctx()) == Decision::uncertain());
  server.push({200, "", "{\"not\":\"a completion\"}"});
  CHECK(pol.decide(f.ctx()) == Decision::uncertain());
  CHECK(pol.calls() == 4);
}

TEST_CASE("server errors are retried") {
  fixture::ScriptedServer server;
  PromptFixture f(2);
  SUBCASE("500 then success") {
    RemoteVlmPolicy pol(config_for(server));
    server.push({500, "", ""});
    server.push({200, "ANSWER: 2", ""});
    CHECK(pol.decide(f.ctx()) == Decision::choose(2));
    CHECK(pol.client().attempts() == 2);
  }
  SUBCASE("429 until the retries run out") {
    RemoteVlmPolicy pol(config_for(server));
    for (int i = 0; i < 3; ++i) server.push({429, "", ""});
    CHECK(pol.decide(f.ctx()) == Decision::uncertain());
    CHECK(pol.client().attempts() == 3);
    CHECK(server.requests().size() == 3);
  }
  SUBCASE("401 is a configuration error") {
    RemoteVlmPolicy pol(config_for(server));
    server.push({401, "", ""});
    CHECK_THROWS_AS(pol.decide(f.ctx()), VlmConfigError);
    CHECK(server.requests().size() == 1);
  }
}

TEST_CASE("unreachable endpoint degrades to uncertain") {
  RemoteVlmConfig cfg;
  cfg.endpoint = "http://127.0.0.1:1/v1";
  cfg.timeout_s = 0.5;
  cfg.max_retries = 1;
  PromptFixture f(2);
  RemoteVlmPolicy pol(cfg);
  CHECK(pol.decide(f.ctx()) == Decision::uncertain());
  CHECK(pol.client().attempts() == 2);
}

TEST_CASE("offline mode refuses before any request") {
  fixture::ScriptedServer server;
  PromptFixture f(2);
  RemoteVlmPolicy pol(config_for(server));
  set_network_enabled(false);
  CHECK_THROWS_AS(pol.decide(f.ctx()), OfflineViolation);
  runner::RunConfig rc;
  rc.policy = "remote-vlm";
  CHECK_THROWS_AS(runner::make_policy(rc), OfflineViolation);
  set_network_enabled(true);
  CHECK(server.requests().empty());
}

TEST_CASE("config validation") {
  RemoteVlmConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.endpoint = "ftp://example";
  CHECK_THROWS_AS(cfg.validate(), VlmConfigError);
  cfg = {};
  cfg.timeout_s = 0;
  CHECK_THROWS_AS(cfg.validate(), VlmConfigError);
  cfg = {};
  cfg.max_retries = -1;
  CHECK_THROWS_AS(cfg.validate(), VlmConfigError);
}

TEST_CASE("reply extraction") {
  CHECK(extract_reply(R"({"choices":[{"message":{"content":"hi"}}]})") == "hi");
  CHECK(extract_reply(R"({"choices":[{"message":{"content":[{"type":"text","text":"a"},{"type":"text","text":"b"}]}}]})") ==
        "ab");
  CHECK_FALSE(extract_reply("{}"));
  CHECK_FALSE(extract_reply("not json"));
}

TEST_CASE("a full episode against the scripted server") {
  fixture::ScriptedServer server;
  server.set_fallback("Yes, that matches.\nANSWER: 1");
  const auto scene = sim::load_scene(std::string(PIGEON_DATA_DIR) + "/scenes/one-room.json");
  runner::RunConfig rc;
  rc.policy = "remote-vlm";
  rc.remote = config_for(server);
  rc.seed = 1;
  const auto t = runner::run_episode(scene, rc);
  CHECK(t.record.failure.empty());
  CHECK(t.record.vlm_calls == static_cast<int>(server.requests().size()));
  CHECK(t.record.vlm_calls >= 1);
}
