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

// In-process chat-completions endpoint that answers from a script.

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace fixture {

struct ScriptedReply {
  int status = 200;
  /// Assistant text for a 200 reply; ignored when `raw_body` is set.
  std::string content;
  std::string raw_body;
};

class ScriptedServer {
 public:
  ScriptedServer() {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      ScriptedReply r;
      {
        std::lock_guard<std::mutex> lock(mu_);
        requests_.push_back(req.body);
        auth_.push_back(req.get_header_value("Authorization"));
        if (!script_.empty()) {
          r = script_.front();
          script_.pop_front();
        } else {
          r.content = fallback_;
        }
      }
      res.status = r.status;
      if (!r.raw_body.empty()) {
        res.set_content(r.raw_body, "application/json");
      } else if (r.status == 200) {
        nlohmann::json body{{"id", "cmpl-1"},
                            {"object", "chat.completion"},
                            {"choices", {{{"index", 0}, {"message", {{"role", "assistant"}, {"content", r.content}}},
                                          {"finish_reason", "stop"}}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content(R"({"error":{"message":"scripted failure"}})", "application/json");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ScriptedServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  ScriptedServer(const ScriptedServer&) = delete;
  ScriptedServer& operator=(const ScriptedServer&) = delete;

  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

  void push(ScriptedReply r) {
    std::lock_guard<std::mutex> lock(mu_);
    script_.push_back(std::move(r));
  }
  void set_fallback(std::string content) {
    std::lock_guard<std::mutex> lock(mu_);
    fallback_ = std::move(content);
  }

  std::vector<std::string> requests() const {
    std::lock_guard<std::mutex> lock(mu_);
    return requests_;
  }
  std::vector<std::string> auth_headers() const {
    std::lock_guard<std::mutex> lock(mu_);
    return auth_;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  mutable std::mutex mu_;
  std::deque<ScriptedReply> script_;
  std::string fallback_ = "ANSWER: 1";
  std::vector<std::string> requests_;
  std::vector<std::string> auth_;
};

}  // namespace fixture
