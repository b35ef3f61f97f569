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

#include <condition_variable>
#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pigeon/image.hpp"
#include "pigeon/policy.hpp"

namespace pigeon::policy {

struct RemoteVlmConfig {
  /// Base URL; requests go to {endpoint}/chat/completions.
  std::string endpoint = "http://127.0.0.1:8000/v1";
  std::string model = "gpt-4o-mini";
  /// Environment variable holding the bearer token. Unset means no header.
  std::string token_env = "PIGEON_VLM_TOKEN";
  double timeout_s = 30.0;
  int max_retries = 2;
  double temperature = 0.0;
  /// Process-wide cap on in-flight requests.
  int max_concurrency = 4;

  /// Throws VlmConfigError on a non-positive timeout, negative retries or an
  /// endpoint without an http(s) scheme.
  void validate() const;
};

/// Process-wide switch. While disabled, every client request throws
/// OfflineViolation before touching the network.
void set_network_enabled(bool enabled);
bool network_enabled();

/// Counting gate shared by all clients in the process.
class RequestLimiter {
 public:
  static RequestLimiter& global();

  void set_limit(int limit);
  void acquire();
  void release();
  int in_flight() const;

 private:
  mutable std::mutex mu_;
  std::condition_variable cv_;
  int limit_ = 4;
  int in_flight_ = 0;
};

/// Chat-completions body: one user message holding the instruction text
/// followed by one data-URL PNG part per image.
nlohmann::json build_chat_request(const RemoteVlmConfig& cfg, const std::string& instruction,
                                  const std::vector<const Image*>& images);

/// choices[0].message.content as text (string content or concatenated text
/// parts). nullopt when the body does not follow the schema.
std::optional<std::string> extract_reply(const std::string& body);

class VlmClient {
 public:
  explicit VlmClient(RemoteVlmConfig cfg);

  /// Reply text, or nullopt once 1 + max_retries attempts have failed on
  /// transport errors, timeouts, 408, 429 or 5xx. Other 4xx replies throw
  /// VlmConfigError. A 200 with an unreadable body yields an empty string.
  std::optional<std::string> complete(const std::string& instruction, const std::vector<const Image*>& images);

  const RemoteVlmConfig& config() const { return cfg_; }
  /// HTTP attempts made so far, retries included.
  int attempts() const { return attempts_; }

 private:
  RemoteVlmConfig cfg_;
  std::string host_;
  std::string base_path_;
  int attempts_ = 0;
};

/// Decision policy backed by a remote chat-completions model.
class RemoteVlmPolicy : public DecisionPolicy {
 public:
  explicit RemoteVlmPolicy(RemoteVlmConfig cfg);

  std::string name() const override { return "remote-vlm"; }
  Decision decide(const DecisionContext& ctx) override;
  ConfirmResult confirm(const ConfirmContext& ctx) override;
  int calls() const override { return calls_; }
  const std::string& last_reply() const { return last_reply_; }
  VlmClient& client() { return client_; }

 private:
  VlmClient client_;
  int calls_ = 0;
  std::string last_reply_;
};

}  // namespace pigeon::policy
