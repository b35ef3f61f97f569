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

#include "pigeon/vlm_client.hpp"

#include <atomic>
#include <cstdlib>

#include <httplib.h>

#include "pigeon/errors.hpp"

namespace pigeon::policy {

namespace {

std::atomic<bool> g_network_enabled{true};

struct LimiterGuard {
  RequestLimiter& limiter;
  explicit LimiterGuard(RequestLimiter& l) : limiter(l) { limiter.acquire(); }
  ~LimiterGuard() { limiter.release(); }
  LimiterGuard(const LimiterGuard&) = delete;
  LimiterGuard& operator=(const LimiterGuard&) = delete;
};

bool retryable(int status) { return status == 408 || status == 429 || status >= 500; }

}  // namespace

void set_network_enabled(bool enabled) { g_network_enabled = enabled; }
bool network_enabled() { return g_network_enabled; }

void RemoteVlmConfig::validate() const {
  if (!(timeout_s > 0.0)) throw VlmConfigError("timeout must be positive");
  if (max_retries < 0) throw VlmConfigError("max_retries must be non-negative");
  if (max_concurrency < 1) throw VlmConfigError("max_concurrency must be at least 1");
  if (endpoint.rfind("http://", 0) != 0 && endpoint.rfind("https://", 0) != 0)
    throw VlmConfigError("endpoint must start with http:// or https://: " + endpoint);
}

RequestLimiter& RequestLimiter::global() {
  static RequestLimiter limiter;
  return limiter;
}

void RequestLimiter::set_limit(int limit) {
  {
    std::lock_guard lock(mu_);
    limit_ = std::max(limit, 1);
  }
  cv_.notify_all();
}

void RequestLimiter::acquire() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return in_flight_ < limit_; });
  ++in_flight_;
}

void RequestLimiter::release() {
  {
    std::lock_guard lock(mu_);
    --in_flight_;
  }
  cv_.notify_one();
}

int RequestLimiter::in_flight() const {
  std::lock_guard lock(mu_);
  return in_flight_;
}

nlohmann::json build_chat_request(const RemoteVlmConfig& cfg, const std::string& instruction,
                                  const std::vector<const Image*>& images) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", instruction}});
  for (const Image* img : images) {
    if (!img) continue;
    const std::string url = "data:image/png;base64," + httplib::detail::base64_encode(encode_png(*img));
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  }
  nlohmann::json body;
  body["model"] = cfg.model;
  body["temperature"] = cfg.temperature;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", content}}});
  return body;
}

std::optional<std::string> extract_reply(const std::string& body) {
  const auto doc = nlohmann::json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  const auto choices = doc.find("choices");
  if (choices == doc.end() || !choices->is_array() || choices->empty()) return std::nullopt;
  const auto& first = (*choices)[0];
  if (!first.is_object() || !first.contains("message") || !first["message"].is_object()) return std::nullopt;
  const auto& msg = first["message"];
  const auto c = msg.find("content");
  if (c == msg.end()) return std::nullopt;
  if (c->is_string()) return c->get<std::string>();
  if (c->is_array()) {
    std::string text;
    for (const auto& part : *c)
      if (part.is_object() && part.value("type", "") == "text" && part.contains("text") && part["text"].is_string())
        text += part["text"].get<std::string>();
    return text;
  }
  return std::nullopt;
}

VlmClient::VlmClient(RemoteVlmConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const auto scheme_end = cfg_.endpoint.find("://") + 3;
  const auto path_start = cfg_.endpoint.find('/', scheme_end);
  host_ = cfg_.endpoint.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? "" : cfg_.endpoint.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::optional<std::string> VlmClient::complete(const std::string& instruction,
                                               const std::vector<const Image*>& images) {
  if (!network_enabled()) throw OfflineViolation("remote model request to " + cfg_.endpoint + " while offline");
  const std::string body = build_chat_request(cfg_, instruction, images).dump();
  httplib::Headers headers;
  if (const char* token = std::getenv(cfg_.token_env.c_str()); token && *token)
    headers.emplace("Authorization", std::string("Bearer ") + token);

  auto& limiter = RequestLimiter::global();
  limiter.set_limit(cfg_.max_concurrency);
  LimiterGuard guard(limiter);

  const auto secs = static_cast<time_t>(cfg_.timeout_s);
  const auto usecs = static_cast<time_t>((cfg_.timeout_s - static_cast<double>(secs)) * 1e6);
  for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
    ++attempts_;
    httplib::Client client(host_);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    auto res = client.Post(base_path_ + "/chat/completions", headers, body, "application/json");
    if (!res) continue;
    if (res->status == 200) return extract_reply(res->body).value_or("");
    if (retryable(res->status)) continue;
    throw VlmConfigError("model endpoint rejected the request with HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  return std::nullopt;
}

RemoteVlmPolicy::RemoteVlmPolicy(RemoteVlmConfig cfg) : client_(std::move(cfg)) {}

Decision RemoteVlmPolicy::decide(const DecisionContext& ctx) {
  if (!ctx.prompt) throw InvalidInputError("remote decisions need a prompt");
  std::vector<const Image*> images;
  for (const auto& pair : ctx.prompt->pairs) {
    images.push_back(&pair.view.image);
    if (pair.context) images.push_back(&pair.context->image);
  }
  ++calls_;
  const auto reply = client_.complete(ctx.prompt->instruction, images);
  last_reply_ = reply.value_or("");
  if (!reply) return Decision::uncertain();
  return parse_decision(*reply, ctx.prompt->n_choices);
}

ConfirmResult RemoteVlmPolicy::confirm(const ConfirmContext& ctx) {
  if (!ctx.prompt) throw InvalidInputError("remote confirmations need a prompt");
  std::vector<const Image*> images;
  for (const auto& snap : ctx.prompt->images) images.push_back(&snap->image);
  ++calls_;
  const auto reply = client_.complete(ctx.prompt->instruction, images);
  last_reply_ = reply.value_or("");
  if (!reply) return ConfirmResult::Unsure;
  return parse_confirmation(*reply);
}

}  // namespace pigeon::policy
