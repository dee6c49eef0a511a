#pragma once

#include "agentdistill/core/errors.hpp"
#include "agentdistill/core/types.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace agentdistill::llm {

enum class Role { system, user, assistant };

struct ChatMessage {
  Role role = Role::user;
  std::string content;
  std::optional<std::string> image_url;  // data: or http(s) URL for vision models

  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<std::int64_t> max_tokens;
  std::optional<std::vector<ToolSchema>> tool_schemas;

  bool operator==(const ChatRequest&) const = default;
};

enum class FinishReason { stop, tool_call, length, error };

struct ToolCallRequest {
  std::string tool_name;
  json arguments = json::object();

  bool operator==(const ToolCallRequest&) const = default;
};

struct ChatResponse {
  std::string content;
  std::optional<ToolCallRequest> tool_invocation;  // present iff finish_reason == tool_call
  FinishReason finish_reason = FinishReason::stop;

  bool operator==(const ChatResponse&) const = default;
};

enum class Mode { live, record, replay_strict };

struct TransportMode {
  Mode mode = Mode::replay_strict;
  std::optional<std::filesystem::path> cache_path;
  std::optional<std::string> endpoint;  // base URL; requests go to {endpoint}/chat/completions
  std::optional<std::string> api_key_env;
  std::int64_t http_timeout_ms = 120000;
};

class HttpError : public Error {
 public:
  HttpError(int status, std::string body)
      : Error("HTTP " + std::to_string(status) + ": " + body.substr(0, 500)), status_(status), body_(std::move(body)) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

class CacheMiss : public Error {
 public:
  explicit CacheMiss(std::string key) : Error("replay cache miss for key " + key), key_(std::move(key)) {}
  const std::string& cache_key() const { return key_; }

 private:
  std::string key_;
};

class AuthMissing : public Error {
 public:
  using Error::Error;
};

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view text);

json to_json(const ChatRequest& request);
ChatRequest request_from_json(const json& j);
json to_json(const ChatResponse& response);
ChatResponse response_from_json(const json& j);

// SHA-256 over the canonical JSON of the request (object keys sorted,
// content verbatim). Any change to model, messages, temperature, max_tokens,
// or tool schemas changes the key.
std::string cache_key(const ChatRequest& request);

// The network leg: one request in, the model's raw reply out.
using Upstream = std::function<ChatResponse(const ChatRequest&)>;

// OpenAI-compatible POST {endpoint}/chat/completions.
Upstream http_upstream(const TransportMode& transport);

// The single entry point for model calls. live forwards every call; record
// serves hits from the cache and appends each miss after one upstream call;
// replay_strict answers from the cache only and never touches the network.
// Safe for concurrent callers.
class LlmGateway {
 public:
  // `upstream` overrides the HTTP leg (live/record only).
  explicit LlmGateway(TransportMode transport, Upstream upstream = {});

  ChatResponse complete(const ChatRequest& request);

  const TransportMode& transport() const { return transport_; }
  std::size_t upstream_calls() const { return upstream_calls_.load(); }
  std::size_t cache_size() const;

 private:
  ChatResponse call_upstream(const ChatRequest& request);
  void append_record(const std::string& key, const ChatRequest& request, const ChatResponse& response);

  TransportMode transport_;
  Upstream upstream_;
  std::atomic<std::size_t> upstream_calls_{0};

  mutable std::shared_mutex cache_mu_;
  std::map<std::string, ChatResponse> cache_;
  std::map<std::string, std::shared_future<ChatResponse>> in_flight_;
  std::mutex writer_mu_;
};

}  // namespace agentdistill::llm
