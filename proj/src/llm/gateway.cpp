#include <httplib.h>

#include "agentdistill/llm/gateway.hpp"

#include "agentdistill/agents/tool_call.hpp"
#include "agentdistill/core/digest.hpp"
#include "agentdistill/core/log.hpp"
#include "agentdistill/core/text_blocks.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

namespace agentdistill::llm {

namespace {

std::string_view role_name(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_name(std::string_view text) {
  if (text == "system") return Role::system;
  if (text == "user") return Role::user;
  if (text == "assistant") return Role::assistant;
  throw Error("unknown chat role '" + std::string(text) + "'");
}

std::string_view finish_name(FinishReason reason) {
  switch (reason) {
    case FinishReason::stop: return "stop";
    case FinishReason::tool_call: return "tool_call";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

FinishReason finish_from_name(std::string_view text) {
  if (text == "stop") return FinishReason::stop;
  if (text == "tool_call") return FinishReason::tool_call;
  if (text == "length") return FinishReason::length;
  if (text == "error") return FinishReason::error;
  throw Error("unknown finish reason '" + std::string(text) + "'");
}

void validate_request(const ChatRequest& request) {
  if (request.messages.empty()) throw Error("chat request has no messages");
  if (!(request.temperature >= 0.0)) throw Error("chat request temperature must be >= 0");
}

// Tool calls travel as a text convention; lift the first valid one into the
// structured field so callers never parse model text twice.
ChatResponse attach_tool_invocation(const ChatRequest& request, ChatResponse response) {
  if (response.tool_invocation && response.finish_reason == FinishReason::tool_call) return response;
  response.tool_invocation.reset();
  if (response.finish_reason == FinishReason::tool_call) response.finish_reason = FinishReason::stop;
  if (!request.tool_schemas) return response;
  if (auto call = agents::parse_tool_invocation(response.content)) {
    response.tool_invocation = ToolCallRequest{call->tool_name, call->arguments};
    response.finish_reason = FinishReason::tool_call;
  }
  return response;
}

struct Url {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path;  // no trailing slash
};

Url parse_url(const std::string& text) {
  Url url;
  const auto scheme_end = text.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint '" + text + "' is not an absolute URL");
  url.scheme = to_lower(text.substr(0, scheme_end));
  if (url.scheme != "http" && url.scheme != "https")
    throw ConfigError("endpoint scheme must be http or https: '" + text + "'");
  std::string rest = text.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  std::string authority = rest.substr(0, slash);
  url.path = slash == std::string::npos ? "" : rest.substr(slash);
  while (!url.path.empty() && url.path.back() == '/') url.path.pop_back();
  if (const auto at = authority.rfind('@'); at != std::string::npos) authority = authority.substr(at + 1);
  const auto colon = authority.rfind(':');
  if (colon != std::string::npos && authority.find(']') == std::string::npos) {
    url.host = authority.substr(0, colon);
    try {
      url.port = std::stoi(authority.substr(colon + 1));
    } catch (const std::exception&) {
      throw ConfigError("endpoint port is not a number: '" + text + "'");
    }
  } else {
    url.host = authority;
    url.port = url.scheme == "https" ? 443 : 80;
  }
  if (url.host.empty()) throw ConfigError("endpoint has no host: '" + text + "'");
  return url;
}

const char* env_either(const char* lower, const char* upper) {
  if (const char* v = std::getenv(lower); v && *v) return v;
  if (const char* v = std::getenv(upper); v && *v) return v;
  return nullptr;
}

bool bypasses_proxy(const std::string& host) {
  const char* no_proxy = env_either("no_proxy", "NO_PROXY");
  if (!no_proxy) return false;
  std::stringstream list(no_proxy);
  std::string item;
  while (std::getline(list, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if (item == "*") return true;
    if (!item.empty() && item.front() == '.') item.erase(0, 1);
    if (host == item) return true;
    if (host.size() > item.size() && host.compare(host.size() - item.size(), item.size(), item) == 0 &&
        host[host.size() - item.size() - 1] == '.')
      return true;
  }
  return false;
}

json wire_message(const ChatMessage& m) {
  json out = {{"role", role_name(m.role)}};
  if (m.image_url) {
    out["content"] = json::array({{{"type", "text"}, {"text", m.content}},
                                  {{"type", "image_url"}, {"image_url", {{"url", *m.image_url}}}}});
  } else {
    out["content"] = m.content;
  }
  return out;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::live: return "live";
    case Mode::record: return "record";
    case Mode::replay_strict: return "replay_strict";
  }
  return "replay_strict";
}

Mode mode_from_string(std::string_view text) {
  if (text == "live") return Mode::live;
  if (text == "record") return Mode::record;
  if (text == "replay_strict" || text == "replay") return Mode::replay_strict;
  throw ConfigError("unknown transport mode '" + std::string(text) + "'");
}

json to_json(const ChatRequest& request) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json item = {{"role", role_name(m.role)}, {"content", m.content}};
    if (m.image_url) item["image_url"] = *m.image_url;
    messages.push_back(std::move(item));
  }
  json out = {{"model_id", request.model_id},
              {"messages", std::move(messages)},
              {"temperature", request.temperature},
              {"max_tokens", nullptr},
              {"tool_schemas", nullptr}};
  if (request.max_tokens) out["max_tokens"] = *request.max_tokens;
  if (request.tool_schemas) out["tool_schemas"] = *request.tool_schemas;
  return out;
}

ChatRequest request_from_json(const json& j) {
  ChatRequest request;
  request.model_id = j.at("model_id").get<std::string>();
  for (const auto& m : j.at("messages")) {
    ChatMessage message{role_from_name(m.at("role").get<std::string>()), m.at("content").get<std::string>(), {}};
    if (m.contains("image_url") && !m["image_url"].is_null()) message.image_url = m["image_url"].get<std::string>();
    request.messages.push_back(std::move(message));
  }
  request.temperature = j.value("temperature", 0.0);
  if (j.contains("max_tokens") && !j["max_tokens"].is_null()) request.max_tokens = j["max_tokens"].get<std::int64_t>();
  if (j.contains("tool_schemas") && !j["tool_schemas"].is_null())
    request.tool_schemas = j["tool_schemas"].get<std::vector<ToolSchema>>();
  return request;
}

json to_json(const ChatResponse& response) {
  json out = {{"content", response.content},
              {"finish_reason", finish_name(response.finish_reason)},
              {"tool_invocation", nullptr}};
  if (response.tool_invocation)
    out["tool_invocation"] = {{"tool_name", response.tool_invocation->tool_name},
                              {"arguments", response.tool_invocation->arguments}};
  return out;
}

ChatResponse response_from_json(const json& j) {
  ChatResponse response;
  response.content = j.at("content").get<std::string>();
  response.finish_reason = finish_from_name(j.at("finish_reason").get<std::string>());
  if (j.contains("tool_invocation") && !j["tool_invocation"].is_null()) {
    const auto& t = j["tool_invocation"];
    response.tool_invocation = ToolCallRequest{t.at("tool_name").get<std::string>(), t.value("arguments", json::object())};
  }
  return response;
}

std::string cache_key(const ChatRequest& request) { return sha256_hex(to_json(request).dump()); }

Upstream http_upstream(const TransportMode& transport) {
  if (!transport.endpoint) throw ConfigError("live transport needs an endpoint");
  const Url url = parse_url(*transport.endpoint);
  const auto api_key_env = transport.api_key_env;
  const auto timeout_ms = transport.http_timeout_ms;

  return [url, api_key_env, timeout_ms](const ChatRequest& request) -> ChatResponse {
    httplib::Headers headers;
    if (api_key_env) {
      const char* key = std::getenv(api_key_env->c_str());
      if (!key || !*key) throw AuthMissing("environment variable " + *api_key_env + " holding the API key is not set");
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }

    json body = {{"model", request.model_id}, {"temperature", request.temperature}, {"messages", json::array()}};
    for (const auto& m : request.messages) body["messages"].push_back(wire_message(m));
    if (request.max_tokens) body["max_tokens"] = *request.max_tokens;

    httplib::Client client(url.scheme + "://" + url.host + ":" + std::to_string(url.port));
    client.set_connection_timeout(std::chrono::milliseconds(timeout_ms));
    client.set_read_timeout(std::chrono::milliseconds(timeout_ms));
    client.set_write_timeout(std::chrono::milliseconds(timeout_ms));
    if (!bypasses_proxy(url.host)) {
      const char* proxy = url.scheme == "https" ? env_either("https_proxy", "HTTPS_PROXY")
                                                : env_either("http_proxy", "HTTP_PROXY");
      if (proxy) {
        std::string proxy_text = proxy;
        if (proxy_text.find("://") == std::string::npos) proxy_text = "http://" + proxy_text;
        const Url p = parse_url(proxy_text);
        client.set_proxy(p.host, p.port);
      }
    }

    auto result = client.Post(url.path + "/chat/completions", headers, body.dump(), "application/json");
    if (!result) throw HttpError(0, "request failed: " + httplib::to_string(result.error()));
    if (result->status < 200 || result->status >= 300) throw HttpError(result->status, result->body);

    json reply;
    try {
      reply = json::parse(result->body);
    } catch (const json::parse_error&) {
      throw HttpError(result->status, "response is not JSON: " + result->body);
    }
    if (!reply.contains("choices") || !reply["choices"].is_array() || reply["choices"].empty())
      throw HttpError(result->status, "response has no choices: " + result->body);
    const auto& choice = reply["choices"][0];
    ChatResponse response;
    const auto& message = choice.value("message", json::object());
    if (message.contains("content") && message["content"].is_string()) response.content = message["content"];
    const std::string finish = choice.value("finish_reason", json("stop")).is_string()
                                   ? choice.value("finish_reason", std::string("stop"))
                                   : std::string("stop");
    response.finish_reason = finish == "length" ? FinishReason::length : FinishReason::stop;
    return response;
  };
}

LlmGateway::LlmGateway(TransportMode transport, Upstream upstream)
    : transport_(std::move(transport)), upstream_(std::move(upstream)) {
  const bool needs_cache = transport_.mode != Mode::live;
  const bool needs_endpoint = transport_.mode != Mode::replay_strict;
  if (needs_cache && !transport_.cache_path)
    throw ConfigError(std::string(to_string(transport_.mode)) + " transport needs a cache_path");
  if (needs_endpoint && !transport_.endpoint && !upstream_)
    throw ConfigError(std::string(to_string(transport_.mode)) + " transport needs an endpoint");
  if (transport_.mode == Mode::replay_strict) upstream_ = {};
  else if (!upstream_) upstream_ = http_upstream(transport_);

  if (!needs_cache) return;
  const auto& path = *transport_.cache_path;
  std::ifstream in(path);
  if (!in) {
    if (transport_.mode == Mode::replay_strict) throw IoError("cannot open replay cache " + path.string());
    return;
  }
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (trim(line).empty()) continue;
    try {
      const json record = json::parse(line);
      cache_.emplace(record.at("key").get<std::string>(), response_from_json(record.at("response")));
    } catch (const json::exception& e) {
      throw ParseError(line_number, std::string("bad cache record in ") + path.string() + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(line_number, std::string("bad cache record in ") + path.string() + ": " + e.what());
    }
  }
}

std::size_t LlmGateway::cache_size() const {
  std::shared_lock lock(cache_mu_);
  return cache_.size();
}

ChatResponse LlmGateway::call_upstream(const ChatRequest& request) {
  ++upstream_calls_;
  return attach_tool_invocation(request, upstream_(request));
}

void LlmGateway::append_record(const std::string& key, const ChatRequest& request, const ChatResponse& response) {
  std::lock_guard lock(writer_mu_);
  const auto& path = *transport_.cache_path;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  if (!out) throw IoError("cannot append to cache " + path.string());
  json record = {{"key", key}, {"request", to_json(request)}, {"response", to_json(response)},
                 {"recorded_at", utc_timestamp_now()}};
  out << compact(record) << '\n';
  out.flush();
  if (!out) throw IoError("write to cache " + path.string() + " failed");
}

ChatResponse LlmGateway::complete(const ChatRequest& request) {
  validate_request(request);
  if (transport_.mode == Mode::live) return call_upstream(request);

  const std::string key = cache_key(request);
  if (transport_.mode == Mode::replay_strict) {
    std::shared_lock lock(cache_mu_);
    const auto it = cache_.find(key);
    if (it == cache_.end()) throw CacheMiss(key);
    return it->second;
  }

  // Record: concurrent misses on one key share a single upstream call.
  std::promise<ChatResponse> promise;
  std::shared_future<ChatResponse> pending;
  {
    std::unique_lock lock(cache_mu_);
    if (const auto it = cache_.find(key); it != cache_.end()) return it->second;
    if (const auto it = in_flight_.find(key); it != in_flight_.end()) {
      pending = it->second;
    } else {
      in_flight_.emplace(key, promise.get_future().share());
    }
  }
  if (pending.valid()) return pending.get();

  try {
    ChatResponse response = call_upstream(request);
    append_record(key, request, response);
    {
      std::unique_lock lock(cache_mu_);
      cache_.emplace(key, response);
      in_flight_.erase(key);
    }
    promise.set_value(response);
    return response;
  } catch (...) {
    {
      std::unique_lock lock(cache_mu_);
      in_flight_.erase(key);
    }
    promise.set_exception(std::current_exception());
    throw;
  }
}

}  // namespace agentdistill::llm
