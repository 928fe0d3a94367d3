#include "honeynet/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "honeynet/error.hpp"

namespace honeynet {

namespace {

/// Split "https://host:port/v1" into origin and path prefix.
std::pair<std::string, std::string> split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw Error(ErrorCode::ConfigParse, "base_url needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, ""};
  auto path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

}  // namespace

HttpChatBackend::HttpChatBackend(HttpBackendConfig config) : config_(std::move(config)) {
  if (!config_.api_key_env.empty()) {
    const char* token = std::getenv(config_.api_key_env.c_str());
    if (!token || !*token)
      throw Error(ErrorCode::BackendAuthMissing,
                  "environment variable " + config_.api_key_env + " is not set");
    token_ = token;
  }
  auto [origin, prefix] = split_url(config_.base_url);
  origin_ = std::move(origin);
  path_ = prefix + "/chat/completions";
}

std::string HttpChatBackend::describe() const {
  return "http_chat_completion(" + config_.model + " @ " + config_.base_url + ")";
}

nlohmann::json HttpChatBackend::request_body(const ChatRequest& request) const {
  auto messages = nlohmann::json::array();
  if (!request.system_prompt.empty())
    messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
  messages.push_back({{"role", "user"}, {"content", request.user_prompt}});
  return {{"model", config_.model},
          {"messages", messages},
          {"temperature", config_.temperature},
          {"max_tokens", config_.max_tokens}};
}

std::string extract_chat_content(const std::string& body) {
  try {
    auto j = nlohmann::json::parse(body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BackendUnreachable, std::string("malformed completion body: ") + e.what());
  }
}

ChatResponse HttpChatBackend::complete(const ChatRequest& request) const {
  // A client per call keeps the backend shareable across threads.
  httplib::Client client(origin_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  client.set_write_timeout(config_.timeout_seconds, 0);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path_, headers, request_body(request).dump(), "application/json");
  const auto elapsed = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start);

  if (!res)
    throw Error(ErrorCode::BackendUnreachable,
                "POST " + origin_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status != 200)
    throw Error(ErrorCode::BackendUnreachable,
                "POST " + origin_ + path_ + " returned HTTP " + std::to_string(res->status));
  return {extract_chat_content(res->body), elapsed.count()};
}

ScriptedMockBackend::ScriptedMockBackend(std::map<std::string, std::vector<std::string>> scripts,
                                         std::vector<std::string> default_script)
    : scripts_(std::move(scripts)), default_script_(std::move(default_script)) {}

ScriptedMockBackend ScriptedMockBackend::from_json(const nlohmann::json& j) {
  try {
    std::map<std::string, std::vector<std::string>> scripts;
    if (j.contains("scripts"))
      for (const auto& [key, value] : j["scripts"].items())
        scripts[key] = value.get<std::vector<std::string>>();
    std::vector<std::string> fallback;
    if (j.contains("default")) fallback = j["default"].get<std::vector<std::string>>();
    return ScriptedMockBackend(std::move(scripts), std::move(fallback));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("replay file: ") + e.what());
  }
}

ScriptedMockBackend ScriptedMockBackend::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open replay file " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, path + ": " + e.what());
  }
}

nlohmann::json ScriptedMockBackend::to_json() const {
  return {{"scripts", scripts_}, {"default", default_script_}};
}

ChatResponse ScriptedMockBackend::complete(const ChatRequest& request) const {
  const std::vector<std::string>* script = &default_script_;
  if (auto it = scripts_.find(request.episode_key); it != scripts_.end()) script = &it->second;
  if (script->empty())
    throw Error(ErrorCode::BackendUnreachable, "no mock script for '" + request.episode_key + "'");
  const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(request.turn_index, 0)),
                                       script->size() - 1);
  return {(*script)[i], 0.0};
}

}  // namespace honeynet
