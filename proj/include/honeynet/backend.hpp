#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace honeynet {

struct ChatRequest {
  /// Stable per-episode key (the attacker label); mock backends select scripts by it.
  std::string episode_key;
  /// 0 for the bootstrap decision, then one per epoch.
  int turn_index = 0;
  std::string system_prompt;
  std::string user_prompt;
};

struct ChatResponse {
  std::string content;
  double latency_ms = 0.0;
};

/// A chat-completion endpoint. complete() performs one attempt and throws
/// Error(BackendUnreachable) on transport or protocol failure; retrying is the caller's
/// job. Implementations must be callable concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) const = 0;
  virtual std::string describe() const = 0;
  virtual bool is_network() const { return false; }
};

struct HttpBackendConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model = "gpt-4.1";
  /// Environment variable holding the bearer token; empty means no auth header.
  std::string api_key_env = "OPENAI_API_KEY";
  double temperature = 0.0;
  int max_tokens = 512;
  int timeout_seconds = 60;
};

/// OpenAI-compatible POST {base_url}/chat/completions.
/// Throws Error(BackendAuthMissing) at construction if api_key_env is set but unset in
/// the environment.
class HttpChatBackend final : public ChatBackend {
 public:
  explicit HttpChatBackend(HttpBackendConfig config);

  ChatResponse complete(const ChatRequest& request) const override;
  std::string describe() const override;
  bool is_network() const override { return true; }

  /// Request body sent for `request` (exposed for tests).
  nlohmann::json request_body(const ChatRequest& request) const;

 private:
  HttpBackendConfig config_;
  std::string token_;
  std::string origin_;  ///< scheme://host[:port]
  std::string path_;    ///< path prefix + /chat/completions
};

/// Extract choices[0].message.content from a chat-completion response body.
std::string extract_chat_content(const std::string& body);

/// Replays fixed responses, indexed by (episode key, turn index). When a script runs out
/// the last response repeats. Keys without a script use the default script.
class ScriptedMockBackend final : public ChatBackend {
 public:
  ScriptedMockBackend() = default;
  ScriptedMockBackend(std::map<std::string, std::vector<std::string>> scripts,
                      std::vector<std::string> default_script = {});

  static ScriptedMockBackend from_json(const nlohmann::json& j);
  static ScriptedMockBackend load(const std::string& path);
  nlohmann::json to_json() const;

  ChatResponse complete(const ChatRequest& request) const override;
  std::string describe() const override { return "scripted_mock"; }

 private:
  std::map<std::string, std::vector<std::string>> scripts_;
  std::vector<std::string> default_script_;
};

}  // namespace honeynet
