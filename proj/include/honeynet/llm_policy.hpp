#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "honeynet/attacker.hpp"
#include "honeynet/backend.hpp"
#include "honeynet/catalog.hpp"
#include "honeynet/defender.hpp"
#include "honeynet/telemetry.hpp"

namespace honeynet {

/// Prompt text with {{name}} placeholders. Required: alerts, progression, services,
/// budget. Optional: epoch, stages.
class PromptTemplate {
 public:
  explicit PromptTemplate(std::string text);

  static PromptTemplate builtin();
  static PromptTemplate load(const std::string& path);

  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct PromptInputs {
  std::string alerts;
  std::string progression;
  std::string services;
  std::string budget;
  std::string epoch;
  std::string stages;
};

/// Substitute placeholders. Throws Error(MissingPlaceholder) if the template lacks a
/// required placeholder or uses an unknown one.
std::string render_template(const PromptTemplate& tmpl, const PromptInputs& inputs);

/// Catalog listing for the prompt ("- GitLab (port 80)").
std::string describe_services(const HoneynetConfig& cfg);

/// Belief digest: per-service evidence and the last committed inference.
std::string describe_progression(const BeliefState& belief);

std::string build_prompt(std::string_view digest, const BeliefState& belief,
                         const HoneynetConfig& cfg, const PromptTemplate& tmpl);

struct ParsedResponse {
  ExposureDecision decision;
  StagePrediction prediction;
  std::string rationale;
  std::vector<std::string> warnings;
};

struct ParseFailure {
  std::string reason;
};

using ParseResult = std::variant<ParsedResponse, ParseFailure>;

/// Extract the first JSON object carrying "expose" and "stages" from free text (prose
/// and code fences tolerated). Unknown services/stages are dropped with a warning;
/// over-budget lists are truncated in the given order.
ParseResult parse_response(std::string_view raw, const HoneynetConfig& cfg);

struct LlmSettings {
  PromptTemplate prompt_template = PromptTemplate::builtin();
  std::string system_prompt =
      "You are a security agent controlling honeypot exposure. Answer with JSON only.";
  std::size_t max_prompt_chars = 16000;
  /// Retries after the first failed attempt.
  int max_retries = 3;
  std::chrono::milliseconds backoff{500};
};

struct LlmDecideResult {
  DecideResult result;
  AgentTurn turn;
};

/// One full LLM defender phase: belief update, prompt, backend call with bounded
/// retries and exponential backoff, parse, and budget repair. Malformed output or an
/// unreachable backend falls back to the previous decision (first catalog service on
/// the bootstrap turn). Never throws for model or transport failures.
LlmDecideResult llm_decide(const ChatBackend& backend, const LlmSettings& settings,
                           const EpochObservation& obs, BeliefState belief,
                           const HoneynetConfig& cfg, const std::string& episode_key);

/// Defender policy backed by a chat model.
class LlmPolicy final : public Policy {
 public:
  LlmPolicy(std::string name, std::shared_ptr<const ChatBackend> backend, LlmSettings settings = {});

  std::string name() const override { return name_; }
  std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const override;

  const ChatBackend& backend() const { return *backend_; }

 private:
  std::string name_;
  std::shared_ptr<const ChatBackend> backend_;
  LlmSettings settings_;
};

/// Model replies that track `profile` perfectly, assuming its target is exposed every
/// epoch: turn 0 exposes the target, turn i reports the first i chain stages.
std::vector<std::string> make_aligned_script(const AttackGraph& catalog,
                                             const AttackerProfile& profile);

}  // namespace honeynet
