#include "honeynet/llm_policy.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "embedded_data.inc"
#include "honeynet/error.hpp"

namespace honeynet {

PromptTemplate::PromptTemplate(std::string text) : text_(std::move(text)) {}

PromptTemplate PromptTemplate::builtin() { return PromptTemplate(std::string(embedded::kPromptTemplate)); }

PromptTemplate PromptTemplate::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open prompt template " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return PromptTemplate(ss.str());
}

std::string render_template(const PromptTemplate& tmpl, const PromptInputs& in) {
  const std::pair<std::string_view, const std::string*> values[] = {
      {"alerts", &in.alerts}, {"progression", &in.progression}, {"services", &in.services},
      {"budget", &in.budget}, {"epoch", &in.epoch},             {"stages", &in.stages},
  };
  static constexpr std::string_view kRequired[] = {"alerts", "progression", "services", "budget"};

  const auto& text = tmpl.text();
  std::string out;
  std::set<std::string, std::less<>> used;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string::npos) {
      out.append(text, pos);
      break;
    }
    const auto close = text.find("}}", open + 2);
    if (close == std::string::npos)
      throw Error(ErrorCode::MissingPlaceholder, "unterminated placeholder in prompt template");
    out.append(text, pos, open - pos);
    std::string name = text.substr(open + 2, close - open - 2);
    name.erase(0, name.find_first_not_of(' '));
    name.erase(name.find_last_not_of(' ') + 1);
    const std::string* value = nullptr;
    for (const auto& [key, v] : values)
      if (key == name) value = v;
    if (!value) throw Error(ErrorCode::MissingPlaceholder, "unknown placeholder {{" + name + "}}");
    out += *value;
    used.insert(name);
    pos = close + 2;
  }
  for (auto req : kRequired)
    if (!used.contains(req))
      throw Error(ErrorCode::MissingPlaceholder, "template lacks {{" + std::string(req) + "}}");
  return out;
}

std::string describe_services(const HoneynetConfig& cfg) {
  std::string out;
  for (const auto& svc : cfg.catalog.services()) {
    if (!out.empty()) out += '\n';
    out += "- " + svc.display_name + " (id " + svc.id + ", port " + std::to_string(svc.port) + ")";
  }
  return out;
}

namespace {

std::string format_weight(double w) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", w);
  return buf;
}

std::string join(const std::vector<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

}  // namespace

std::string describe_progression(const BeliefState& belief) {
  std::vector<std::string> lines;
  for (std::size_t i = 0; i < belief.service_ids.size(); ++i) {
    std::vector<std::string> parts;
    for (int s = 0; s < kStageCount; ++s) {
      const double w = belief.evidence(static_cast<Eigen::Index>(i), s);
      if (w > 0.0) parts.push_back(std::string(to_string(stage_from_ordinal(s))) + "=" + format_weight(w));
    }
    if (!parts.empty()) lines.push_back("evidence " + belief.service_ids[i] + ": " + join(parts, ", "));
  }
  if (const auto* last = belief.last_decided()) {
    std::vector<std::string> stages;
    last->prediction.stages.for_each([&](AttackStage s) { stages.emplace_back(to_string(s)); });
    lines.push_back("last inference (epoch " + std::to_string(last->epoch) + "): stages [" +
                    join(stages, ", ") + "], target " +
                    last->prediction.target_service.value_or("unknown") + ", exposed [" +
                    join(last->decision.exposed, ", ") + "]");
  }
  if (lines.empty()) return "no attack progression inferred yet";
  return join(lines, "\n");
}

namespace {

PromptInputs prompt_inputs(std::string_view digest, const BeliefState& belief,
                           const HoneynetConfig& cfg) {
  std::vector<std::string> stages;
  for (auto s : kAllStages) stages.emplace_back(to_string(s));
  return {std::string(digest),
          describe_progression(belief),
          describe_services(cfg),
          std::to_string(cfg.budget),
          belief.history.empty() ? "0" : std::to_string(belief.history.back().epoch),
          join(stages, " -> ")};
}

}  // namespace

std::string build_prompt(std::string_view digest, const BeliefState& belief,
                         const HoneynetConfig& cfg, const PromptTemplate& tmpl) {
  return render_template(tmpl, prompt_inputs(digest, belief, cfg));
}

namespace {

std::string normalize_name(std::string_view s) {
  std::string out;
  for (char c : s)
    if (std::isalnum(static_cast<unsigned char>(c)))
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return out;
}

const ServiceSpec* resolve_service(const AttackGraph& catalog, std::string_view name) {
  const auto key = normalize_name(name);
  if (key.empty()) return nullptr;
  for (const auto& svc : catalog.services())
    if (normalize_name(svc.id) == key || normalize_name(svc.display_name) == key) return &svc;
  return nullptr;
}

/// Balanced-brace substrings starting at each '{', string-literal aware.
std::vector<std::string_view> json_object_candidates(std::string_view raw) {
  std::vector<std::string_view> out;
  for (auto start = raw.find('{'); start != std::string_view::npos; start = raw.find('{', start + 1)) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < raw.size(); ++i) {
      const char c = raw[i];
      if (in_string) {
        if (escaped) escaped = false;
        else if (c == '\\') escaped = true;
        else if (c == '"') in_string = false;
        continue;
      }
      if (c == '"') in_string = true;
      else if (c == '{') ++depth;
      else if (c == '}' && --depth == 0) {
        out.push_back(raw.substr(start, i - start + 1));
        break;
      }
    }
  }
  return out;
}

}  // namespace

ParseResult parse_response(std::string_view raw, const HoneynetConfig& cfg) {
  bool saw_object = false;
  for (auto candidate : json_object_candidates(raw)) {
    auto j = nlohmann::json::parse(candidate, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded() || !j.is_object()) continue;
    saw_object = true;
    if (!j.contains("expose") || !j["expose"].is_array() || !j.contains("stages") ||
        !j["stages"].is_array())
      continue;

    ParsedResponse out;
    std::set<std::string> seen;
    for (const auto& item : j["expose"]) {
      if (!item.is_string()) {
        out.warnings.push_back("ignored non-string expose entry " + item.dump());
        continue;
      }
      const auto* svc = resolve_service(cfg.catalog, item.get<std::string>());
      if (!svc) {
        out.warnings.push_back("dropped unknown service '" + item.get<std::string>() + "'");
        continue;
      }
      if (seen.insert(svc->id).second) out.decision.exposed.push_back(svc->id);
    }
    if (static_cast<int>(out.decision.exposed.size()) > cfg.budget) {
      out.warnings.push_back("truncated expose list of " +
                             std::to_string(out.decision.exposed.size()) + " to budget " +
                             std::to_string(cfg.budget));
      out.decision.exposed.resize(static_cast<std::size_t>(std::max(cfg.budget, 0)));
    }

    for (const auto& item : j["stages"]) {
      const auto stage = item.is_string() ? parse_stage(item.get<std::string>()) : std::nullopt;
      if (!stage) {
        out.warnings.push_back("dropped unknown stage " + item.dump());
        continue;
      }
      out.prediction.stages.insert(*stage);
    }

    if (j.contains("target") && j["target"].is_string()) {
      if (const auto* svc = resolve_service(cfg.catalog, j["target"].get<std::string>()))
        out.prediction.target_service = svc->id;
    }
    if (!out.prediction.target_service && !out.decision.exposed.empty())
      out.prediction.target_service = out.decision.exposed.front();

    if (j.contains("done") && j["done"].is_boolean()) out.decision.declared_done = j["done"].get<bool>();
    if (j.contains("rationale") && j["rationale"].is_string()) out.rationale = j["rationale"].get<std::string>();
    return out;
  }
  return ParseFailure{saw_object ? "no JSON object with 'expose' and 'stages' lists"
                                 : "no JSON object found"};
}

namespace {

struct TurnOutput {
  PolicyOutput output;
  AgentTurn turn;
};

PolicyOutput fallback_output(const BeliefState& belief, const HoneynetConfig& cfg) {
  PolicyOutput out;
  out.fallback = true;
  if (const auto* prev = belief.last_decided()) {
    out.decision.exposed = prev->decision.exposed;
    out.prediction = prev->prediction;
  } else if (cfg.catalog.size() > 0) {
    out.decision.exposed = {cfg.catalog.services().front().id};
  }
  return out;
}

/// `belief` already includes this epoch's observation.
TurnOutput run_turn(const ChatBackend& backend, const LlmSettings& settings,
                    const EpochObservation& obs, const BeliefState& belief,
                    const HoneynetConfig& cfg, const std::string& episode_key) {
  TurnOutput result;
  auto& turn = result.turn;
  turn.epoch = obs.epoch;

  auto inputs = prompt_inputs("", belief, cfg);
  const auto base_len = render_template(settings.prompt_template, inputs).size();
  if (settings.max_prompt_chars > base_len)
    inputs.alerts = summarize_for_prompt(obs, settings.max_prompt_chars - base_len);
  turn.prompt = render_template(settings.prompt_template, inputs);

  ChatRequest request{episode_key, static_cast<int>(belief.history.size()) - 1,
                      settings.system_prompt, turn.prompt};
  std::optional<ChatResponse> response;
  for (int attempt = 0; attempt <= settings.max_retries; ++attempt) {
    ++turn.attempts;
    try {
      response = backend.complete(request);
      break;
    } catch (const Error& e) {
      turn.error = e.what();
      if (attempt < settings.max_retries && settings.backoff.count() > 0)
        std::this_thread::sleep_for(settings.backoff * (1LL << attempt));
    }
  }

  if (!response) {
    result.output = fallback_output(belief, cfg);
    result.output.warnings.push_back("backend unreachable after " + std::to_string(turn.attempts) +
                                     " attempts; fallback decision");
    return result;
  }
  turn.error.clear();
  turn.raw_response = response->content;
  turn.latency_ms = response->latency_ms;

  auto parsed = parse_response(response->content, cfg);
  if (auto* failure = std::get_if<ParseFailure>(&parsed)) {
    turn.error = "parse-failure: " + failure->reason;
    result.output = fallback_output(belief, cfg);
    result.output.warnings.push_back(turn.error + "; fallback decision");
    return result;
  }
  auto& ok = std::get<ParsedResponse>(parsed);
  turn.parsed = true;
  turn.decision = ok.decision;
  turn.prediction = ok.prediction;
  turn.rationale = ok.rationale;
  turn.warnings = ok.warnings;
  result.output = {std::move(ok.decision), std::move(ok.prediction), false, std::move(ok.warnings)};
  return result;
}

class LlmSession final : public PolicySession {
 public:
  LlmSession(const ChatBackend& backend, const LlmSettings& settings, const EpisodeContext& ctx)
      : backend_(backend), settings_(settings), cfg_(*ctx.honeynet), key_(ctx.attacker_label),
        sink_(ctx.turn_sink) {}

  PolicyOutput decide(const EpochObservation& obs, const BeliefState& belief) override {
    auto turn = run_turn(backend_, settings_, obs, belief, cfg_, key_);
    if (sink_) sink_(turn.turn);
    last_turn_ = std::move(turn.turn);
    return std::move(turn.output);
  }

  const AgentTurn& last_turn() const { return last_turn_; }

 private:
  const ChatBackend& backend_;
  const LlmSettings& settings_;
  const HoneynetConfig& cfg_;
  std::string key_;
  TurnSink sink_;
  AgentTurn last_turn_;
};

}  // namespace

LlmDecideResult llm_decide(const ChatBackend& backend, const LlmSettings& settings,
                           const EpochObservation& obs, BeliefState belief,
                           const HoneynetConfig& cfg, const std::string& episode_key) {
  EpisodeContext ctx;
  ctx.honeynet = &cfg;
  ctx.attacker_label = episode_key;
  LlmSession session(backend, settings, ctx);
  auto result = policy_decide(session, obs, std::move(belief), cfg);
  return {std::move(result), session.last_turn()};
}

LlmPolicy::LlmPolicy(std::string name, std::shared_ptr<const ChatBackend> backend,
                     LlmSettings settings)
    : name_(std::move(name)), backend_(std::move(backend)), settings_(std::move(settings)) {
  if (!backend_) throw Error(ErrorCode::InvalidArgument, "LlmPolicy needs a backend");
}

std::unique_ptr<PolicySession> LlmPolicy::start(const EpisodeContext& ctx) const {
  // Worst-case progression is a few hundred chars per service; keep that much headroom
  // beyond the empty-belief prompt so alert digests always get some budget.
  const auto base = build_prompt("", BeliefState::empty(ctx.honeynet->catalog), *ctx.honeynet,
                                 settings_.prompt_template);
  const auto headroom = 256 + 200 * ctx.honeynet->service_count();
  if (settings_.max_prompt_chars < base.size() + headroom)
    throw Error(ErrorCode::InvalidArgument,
                "max_prompt_chars " + std::to_string(settings_.max_prompt_chars) +
                    " too small for template (need at least " +
                    std::to_string(base.size() + headroom) + ")");
  return std::make_unique<LlmSession>(*backend_, settings_, ctx);
}

std::vector<std::string> make_aligned_script(const AttackGraph& catalog,
                                             const AttackerProfile& profile) {
  const auto& target = catalog.at(profile.target_service);
  std::vector<AttackStage> chain;
  for (auto s : target.supported_stages)
    if (ordinal(s) <= ordinal(profile.objective_stage)) chain.push_back(s);

  std::vector<std::string> script;
  for (std::size_t turn = 0; turn <= chain.size(); ++turn) {
    auto stages = nlohmann::json::array();
    for (std::size_t i = 0; i < turn; ++i) stages.push_back(to_string(chain[i]));
    nlohmann::json reply = {{"expose", {target.display_name}},
                            {"stages", stages},
                            {"target", target.display_name},
                            {"done", turn == chain.size()},
                            {"rationale", "tracking the " + target.display_name + " chain"}};
    script.push_back(reply.dump());
  }
  return script;
}

}  // namespace honeynet
