#include "honeynet/attacker.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "honeynet/error.hpp"

namespace honeynet {

std::string_view to_string(PersistenceMode mode) {
  switch (mode) {
    case PersistenceMode::Deterministic: return "deterministic";
    case PersistenceMode::Probabilistic: return "probabilistic";
    case PersistenceMode::Consecutive: return "consecutive";
  }
  return "?";
}

std::optional<PersistenceMode> parse_persistence_mode(std::string_view name) {
  for (auto m : {PersistenceMode::Deterministic, PersistenceMode::Probabilistic,
                 PersistenceMode::Consecutive})
    if (to_string(m) == name) return m;
  return std::nullopt;
}

std::string_view to_string(AttackerStatus status) {
  switch (status) {
    case AttackerStatus::Active: return "active";
    case AttackerStatus::Abandoned: return "abandoned";
    case AttackerStatus::Completed: return "completed";
  }
  return "?";
}

std::string_view to_string(ActionKind kind) {
  return kind == ActionKind::Scan ? "scan" : "exploit";
}

std::vector<std::string> validate_persistence(const PersistenceModel& p) {
  std::vector<std::string> out;
  if (!(p.decay > 0.0 && p.decay <= 1.0)) out.push_back("decay must be in (0, 1]");
  if (!(p.floor >= 0.0 && p.floor <= 1.0)) out.push_back("floor must be in [0, 1]");
  return out;
}

double attempt_probability(const PersistenceModel& persistence, int gap) {
  if (gap < 0) throw Error(ErrorCode::InvalidArgument, "gap must be non-negative");
  switch (persistence.mode) {
    case PersistenceMode::Deterministic:
      return 1.0;
    case PersistenceMode::Probabilistic:
      if (gap == 0) return 1.0;
      return std::clamp(std::max(persistence.floor, 1.0 - persistence.decay * gap), 0.0, 1.0);
    case PersistenceMode::Consecutive:
      return gap == 0 ? 1.0 : 0.0;
  }
  return 0.0;
}

AttackerProfile make_attacker(const ServiceSpec& svc, PersistenceModel persistence) {
  return {svc.id, svc.id, persistence, svc.terminal_stage.value_or(AttackStage::Reconnaissance)};
}

std::vector<std::string> validate_attacker(const AttackerProfile& profile,
                                           const AttackGraph& catalog) {
  std::vector<std::string> out = validate_persistence(profile.persistence);
  const auto* svc = catalog.find(profile.target_service);
  if (!svc) {
    out.push_back("attacker '" + profile.label + "' targets unknown service '" +
                  profile.target_service + "'");
    return out;
  }
  if (!svc->vulnerable)
    out.push_back("attacker '" + profile.label + "' targets non-vulnerable service " + svc->id);
  if (!svc->supports(profile.objective_stage))
    out.push_back("attacker '" + profile.label + "' objective " +
                  std::string(to_string(profile.objective_stage)) + " not supported by " + svc->id);
  return out;
}

StageSet completed_stages(const AttackerState& state, const ServiceSpec& target) {
  if (!state.engaged) return {};
  return chain_prefix(target, state.current_stage);
}

StepResult attacker_step(AttackerState& state, const AttackerProfile& profile,
                         const AttackGraph& catalog, const std::set<std::string>& exposed) {
  if (state.status != AttackerStatus::Active)
    throw Error(ErrorCode::InvalidArgument, "attacker_step on a terminated attacker");

  StepResult result;
  result.actions.push_back({ActionKind::Scan, {exposed.begin(), exposed.end()}, std::nullopt});

  const auto& target = catalog.at(profile.target_service);
  if (!exposed.contains(target.id)) {
    if (state.engaged) ++state.gap_epochs;
    return result;
  }

  const double p = attempt_probability(profile.persistence, state.gap_epochs);
  const bool success = state.rng.bernoulli(p);
  result.attempt = AttemptRecord{state.gap_epochs, p, success};

  if (!success) {
    if (profile.persistence.on_failure == FailureRule::Abandon)
      state.status = AttackerStatus::Abandoned;
    return result;
  }

  if (!state.engaged) {
    state.engaged = true;
    state.current_stage = AttackStage::Reconnaissance;
  } else if (auto next = next_stage(target, state.current_stage)) {
    state.current_stage = *next;
  }
  state.gap_epochs = 0;
  result.actions.push_back({ActionKind::Exploit, {target.id}, state.current_stage});

  if (ordinal(state.current_stage) >= ordinal(profile.objective_stage))
    state.status = AttackerStatus::Completed;
  return result;
}

bool is_terminal(const AttackerState& state) { return state.status != AttackerStatus::Active; }

void to_json(nlohmann::json& j, const PersistenceModel& p) {
  j = {{"mode", to_string(p.mode)},
       {"decay", p.decay},
       {"floor", p.floor},
       {"on_failure", p.on_failure == FailureRule::Abandon ? "abandon" : "skip"}};
}

void from_json(const nlohmann::json& j, PersistenceModel& p) {
  auto mode = parse_persistence_mode(j.at("mode").get<std::string>());
  if (!mode) throw Error(ErrorCode::ConfigParse, "unknown persistence mode");
  p.mode = *mode;
  p.decay = j.value("decay", 0.25);
  p.floor = j.value("floor", 0.1);
  const auto rule = j.value("on_failure", std::string("abandon"));
  if (rule != "abandon" && rule != "skip")
    throw Error(ErrorCode::ConfigParse, "on_failure must be 'abandon' or 'skip'");
  p.on_failure = rule == "abandon" ? FailureRule::Abandon : FailureRule::Skip;
}

void to_json(nlohmann::json& j, const AttackerProfile& p) {
  j = {{"label", p.label},
       {"target_service", p.target_service},
       {"persistence", p.persistence},
       {"objective_stage", to_string(p.objective_stage)}};
}

void from_json(const nlohmann::json& j, AttackerProfile& p) {
  p.target_service = j.at("target_service").get<std::string>();
  p.label = j.value("label", p.target_service);
  if (j.contains("persistence")) p.persistence = j["persistence"].get<PersistenceModel>();
  auto objective = parse_stage(j.value("objective_stage", std::string("RootDataExfil")));
  if (!objective) throw Error(ErrorCode::ConfigParse, "unknown objective stage");
  p.objective_stage = *objective;
}

void to_json(nlohmann::json& j, const AttackerAction& a) {
  j = {{"kind", to_string(a.kind)}, {"services", a.services}};
  if (a.stage) j["stage"] = to_string(*a.stage);
}

void from_json(const nlohmann::json& j, AttackerAction& a) {
  a.kind = j.at("kind").get<std::string>() == "scan" ? ActionKind::Scan : ActionKind::Exploit;
  a.services = j.at("services").get<std::vector<std::string>>();
  a.stage.reset();
  if (j.contains("stage")) a.stage = parse_stage(j["stage"].get<std::string>());
}

void to_json(nlohmann::json& j, const AttemptRecord& a) {
  j = {{"gap", a.gap}, {"probability", a.probability}, {"success", a.success}};
}

void from_json(const nlohmann::json& j, AttemptRecord& a) {
  a.gap = j.at("gap").get<int>();
  a.probability = j.at("probability").get<double>();
  a.success = j.at("success").get<bool>();
}

}  // namespace honeynet
