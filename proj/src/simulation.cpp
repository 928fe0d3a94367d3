#include "honeynet/simulation.hpp"

#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "honeynet/error.hpp"

namespace honeynet {

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Completed: return "completed";
    case Outcome::Abandoned: return "abandoned";
    case Outcome::HorizonExhausted: return "horizon_exhausted";
    case Outcome::DeclaredDone: return "declared_done";
  }
  return "?";
}

std::optional<Outcome> parse_outcome(std::string_view name) {
  for (auto o : {Outcome::Completed, Outcome::Abandoned, Outcome::HorizonExhausted,
                 Outcome::DeclaredDone})
    if (to_string(o) == name) return o;
  return std::nullopt;
}

StageSet EpisodeRecord::final_ground_truth() const {
  return epochs.empty() ? StageSet{} : epochs.back().ground_truth;
}

std::vector<std::string> validate_run_config(const RunConfig& cfg) {
  auto out = validate_deployment(cfg.honeynet);
  if (cfg.horizon < 1) out.push_back("horizon must be at least 1");
  if (cfg.attackers.empty()) out.push_back("attacker queue is empty");
  std::set<std::string> labels;
  for (const auto& a : cfg.attackers) {
    if (!labels.insert(a.label).second) out.push_back("duplicate attacker label '" + a.label + "'");
    auto v = validate_attacker(a, cfg.honeynet.catalog);
    out.insert(out.end(), v.begin(), v.end());
  }
  auto v = validate_noise(cfg.noise);
  out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::uint64_t episode_seed(const RunConfig& cfg, const AttackerProfile& attacker) {
  return combine_seed(cfg.seed, "episode/" + attacker.label);
}

EpisodeRecord run_episode(const RunConfig& cfg, const AttackerProfile& attacker,
                          const Policy& policy, const TurnSink& turns) {
  auto belief = BeliefState::empty(cfg.honeynet.catalog);
  return run_episode(cfg, attacker, policy, belief, turns);
}

EpisodeRecord run_episode(const RunConfig& cfg, const AttackerProfile& attacker,
                          const Policy& policy, BeliefState& belief, const TurnSink& turns) {
  if (auto v = validate_run_config(cfg); !v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
  const auto& honeynet = cfg.honeynet;
  const auto& target = honeynet.catalog.at(attacker.target_service);
  const auto seed = episode_seed(cfg, attacker);
  const auto signatures = cfg.signatures ? cfg.signatures
                                         : std::make_shared<const SignatureCatalog>(SignatureCatalog::builtin());

  AttackerState state(combine_seed(seed, "attacker"));
  Rng telemetry_rng(combine_seed(seed, "telemetry"));
  const AlertContext alert_ctx{honeynet.catalog, *signatures, "attacker-" + attacker.label};

  GroundTruthView gt{&attacker, &state, &target};
  EpisodeContext ctx;
  ctx.honeynet = &honeynet;
  ctx.attacker_label = attacker.label;
  ctx.seed = combine_seed(seed, "policy");
  ctx.ground_truth = policy.needs_ground_truth() ? &gt : nullptr;
  ctx.turn_sink = turns;
  auto session = policy.start(ctx);

  EpisodeRecord rec;
  rec.cell = cfg.cell;
  rec.attacker_label = attacker.label;
  rec.target_service = attacker.target_service;
  rec.persistence = attacker.persistence;
  rec.objective_stage = attacker.objective_stage;
  rec.seed = seed;

  if (cfg.bootstrap == BootstrapMode::Policy) {
    auto boot = policy_decide(*session, EpochObservation{}, std::move(belief), honeynet);
    belief = std::move(boot.belief);
    rec.bootstrap = std::move(boot.decision);
  } else {
    rec.bootstrap.exposed = {honeynet.catalog.services().front().id};
  }

  ExposureDecision exposure = rec.bootstrap;
  std::optional<Outcome> outcome;
  for (int t = 1; t <= cfg.horizon && !outcome; ++t) {
    EpochRecord epoch;
    epoch.epoch = t;
    epoch.exposed = exposure.exposed;
    const auto exposed = exposure.exposed_set();

    auto step = attacker_step(state, attacker, honeynet.catalog, exposed);
    auto alerts = synthesize_alerts(step.actions, t, cfg.noise, alert_ctx, telemetry_rng);
    auto obs = aggregate_epoch(std::move(alerts), exposed, t);
    epoch.ground_truth = completed_stages(state, target);

    auto decided = policy_decide(*session, obs, std::move(belief), honeynet);
    belief = std::move(decided.belief);

    epoch.actions = std::move(step.actions);
    epoch.attempt = step.attempt;
    epoch.alerts = std::move(obs.alerts);
    epoch.decision = decided.decision;
    epoch.prediction = std::move(decided.prediction);
    epoch.fallback = decided.fallback;
    epoch.incidents = std::move(decided.incidents);
    rec.epochs.push_back(std::move(epoch));

    if (state.status == AttackerStatus::Completed) outcome = Outcome::Completed;
    else if (state.status == AttackerStatus::Abandoned) outcome = Outcome::Abandoned;
    else if (decided.decision.declared_done) outcome = Outcome::DeclaredDone;
    exposure = std::move(decided.decision);
  }
  rec.outcome = outcome.value_or(Outcome::HorizonExhausted);
  rec.epochs_used = static_cast<int>(rec.epochs.size());
  return rec;
}

std::vector<EpisodeRecord> run_simulation(const RunConfig& cfg, const Policy& policy,
                                          const TurnSink& turns) {
  std::vector<EpisodeRecord> out;
  out.reserve(cfg.attackers.size());
  auto belief = BeliefState::empty(cfg.honeynet.catalog);
  for (const auto& attacker : cfg.attackers) {
    if (!cfg.belief_carryover) belief = BeliefState::empty(cfg.honeynet.catalog);
    out.push_back(run_episode(cfg, attacker, policy, belief, turns));
  }
  return out;
}

void to_json(nlohmann::json& j, const CellKey& c) {
  j = {{"policy", c.policy}, {"deployment", c.deployment}, {"persistence", c.persistence}, {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, CellKey& c) {
  c.policy = j.at("policy").get<std::string>();
  c.deployment = j.at("deployment").get<std::string>();
  c.persistence = j.at("persistence").get<std::string>();
  c.seed = j.at("seed").get<std::uint64_t>();
}

void to_json(nlohmann::json& j, const EpisodeRecord& r) {
  auto epochs = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    auto alerts = nlohmann::json::array();
    for (const auto& a : e.alerts) alerts.push_back(to_eve_json(a));
    epochs.push_back({
        {"epoch", e.epoch},
        {"exposed", e.exposed},
        {"actions", e.actions},
        {"attempt", e.attempt ? nlohmann::json(*e.attempt) : nlohmann::json(nullptr)},
        {"alerts", alerts},
        {"decision", e.decision},
        {"prediction", e.prediction},
        {"ground_truth", stages_to_json(e.ground_truth)},
        {"fallback", e.fallback},
        {"incidents", e.incidents},
    });
  }
  j = {{"schema_version", kEpisodeSchemaVersion},
       {"cell", r.cell},
       {"attacker_label", r.attacker_label},
       {"target_service", r.target_service},
       {"persistence", r.persistence},
       {"objective_stage", to_string(r.objective_stage)},
       {"seed", r.seed},
       {"bootstrap", r.bootstrap},
       {"epochs", epochs},
       {"outcome", to_string(r.outcome)},
       {"epochs_used", r.epochs_used}};
}

void from_json(const nlohmann::json& j, EpisodeRecord& r) {
  try {
    if (j.at("schema_version").get<int>() != kEpisodeSchemaVersion)
      throw Error(ErrorCode::ConfigParse, "unsupported episode schema version");
    r.cell = j.at("cell").get<CellKey>();
    r.attacker_label = j.at("attacker_label").get<std::string>();
    r.target_service = j.at("target_service").get<std::string>();
    r.persistence = j.at("persistence").get<PersistenceModel>();
    auto objective = parse_stage(j.at("objective_stage").get<std::string>());
    if (!objective) throw Error(ErrorCode::ConfigParse, "bad objective_stage");
    r.objective_stage = *objective;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.bootstrap = j.at("bootstrap").get<ExposureDecision>();
    r.epochs.clear();
    for (const auto& e : j.at("epochs")) {
      EpochRecord ep;
      ep.epoch = e.at("epoch").get<int>();
      ep.exposed = e.at("exposed").get<std::vector<std::string>>();
      ep.actions = e.at("actions").get<std::vector<AttackerAction>>();
      if (!e.at("attempt").is_null()) ep.attempt = e["attempt"].get<AttemptRecord>();
      for (const auto& a : e.at("alerts")) ep.alerts.push_back(from_eve_json(a));
      ep.decision = e.at("decision").get<ExposureDecision>();
      ep.prediction = e.at("prediction").get<StagePrediction>();
      ep.ground_truth = stages_from_json(e.at("ground_truth"));
      ep.fallback = e.at("fallback").get<bool>();
      ep.incidents = e.at("incidents").get<std::vector<std::string>>();
      r.epochs.push_back(std::move(ep));
    }
    auto outcome = parse_outcome(j.at("outcome").get<std::string>());
    if (!outcome) throw Error(ErrorCode::ConfigParse, "bad outcome");
    r.outcome = *outcome;
    r.epochs_used = j.at("epochs_used").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("episode record: ") + e.what());
  }
}

std::string episodes_to_jsonl(const std::vector<EpisodeRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += nlohmann::json(r).dump();
    out += '\n';
  }
  return out;
}

std::vector<EpisodeRecord> episodes_from_jsonl(std::string_view text) {
  std::vector<EpisodeRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<EpisodeRecord>());
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::ConfigParse, std::string("episode log: ") + e.what());
    }
  }
  return out;
}

}  // namespace honeynet
