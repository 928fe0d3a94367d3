#include "honeynet/defender.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "honeynet/error.hpp"

namespace honeynet {

namespace {

constexpr std::size_t kHistoryDigestChars = 2000;

}  // namespace

BeliefState BeliefState::empty(const AttackGraph& catalog) {
  BeliefState b;
  b.service_ids = catalog.ids();
  b.evidence = EvidenceMatrix::Zero(static_cast<Eigen::Index>(b.service_ids.size()), kStageCount);
  return b;
}

double BeliefState::weight(std::string_view service, AttackStage stage) const {
  for (std::size_t i = 0; i < service_ids.size(); ++i)
    if (service_ids[i] == service) return evidence(static_cast<Eigen::Index>(i), ordinal(stage));
  return 0.0;
}

const BeliefEntry* BeliefState::last_decided() const {
  for (auto it = history.rbegin(); it != history.rend(); ++it)
    if (it->decided) return &*it;
  return nullptr;
}

double alert_weight(const IdsAlert& alert) { return 4.0 - std::clamp(alert.severity, 1, 3); }

BeliefState update_belief(BeliefState belief, const EpochObservation& obs) {
  for (const auto& alert : obs.alerts) {
    if (!alert.stage_hint) continue;
    auto row = std::find(belief.service_ids.begin(), belief.service_ids.end(), alert.dest_service);
    if (row == belief.service_ids.end()) continue;
    belief.evidence(row - belief.service_ids.begin(), ordinal(*alert.stage_hint)) +=
        alert_weight(alert);
  }
  BeliefEntry entry;
  entry.epoch = obs.epoch;
  entry.digest = summarize_for_prompt(obs, kHistoryDigestChars);
  belief.history.push_back(std::move(entry));
  return belief;
}

ExposureDecision clamp_decision(ExposureDecision decision, const HoneynetConfig& cfg,
                                std::vector<std::string>* incidents) {
  auto note = [&](std::string msg) {
    if (incidents) incidents->push_back(std::move(msg));
  };
  std::vector<std::string> kept;
  std::set<std::string> seen;
  for (auto& id : decision.exposed) {
    if (!cfg.catalog.find(id)) {
      note("dropped unknown service '" + id + "'");
      continue;
    }
    if (!seen.insert(id).second) {
      note("dropped duplicate service '" + id + "'");
      continue;
    }
    kept.push_back(std::move(id));
  }
  const auto budget = static_cast<std::size_t>(std::max(cfg.budget, 0));
  if (kept.size() > budget) {
    note("budget-violation: " + std::to_string(kept.size()) + " services requested, budget " +
         std::to_string(budget));
    kept.resize(budget);
  }
  decision.exposed = std::move(kept);
  return decision;
}

DecideResult policy_decide(PolicySession& session, const EpochObservation& obs,
                           BeliefState belief, const HoneynetConfig& cfg) {
  DecideResult result;
  result.belief = update_belief(std::move(belief), obs);
  auto out = session.decide(obs, result.belief);
  for (auto& w : out.warnings) result.incidents.push_back(std::move(w));
  result.decision = clamp_decision(std::move(out.decision), cfg, &result.incidents);
  result.prediction = std::move(out.prediction);
  result.fallback = out.fallback;

  auto& entry = result.belief.history.back();
  entry.decision = result.decision;
  entry.prediction = result.prediction;
  entry.decided = true;
  entry.fallback = result.fallback;
  return result;
}

StagePrediction belief_prediction(const BeliefState& belief) {
  StagePrediction p;
  const auto& ev = belief.evidence;
  Eigen::Index best = -1;
  double best_score = 0.0;
  for (Eigen::Index i = 0; i < ev.rows(); ++i) {
    const double score = ev.row(i).tail(kStageCount - 1).sum();
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  if (best < 0) return p;
  p.target_service = belief.service_ids[static_cast<std::size_t>(best)];
  p.stages.insert(AttackStage::Reconnaissance);
  for (int s = 1; s < kStageCount; ++s)
    if (ev(best, s) > 0.0) p.stages.insert(stage_from_ordinal(s));
  return p;
}

namespace {

class OracleSession final : public PolicySession {
 public:
  explicit OracleSession(const GroundTruthView& gt) : gt_(gt) {}

  PolicyOutput decide(const EpochObservation&, const BeliefState&) override {
    PolicyOutput out;
    out.decision.exposed = {gt_.target->id};
    out.decision.declared_done = gt_.state->status == AttackerStatus::Completed;
    out.prediction.stages = completed_stages(*gt_.state, *gt_.target);
    out.prediction.target_service = gt_.target->id;
    return out;
  }

 private:
  GroundTruthView gt_;
};

class OraclePolicy final : public Policy {
 public:
  std::string name() const override { return "oracle"; }
  bool needs_ground_truth() const override { return true; }
  std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const override {
    if (!ctx.ground_truth || !ctx.ground_truth->state || !ctx.ground_truth->target)
      throw Error(ErrorCode::InvalidArgument, "oracle policy requires ground truth");
    return std::make_unique<OracleSession>(*ctx.ground_truth);
  }
};

class RandomSession final : public PolicySession {
 public:
  RandomSession(const HoneynetConfig& cfg, std::uint64_t seed)
      : ids_(cfg.catalog.ids()), budget_(static_cast<std::size_t>(cfg.budget)), rng_(seed) {}

  PolicyOutput decide(const EpochObservation&, const BeliefState& belief) override {
    // Partial Fisher-Yates: the first `k` slots become a uniform k-subset.
    auto pool = ids_;
    const auto k = std::min(budget_, pool.size());
    for (std::size_t i = 0; i < k; ++i) {
      const auto j = i + rng_.below(pool.size() - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return {{std::move(pool), false}, belief_prediction(belief), false, {}};
  }

 private:
  std::vector<std::string> ids_;
  std::size_t budget_;
  Rng rng_;
};

class RandomPolicy final : public Policy {
 public:
  std::string name() const override { return "random"; }
  std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const override {
    return std::make_unique<RandomSession>(*ctx.honeynet, combine_seed(ctx.seed, "policy/random"));
  }
};

class StaticSession final : public PolicySession {
 public:
  explicit StaticSession(std::vector<std::string> services) : services_(std::move(services)) {}

  PolicyOutput decide(const EpochObservation&, const BeliefState& belief) override {
    return {{services_, false}, belief_prediction(belief), false, {}};
  }

 private:
  std::vector<std::string> services_;
};

class StaticPolicy final : public Policy {
 public:
  explicit StaticPolicy(std::optional<std::vector<std::string>> services)
      : services_(std::move(services)) {}

  std::string name() const override { return services_ ? "static" : "static-decoys"; }

  std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const override {
    if (services_) return std::make_unique<StaticSession>(*services_);
    std::vector<std::string> decoys;
    for (const auto& svc : ctx.honeynet->catalog.services())
      if (!svc.vulnerable && static_cast<int>(decoys.size()) < ctx.honeynet->budget)
        decoys.push_back(svc.id);
    return std::make_unique<StaticSession>(std::move(decoys));
  }

 private:
  std::optional<std::vector<std::string>> services_;
};

class ReactiveSession final : public PolicySession {
 public:
  explicit ReactiveSession(const HoneynetConfig& cfg) : cfg_(cfg) {
    for (const auto& svc : cfg.catalog.services())
      if (svc.vulnerable) rotation_.push_back(svc.id);
    if (rotation_.empty()) rotation_ = cfg.catalog.ids();
  }

  PolicyOutput decide(const EpochObservation& obs, const BeliefState& belief) override {
    // Highest severity wins, ties go to the latest alert. Scan-level (severity 3) alerts
    // carry no targeting signal and are ignored.
    const IdsAlert* pick = nullptr;
    for (const auto& a : obs.alerts) {
      const auto* svc = cfg_.catalog.find(a.dest_service);
      if (!svc || !svc->vulnerable || a.severity > 2) continue;
      if (!pick || a.severity < pick->severity ||
          (a.severity == pick->severity && a.timestamp_us >= pick->timestamp_us))
        pick = &a;
    }
    std::vector<std::string> exposed;
    if (pick) {
      exposed.push_back(pick->dest_service);
    } else if (!rotation_.empty()) {
      exposed.push_back(rotation_[cursor_++ % rotation_.size()]);
    }
    return {{std::move(exposed), false}, belief_prediction(belief), false, {}};
  }

 private:
  const HoneynetConfig& cfg_;
  std::vector<std::string> rotation_;
  std::size_t cursor_ = 0;
};

class ReactivePolicy final : public Policy {
 public:
  std::string name() const override { return "reactive"; }
  std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const override {
    return std::make_unique<ReactiveSession>(*ctx.honeynet);
  }
};

}  // namespace

std::unique_ptr<Policy> make_oracle_policy() { return std::make_unique<OraclePolicy>(); }
std::unique_ptr<Policy> make_random_policy() { return std::make_unique<RandomPolicy>(); }
std::unique_ptr<Policy> make_static_policy(std::vector<std::string> services) {
  return std::make_unique<StaticPolicy>(std::move(services));
}
std::unique_ptr<Policy> make_decoy_only_policy() {
  return std::make_unique<StaticPolicy>(std::nullopt);
}
std::unique_ptr<Policy> make_reactive_policy() { return std::make_unique<ReactivePolicy>(); }

nlohmann::json stages_to_json(StageSet set) {
  auto out = nlohmann::json::array();
  set.for_each([&](AttackStage s) { out.push_back(to_string(s)); });
  return out;
}

StageSet stages_from_json(const nlohmann::json& j) {
  StageSet out;
  for (const auto& v : j) {
    auto s = parse_stage(v.get<std::string>());
    if (!s) throw Error(ErrorCode::ConfigParse, "unknown stage '" + v.get<std::string>() + "'");
    out.insert(*s);
  }
  return out;
}

void to_json(nlohmann::json& j, const ExposureDecision& d) {
  j = {{"exposed", d.exposed}, {"declared_done", d.declared_done}};
}

void from_json(const nlohmann::json& j, ExposureDecision& d) {
  d.exposed = j.at("exposed").get<std::vector<std::string>>();
  d.declared_done = j.at("declared_done").get<bool>();
}

void to_json(nlohmann::json& j, const StagePrediction& p) {
  j = {{"stages", stages_to_json(p.stages)},
       {"target_service", p.target_service ? nlohmann::json(*p.target_service) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, StagePrediction& p) {
  p.stages = stages_from_json(j.at("stages"));
  p.target_service.reset();
  if (!j.at("target_service").is_null()) p.target_service = j["target_service"].get<std::string>();
}

void to_json(nlohmann::json& j, const AgentTurn& t) {
  j = {{"epoch", t.epoch},
       {"prompt", t.prompt},
       {"raw_response", t.raw_response},
       {"parsed", t.parsed},
       {"decision", t.decision ? nlohmann::json(*t.decision) : nlohmann::json(nullptr)},
       {"prediction", t.prediction ? nlohmann::json(*t.prediction) : nlohmann::json(nullptr)},
       {"rationale", t.rationale},
       {"warnings", t.warnings},
       {"error", t.error},
       {"attempts", t.attempts},
       {"latency_ms", t.latency_ms}};
}

}  // namespace honeynet
