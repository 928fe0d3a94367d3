#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

#include "honeynet/attacker.hpp"
#include "honeynet/catalog.hpp"
#include "honeynet/rng.hpp"
#include "honeynet/stage.hpp"
#include "honeynet/telemetry.hpp"

namespace honeynet {

struct ExposureDecision {
  /// Services to expose next epoch, highest priority first.
  std::vector<std::string> exposed;
  /// The policy believes the attack chain is exhausted.
  bool declared_done = false;

  std::set<std::string> exposed_set() const { return {exposed.begin(), exposed.end()}; }

  friend bool operator==(const ExposureDecision&, const ExposureDecision&) = default;
};

struct StagePrediction {
  StageSet stages;
  std::optional<std::string> target_service;

  friend bool operator==(const StagePrediction&, const StagePrediction&) = default;
};

/// One LLM exchange, persisted before its decision is enforced.
struct AgentTurn {
  int epoch = 0;
  std::string prompt;
  std::string raw_response;
  bool parsed = false;
  std::optional<ExposureDecision> decision;
  std::optional<StagePrediction> prediction;
  std::string rationale;
  std::vector<std::string> warnings;
  std::string error;
  int attempts = 0;
  double latency_ms = 0.0;
};

using TurnSink = std::function<void(const AgentTurn&)>;

/// Evidence matrix used as the defender's attack-graph belief, rows follow the catalog.
using EvidenceMatrix = Eigen::Matrix<double, Eigen::Dynamic, kStageCount>;

struct BeliefEntry {
  int epoch = 0;
  std::string digest;
  ExposureDecision decision;
  StagePrediction prediction;
  bool decided = false;
  bool fallback = false;
};

struct BeliefState {
  std::vector<std::string> service_ids;
  EvidenceMatrix evidence;
  std::vector<BeliefEntry> history;

  static BeliefState empty(const AttackGraph& catalog);

  double weight(std::string_view service, AttackStage stage) const;
  /// Most recent committed decision/prediction, if any epoch has been decided.
  const BeliefEntry* last_decided() const;
};

/// Severity-scaled evidence per alert: 4 - severity.
double alert_weight(const IdsAlert& alert);

/// Accumulate the observation into the evidence matrix and append a history entry.
BeliefState update_belief(BeliefState belief, const EpochObservation& obs);

/// Read-only ground truth, exposed to calibration baselines only.
struct GroundTruthView {
  const AttackerProfile* profile = nullptr;
  const AttackerState* state = nullptr;
  const ServiceSpec* target = nullptr;
};

struct EpisodeContext {
  const HoneynetConfig* honeynet = nullptr;
  std::string attacker_label;
  std::uint64_t seed = 0;
  /// Null for policies that must not see the attacker.
  const GroundTruthView* ground_truth = nullptr;
  TurnSink turn_sink;
};

struct PolicyOutput {
  ExposureDecision decision;
  StagePrediction prediction;
  bool fallback = false;
  std::vector<std::string> warnings;
};

/// Per-episode policy state. Created by Policy::start, driven once per epoch.
class PolicySession {
 public:
  virtual ~PolicySession() = default;
  /// `belief` already contains this epoch's evidence.
  virtual PolicyOutput decide(const EpochObservation& obs, const BeliefState& belief) = 0;
};

/// Stateless policy factory; safe to share across concurrently running episodes.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual bool needs_ground_truth() const { return false; }
  virtual std::unique_ptr<PolicySession> start(const EpisodeContext& ctx) const = 0;
};

struct DecideResult {
  ExposureDecision decision;
  StagePrediction prediction;
  BeliefState belief;
  bool fallback = false;
  std::vector<std::string> incidents;
};

/// Update the belief, ask the session, then enforce the budget: unknown or duplicate ids
/// are dropped and over-budget lists lose their lowest-priority entries. Each repair is
/// reported as an incident.
DecideResult policy_decide(PolicySession& session, const EpochObservation& obs,
                           BeliefState belief, const HoneynetConfig& cfg);

/// Budget/catalog repair used by policy_decide.
ExposureDecision clamp_decision(ExposureDecision decision, const HoneynetConfig& cfg,
                                std::vector<std::string>* incidents = nullptr);

/// Heuristic prediction shared by the non-oracle baselines: the service with the most
/// post-reconnaissance evidence and every stage with evidence on it (plus Reconnaissance).
StagePrediction belief_prediction(const BeliefState& belief);

std::unique_ptr<Policy> make_oracle_policy();
std::unique_ptr<Policy> make_random_policy();
/// Fixed exposure list; unknown ids are repaired away by policy_decide.
std::unique_ptr<Policy> make_static_policy(std::vector<std::string> services);
/// Static policy exposing the first `budget` non-vulnerable services (possibly none).
std::unique_ptr<Policy> make_decoy_only_policy();
std::unique_ptr<Policy> make_reactive_policy();

void to_json(nlohmann::json& j, const ExposureDecision& d);
void from_json(const nlohmann::json& j, ExposureDecision& d);
void to_json(nlohmann::json& j, const StagePrediction& p);
void from_json(const nlohmann::json& j, StagePrediction& p);
void to_json(nlohmann::json& j, const AgentTurn& t);

nlohmann::json stages_to_json(StageSet set);
StageSet stages_from_json(const nlohmann::json& j);

}  // namespace honeynet
