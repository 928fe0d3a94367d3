#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "honeynet/catalog.hpp"
#include "honeynet/rng.hpp"
#include "honeynet/stage.hpp"

namespace honeynet {

enum class PersistenceMode { Deterministic, Probabilistic, Consecutive };

std::string_view to_string(PersistenceMode mode);
std::optional<PersistenceMode> parse_persistence_mode(std::string_view name);

/// What a failed attempt does to the attacker.
enum class FailureRule {
  Abandon,  ///< the attacker leaves for good
  Skip,     ///< the attempt is lost, the attacker keeps waiting
};

struct PersistenceModel {
  PersistenceMode mode = PersistenceMode::Deterministic;
  double decay = 0.25;
  double floor = 0.1;
  FailureRule on_failure = FailureRule::Abandon;

  static PersistenceModel deterministic() { return {PersistenceMode::Deterministic}; }
  static PersistenceModel probabilistic(double decay = 0.25, double floor = 0.1) {
    return {PersistenceMode::Probabilistic, decay, floor};
  }
  static PersistenceModel consecutive() { return {PersistenceMode::Consecutive}; }

  friend bool operator==(const PersistenceModel&, const PersistenceModel&) = default;
};

/// Empty when 0 < decay <= 1 and 0 <= floor <= 1.
std::vector<std::string> validate_persistence(const PersistenceModel& p);

/// Probability that an attacker attempts (and lands) the next stage after `gap`
/// non-exposure epochs.
///
///   deterministic: 1
///   probabilistic: 1 if gap == 0, else max(floor, 1 - decay * gap)
///   consecutive:   1 if gap == 0, else 0
double attempt_probability(const PersistenceModel& persistence, int gap);

struct AttackerProfile {
  std::string label;
  std::string target_service;
  PersistenceModel persistence;
  AttackStage objective_stage = AttackStage::RootDataExfil;
};

/// Default profile against `svc`: objective = terminal stage.
AttackerProfile make_attacker(const ServiceSpec& svc, PersistenceModel persistence);

std::vector<std::string> validate_attacker(const AttackerProfile& profile,
                                           const AttackGraph& catalog);

enum class AttackerStatus { Active, Abandoned, Completed };

std::string_view to_string(AttackerStatus status);

struct AttackerState {
  /// Highest stage reached; meaningful only once `engaged`.
  AttackStage current_stage = AttackStage::Reconnaissance;
  /// Consecutive epochs without the target exposed, counted after engagement.
  int gap_epochs = 0;
  /// True once Reconnaissance against the target has completed.
  bool engaged = false;
  AttackerStatus status = AttackerStatus::Active;
  Rng rng;

  explicit AttackerState(std::uint64_t seed = 0) : rng(seed) {}
};

/// Ground-truth stages completed so far (empty before engagement).
StageSet completed_stages(const AttackerState& state, const ServiceSpec& target);

enum class ActionKind { Scan, Exploit };

std::string_view to_string(ActionKind kind);

struct AttackerAction {
  ActionKind kind = ActionKind::Scan;
  /// Scan: every exposed service. Exploit: the single service attacked.
  std::vector<std::string> services;
  /// Exploit only: the stage achieved by this action.
  std::optional<AttackStage> stage;

  friend bool operator==(const AttackerAction&, const AttackerAction&) = default;
};

/// Bernoulli draw taken this epoch, if any.
struct AttemptRecord {
  int gap = 0;
  double probability = 1.0;
  bool success = false;

  friend bool operator==(const AttemptRecord&, const AttemptRecord&) = default;
};

struct StepResult {
  std::vector<AttackerAction> actions;
  std::optional<AttemptRecord> attempt;
};

/// Attacker phase of one epoch. Mutates `state` in place.
///
/// The attacker scans everything exposed. With the target hidden, an engaged attacker
/// accumulates gap epochs. With the target exposed it draws against
/// attempt_probability: success advances one stage (the first success completes
/// Reconnaissance) and resets the gap; failure abandons (or skips, per FailureRule).
StepResult attacker_step(AttackerState& state, const AttackerProfile& profile,
                         const AttackGraph& catalog, const std::set<std::string>& exposed);

bool is_terminal(const AttackerState& state);

void to_json(nlohmann::json& j, const PersistenceModel& p);
void from_json(const nlohmann::json& j, PersistenceModel& p);
void to_json(nlohmann::json& j, const AttackerProfile& p);
void from_json(const nlohmann::json& j, AttackerProfile& p);
void to_json(nlohmann::json& j, const AttackerAction& a);
void from_json(const nlohmann::json& j, AttackerAction& a);
void to_json(nlohmann::json& j, const AttemptRecord& a);
void from_json(const nlohmann::json& j, AttemptRecord& a);

}  // namespace honeynet
