#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "honeynet/attacker.hpp"
#include "honeynet/catalog.hpp"
#include "honeynet/defender.hpp"
#include "honeynet/telemetry.hpp"

namespace honeynet {

inline constexpr int kEpisodeSchemaVersion = 1;

enum class Outcome { Completed, Abandoned, HorizonExhausted, DeclaredDone };

std::string_view to_string(Outcome outcome);
std::optional<Outcome> parse_outcome(std::string_view name);

/// How epoch 1's exposure is chosen.
enum class BootstrapMode {
  Policy,        ///< the policy decides on an empty epoch-0 observation
  FirstService,  ///< expose the first catalog service
};

/// Identifies the experiment cell a record belongs to.
struct CellKey {
  std::string policy;
  std::string deployment;
  std::string persistence;
  std::uint64_t seed = 0;

  friend bool operator==(const CellKey&, const CellKey&) = default;
  friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

struct EpochRecord {
  int epoch = 0;
  /// Exposure in force during this epoch's attacker phase.
  std::vector<std::string> exposed;
  std::vector<AttackerAction> actions;
  std::optional<AttemptRecord> attempt;
  std::vector<IdsAlert> alerts;
  /// Defender output after observing this epoch (governs epoch + 1).
  ExposureDecision decision;
  StagePrediction prediction;
  /// Stages the attacker has completed by the end of this epoch.
  StageSet ground_truth;
  bool fallback = false;
  std::vector<std::string> incidents;
};

struct EpisodeRecord {
  CellKey cell;
  std::string attacker_label;
  std::string target_service;
  PersistenceModel persistence;
  AttackStage objective_stage = AttackStage::RootDataExfil;
  std::uint64_t seed = 0;
  ExposureDecision bootstrap;
  std::vector<EpochRecord> epochs;
  Outcome outcome = Outcome::HorizonExhausted;
  int epochs_used = 0;

  /// Ground truth at the end of the episode (empty if no epoch ran).
  StageSet final_ground_truth() const;
};

struct RunConfig {
  HoneynetConfig honeynet;
  std::vector<AttackerProfile> attackers;
  int horizon = 20;
  std::uint64_t seed = 0;
  NoiseConfig noise;
  std::shared_ptr<const SignatureCatalog> signatures;
  BootstrapMode bootstrap = BootstrapMode::Policy;
  /// Keep belief across the attacker queue (aggregated-stream reading).
  bool belief_carryover = false;
  CellKey cell;
};

/// All invariant violations of `cfg`; empty means ok.
std::vector<std::string> validate_run_config(const RunConfig& cfg);

/// Seed of the episode for `attacker` within run `cfg`.
std::uint64_t episode_seed(const RunConfig& cfg, const AttackerProfile& attacker);

/// One attacker against one policy. Each epoch: attacker phase against the exposure
/// decided in the previous epoch, alert synthesis, then the defender phase. Ends on
/// attacker completion/abandonment, a declared_done decision, or the horizon.
EpisodeRecord run_episode(const RunConfig& cfg, const AttackerProfile& attacker,
                          const Policy& policy, const TurnSink& turns = {});

/// As above, starting from (and leaving behind) `belief`.
EpisodeRecord run_episode(const RunConfig& cfg, const AttackerProfile& attacker,
                          const Policy& policy, BeliefState& belief, const TurnSink& turns = {});

/// Every attacker in queue order; belief resets between attackers unless carryover is set.
std::vector<EpisodeRecord> run_simulation(const RunConfig& cfg, const Policy& policy,
                                          const TurnSink& turns = {});

void to_json(nlohmann::json& j, const CellKey& c);
void from_json(const nlohmann::json& j, CellKey& c);
void to_json(nlohmann::json& j, const EpisodeRecord& r);
void from_json(const nlohmann::json& j, EpisodeRecord& r);

/// One JSON object per line.
std::string episodes_to_jsonl(const std::vector<EpisodeRecord>& records);
std::vector<EpisodeRecord> episodes_from_jsonl(std::string_view text);

}  // namespace honeynet
