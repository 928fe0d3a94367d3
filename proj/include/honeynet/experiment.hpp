#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "honeynet/backend.hpp"
#include "honeynet/llm_policy.hpp"
#include "honeynet/metrics.hpp"
#include "honeynet/simulation.hpp"

namespace honeynet {

inline constexpr int kExperimentSchemaVersion = 1;

struct BackendSpec {
  std::string kind;  ///< "http_chat_completion" or "scripted_mock"
  HttpBackendConfig http;
  /// scripted_mock: file with {"scripts": {...}, "default": [...]}.
  std::string replay_file;
  /// scripted_mock: generate replies that track every attacker perfectly.
  bool aligned = false;
};

struct PolicySpec {
  std::string name;
  /// oracle | random | static | static-decoys | reactive | llm
  std::string kind;
  std::vector<std::string> services;  ///< static only
  std::optional<BackendSpec> backend; ///< llm only
};

struct DeploymentSpec {
  std::string name;
  HoneynetConfig honeynet;
  /// Persistence is filled in per matrix cell.
  std::vector<AttackerProfile> attackers;
};

struct ExperimentConfig {
  int horizon = 20;
  std::uint64_t seed_base = 0;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  int budget = 1;
  std::vector<DeploymentSpec> deployments;
  std::vector<PersistenceMode> modes{PersistenceMode::Deterministic, PersistenceMode::Probabilistic,
                                     PersistenceMode::Consecutive};
  double decay = 0.25;
  double floor = 0.1;
  FailureRule on_failure = FailureRule::Abandon;
  NoiseConfig noise;
  std::shared_ptr<const SignatureCatalog> signatures;
  std::vector<PolicySpec> policies;
  LlmSettings llm;
  std::vector<std::string> scored_targets{"GitLab", "ApacheStruts"};
  ScoringMode scoring = ScoringMode::Cumulative;
  BootstrapMode bootstrap = BootstrapMode::Policy;
  bool belief_carryover = false;
  /// Document the config was parsed from; stored verbatim in the run manifest.
  nlohmann::json source;
};

/// Parse a config document. Relative paths (prompt template, signatures, mock replay
/// files) resolve against `base_dir`. Throws Error(ConfigParse).
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Structural problems that would make the matrix unrunnable; empty means ok.
std::vector<std::string> validate_experiment(const ExperimentConfig& cfg);

struct MatrixCell {
  std::size_t index = 0;
  std::size_t policy_index = 0;
  RunConfig run;
};

/// Cartesian product policy x deployment x persistence x seed, in that nesting order.
/// Throws Error(EmptyAxis) when any axis is empty.
std::vector<MatrixCell> expand_matrix(const ExperimentConfig& cfg);

/// Seed of one run, derived from the seed base and the cell coordinates.
std::uint64_t run_seed(std::uint64_t seed_base, const CellKey& cell);

/// Instantiate a policy. `offline` rejects network backends with Error(BackendUnreachable).
std::shared_ptr<const Policy> build_policy(const PolicySpec& spec, const ExperimentConfig& cfg,
                                           bool offline);

struct RunOptions {
  std::filesystem::path out_dir;  ///< empty: keep everything in memory
  int workers = 1;
  bool offline = false;
};

struct ExperimentResult {
  std::vector<EpisodeRecord> records;  ///< cell order, then attacker queue order
  std::vector<RunResult> runs;
};

/// Run the whole matrix. With an output directory, writes manifest.json, one directory per
/// cell (episodes.jsonl, turns.jsonl, alerts.eve.jsonl) and the summary files.
ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

/// Summary files derived only from the episode records.
void write_summaries(const std::filesystem::path& out_dir, const std::vector<RunResult>& runs);

/// Recompute summaries from a finished run directory and write them to `out_dir`
/// (defaults to the run directory itself).
ExperimentResult replay_experiment(const std::filesystem::path& run_dir,
                                   const std::filesystem::path& out_dir = {});

/// Names of the summary files written by write_summaries.
const std::vector<std::string>& summary_file_names();

}  // namespace honeynet
