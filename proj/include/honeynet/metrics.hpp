#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "honeynet/simulation.hpp"

namespace honeynet {

enum class ScoringMode {
  Cumulative,    ///< per-epoch sets of completed stages (default)
  CurrentStage,  ///< per-epoch singleton of the highest stage on each side
};

std::string_view to_string(ScoringMode mode);
std::optional<ScoringMode> parse_scoring_mode(std::string_view name);

struct InferenceCounts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  /// tp / (tp + fp + fn); 1 when all counts are zero.
  double score() const;

  InferenceCounts& operator+=(const InferenceCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend bool operator==(const InferenceCounts&, const InferenceCounts&) = default;
};

/// Counts for a single epoch's (prediction, ground truth) pair.
InferenceCounts compare_stage_sets(StageSet predicted, StageSet truth, ScoringMode mode);

/// The attacker's objective stage is in the final ground-truth set.
bool exploitation_achieved(const EpisodeRecord& rec);

InferenceCounts inference_score(const EpisodeRecord& rec, ScoringMode mode = ScoringMode::Cumulative);

/// Per-run outcome over the scored attackers of one cell.
struct RunResult {
  CellKey cell;
  /// Every scored attacker reached its objective.
  bool exploitation = false;
  InferenceCounts counts;
  int scored_episodes = 0;
};

/// Group records by cell (first-appearance order) and score only attackers whose target
/// is in `scored_targets`. Cells without a scored attacker are skipped.
std::vector<RunResult> summarize_runs(const std::vector<EpisodeRecord>& records,
                                      const std::vector<std::string>& scored_targets,
                                      ScoringMode mode = ScoringMode::Cumulative);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Population mean and standard deviation. Throws Error(EmptyGroup) on empty input.
MeanStd mean_std(std::span<const double> values);

/// "7/9 (78%)"
std::string format_success(int successes, int runs);
/// "88.9 ± 0.0" from values already in percent.
std::string format_score(MeanStd score);

struct SuccessRow {
  std::string policy;
  std::string setting;  ///< deployment or persistence, depending on the table
  int successes = 0;
  int runs = 0;
};

struct ScoreRow {
  std::string deployment;
  std::string persistence;
  std::string policy;
  MeanStd score;  ///< percent
  int runs = 0;
};

/// Exploitation per (policy, deployment), pooled over persistence modes and seeds.
std::vector<SuccessRow> success_by_deployment(const std::vector<RunResult>& runs);
/// Exploitation per (policy, persistence), pooled over deployments and seeds.
std::vector<SuccessRow> success_by_persistence(const std::vector<RunResult>& runs);
/// Inference score mean ± std over seeds per (deployment, persistence, policy).
std::vector<ScoreRow> score_table(const std::vector<RunResult>& runs);

std::string success_csv(const std::vector<SuccessRow>& rows, std::string_view setting_header);
std::string score_csv(const std::vector<ScoreRow>& rows);

/// Aligned-text rendering of all three tables.
std::string render_tables(const std::vector<RunResult>& runs);

}  // namespace honeynet
