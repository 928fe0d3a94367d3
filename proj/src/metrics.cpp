#include "honeynet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

#include "honeynet/error.hpp"

namespace honeynet {

std::string_view to_string(ScoringMode mode) {
  return mode == ScoringMode::Cumulative ? "cumulative" : "current_stage";
}

std::optional<ScoringMode> parse_scoring_mode(std::string_view name) {
  if (name == "cumulative") return ScoringMode::Cumulative;
  if (name == "current_stage") return ScoringMode::CurrentStage;
  return std::nullopt;
}

double InferenceCounts::score() const {
  const long denom = tp + fp + fn;
  return denom == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(denom);
}

namespace {

StageSet top_only(StageSet s) {
  auto top = s.max();
  return top ? StageSet{*top} : StageSet{};
}

}  // namespace

InferenceCounts compare_stage_sets(StageSet predicted, StageSet truth, ScoringMode mode) {
  if (mode == ScoringMode::CurrentStage) {
    predicted = top_only(predicted);
    truth = top_only(truth);
  }
  return {(predicted & truth).size(), (predicted - truth).size(), (truth - predicted).size()};
}

bool exploitation_achieved(const EpisodeRecord& rec) {
  return rec.final_ground_truth().contains(rec.objective_stage);
}

InferenceCounts inference_score(const EpisodeRecord& rec, ScoringMode mode) {
  InferenceCounts total;
  for (const auto& e : rec.epochs) total += compare_stage_sets(e.prediction.stages, e.ground_truth, mode);
  return total;
}

std::vector<RunResult> summarize_runs(const std::vector<EpisodeRecord>& records,
                                      const std::vector<std::string>& scored_targets,
                                      ScoringMode mode) {
  std::vector<RunResult> out;
  std::map<CellKey, std::size_t> index;
  for (const auto& rec : records) {
    if (std::find(scored_targets.begin(), scored_targets.end(), rec.target_service) ==
        scored_targets.end())
      continue;
    auto [it, inserted] = index.try_emplace(rec.cell, out.size());
    if (inserted) out.push_back({rec.cell, true, {}, 0});
    auto& run = out[it->second];
    run.exploitation = run.exploitation && exploitation_achieved(rec);
    run.counts += inference_score(rec, mode);
    ++run.scored_episodes;
  }
  return out;
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyGroup, "mean_std of an empty group");
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - mean) * (v - mean);
  return {mean, std::sqrt(sq / static_cast<double>(values.size()))};
}

std::string format_success(int successes, int runs) {
  if (runs <= 0) throw Error(ErrorCode::EmptyGroup, "success rate over zero runs");
  const auto pct = std::lround(100.0 * successes / runs);
  return std::to_string(successes) + "/" + std::to_string(runs) + " (" + std::to_string(pct) + "%)";
}

std::string format_score(MeanStd score) {
  char buf[64];
  // Clamp -0.0 so "-0.0" never appears.
  std::snprintf(buf, sizeof buf, "%.1f ± %.1f", score.mean + 0.0, score.std + 0.0);
  return buf;
}

namespace {

template <typename KeyFn>
std::vector<SuccessRow> success_rows(const std::vector<RunResult>& runs, KeyFn setting_of) {
  if (runs.empty()) throw Error(ErrorCode::EmptyGroup, "no runs to aggregate");
  std::vector<SuccessRow> rows;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  for (const auto& r : runs) {
    auto key = std::make_pair(r.cell.policy, setting_of(r.cell));
    auto [it, inserted] = index.try_emplace(key, rows.size());
    if (inserted) rows.push_back({key.first, key.second, 0, 0});
    auto& row = rows[it->second];
    ++row.runs;
    if (r.exploitation) ++row.successes;
  }
  return rows;
}

}  // namespace

std::vector<SuccessRow> success_by_deployment(const std::vector<RunResult>& runs) {
  return success_rows(runs, [](const CellKey& c) { return c.deployment; });
}

std::vector<SuccessRow> success_by_persistence(const std::vector<RunResult>& runs) {
  return success_rows(runs, [](const CellKey& c) { return c.persistence; });
}

std::vector<ScoreRow> score_table(const std::vector<RunResult>& runs) {
  if (runs.empty()) throw Error(ErrorCode::EmptyGroup, "no runs to aggregate");
  struct Acc {
    ScoreRow row;
    std::vector<double> scores;
  };
  std::vector<Acc> acc;
  std::map<std::tuple<std::string, std::string, std::string>, std::size_t> index;
  for (const auto& r : runs) {
    auto key = std::make_tuple(r.cell.deployment, r.cell.persistence, r.cell.policy);
    auto [it, inserted] = index.try_emplace(key, acc.size());
    if (inserted) acc.push_back({{r.cell.deployment, r.cell.persistence, r.cell.policy, {}, 0}, {}});
    acc[it->second].scores.push_back(100.0 * r.counts.score());
  }
  std::vector<ScoreRow> rows;
  for (auto& a : acc) {
    a.row.score = mean_std(a.scores);
    a.row.runs = static_cast<int>(a.scores.size());
    rows.push_back(std::move(a.row));
  }
  return rows;
}

std::string success_csv(const std::vector<SuccessRow>& rows, std::string_view setting_header) {
  std::string out = "policy," + std::string(setting_header) + ",successes,runs,rate_pct,cell\n";
  for (const auto& r : rows) {
    out += r.policy + "," + r.setting + "," + std::to_string(r.successes) + "," +
           std::to_string(r.runs) + "," + std::to_string(std::lround(100.0 * r.successes / r.runs)) +
           "," + format_success(r.successes, r.runs) + "\n";
  }
  return out;
}

std::string score_csv(const std::vector<ScoreRow>& rows) {
  std::string out = "deployment,persistence,policy,runs,mean_pct,std_pct,cell\n";
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.1f,%.1f", r.score.mean + 0.0, r.score.std + 0.0);
    out += r.deployment + "," + r.persistence + "," + r.policy + "," + std::to_string(r.runs) + "," +
           buf + "," + format_score(r.score) + "\n";
  }
  return out;
}

namespace {

std::string render_grid(const std::vector<std::vector<std::string>>& grid) {
  // Width by UTF-8 code points so "±" does not skew alignment.
  auto width = [](const std::string& s) {
    return static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [](char c) {
      return (static_cast<unsigned char>(c) & 0xC0) != 0x80;
    }));
  };
  std::vector<std::size_t> widths;
  for (const auto& row : grid)
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (widths.size() <= i) widths.push_back(0);
      widths[i] = std::max(widths[i], width(row[i]));
    }
  std::string out;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    std::string line;
    for (std::size_t i = 0; i < grid[r].size(); ++i) {
      if (i) line += "  ";
      line += grid[r][i];
      if (i + 1 < grid[r].size()) line.append(widths[i] - width(grid[r][i]), ' ');
    }
    out += line + "\n";
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w;
      out += std::string(total + 2 * (widths.size() - 1), '-') + "\n";
    }
  }
  return out;
}

}  // namespace

std::string render_tables(const std::vector<RunResult>& runs) {
  std::string out;
  {
    std::vector<std::vector<std::string>> grid{{"Policy", "Deployment setting", "Exploitation achieved"}};
    for (const auto& r : success_by_deployment(runs))
      grid.push_back({r.policy, r.setting, format_success(r.successes, r.runs)});
    out += "Exploitation success rates: policy vs deployment setting\n" + render_grid(grid) + "\n";
  }
  {
    std::vector<std::vector<std::string>> grid{{"Policy", "Attacker mode", "Exploitation achieved"}};
    for (const auto& r : success_by_persistence(runs))
      grid.push_back({r.policy, r.setting, format_success(r.successes, r.runs)});
    out += "Exploitation success rates: policy vs persistence model\n" + render_grid(grid) + "\n";
  }
  {
    const auto rows = score_table(runs);
    std::vector<std::string> policies;
    std::vector<std::pair<std::string, std::string>> cells;
    for (const auto& r : rows) {
      if (std::find(policies.begin(), policies.end(), r.policy) == policies.end())
        policies.push_back(r.policy);
      auto cell = std::make_pair(r.deployment, r.persistence);
      if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    }
    std::vector<std::vector<std::string>> grid{{"Deployment", "Attack mode"}};
    grid[0].insert(grid[0].end(), policies.begin(), policies.end());
    for (const auto& [dep, mode] : cells) {
      std::vector<std::string> line{dep, mode};
      for (const auto& p : policies) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const ScoreRow& r) {
          return r.deployment == dep && r.persistence == mode && r.policy == p;
        });
        line.push_back(it == rows.end() ? "-" : format_score(it->score));
      }
      grid.push_back(std::move(line));
    }
    out += "Attack-stage inference score (%, mean ± std over seeds)\n" + render_grid(grid);
  }
  return out;
}

}  // namespace honeynet
