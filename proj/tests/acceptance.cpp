// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>

#include "honeynet/experiment.hpp"
#include "test_support.hpp"

using namespace honeynet;
using honeynet::testing::SchedulePolicy;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
  bool ok = false;
  std::string detail;
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const bool in_time = secs < limit_s;
  const bool pass = v.ok && in_time;
  if (!pass) ++failures;
  std::printf("[%s] %d. %s: %s; %.3f s (limit %.0f s)%s\n", pass ? "PASS" : "FAIL", id, title.c_str(),
              v.detail.c_str(), secs, limit_s, in_time ? "" : " TOO SLOW");
  std::fflush(stdout);
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("honeynet_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(HN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

json three_mock_models() {
  json policies = json::array();
  for (const char* name : {"model-a", "model-b", "model-c"})
    policies.push_back({{"name", name}, {"kind", "llm"}, {"backend", {{"kind", "scripted_mock"}, {"aligned", true}}}});
  return {{"schema_version", 1}, {"policies", policies}};
}

RunConfig single_attacker(PersistenceModel persistence) {
  RunConfig cfg;
  cfg.honeynet = make_deployment(DeploymentKind::FullyVulnerable);
  cfg.attackers = {make_attacker(cfg.honeynet.catalog.at("GitLab"), persistence)};
  cfg.noise = NoiseConfig::none();
  return cfg;
}

// Stage-set comparison written against std::set, independent of the library.
std::array<long, 3> brute_counts(const std::vector<std::pair<std::set<int>, std::set<int>>>& epochs) {
  std::array<long, 3> c{0, 0, 0};
  for (const auto& [pred, truth] : epochs) {
    for (int s : pred) ++c[truth.count(s) ? 0 : 1];
    for (int s : truth)
      if (!pred.count(s)) ++c[2];
  }
  return c;
}

}  // namespace

int main() {
  criterion(1, "persistence formula at g=0..5", 1, [] {
    const auto p = PersistenceModel::probabilistic(0.25, 0.1);
    const double want[] = {1.0, 0.75, 0.5, 0.25, 0.1, 0.1};
    std::string got;
    bool ok = true;
    for (int g = 0; g <= 5; ++g) {
      const double v = attempt_probability(p, g);
      ok = ok && v == want[g];
      got += (g ? ", " : "") + std::to_string(v).substr(0, 4);
    }
    return Verdict{ok, "{" + got + "}"};
  });

  criterion(2, "oracle upper bound, deterministic attackers", 5, [] {
    auto j = json{{"schema_version", 1},
                  {"persistence", {{"modes", {"deterministic"}}}},
                  {"policies", {{{"name", "oracle"}, {"kind", "oracle"}}}}};
    auto result = run_experiment(experiment_config_from_json(j), {});
    const auto rows = success_by_persistence(result.runs);
    std::vector<double> scores;
    for (const auto& r : result.runs) scores.push_back(r.counts.score());
    const auto ms = mean_std(scores);
    const bool ok = rows.size() == 1 && rows[0].successes == 9 && rows[0].runs == 9 && ms.mean == 1.0 && ms.std == 0.0;
    char buf[128];
    std::snprintf(buf, sizeof buf, "exploitation %s, score %.3f ± %.3f",
                  rows.empty() ? "?" : format_success(rows[0].successes, rows[0].runs).c_str(), ms.mean, ms.std);
    return Verdict{ok, buf};
  });

  criterion(3, "static decoy-only policy never enables exploitation", 5, [] {
    auto j = json{{"schema_version", 1}, {"policies", {{{"name", "static-decoys"}, {"kind", "static-decoys"}}}}};
    auto result = run_experiment(experiment_config_from_json(j), {});
    bool ok = !result.runs.empty();
    std::string cells;
    for (const auto& rows : {success_by_deployment(result.runs), success_by_persistence(result.runs)})
      for (const auto& r : rows) {
        ok = ok && r.successes == 0 && r.runs == 9;
        cells += (cells.empty() ? "" : ", ") + r.setting + " " + format_success(r.successes, r.runs);
      }
    return Verdict{ok, cells};
  });

  criterion(4, "consecutive attacker: exposed every epoch vs single gap", 10, [] {
    auto cfg = single_attacker(PersistenceModel::consecutive());
    SchedulePolicy always([](int) { return std::vector<std::string>{"GitLab"}; });
    SchedulePolicy one_gap([](int epoch) { return epoch == 2 ? std::vector<std::string>{} : std::vector<std::string>{"GitLab"}; });
    int completed = 0, abandoned = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      cfg.seed = seed;
      if (run_episode(cfg, cfg.attackers[0], always).outcome == Outcome::Completed) ++completed;
      if (run_episode(cfg, cfg.attackers[0], one_gap).outcome == Outcome::Abandoned) ++abandoned;
    }
    return Verdict{completed == 100 && abandoned == 100,
                   "completed " + std::to_string(completed) + "/100 without gap, abandoned " +
                       std::to_string(abandoned) + "/100 with one gap (success " +
                       std::to_string(100 - abandoned) + "%)"};
  });

  criterion(5, "probabilistic attacker, alternating exposure", 30, [] {
    auto cfg = single_attacker(PersistenceModel::probabilistic(0.25, 0.1));
    cfg.horizon = 40;
    SchedulePolicy alternate([](int epoch) {
      return epoch % 2 == 1 ? std::vector<std::string>{"GitLab"} : std::vector<std::string>{};
    });
    long trials = 0, successes = 0;
    bool gaps_ok = true;
    for (std::uint64_t seed = 0; trials < 10000; ++seed) {
      cfg.seed = seed;
      for (const auto& e : run_episode(cfg, cfg.attackers[0], alternate).epochs) {
        if (!e.attempt || e.attempt->gap == 0) continue;  // engagement (Reconnaissance) at g=0
        gaps_ok = gaps_ok && e.attempt->gap == 1;
        if (trials < 10000) {
          ++trials;
          if (e.attempt->success) ++successes;
        }
      }
    }
    const double rate = static_cast<double>(successes) / static_cast<double>(trials);
    char buf[128];
    std::snprintf(buf, sizeof buf, "%ld trials at g=1, success rate %.4f (target 0.75 ± 0.02)", trials, rate);
    return Verdict{gaps_ok && std::abs(rate - 0.75) <= 0.02, buf};
  });

  criterion(6, "inference score equals brute-force oracle", 10, [] {
    std::mt19937_64 gen(777);
    int mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      EpisodeRecord rec;
      std::vector<std::pair<std::set<int>, std::set<int>>> raw;
      const int epochs = 1 + static_cast<int>(gen() % 20);
      for (int t = 0; t < epochs; ++t) {
        std::set<int> pred, truth;
        for (int s = 0; s < kStageCount; ++s) {
          if (gen() % 2) pred.insert(s);
          if (gen() % 2) truth.insert(s);
        }
        EpochRecord e;
        for (int s : pred) e.prediction.stages.insert(stage_from_ordinal(s));
        for (int s : truth) e.ground_truth.insert(stage_from_ordinal(s));
        rec.epochs.push_back(e);
        raw.emplace_back(std::move(pred), std::move(truth));
      }
      const auto got = inference_score(rec);
      const auto want = brute_counts(raw);
      const double want_score = (want[0] + want[1] + want[2]) == 0
                                    ? 1.0
                                    : static_cast<double>(want[0]) / static_cast<double>(want[0] + want[1] + want[2]);
      if (got.tp != want[0] || got.fp != want[1] || got.fn != want[2] || got.score() != want_score) ++mismatches;
    }
    return Verdict{mismatches == 0, std::to_string(1000 - mismatches) + "/1000 episodes identical"};
  });

  criterion(7, "matrix shape, 9-run cells, replay byte-identical", 60, [] {
    const auto dir = scratch("matrix");
    const auto cfg_path = dir / "config.json";
    std::ofstream(cfg_path) << three_mock_models().dump(2);
    const auto cells = expand_matrix(load_experiment_config(cfg_path)).size();
    const auto run_dir = dir / "run";
    const auto replay_dir = dir / "replay";
    const int rc_run = run_cli("run -c " + cfg_path.string() + " -o " + run_dir.string() + " --offline");
    const int rc_replay = run_cli("replay --from " + run_dir.string() + " -o " + replay_dir.string());
    bool identical = rc_run == 0 && rc_replay == 0;
    for (const auto& name : summary_file_names())
      identical = identical && fs::exists(run_dir / name) && slurp(run_dir / name) == slurp(replay_dir / name);
    auto result = replay_experiment(run_dir, dir / "check");
    bool nine = true;
    for (const auto& rows : {success_by_deployment(result.runs), success_by_persistence(result.runs)})
      for (const auto& r : rows) nine = nine && r.runs == 9;
    fs::remove_all(dir);
    return Verdict{cells == 81 && nine && identical,
                   std::to_string(cells) + " configs, every success cell aggregates 9 runs: " + (nine ? "yes" : "no") +
                       ", replay identical: " + (identical ? "yes" : "no")};
  });

  criterion(8, "offline mock-demo end to end", 10, [] {
    const auto dir = scratch("demo");
    const int rc = run_cli("mock-demo -o " + (dir / "out").string());
    auto result = replay_experiment(dir / "out", dir / "check");
    std::set<std::string> exploited;
    std::set<std::string> missed;
    for (const auto& rec : result.records) {
      if (rec.target_service != "GitLab" && rec.target_service != "ApacheStruts") continue;
      (exploitation_achieved(rec) ? exploited : missed).insert(rec.target_service);
    }
    std::vector<double> scores;
    for (const auto& r : result.runs) scores.push_back(r.counts.score());
    const double mean = scores.empty() ? 0.0 : mean_std(scores).mean;
    double worst = 1.0;
    for (double s : scores) worst = std::min(worst, s);
    fs::remove_all(dir);
    char buf[160];
    std::snprintf(buf, sizeof buf, "exit %d, GitLab+Struts exploited in every run: %s, score mean %.3f min %.3f",
                  rc, missed.empty() && exploited.size() == 2 ? "yes" : "no", mean, worst);
    return Verdict{rc == 0 && missed.empty() && exploited.size() == 2 && worst >= 0.85, buf};
  });

  criterion(9, "same seed and mock backend give bit-identical logs", 30, [] {
    // Noisy telemetry and probabilistic attackers so the logs exercise every RNG stream.
    auto j = three_mock_models();
    j["policies"].push_back({{"name", "reactive"}, {"kind", "reactive"}});
    j["policies"].push_back({{"name", "random"}, {"kind", "random"}});
    j["persistence"] = {{"modes", {"probabilistic"}}};
    const auto cfg = experiment_config_from_json(j);
    const auto a = episodes_to_jsonl(run_experiment(cfg, {{}, 1, true}).records);
    const auto b = episodes_to_jsonl(run_experiment(cfg, {{}, 3, true}).records);

    const auto dir = scratch("determinism");
    std::ofstream(dir / "config.json") << j.dump(2);
    run_cli("run -c " + (dir / "config.json").string() + " -o " + (dir / "r1").string() + " --offline");
    run_cli("run -c " + (dir / "config.json").string() + " -o " + (dir / "r2").string() + " --offline -j 2");
    std::size_t files = 0, same = 0;
    for (const auto& entry : fs::recursive_directory_iterator(dir / "r1")) {
      if (!entry.is_regular_file()) continue;
      ++files;
      const auto rel = fs::relative(entry.path(), dir / "r1");
      if (slurp(entry.path()) == slurp(dir / "r2" / rel)) ++same;
    }
    fs::remove_all(dir);
    return Verdict{a == b && !a.empty() && files > 0 && files == same,
                   "in-process logs identical: " + std::string(a == b ? "yes" : "no") + ", CLI artifacts identical " +
                       std::to_string(same) + "/" + std::to_string(files)};
  });

  std::printf("%s: %d failing criteria\n", failures ? "FAILED" : "ALL PASSED", failures);
  return failures ? 1 : 0;
}
