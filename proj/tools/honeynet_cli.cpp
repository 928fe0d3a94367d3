#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "honeynet/error.hpp"
#include "honeynet/experiment.hpp"

namespace fs = std::filesystem;
using namespace honeynet;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

void apply_overrides(ExperimentConfig& cfg, const std::vector<std::string>& only_policies,
                     const std::optional<std::uint64_t>& seed_base) {
  if (seed_base) cfg.seed_base = *seed_base;
  if (only_policies.empty()) return;
  std::vector<PolicySpec> kept;
  for (const auto& p : cfg.policies)
    if (std::find(only_policies.begin(), only_policies.end(), p.name) != only_policies.end())
      kept.push_back(p);
  if (kept.size() != only_policies.size())
    throw Error(ErrorCode::InvalidArgument, "--policy names a policy that is not in the config");
  cfg.policies = std::move(kept);
}

ExperimentConfig mock_demo_config() {
  nlohmann::json j = {
      {"schema_version", kExperimentSchemaVersion},
      {"deployments", {"fully_vulnerable", "small_mixed", "large_mixed"}},
      {"seeds", {0, 1, 2}},
      {"policies",
       {{{"name", "mock-aligned"},
         {"kind", "llm"},
         {"backend", {{"kind", "scripted_mock"}, {"aligned", true}}}}}},
  };
  return experiment_config_from_json(j);
}

void print_result(const ExperimentResult& result) {
  std::cout << render_tables(result.runs);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budgeted honeypot exposure simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::string from_dir;
  int workers = 1;
  bool offline = false;
  std::vector<std::string> only_policies;
  std::optional<std::uint64_t> seed_base;

  auto* run = app.add_subcommand("run", "Run the experiment matrix from a config file");
  run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory")->required();
  run->add_option("-j,--workers", workers, "Parallel cells")->check(CLI::PositiveNumber);
  run->add_option("--policy", only_policies, "Only run these policies (repeatable)");
  run->add_option("--seed-base", seed_base, "Override the config seed base");
  run->add_flag("--offline", offline, "Refuse network backends");

  auto* replay = app.add_subcommand("replay", "Recompute summaries from a finished run directory");
  replay->add_option("--from", from_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("-o,--out", out_dir, "Where to write summaries (default: the run directory)");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("-c,--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* demo = app.add_subcommand("mock-demo", "Offline demo with a scripted, perfectly aligned model");
  demo->add_option("-o,--out", out_dir, "Optional output directory");
  demo->add_option("-j,--workers", workers, "Parallel cells")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      auto cfg = load_experiment_config(config_path);
      apply_overrides(cfg, only_policies, seed_base);
      auto result = run_experiment(cfg, {out_dir, workers, offline});
      print_result(result);
      std::cerr << "wrote " << result.records.size() << " episodes to " << out_dir << "\n";
    } else if (*replay) {
      auto result = replay_experiment(from_dir, out_dir);
      print_result(result);
    } else if (*validate) {
      auto cfg = load_experiment_config(config_path);
      auto problems = validate_experiment(cfg);
      if (problems.empty()) {
        for (const auto& cell : expand_matrix(cfg))
          for (const auto& v : validate_run_config(cell.run)) problems.push_back(v);
      }
      for (const auto& p : problems) std::cerr << "error: " << p << "\n";
      if (!problems.empty()) return kExitConfig;
      for (const auto& p : cfg.policies)
        if (p.backend && p.backend->kind == "http_chat_completion" && !p.backend->http.api_key_env.empty() &&
            !std::getenv(p.backend->http.api_key_env.c_str()))
          std::cerr << "warning: policy " << p.name << " needs " << p.backend->http.api_key_env
                    << " at run time\n";
      std::cout << "ok: " << expand_matrix(cfg).size() << " cells\n";
    } else if (*demo) {
      auto cfg = mock_demo_config();
      auto result = run_experiment(cfg, {out_dir, workers, true});
      print_result(result);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::ConfigParse:
      case ErrorCode::InvalidArgument:
      case ErrorCode::EmptyAxis:
      case ErrorCode::MissingPlaceholder:
      case ErrorCode::BackendAuthMissing:
        return kExitConfig;
      default:
        return kExitRuntime;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
