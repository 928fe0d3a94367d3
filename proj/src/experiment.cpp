#include "honeynet/experiment.hpp"

#include <atomic>
#include <cctype>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "honeynet/error.hpp"
#include "honeynet/rng.hpp"

namespace honeynet {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::Io, "short write to " + path.string());
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? fallback : it->get<T>();
}

PersistenceMode parse_mode_or_throw(const std::string& name) {
  auto m = parse_persistence_mode(name);
  if (!m) throw Error(ErrorCode::ConfigParse, "unknown persistence mode '" + name + "'");
  return *m;
}

// Service reference inside a custom deployment: a catalog id, a decoy "Other<N>", or a
// full service object.
ServiceSpec resolve_service(const json& j, const AttackGraph& catalog) {
  if (j.is_object()) return j.get<ServiceSpec>();
  const auto id = j.get<std::string>();
  if (const auto* svc = catalog.find(id)) return *svc;
  if (id.size() > 5 && id.rfind("Other", 0) == 0 &&
      std::all_of(id.begin() + 5, id.end(), [](unsigned char c) { return std::isdigit(c); }))
    return make_decoy(std::stoi(id.substr(5)));
  throw Error(ErrorCode::ConfigParse, "unknown service '" + id + "'");
}

HoneynetConfig apply_overrides(HoneynetConfig h, const std::map<std::string, ServiceSpec>& overrides) {
  if (overrides.empty()) return h;
  auto services = h.catalog.services();
  for (auto& s : services)
    if (auto it = overrides.find(s.id); it != overrides.end()) s = it->second;
  h.catalog = AttackGraph(std::move(services));
  return h;
}

DeploymentSpec parse_deployment(const json& j, const AttackGraph& base_catalog, int budget,
                                const std::map<std::string, ServiceSpec>& overrides) {
  DeploymentSpec d;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    auto kind = parse_deployment_kind(name);
    if (!kind || *kind == DeploymentKind::Custom)
      throw Error(ErrorCode::ConfigParse, "unknown deployment '" + name + "'");
    d.name = name;
    d.honeynet = apply_overrides(make_deployment(*kind, budget), overrides);
  } else {
    d.name = j.at("name").get<std::string>();
    std::vector<ServiceSpec> services;
    for (const auto& s : j.at("services")) services.push_back(resolve_service(s, base_catalog));
    d.honeynet.catalog = AttackGraph(std::move(services));
    d.honeynet.budget = get_or(j, "budget", budget);
    d.honeynet.kind = DeploymentKind::Custom;
    d.honeynet.name = d.name;
  }
  if (j.is_object() && j.contains("attackers")) {
    for (const auto& a : j.at("attackers")) {
      const auto target = a.is_string() ? a.get<std::string>() : a.at("target").get<std::string>();
      const auto* svc = d.honeynet.catalog.find(target);
      if (!svc) throw Error(ErrorCode::ConfigParse, "attacker target '" + target + "' not in deployment " + d.name);
      auto profile = make_attacker(*svc, PersistenceModel{});
      if (a.is_object()) {
        profile.label = get_or<std::string>(a, "label", profile.label);
        if (a.contains("objective")) {
          auto obj = parse_stage(a.at("objective").get<std::string>());
          if (!obj) throw Error(ErrorCode::ConfigParse, "bad attacker objective");
          profile.objective_stage = *obj;
        }
      }
      d.attackers.push_back(std::move(profile));
    }
  } else {
    for (const auto& svc : d.honeynet.catalog.services())
      if (svc.vulnerable) d.attackers.push_back(make_attacker(svc, PersistenceModel{}));
  }
  return d;
}

BackendSpec parse_backend(const json& j, const fs::path& base_dir) {
  BackendSpec b;
  b.kind = j.at("kind").get<std::string>();
  if (b.kind == "http_chat_completion") {
    b.http.base_url = get_or(j, "base_url", b.http.base_url);
    b.http.model = get_or(j, "model", b.http.model);
    b.http.api_key_env = get_or(j, "api_key_env", b.http.api_key_env);
    b.http.temperature = get_or(j, "temperature", b.http.temperature);
    b.http.max_tokens = get_or(j, "max_tokens", b.http.max_tokens);
    b.http.timeout_seconds = get_or(j, "timeout_seconds", b.http.timeout_seconds);
  } else if (b.kind == "scripted_mock") {
    if (j.contains("replay_file")) b.replay_file = resolve(base_dir, j.at("replay_file").get<std::string>()).string();
    b.aligned = get_or(j, "aligned", false);
    if (b.replay_file.empty() && !b.aligned)
      throw Error(ErrorCode::ConfigParse, "scripted_mock needs replay_file or aligned: true");
  } else {
    throw Error(ErrorCode::ConfigParse, "unknown backend kind '" + b.kind + "'");
  }
  return b;
}

const std::set<std::string> kPolicyKinds{"oracle", "random", "static", "static-decoys", "reactive", "llm"};

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  try {
    if (get_or(j, "schema_version", kExperimentSchemaVersion) != kExperimentSchemaVersion)
      throw Error(ErrorCode::ConfigParse, "unsupported config schema_version");
    cfg.source = j;
    cfg.horizon = get_or(j, "horizon", cfg.horizon);
    cfg.seed_base = get_or(j, "seed_base", cfg.seed_base);
    cfg.seeds = get_or(j, "seeds", cfg.seeds);
    cfg.budget = get_or(j, "budget", cfg.budget);

    std::map<std::string, ServiceSpec> overrides;
    if (j.contains("catalog"))
      for (const auto& s : catalog_from_json(j.at("catalog")).services()) overrides[s.id] = s;
    auto base = builtin_catalog().services();
    for (auto& s : base)
      if (auto it = overrides.find(s.id); it != overrides.end()) s = it->second;
    const AttackGraph base_catalog(std::move(base));

    const json deployments = get_or(j, "deployments", json{"fully_vulnerable", "small_mixed", "large_mixed"});
    for (const auto& d : deployments)
      cfg.deployments.push_back(parse_deployment(d, base_catalog, cfg.budget, overrides));

    if (j.contains("persistence")) {
      const auto& p = j.at("persistence");
      if (p.contains("modes")) {
        cfg.modes.clear();
        for (const auto& m : p.at("modes")) cfg.modes.push_back(parse_mode_or_throw(m.get<std::string>()));
      }
      cfg.decay = get_or(p, "decay", cfg.decay);
      cfg.floor = get_or(p, "floor", cfg.floor);
      const auto rule = get_or<std::string>(p, "on_failure", "abandon");
      if (rule == "abandon") cfg.on_failure = FailureRule::Abandon;
      else if (rule == "skip") cfg.on_failure = FailureRule::Skip;
      else throw Error(ErrorCode::ConfigParse, "on_failure must be abandon or skip");
    }

    if (j.contains("noise")) {
      const auto& n = j.at("noise");
      cfg.noise.false_positive_rate = get_or(n, "false_positive_rate", cfg.noise.false_positive_rate);
      cfg.noise.hint_corruption_rate = get_or(n, "hint_corruption_rate", cfg.noise.hint_corruption_rate);
      cfg.noise.max_alerts_per_exploit = get_or(n, "max_alerts_per_exploit", cfg.noise.max_alerts_per_exploit);
    }
    if (j.contains("signatures")) {
      const auto path = resolve(base_dir, j.at("signatures").get<std::string>());
      cfg.signatures = std::make_shared<const SignatureCatalog>(
          SignatureCatalog::from_json(json::parse(read_file(path))));
    }

    for (const auto& p : j.at("policies")) {
      PolicySpec spec;
      spec.kind = p.at("kind").get<std::string>();
      spec.name = get_or(p, "name", spec.kind);
      spec.services = get_or(p, "services", spec.services);
      if (p.contains("backend")) spec.backend = parse_backend(p.at("backend"), base_dir);
      cfg.policies.push_back(std::move(spec));
    }

    if (j.contains("prompt_template"))
      cfg.llm.prompt_template = PromptTemplate::load(resolve(base_dir, j.at("prompt_template").get<std::string>()).string());
    cfg.llm.system_prompt = get_or(j, "system_prompt", cfg.llm.system_prompt);
    cfg.llm.max_prompt_chars = get_or(j, "max_prompt_chars", cfg.llm.max_prompt_chars);
    cfg.llm.max_retries = get_or(j, "max_retries", cfg.llm.max_retries);
    cfg.llm.backoff = std::chrono::milliseconds(get_or<long>(j, "backoff_ms", cfg.llm.backoff.count()));

    cfg.scored_targets = get_or(j, "scored_targets", cfg.scored_targets);
    const auto scoring = get_or<std::string>(j, "scoring", "cumulative");
    auto mode = parse_scoring_mode(scoring);
    if (!mode) throw Error(ErrorCode::ConfigParse, "unknown scoring '" + scoring + "'");
    cfg.scoring = *mode;
    const auto bootstrap = get_or<std::string>(j, "bootstrap", "policy");
    if (bootstrap == "policy") cfg.bootstrap = BootstrapMode::Policy;
    else if (bootstrap == "first_service") cfg.bootstrap = BootstrapMode::FirstService;
    else throw Error(ErrorCode::ConfigParse, "bootstrap must be policy or first_service");
    cfg.belief_carryover = get_or(j, "belief_carryover", false);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigParse, e.what());
  }
  return cfg;
}

ExperimentConfig load_experiment_config(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, path.string() + ": " + e.what());
  }
  return experiment_config_from_json(j, path.parent_path());
}

std::vector<std::string> validate_experiment(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  if (cfg.horizon < 1) out.push_back("horizon must be at least 1");
  if (cfg.seeds.empty()) out.push_back("seeds axis is empty");
  if (cfg.modes.empty()) out.push_back("persistence.modes axis is empty");
  if (cfg.deployments.empty()) out.push_back("deployments axis is empty");
  if (cfg.policies.empty()) out.push_back("policies axis is empty");
  auto pv = validate_persistence({PersistenceMode::Probabilistic, cfg.decay, cfg.floor, cfg.on_failure});
  out.insert(out.end(), pv.begin(), pv.end());
  auto nv = validate_noise(cfg.noise);
  out.insert(out.end(), nv.begin(), nv.end());

  std::set<std::string> names;
  for (const auto& d : cfg.deployments) {
    if (!names.insert("deployment/" + d.name).second) out.push_back("duplicate deployment '" + d.name + "'");
    for (const auto& v : validate_deployment(d.honeynet)) out.push_back(d.name + ": " + v);
    if (d.attackers.empty()) out.push_back(d.name + ": no attackers");
    std::set<std::string> labels;
    for (const auto& a : d.attackers) {
      if (!labels.insert(a.label).second) out.push_back(d.name + ": duplicate attacker label '" + a.label + "'");
      for (const auto& v : validate_attacker(a, d.honeynet.catalog)) out.push_back(d.name + ": " + v);
    }
  }
  for (const auto& p : cfg.policies) {
    if (!names.insert("policy/" + p.name).second) out.push_back("duplicate policy '" + p.name + "'");
    if (!kPolicyKinds.contains(p.kind)) out.push_back("policy " + p.name + ": unknown kind '" + p.kind + "'");
    if (p.kind == "llm" && !p.backend) out.push_back("policy " + p.name + ": llm policy needs a backend");
    if (p.kind == "static" && p.services.empty()) out.push_back("policy " + p.name + ": static policy needs services");
  }
  if (cfg.scored_targets.empty()) out.push_back("scored_targets is empty");
  return out;
}

std::uint64_t run_seed(std::uint64_t seed_base, const CellKey& cell) {
  auto s = combine_seed(seed_base, cell.policy);
  s = combine_seed(s, cell.deployment);
  s = combine_seed(s, cell.persistence);
  return combine_seed(s, cell.seed);
}

std::vector<MatrixCell> expand_matrix(const ExperimentConfig& cfg) {
  if (cfg.policies.empty()) throw Error(ErrorCode::EmptyAxis, "no policies");
  if (cfg.deployments.empty()) throw Error(ErrorCode::EmptyAxis, "no deployments");
  if (cfg.modes.empty()) throw Error(ErrorCode::EmptyAxis, "no persistence modes");
  if (cfg.seeds.empty()) throw Error(ErrorCode::EmptyAxis, "no seeds");
  std::vector<MatrixCell> cells;
  for (std::size_t p = 0; p < cfg.policies.size(); ++p)
    for (const auto& dep : cfg.deployments)
      for (auto mode : cfg.modes)
        for (auto seed : cfg.seeds) {
          MatrixCell cell;
          cell.index = cells.size();
          cell.policy_index = p;
          auto& run = cell.run;
          run.cell = {cfg.policies[p].name, dep.name, std::string(to_string(mode)), seed};
          run.honeynet = dep.honeynet;
          const PersistenceModel persistence{mode, cfg.decay, cfg.floor, cfg.on_failure};
          for (auto a : dep.attackers) {
            a.persistence = persistence;
            run.attackers.push_back(std::move(a));
          }
          run.horizon = cfg.horizon;
          run.seed = run_seed(cfg.seed_base, run.cell);
          run.noise = cfg.noise;
          run.signatures = cfg.signatures;
          run.bootstrap = cfg.bootstrap;
          run.belief_carryover = cfg.belief_carryover;
          cells.push_back(std::move(cell));
        }
  return cells;
}

std::shared_ptr<const Policy> build_policy(const PolicySpec& spec, const ExperimentConfig& cfg,
                                           bool offline) {
  if (spec.kind == "oracle") return make_oracle_policy();
  if (spec.kind == "random") return make_random_policy();
  if (spec.kind == "static") return make_static_policy(spec.services);
  if (spec.kind == "static-decoys") return make_decoy_only_policy();
  if (spec.kind == "reactive") return make_reactive_policy();
  if (spec.kind != "llm") throw Error(ErrorCode::ConfigParse, "unknown policy kind '" + spec.kind + "'");
  if (!spec.backend) throw Error(ErrorCode::ConfigParse, "policy " + spec.name + " has no backend");

  const auto& b = *spec.backend;
  std::shared_ptr<const ChatBackend> backend;
  if (b.kind == "http_chat_completion") {
    if (offline)
      throw Error(ErrorCode::BackendUnreachable,
                  "policy " + spec.name + " uses a network backend but offline mode is set");
    backend = std::make_shared<HttpChatBackend>(b.http);
  } else if (b.aligned) {
    std::map<std::string, std::vector<std::string>> scripts;
    for (const auto& d : cfg.deployments)
      for (const auto& a : d.attackers)
        if (!scripts.contains(a.label)) scripts[a.label] = make_aligned_script(d.honeynet.catalog, a);
    backend = std::make_shared<ScriptedMockBackend>(std::move(scripts));
  } else {
    backend = std::make_shared<ScriptedMockBackend>(ScriptedMockBackend::load(b.replay_file));
  }
  return std::make_shared<LlmPolicy>(spec.name, std::move(backend), cfg.llm);
}

namespace {

std::string sanitize(std::string_view s) {
  std::string out;
  for (unsigned char c : s) out += std::isalnum(c) || c == '-' || c == '.' ? static_cast<char>(c) : '_';
  return out;
}

std::string cell_dir_name(const MatrixCell& cell) {
  char idx[16];
  std::snprintf(idx, sizeof idx, "%04zu", cell.index);
  const auto& k = cell.run.cell;
  return std::string(idx) + "_" + sanitize(k.policy) + "_" + sanitize(k.deployment) + "_" +
         sanitize(k.persistence) + "_s" + std::to_string(k.seed);
}

struct CellOutput {
  std::vector<EpisodeRecord> records;
  std::string turns;
};

CellOutput run_cell(const MatrixCell& cell, const Policy& policy) {
  CellOutput out;
  const auto& run = cell.run;
  auto belief = BeliefState::empty(run.honeynet.catalog);
  for (const auto& attacker : run.attackers) {
    if (!run.belief_carryover) belief = BeliefState::empty(run.honeynet.catalog);
    TurnSink sink = [&](const AgentTurn& t) {
      out.turns += json{{"attacker", attacker.label}, {"turn", t}}.dump();
      out.turns += '\n';
    };
    out.records.push_back(run_episode(run, attacker, policy, belief, sink));
  }
  return out;
}

void write_cell(const fs::path& dir, const CellOutput& out) {
  fs::create_directories(dir);
  write_file(dir / "episodes.jsonl", episodes_to_jsonl(out.records));
  write_file(dir / "turns.jsonl", out.turns);
  std::string eve;
  for (const auto& r : out.records)
    for (const auto& e : r.epochs)
      for (const auto& a : e.alerts) {
        eve += to_eve_json(a).dump();
        eve += '\n';
      }
  write_file(dir / "alerts.eve.jsonl", eve);
}

json scoring_json(const ExperimentConfig& cfg) {
  return {{"scored_targets", cfg.scored_targets}, {"scoring", to_string(cfg.scoring)}};
}

}  // namespace

const std::vector<std::string>& summary_file_names() {
  static const std::vector<std::string> names{"success_by_deployment.csv", "success_by_persistence.csv",
                                              "inference_scores.csv", "summary.txt"};
  return names;
}

void write_summaries(const fs::path& out_dir, const std::vector<RunResult>& runs) {
  fs::create_directories(out_dir);
  const auto& names = summary_file_names();
  write_file(out_dir / names[0], success_csv(success_by_deployment(runs), "deployment"));
  write_file(out_dir / names[1], success_csv(success_by_persistence(runs), "persistence"));
  write_file(out_dir / names[2], score_csv(score_table(runs)));
  write_file(out_dir / names[3], render_tables(runs));
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
  if (auto v = validate_experiment(cfg); !v.empty()) throw Error(ErrorCode::InvalidArgument, v.front());
  const auto cells = expand_matrix(cfg);

  std::vector<std::shared_ptr<const Policy>> policies;
  for (const auto& spec : cfg.policies) policies.push_back(build_policy(spec, cfg, options.offline));

  const bool persist = !options.out_dir.empty();
  json manifest{{"schema_version", kExperimentSchemaVersion}, {"config", cfg.source},
                {"summary", scoring_json(cfg)}, {"cells", json::array()}};
  for (const auto& c : cells)
    manifest["cells"].push_back({{"index", c.index}, {"dir", cell_dir_name(c)}, {"cell", c.run.cell},
                                 {"run_seed", c.run.seed}});
  if (persist) {
    fs::create_directories(options.out_dir / "cells");
    write_file(options.out_dir / "manifest.json", manifest.dump(2) + "\n");
  }

  std::vector<std::vector<EpisodeRecord>> per_cell(cells.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < cells.size();) {
      try {
        auto out = run_cell(cells[i], *policies[cells[i].policy_index]);
        if (persist) write_cell(options.out_dir / "cells" / cell_dir_name(cells[i]), out);
        per_cell[i] = std::move(out.records);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(cells.size());
      }
    }
  };
  const auto n = static_cast<std::size_t>(std::max(1, options.workers));
  std::vector<std::jthread> threads;
  for (std::size_t t = 1; t < std::min(n, cells.size()); ++t) threads.emplace_back(worker);
  worker();
  threads.clear();
  if (first_error) std::rethrow_exception(first_error);

  ExperimentResult result;
  for (auto& recs : per_cell)
    for (auto& r : recs) result.records.push_back(std::move(r));
  result.runs = summarize_runs(result.records, cfg.scored_targets, cfg.scoring);
  if (persist) write_summaries(options.out_dir, result.runs);
  return result;
}

ExperimentResult replay_experiment(const fs::path& run_dir, const fs::path& out_dir) {
  json manifest;
  try {
    manifest = json::parse(read_file(run_dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ConfigParse, std::string("manifest: ") + e.what());
  }
  if (manifest.value("schema_version", 0) != kExperimentSchemaVersion)
    throw Error(ErrorCode::ConfigParse, "unsupported manifest schema_version");

  ExperimentResult result;
  for (const auto& c : manifest.at("cells")) {
    auto recs = episodes_from_jsonl(read_file(run_dir / "cells" / c.at("dir").get<std::string>() / "episodes.jsonl"));
    for (auto& r : recs) result.records.push_back(std::move(r));
  }
  const auto& summary = manifest.at("summary");
  auto mode = parse_scoring_mode(summary.at("scoring").get<std::string>());
  if (!mode) throw Error(ErrorCode::ConfigParse, "manifest: bad scoring mode");
  result.runs = summarize_runs(result.records, summary.at("scored_targets").get<std::vector<std::string>>(), *mode);
  write_summaries(out_dir.empty() ? run_dir : out_dir, result.runs);
  return result;
}

}  // namespace honeynet
