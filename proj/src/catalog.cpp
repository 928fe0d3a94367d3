#include "honeynet/catalog.hpp"

#include <algorithm>
#include <set>

#include <nlohmann/json.hpp>

#include "honeynet/error.hpp"

namespace honeynet {

using S = AttackStage;

bool ServiceSpec::supports(AttackStage s) const {
  return std::find(supported_stages.begin(), supported_stages.end(), s) != supported_stages.end();
}

StageSet ServiceSpec::supported_set() const {
  StageSet out;
  for (auto s : supported_stages) out.insert(s);
  return out;
}

std::optional<AttackStage> next_stage(const ServiceSpec& svc, AttackStage current) {
  if (!svc.supports(current))
    throw Error(ErrorCode::StageNotSupported,
                std::string(to_string(current)) + " is not supported by " + svc.id);
  if (svc.terminal_stage && *svc.terminal_stage == current) return std::nullopt;
  for (auto s : svc.supported_stages)
    if (ordinal(s) > ordinal(current)) return s;
  return std::nullopt;
}

StageSet chain_prefix(const ServiceSpec& svc, AttackStage upto) {
  StageSet out;
  for (auto s : svc.supported_stages)
    if (ordinal(s) <= ordinal(upto)) out.insert(s);
  return out;
}

AttackGraph::AttackGraph(std::vector<ServiceSpec> services) : services_(std::move(services)) {}

const ServiceSpec* AttackGraph::find(std::string_view id) const {
  for (const auto& s : services_)
    if (s.id == id) return &s;
  return nullptr;
}

const ServiceSpec& AttackGraph::at(std::string_view id) const {
  if (const auto* s = find(id)) return *s;
  throw Error(ErrorCode::InvalidArgument, "unknown service id '" + std::string(id) + "'");
}

int AttackGraph::index_of(std::string_view id) const {
  for (std::size_t i = 0; i < services_.size(); ++i)
    if (services_[i].id == id) return static_cast<int>(i);
  return -1;
}

int AttackGraph::vulnerable_count() const {
  return static_cast<int>(
      std::count_if(services_.begin(), services_.end(), [](const auto& s) { return s.vulnerable; }));
}

std::vector<AttackGraph::Edge> AttackGraph::edges() const {
  std::vector<Edge> out;
  for (const auto& svc : services_) {
    if (!svc.vulnerable) continue;
    for (std::size_t i = 1; i < svc.supported_stages.size(); ++i)
      out.push_back({svc.id, svc.supported_stages[i - 1], svc.supported_stages[i]});
  }
  return out;
}

std::vector<std::string> AttackGraph::ids() const {
  std::vector<std::string> out;
  out.reserve(services_.size());
  for (const auto& s : services_) out.push_back(s.id);
  return out;
}

AttackGraph builtin_catalog() {
  return AttackGraph({
      {"GitLab", "GitLab", "gitlab", 80, true,
       {S::Reconnaissance, S::InitialAccess, S::UserDataExfil, S::PrivEsc, S::RootDataExfil},
       S::RootDataExfil},
      {"Xdebug", "Xdebug", "xdebug", 9000, true,
       {S::Reconnaissance, S::InitialAccess, S::UserDataExfil, S::PrivEsc, S::RootDataExfil},
       S::RootDataExfil},
      {"ApacheStruts", "Apache Struts", "struts", 8080, true,
       {S::Reconnaissance, S::InitialAccess, S::PrivEsc, S::RootDataExfil},
       S::RootDataExfil},
      {"DockerAPI", "Docker API", "docker", 2375, true,
       {S::Reconnaissance, S::InitialAccess, S::UserDataExfil},
       S::UserDataExfil},
      {"Other", "Others", "other", 22, false, {S::Reconnaissance}, std::nullopt},
  });
}

ServiceSpec make_decoy(int index) {
  static constexpr int kPorts[] = {3306, 21, 5432, 6379};
  auto n = std::to_string(index);
  return {"Other" + n, "Other " + n, "other",
          kPorts[static_cast<std::size_t>(index - 1) % std::size(kPorts)], false,
          {S::Reconnaissance}, std::nullopt};
}

std::string_view to_string(DeploymentKind kind) {
  switch (kind) {
    case DeploymentKind::FullyVulnerable: return "fully_vulnerable";
    case DeploymentKind::SmallMixed: return "small_mixed";
    case DeploymentKind::LargeMixed: return "large_mixed";
    case DeploymentKind::Custom: return "custom";
  }
  return "custom";
}

std::optional<DeploymentKind> parse_deployment_kind(std::string_view name) {
  for (auto k : {DeploymentKind::FullyVulnerable, DeploymentKind::SmallMixed,
                 DeploymentKind::LargeMixed, DeploymentKind::Custom})
    if (to_string(k) == name) return k;
  return std::nullopt;
}

HoneynetConfig make_deployment(DeploymentKind kind, int budget) {
  const auto base = builtin_catalog();
  std::vector<ServiceSpec> services;
  int decoys = 0;
  switch (kind) {
    case DeploymentKind::FullyVulnerable:
      for (const char* id : {"GitLab", "Xdebug", "ApacheStruts", "DockerAPI"})
        services.push_back(base.at(id));
      break;
    case DeploymentKind::SmallMixed:
      decoys = 2;
      break;
    case DeploymentKind::LargeMixed:
      decoys = 4;
      break;
    case DeploymentKind::Custom:
      throw Error(ErrorCode::InvalidArgument, "custom deployments need an explicit catalog");
  }
  if (decoys > 0) {
    services.push_back(base.at("GitLab"));
    services.push_back(base.at("ApacheStruts"));
    for (int i = 1; i <= decoys; ++i) services.push_back(make_decoy(i));
  }
  return {AttackGraph(std::move(services)), budget, kind, std::string(to_string(kind))};
}

std::vector<std::string> validate_service(const ServiceSpec& svc) {
  std::vector<std::string> out;
  const auto where = "service '" + svc.id + "': ";
  if (svc.id.empty()) out.push_back("service with empty id");
  if (!svc.supports(S::Reconnaissance)) out.push_back(where + "Reconnaissance must be supported");
  if (!std::is_sorted(svc.supported_stages.begin(), svc.supported_stages.end(),
                      [](auto a, auto b) { return ordinal(a) < ordinal(b); }) ||
      std::adjacent_find(svc.supported_stages.begin(), svc.supported_stages.end()) !=
          svc.supported_stages.end())
    out.push_back(where + "supported stages must be strictly ascending");
  if (!svc.vulnerable) {
    if (svc.supported_stages != std::vector<AttackStage>{S::Reconnaissance})
      out.push_back(where + "non-vulnerable service supports only Reconnaissance");
    if (svc.terminal_stage) out.push_back(where + "non-vulnerable service has no terminal stage");
  } else {
    if (!svc.terminal_stage) {
      out.push_back(where + "vulnerable service needs a terminal stage");
    } else if (svc.supported_stages.empty() || svc.supported_stages.back() != *svc.terminal_stage) {
      out.push_back(where + "terminal stage must be the maximum supported stage");
    }
  }
  return out;
}

std::vector<std::string> validate_deployment(const HoneynetConfig& cfg) {
  std::vector<std::string> out;
  const auto n = static_cast<int>(cfg.service_count());
  if (n == 0) out.push_back("catalog is empty");
  if (cfg.budget < 1) out.push_back("budget must be at least 1");
  if (cfg.budget > n) out.push_back("budget exceeds catalog");

  std::set<std::string> seen;
  for (const auto& svc : cfg.catalog.services()) {
    if (!seen.insert(svc.id).second) out.push_back("duplicate service id '" + svc.id + "'");
    auto v = validate_service(svc);
    out.insert(out.end(), v.begin(), v.end());
  }

  auto expect_shape = [&](int services, int vulnerable) {
    if (n != services)
      out.push_back("service-count mismatch: " + std::string(to_string(cfg.kind)) + " expects " +
                    std::to_string(services) + ", got " + std::to_string(n));
    if (cfg.catalog.vulnerable_count() != vulnerable)
      out.push_back("vulnerable-count mismatch: " + std::string(to_string(cfg.kind)) +
                    " expects " + std::to_string(vulnerable) + ", got " +
                    std::to_string(cfg.catalog.vulnerable_count()));
  };
  switch (cfg.kind) {
    case DeploymentKind::FullyVulnerable: expect_shape(4, 4); break;
    case DeploymentKind::SmallMixed: expect_shape(4, 2); break;
    case DeploymentKind::LargeMixed: expect_shape(6, 2); break;
    case DeploymentKind::Custom: break;
  }
  return out;
}

void to_json(nlohmann::json& j, const ServiceSpec& svc) {
  auto stages = nlohmann::json::array();
  for (auto s : svc.supported_stages) stages.push_back(to_string(s));
  j = {{"id", svc.id},
       {"display_name", svc.display_name},
       {"family", svc.family},
       {"port", svc.port},
       {"vulnerable", svc.vulnerable},
       {"supported_stages", stages},
       {"terminal_stage", svc.terminal_stage ? nlohmann::json(to_string(*svc.terminal_stage))
                                             : nlohmann::json(nullptr)}};
}

namespace {

AttackStage stage_field(const nlohmann::json& v) {
  auto s = parse_stage(v.get<std::string>());
  if (!s) throw Error(ErrorCode::ConfigParse, "unknown stage '" + v.get<std::string>() + "'");
  return *s;
}

}  // namespace

void from_json(const nlohmann::json& j, ServiceSpec& svc) {
  try {
    svc.id = j.at("id").get<std::string>();
    svc.display_name = j.value("display_name", svc.id);
    svc.family = j.value("family", svc.id);
    svc.port = j.value("port", 0);
    svc.vulnerable = j.at("vulnerable").get<bool>();
    svc.supported_stages.clear();
    for (const auto& s : j.at("supported_stages")) svc.supported_stages.push_back(stage_field(s));
    svc.terminal_stage.reset();
    if (j.contains("terminal_stage") && !j["terminal_stage"].is_null())
      svc.terminal_stage = stage_field(j["terminal_stage"]);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("service entry: ") + e.what());
  }
}

nlohmann::json catalog_to_json(const AttackGraph& graph) {
  return {{"services", graph.services()}};
}

AttackGraph catalog_from_json(const nlohmann::json& j) {
  if (!j.contains("services") || !j["services"].is_array())
    throw Error(ErrorCode::ConfigParse, "catalog needs a 'services' list");
  std::vector<ServiceSpec> services;
  for (const auto& entry : j["services"]) services.push_back(entry.get<ServiceSpec>());
  for (const auto& svc : services)
    if (auto v = validate_service(svc); !v.empty()) throw Error(ErrorCode::ConfigParse, v.front());
  return AttackGraph(std::move(services));
}

}  // namespace honeynet
