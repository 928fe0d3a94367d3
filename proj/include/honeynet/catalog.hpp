#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "honeynet/stage.hpp"

namespace honeynet {

/// One honeypot service that can be exposed to attackers.
struct ServiceSpec {
  std::string id;
  std::string display_name;
  /// Key into the signature catalog; decoy instances share "other".
  std::string family;
  int port = 0;
  bool vulnerable = false;
  /// Stages this service supports, ascending by ordinal. Not necessarily contiguous.
  std::vector<AttackStage> supported_stages;
  std::optional<AttackStage> terminal_stage;

  bool supports(AttackStage s) const;
  StageSet supported_set() const;

  friend bool operator==(const ServiceSpec&, const ServiceSpec&) = default;
};

/// Smallest supported stage above `current`, or nullopt (done) at the terminal stage.
/// Throws Error(StageNotSupported) if `current` is not part of the service chain.
std::optional<AttackStage> next_stage(const ServiceSpec& svc, AttackStage current);

/// Stages supported by `svc` with ordinal <= `upto`, i.e. what an attacker holding
/// `upto` has completed along this service's chain.
StageSet chain_prefix(const ServiceSpec& svc, AttackStage upto);

/// Per-service exploitation chains. Nodes are (service, stage) pairs; each vulnerable
/// service contributes a single path along its supported stages.
class AttackGraph {
 public:
  struct Edge {
    std::string service;
    AttackStage from;
    AttackStage to;
    friend bool operator==(const Edge&, const Edge&) = default;
  };

  AttackGraph() = default;
  explicit AttackGraph(std::vector<ServiceSpec> services);

  const std::vector<ServiceSpec>& services() const { return services_; }
  std::size_t size() const { return services_.size(); }
  const ServiceSpec* find(std::string_view id) const;
  const ServiceSpec& at(std::string_view id) const;
  /// Index of `id` in services(), or -1.
  int index_of(std::string_view id) const;
  int vulnerable_count() const;

  std::vector<Edge> edges() const;
  std::vector<std::string> ids() const;

  friend bool operator==(const AttackGraph&, const AttackGraph&) = default;

 private:
  std::vector<ServiceSpec> services_;
};

/// The five service templates: GitLab, Xdebug, ApacheStruts, DockerAPI, Others.
/// The "Others" row has id "Other" and is instantiated per deployment via make_decoy.
AttackGraph builtin_catalog();

/// Decoy instance of the "Others" template, e.g. make_decoy(2) -> "Other2".
ServiceSpec make_decoy(int index);

enum class DeploymentKind { FullyVulnerable, SmallMixed, LargeMixed, Custom };

std::string_view to_string(DeploymentKind kind);
std::optional<DeploymentKind> parse_deployment_kind(std::string_view name);

struct HoneynetConfig {
  AttackGraph catalog;
  int budget = 1;
  DeploymentKind kind = DeploymentKind::Custom;
  /// Free-form for custom deployments, otherwise the canonical kind name.
  std::string name;

  std::size_t service_count() const { return catalog.size(); }
};

/// Named deployment: fully_vulnerable (4 vulnerable), small_mixed (GitLab, ApacheStruts,
/// 2 decoys), large_mixed (GitLab, ApacheStruts, 4 decoys).
HoneynetConfig make_deployment(DeploymentKind kind, int budget = 1);

/// All invariant violations of `cfg`; empty means ok.
std::vector<std::string> validate_deployment(const HoneynetConfig& cfg);

/// Invariant violations of a single service definition.
std::vector<std::string> validate_service(const ServiceSpec& svc);

void to_json(nlohmann::json& j, const ServiceSpec& svc);
void from_json(const nlohmann::json& j, ServiceSpec& svc);
nlohmann::json catalog_to_json(const AttackGraph& graph);
AttackGraph catalog_from_json(const nlohmann::json& j);

}  // namespace honeynet
