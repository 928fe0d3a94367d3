#include "honeynet/stage.hpp"

#include <cctype>

#include "honeynet/error.hpp"

namespace honeynet {

std::string_view to_string(AttackStage s) {
  switch (s) {
    case AttackStage::Reconnaissance: return "Reconnaissance";
    case AttackStage::InitialAccess: return "InitialAccess";
    case AttackStage::UserDataExfil: return "UserDataExfil";
    case AttackStage::PrivEsc: return "PrivEsc";
    case AttackStage::RootDataExfil: return "RootDataExfil";
  }
  return "?";
}

std::optional<AttackStage> parse_stage(std::string_view text) {
  std::string key;
  for (char c : text)
    if (std::isalnum(static_cast<unsigned char>(c)))
      key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));

  struct Alias {
    std::string_view key;
    AttackStage stage;
  };
  static constexpr Alias kAliases[] = {
      {"reconnaissance", AttackStage::Reconnaissance},
      {"recon", AttackStage::Reconnaissance},
      {"discovery", AttackStage::Reconnaissance},
      {"scan", AttackStage::Reconnaissance},
      {"scanning", AttackStage::Reconnaissance},
      {"servicescanning", AttackStage::Reconnaissance},
      {"initialaccess", AttackStage::InitialAccess},
      {"userdataexfil", AttackStage::UserDataExfil},
      {"userdataexfiltration", AttackStage::UserDataExfil},
      {"userleveldataexfiltration", AttackStage::UserDataExfil},
      {"dataexfil", AttackStage::UserDataExfil},
      {"dataexfiltration", AttackStage::UserDataExfil},
      {"privesc", AttackStage::PrivEsc},
      {"privilegeescalation", AttackStage::PrivEsc},
      {"rootdataexfil", AttackStage::RootDataExfil},
      {"rootexfil", AttackStage::RootDataExfil},
      {"rootdataexfiltration", AttackStage::RootDataExfil},
      {"rootleveldataexfiltration", AttackStage::RootDataExfil},
  };
  for (const auto& a : kAliases)
    if (a.key == key) return a.stage;
  return std::nullopt;
}

std::string to_string(StageSet set) {
  std::string out = "{";
  bool first = true;
  set.for_each([&](AttackStage s) {
    if (!first) out += ", ";
    out += to_string(s);
    first = false;
  });
  return out + "}";
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::StageNotSupported: return "stage-not-supported";
    case ErrorCode::CatalogMiss: return "catalog-miss";
    case ErrorCode::EpochMismatch: return "epoch-mismatch";
    case ErrorCode::MissingPlaceholder: return "missing-placeholder";
    case ErrorCode::ConfigParse: return "config-parse";
    case ErrorCode::BackendUnreachable: return "backend-unreachable";
    case ErrorCode::BackendAuthMissing: return "backend-auth-missing";
    case ErrorCode::EmptyAxis: return "empty-axis";
    case ErrorCode::EmptyGroup: return "empty-group";
    case ErrorCode::Io: return "io";
  }
  return "error";
}

}  // namespace honeynet
