#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "honeynet/attacker.hpp"
#include "honeynet/catalog.hpp"
#include "honeynet/rng.hpp"
#include "honeynet/stage.hpp"

namespace honeynet {

/// Synthetic clock: each epoch spans this many microseconds.
inline constexpr std::int64_t kEpochMicros = 60'000'000;

struct IdsAlert {
  int epoch = 0;
  std::int64_t timestamp_us = 0;
  std::string src;
  std::string dest_service;
  int dest_port = 0;
  std::int64_t signature_id = 0;
  std::string signature;
  std::string category;
  int severity = 3;  ///< 1 = most severe, 3 = least (Suricata convention)
  std::optional<AttackStage> stage_hint;

  friend bool operator==(const IdsAlert&, const IdsAlert&) = default;
};

struct EpochObservation {
  int epoch = 0;
  std::vector<IdsAlert> alerts;
  std::set<std::string> exposed_last;

  friend bool operator==(const EpochObservation&, const EpochObservation&) = default;
};

struct NoiseConfig {
  /// False-positive alerts per catalog service per epoch (Bernoulli rate).
  double false_positive_rate = 0.1;
  /// Chance a corruptible alert's stage hint is swapped for an adjacent stage.
  double hint_corruption_rate = 0.1;
  /// Each exploit action yields 1..max_alerts_per_exploit alerts.
  int max_alerts_per_exploit = 2;

  static NoiseConfig none() { return {0.0, 0.0, 2}; }

  friend bool operator==(const NoiseConfig&, const NoiseConfig&) = default;
};

std::vector<std::string> validate_noise(const NoiseConfig& noise);

struct SignatureEntry {
  std::int64_t sid = 0;
  std::string signature;
  std::string category;
  int severity = 3;
};

/// Suricata-style signatures per (service family, stage), plus the broad-scan
/// signature and a false-positive pool.
class SignatureCatalog {
 public:
  static SignatureCatalog builtin();
  static SignatureCatalog from_json(const nlohmann::json& j);

  /// Throws Error(CatalogMiss) for an unknown (family, stage).
  const std::vector<SignatureEntry>& lookup(std::string_view family, AttackStage stage) const;
  const SignatureEntry& scan() const { return scan_; }
  const std::vector<SignatureEntry>& noise() const { return noise_; }

 private:
  SignatureEntry scan_;
  std::vector<SignatureEntry> noise_;
  std::map<std::string, std::map<AttackStage, std::vector<SignatureEntry>>, std::less<>> families_;
};

/// Raw contents of the shipped signature catalog file.
std::string_view builtin_signatures_json();

struct AlertContext {
  const AttackGraph& catalog;
  const SignatureCatalog& signatures;
  std::string attacker_token;
};

/// Alerts produced by one epoch's attacker actions, plus injected noise.
///
/// Scan actions yield one scan alert per scanned service. Exploit actions yield 1..k
/// alerts from the (family, stage) catalog entry; the first keeps the true stage hint,
/// later ones and scan/noise alerts may have their hint corrupted.
std::vector<IdsAlert> synthesize_alerts(const std::vector<AttackerAction>& actions, int epoch,
                                        const NoiseConfig& noise, const AlertContext& ctx,
                                        Rng& rng);

/// Bundle alerts (stable-sorted by timestamp) with the exposure in force.
/// Throws Error(EpochMismatch) if any alert carries a different epoch.
EpochObservation aggregate_epoch(std::vector<IdsAlert> alerts, std::set<std::string> exposed,
                                 int epoch);

/// Text digest for the LLM prompt: one line per (service, signature) group with a count,
/// most severe first. Lowest-severity groups are dropped first to stay within budget_chars.
std::string summarize_for_prompt(const EpochObservation& obs, std::size_t budget_chars);

inline constexpr std::string_view kNoAlertsDigest = "no alerts observed this epoch";

/// EVE-style alert event (one JSON object per line in exported logs).
nlohmann::json to_eve_json(const IdsAlert& alert);
IdsAlert from_eve_json(const nlohmann::json& j);

/// Deterministic pseudo-addresses for tokens and services.
std::string token_ip(std::string_view token);
std::string service_ip(std::string_view service_id);
std::string format_timestamp(std::int64_t timestamp_us);

}  // namespace honeynet
