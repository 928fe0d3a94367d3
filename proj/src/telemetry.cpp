#include "honeynet/telemetry.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <tuple>

#include <nlohmann/json.hpp>

#include "embedded_data.inc"
#include "honeynet/error.hpp"

namespace honeynet {

std::string_view builtin_signatures_json() { return embedded::kSignaturesJson; }

std::vector<std::string> validate_noise(const NoiseConfig& noise) {
  std::vector<std::string> out;
  if (!(noise.false_positive_rate >= 0.0 && noise.false_positive_rate <= 1.0))
    out.push_back("false_positive_rate must be in [0, 1]");
  if (!(noise.hint_corruption_rate >= 0.0 && noise.hint_corruption_rate <= 1.0))
    out.push_back("hint_corruption_rate must be in [0, 1]");
  if (noise.max_alerts_per_exploit < 1) out.push_back("max_alerts_per_exploit must be >= 1");
  return out;
}

namespace {

SignatureEntry entry_from_json(const nlohmann::json& j) {
  return {j.at("sid").get<std::int64_t>(), j.at("signature").get<std::string>(),
          j.at("category").get<std::string>(), j.at("severity").get<int>()};
}

}  // namespace

SignatureCatalog SignatureCatalog::from_json(const nlohmann::json& j) {
  SignatureCatalog out;
  try {
    out.scan_ = entry_from_json(j.at("scan"));
    for (const auto& e : j.at("noise")) out.noise_.push_back(entry_from_json(e));
    for (const auto& [family, stages] : j.at("families").items()) {
      auto& dst = out.families_[family];
      for (const auto& [name, entries] : stages.items()) {
        auto stage = parse_stage(name);
        if (!stage) throw Error(ErrorCode::ConfigParse, "signature catalog: bad stage " + name);
        for (const auto& e : entries) dst[*stage].push_back(entry_from_json(e));
        if (dst[*stage].empty())
          throw Error(ErrorCode::ConfigParse, "signature catalog: empty entry " + family + "/" + name);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("signature catalog: ") + e.what());
  }
  if (out.noise_.empty()) throw Error(ErrorCode::ConfigParse, "signature catalog: empty noise pool");
  return out;
}

SignatureCatalog SignatureCatalog::builtin() {
  static const SignatureCatalog cached = from_json(nlohmann::json::parse(builtin_signatures_json()));
  return cached;
}

const std::vector<SignatureEntry>& SignatureCatalog::lookup(std::string_view family,
                                                            AttackStage stage) const {
  if (auto f = families_.find(family); f != families_.end())
    if (auto s = f->second.find(stage); s != f->second.end()) return s->second;
  throw Error(ErrorCode::CatalogMiss,
              "no signatures for (" + std::string(family) + ", " + std::string(to_string(stage)) + ")");
}

namespace {

AttackStage adjacent_stage(AttackStage s, Rng& rng) {
  const int i = ordinal(s);
  if (i == 0) return stage_from_ordinal(1);
  if (i == kStageCount - 1) return stage_from_ordinal(kStageCount - 2);
  return stage_from_ordinal(rng.bernoulli(0.5) ? i + 1 : i - 1);
}

}  // namespace

std::vector<IdsAlert> synthesize_alerts(const std::vector<AttackerAction>& actions, int epoch,
                                        const NoiseConfig& noise, const AlertContext& ctx,
                                        Rng& rng) {
  std::vector<IdsAlert> out;
  const std::int64_t epoch_start = static_cast<std::int64_t>(epoch) * kEpochMicros;
  std::int64_t seq = 0;

  auto make = [&](const ServiceSpec& svc, const SignatureEntry& sig, std::string src,
                  std::optional<AttackStage> hint, std::int64_t ts) {
    return IdsAlert{epoch, ts, std::move(src), svc.id, svc.port, sig.sid, sig.signature,
                    sig.category, sig.severity, hint};
  };
  auto maybe_corrupt = [&](std::optional<AttackStage> hint) {
    if (hint && noise.hint_corruption_rate > 0.0 && rng.bernoulli(noise.hint_corruption_rate))
      return std::optional<AttackStage>(adjacent_stage(*hint, rng));
    return hint;
  };

  for (const auto& action : actions) {
    if (action.kind == ActionKind::Scan) {
      for (const auto& id : action.services) {
        const auto* svc = ctx.catalog.find(id);
        if (!svc) throw Error(ErrorCode::CatalogMiss, "scan of unknown service " + id);
        out.push_back(make(*svc, ctx.signatures.scan(), ctx.attacker_token,
                           maybe_corrupt(AttackStage::Reconnaissance), epoch_start + (++seq) * 1000));
      }
      continue;
    }
    if (action.services.size() != 1 || !action.stage)
      throw Error(ErrorCode::InvalidArgument, "exploit action needs one service and a stage");
    const auto* svc = ctx.catalog.find(action.services.front());
    if (!svc) throw Error(ErrorCode::CatalogMiss, "exploit of unknown service " + action.services.front());
    const auto& entries = ctx.signatures.lookup(svc->family, *action.stage);
    const auto cap = std::min<std::size_t>(entries.size(),
                                           static_cast<std::size_t>(noise.max_alerts_per_exploit));
    const auto count = 1 + rng.below(cap);
    for (std::size_t i = 0; i < count; ++i) {
      auto hint = i == 0 ? action.stage : maybe_corrupt(action.stage);
      out.push_back(make(*svc, entries[i], ctx.attacker_token, hint, epoch_start + (++seq) * 1000));
    }
  }

  if (noise.false_positive_rate > 0.0) {
    const auto& pool = ctx.signatures.noise();
    for (const auto& svc : ctx.catalog.services()) {
      if (!rng.bernoulli(noise.false_positive_rate)) continue;
      const auto& sig = pool[rng.below(pool.size())];
      auto src = "scanner-" + std::to_string(rng.below(256));
      auto offset = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(kEpochMicros)));
      out.push_back(make(svc, sig, std::move(src), maybe_corrupt(AttackStage::Reconnaissance),
                         epoch_start + offset));
    }
  }
  return out;
}

EpochObservation aggregate_epoch(std::vector<IdsAlert> alerts, std::set<std::string> exposed,
                                 int epoch) {
  for (const auto& a : alerts)
    if (a.epoch != epoch)
      throw Error(ErrorCode::EpochMismatch, "alert from epoch " + std::to_string(a.epoch) +
                                                " aggregated into epoch " + std::to_string(epoch));
  std::stable_sort(alerts.begin(), alerts.end(),
                   [](const IdsAlert& a, const IdsAlert& b) { return a.timestamp_us < b.timestamp_us; });
  return {epoch, std::move(alerts), std::move(exposed)};
}

std::string summarize_for_prompt(const EpochObservation& obs, std::size_t budget_chars) {
  if (budget_chars == 0) throw Error(ErrorCode::InvalidArgument, "budget_chars must be positive");
  if (obs.alerts.empty()) return std::string(kNoAlertsDigest.substr(0, budget_chars));

  struct Group {
    int severity;
    std::string service;
    std::string signature;
    std::string category;
    int count = 0;
    std::map<AttackStage, int> hints;
  };
  std::map<std::tuple<int, std::string, std::string>, Group> groups;
  for (const auto& a : obs.alerts) {
    auto& g = groups[{a.severity, a.dest_service, a.signature}];
    g.severity = a.severity;
    g.service = a.dest_service;
    g.signature = a.signature;
    g.category = a.category;
    ++g.count;
    if (a.stage_hint) ++g.hints[*a.stage_hint];
  }

  std::vector<std::string> lines;
  for (const auto& [key, g] : groups) {
    std::string line = "[sev " + std::to_string(g.severity) + "] " + g.service + " | " +
                       g.signature + " | " + g.category + " | x" + std::to_string(g.count);
    if (!g.hints.empty()) {
      line += " | hints:";
      for (const auto& [stage, n] : g.hints)
        line += " " + std::string(to_string(stage)) + "x" + std::to_string(n);
    }
    lines.push_back(std::move(line));
  }

  // Lines are ordered most severe first; drop from the tail until the digest fits.
  auto render = [&](std::size_t keep) {
    std::string out;
    for (std::size_t i = 0; i < keep; ++i) {
      if (i) out += '\n';
      out += lines[i];
    }
    if (keep < lines.size()) {
      if (keep) out += '\n';
      out += "(" + std::to_string(lines.size() - keep) + " lower-severity groups omitted)";
    }
    return out;
  };
  for (std::size_t keep = lines.size();; --keep) {
    auto text = render(keep);
    if (text.size() <= budget_chars) return text;
    if (keep == 0) break;
  }
  // Not even the omission note fits: hard-truncate the most severe line.
  return lines.front().substr(0, budget_chars);
}

std::string token_ip(std::string_view token) {
  return "198.51.100." + std::to_string(fnv1a(token) % 254 + 1);
}

std::string service_ip(std::string_view service_id) {
  return "10.0.0." + std::to_string(fnv1a(service_id) % 254 + 1);
}

std::string format_timestamp(std::int64_t timestamp_us) {
  using namespace std::chrono;
  const sys_days base = year{2025} / January / 1;
  const auto tp = sys_time<microseconds>(base) + microseconds(timestamp_us);
  const auto day = floor<days>(tp);
  const year_month_day ymd{day};
  const hh_mm_ss tod{tp - day};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%06lld+0000",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()), static_cast<long long>(tod.hours().count()),
                static_cast<long long>(tod.minutes().count()),
                static_cast<long long>(tod.seconds().count()),
                static_cast<long long>(tod.subseconds().count()));
  return buf;
}

nlohmann::json to_eve_json(const IdsAlert& a) {
  return {
      {"timestamp", format_timestamp(a.timestamp_us)},
      {"event_type", "alert"},
      {"src_ip", token_ip(a.src)},
      {"dest_ip", service_ip(a.dest_service)},
      {"dest_port", a.dest_port},
      {"proto", "TCP"},
      {"alert",
       {{"action", "allowed"},
        {"gid", 1},
        {"signature_id", a.signature_id},
        {"rev", 1},
        {"signature", a.signature},
        {"category", a.category},
        {"severity", a.severity}}},
      {"honeynet",
       {{"epoch", a.epoch},
        {"timestamp_us", a.timestamp_us},
        {"src", a.src},
        {"service", a.dest_service},
        {"stage_hint",
         a.stage_hint ? nlohmann::json(to_string(*a.stage_hint)) : nlohmann::json(nullptr)}}},
  };
}

IdsAlert from_eve_json(const nlohmann::json& j) {
  try {
    const auto& alert = j.at("alert");
    const auto& ext = j.at("honeynet");
    IdsAlert a;
    a.epoch = ext.at("epoch").get<int>();
    a.timestamp_us = ext.at("timestamp_us").get<std::int64_t>();
    a.src = ext.at("src").get<std::string>();
    a.dest_service = ext.at("service").get<std::string>();
    a.dest_port = j.at("dest_port").get<int>();
    a.signature_id = alert.at("signature_id").get<std::int64_t>();
    a.signature = alert.at("signature").get<std::string>();
    a.category = alert.at("category").get<std::string>();
    a.severity = alert.at("severity").get<int>();
    if (!ext.at("stage_hint").is_null()) a.stage_hint = parse_stage(ext["stage_hint"].get<std::string>());
    return a;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigParse, std::string("eve record: ") + e.what());
  }
}

}  // namespace honeynet
