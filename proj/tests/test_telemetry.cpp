#include <gtest/gtest.h>

#include <regex>

#include <nlohmann/json.hpp>

#include "honeynet/attacker.hpp"
#include "honeynet/error.hpp"
#include "honeynet/telemetry.hpp"

using namespace honeynet;
using S = AttackStage;

namespace {

IdsAlert alert(const std::string& svc, const std::string& sig, int severity, std::int64_t ts = 0,
               std::optional<S> hint = S::InitialAccess) {
  IdsAlert a;
  a.epoch = 1;
  a.timestamp_us = ts;
  a.src = "attacker-x";
  a.dest_service = svc;
  a.dest_port = 80;
  a.signature_id = 1;
  a.signature = sig;
  a.category = "cat";
  a.severity = severity;
  a.stage_hint = hint;
  return a;
}

struct Fixture {
  AttackGraph catalog = builtin_catalog();
  SignatureCatalog sigs = SignatureCatalog::builtin();
  AlertContext ctx{catalog, sigs, "attacker-GitLab"};
};

}  // namespace

TEST(Signatures, EveryChainStageHasSignatures) {
  auto sigs = SignatureCatalog::builtin();
  const auto catalog = builtin_catalog();
  for (const auto& svc : catalog.services())
    for (auto s : svc.supported_stages) EXPECT_FALSE(sigs.lookup(svc.family, s).empty()) << svc.id;
  EXPECT_FALSE(sigs.noise().empty());
  EXPECT_GE(sigs.scan().severity, 1);
}

TEST(Signatures, UnsupportedStageIsCatalogMiss) {
  try {
    SignatureCatalog::builtin().lookup("struts", S::UserDataExfil);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::CatalogMiss);
  }
}

TEST(Signatures, ParsesShippedFile) {
  auto j = nlohmann::json::parse(builtin_signatures_json());
  auto parsed = SignatureCatalog::from_json(j);
  EXPECT_EQ(parsed.scan().sid, SignatureCatalog::builtin().scan().sid);
}

TEST(Synthesize, ScanYieldsOneAlertPerService) {
  Fixture f;
  Rng rng(1);
  AttackerAction scan{ActionKind::Scan, {"GitLab", "Xdebug"}, std::nullopt};
  auto alerts = synthesize_alerts({scan}, 3, NoiseConfig::none(), f.ctx, rng);
  ASSERT_EQ(alerts.size(), 2u);
  for (const auto& a : alerts) {
    EXPECT_EQ(a.epoch, 3);
    EXPECT_EQ(a.stage_hint, S::Reconnaissance);
    EXPECT_EQ(a.signature_id, f.sigs.scan().sid);
    EXPECT_GE(a.timestamp_us, 3 * kEpochMicros);
    EXPECT_LT(a.timestamp_us, 4 * kEpochMicros);
  }
}

TEST(Synthesize, ExploitAlertCountWithinCapAndFirstHintTrue) {
  Fixture f;
  NoiseConfig noise{0.0, 1.0, 2};  // every corruptible hint gets corrupted
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    Rng rng(seed);
    AttackerAction ex{ActionKind::Exploit, {"GitLab"}, S::PrivEsc};
    auto alerts = synthesize_alerts({ex}, 2, noise, f.ctx, rng);
    ASSERT_GE(alerts.size(), 1u);
    ASSERT_LE(alerts.size(), 2u);
    EXPECT_EQ(alerts[0].stage_hint, S::PrivEsc);
    for (std::size_t i = 1; i < alerts.size(); ++i) {
      ASSERT_TRUE(alerts[i].stage_hint);
      EXPECT_EQ(std::abs(ordinal(*alerts[i].stage_hint) - ordinal(S::PrivEsc)), 1);
    }
  }
}

TEST(Synthesize, NoiseRateMatchesBernoulli) {
  Fixture f;
  NoiseConfig noise{0.3, 0.0, 2};
  Rng rng(9);
  const int epochs = 4000;
  std::size_t total = 0;
  for (int t = 1; t <= epochs; ++t) {
    for (const auto& a : synthesize_alerts({}, t, noise, f.ctx, rng)) {
      EXPECT_EQ(a.src.rfind("scanner-", 0), 0u);
      ++total;
    }
  }
  const double per_service = static_cast<double>(total) / (epochs * f.catalog.size());
  EXPECT_NEAR(per_service, 0.3, 0.02);
}

TEST(Synthesize, SameSeedSameAlerts) {
  Fixture f;
  NoiseConfig noise;
  AttackerAction scan{ActionKind::Scan, {"GitLab"}, std::nullopt};
  AttackerAction ex{ActionKind::Exploit, {"GitLab"}, S::InitialAccess};
  Rng a(5), b(5);
  EXPECT_EQ(synthesize_alerts({scan, ex}, 4, noise, f.ctx, a), synthesize_alerts({scan, ex}, 4, noise, f.ctx, b));
}

TEST(Aggregate, SortsStablyByTimestamp) {
  auto obs = aggregate_epoch({alert("A", "x", 3, 30), alert("B", "y", 3, 10), alert("C", "z", 3, 10)},
                             {"A"}, 1);
  ASSERT_EQ(obs.alerts.size(), 3u);
  EXPECT_EQ(obs.alerts[0].dest_service, "B");
  EXPECT_EQ(obs.alerts[1].dest_service, "C");
  EXPECT_EQ(obs.alerts[2].dest_service, "A");
  EXPECT_EQ(obs.exposed_last, std::set<std::string>{"A"});
}

TEST(Aggregate, RejectsForeignEpoch) {
  auto a = alert("A", "x", 3);
  a.epoch = 2;
  try {
    aggregate_epoch({a}, {}, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EpochMismatch);
  }
}

TEST(Summarize, EmptyObservation) {
  EXPECT_EQ(summarize_for_prompt(EpochObservation{}, 1000), "no alerts observed this epoch");
}

TEST(Summarize, IdenticalAlertsCollapseWithCount) {
  EpochObservation obs{1, {alert("GitLab", "sig", 2), alert("GitLab", "sig", 2), alert("GitLab", "sig", 2)}, {}};
  auto text = summarize_for_prompt(obs, 1000);
  EXPECT_EQ(text.find('\n'), std::string::npos);
  EXPECT_NE(text.find("x3"), std::string::npos) << text;
  EXPECT_NE(text.find("InitialAccessx3"), std::string::npos) << text;
}

TEST(Summarize, TruncationKeepsMostSevere) {
  EpochObservation obs;
  obs.epoch = 1;
  for (int i = 0; i < 99; ++i) obs.alerts.push_back(alert("Other", "noise signature " + std::to_string(i), 3));
  obs.alerts.push_back(alert("GitLab", "critical exploit", 1));
  auto text = summarize_for_prompt(obs, 300);
  EXPECT_LE(text.size(), 300u);
  EXPECT_EQ(text.rfind("[sev 1] GitLab | critical exploit", 0), 0u) << text;
  EXPECT_NE(text.find("lower-severity groups omitted"), std::string::npos);
}

TEST(Summarize, AlwaysWithinBudget) {
  EpochObservation obs;
  obs.epoch = 1;
  for (int i = 0; i < 20; ++i) obs.alerts.push_back(alert("GitLab", std::string(40, 'a' + i % 26), 1 + i % 3));
  for (std::size_t budget : {1u, 5u, 17u, 64u, 200u, 5000u}) EXPECT_LE(summarize_for_prompt(obs, budget).size(), budget);
  EXPECT_THROW(summarize_for_prompt(obs, 0), Error);
}

TEST(Eve, FieldLayout) {
  auto a = alert("GitLab", "ET WEB GitLab exploit", 1, kEpochMicros + 1000, S::InitialAccess);
  a.signature_id = 2030001;
  auto j = to_eve_json(a);
  EXPECT_EQ(j["event_type"], "alert");
  EXPECT_EQ(j["proto"], "TCP");
  EXPECT_EQ(j["timestamp"], "2025-01-01T00:01:00.001000+0000");
  EXPECT_EQ(j["dest_port"], 80);
  EXPECT_EQ(j["alert"]["signature_id"], 2030001);
  EXPECT_EQ(j["alert"]["severity"], 1);
  EXPECT_EQ(j["alert"]["gid"], 1);
  EXPECT_EQ(j["honeynet"]["stage_hint"], "InitialAccess");
  const std::regex ipv4(R"(\d{1,3}\.\d{1,3}\.\d{1,3}\.\d{1,3})");
  EXPECT_TRUE(std::regex_match(j["src_ip"].get<std::string>(), ipv4));
  EXPECT_TRUE(std::regex_match(j["dest_ip"].get<std::string>(), ipv4));
}

TEST(Eve, TimestampCrossesDayBoundary) {
  EXPECT_EQ(format_timestamp(0), "2025-01-01T00:00:00.000000+0000");
  EXPECT_EQ(format_timestamp(86'400'000'000LL + 3'723'000'042LL), "2025-01-02T01:02:03.000042+0000");
}

TEST(Eve, RoundTrip) {
  for (auto hint : {std::optional<S>{}, std::optional<S>{S::RootDataExfil}}) {
    auto a = alert("DockerAPI", "sig", 2, 123456789, hint);
    EXPECT_EQ(from_eve_json(to_eve_json(a)), a);
  }
}

TEST(Eve, AddressesAreStable) {
  EXPECT_EQ(token_ip("attacker-GitLab"), token_ip("attacker-GitLab"));
  EXPECT_EQ(service_ip("GitLab"), service_ip("GitLab"));
}
