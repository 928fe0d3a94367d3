#include <gtest/gtest.h>

#include <cstdlib>
#include <thread>

#include <nlohmann/json.hpp>

#include "honeynet/backend.hpp"
#include "honeynet/error.hpp"
#include "honeynet/llm_policy.hpp"
#include "honeynet/metrics.hpp"
#include "honeynet/simulation.hpp"

// After Eigen: <resolv.h> defines a `_res` macro that collides with Eigen internals.
#include <httplib.h>

using namespace honeynet;
using S = AttackStage;

namespace {

HoneynetConfig fully() { return make_deployment(DeploymentKind::FullyVulnerable); }

const ParsedResponse& ok(const ParseResult& r) {
  if (const auto* f = std::get_if<ParseFailure>(&r)) ADD_FAILURE() << "parse failed: " << f->reason;
  return std::get<ParsedResponse>(r);
}

LlmSettings fast_settings() {
  LlmSettings s;
  s.max_retries = 1;
  s.backoff = std::chrono::milliseconds(0);
  return s;
}

/// Backend that always fails; counts calls.
struct DeadBackend final : ChatBackend {
  mutable int calls = 0;
  ChatResponse complete(const ChatRequest&) const override {
    ++calls;
    throw Error(ErrorCode::BackendUnreachable, "down");
  }
  std::string describe() const override { return "dead"; }
};

}  // namespace

TEST(Parse, PlainJson) {
  auto r = ok(parse_response(R"({"expose": ["GitLab"], "stages": ["Reconnaissance", "InitialAccess"]})", fully()));
  EXPECT_EQ(r.decision.exposed, std::vector<std::string>{"GitLab"});
  EXPECT_EQ(r.prediction.stages, (StageSet{S::Reconnaissance, S::InitialAccess}));
  EXPECT_EQ(r.prediction.target_service, "GitLab");
  EXPECT_FALSE(r.decision.declared_done);
}

TEST(Parse, FencedJsonWithProse) {
  const std::string raw =
      "Looking at the alerts, Xdebug is under attack.\n```json\n"
      "{\"expose\": [\"Xdebug\"], \"stages\": [\"Reconnaissance\"], \"done\": false}\n```\nThanks.";
  auto r = ok(parse_response(raw, fully()));
  EXPECT_EQ(r.decision.exposed, std::vector<std::string>{"Xdebug"});
  EXPECT_EQ(r.prediction.stages, StageSet{S::Reconnaissance});
}

TEST(Parse, NoJsonIsFailure) {
  EXPECT_TRUE(std::holds_alternative<ParseFailure>(parse_response("no json here", fully())));
  EXPECT_TRUE(std::holds_alternative<ParseFailure>(parse_response(R"({"foo": 1})", fully())));
}

TEST(Parse, ResolvesDisplayNamesAndAliases) {
  auto r = ok(parse_response(
      R"({"expose": ["apache struts"], "stages": ["recon", "Initial Access", "privilege escalation"], "target": "Apache Struts", "done": true})",
      fully()));
  EXPECT_EQ(r.decision.exposed, std::vector<std::string>{"ApacheStruts"});
  EXPECT_EQ(r.prediction.target_service, "ApacheStruts");
  EXPECT_TRUE(r.prediction.stages.contains(S::InitialAccess));
  EXPECT_TRUE(r.decision.declared_done);
}

TEST(Parse, DropsUnknownEntriesWithWarnings) {
  auto r = ok(parse_response(R"({"expose": ["Nginx", "GitLab", "Xdebug"], "stages": ["Lateral", "PrivEsc"]})", fully()));
  EXPECT_EQ(r.decision.exposed, std::vector<std::string>{"GitLab"});
  EXPECT_EQ(r.prediction.stages, StageSet{S::PrivEsc});
  EXPECT_GE(r.warnings.size(), 3u);
}

TEST(Parse, SkipsObjectsWithoutRequiredKeys) {
  auto r = ok(parse_response(R"({"note": "x"} then {"expose": ["DockerAPI"], "stages": []})", fully()));
  EXPECT_EQ(r.decision.exposed, std::vector<std::string>{"DockerAPI"});
}

TEST(Prompt, ContainsBudgetAndServices) {
  auto cfg = make_deployment(DeploymentKind::LargeMixed);
  auto prompt = build_prompt("digest-marker", BeliefState::empty(cfg.catalog), cfg, PromptTemplate::builtin());
  EXPECT_NE(prompt.find("budget: 1"), std::string::npos);
  for (const auto& svc : cfg.catalog.services()) EXPECT_NE(prompt.find(svc.display_name), std::string::npos) << svc.id;
  EXPECT_NE(prompt.find("digest-marker"), std::string::npos);
  EXPECT_EQ(prompt.find("{{"), std::string::npos);
}

TEST(Prompt, TemplateErrors) {
  PromptInputs in{"a", "p", "s", "1", "2", "st"};
  EXPECT_THROW(render_template(PromptTemplate("{{alerts}} {{progression}} {{services}}"), in), Error);
  EXPECT_THROW(render_template(PromptTemplate("{{alerts}} {{progression}} {{services}} {{budget}} {{bogus}}"), in),
               Error);
  EXPECT_EQ(render_template(PromptTemplate("{{alerts}}|{{progression}}|{{services}}|{{budget}}"), in), "a|p|s|1");
}

TEST(Prompt, ProgressionReflectsLastDecision) {
  auto cfg = fully();
  auto belief = BeliefState::empty(cfg.catalog);
  EXPECT_NE(describe_progression(belief).find("no attack progression inferred yet"), std::string::npos);
}

TEST(MockBackend, IndexesByKeyAndTurnAndRepeatsLast) {
  ScriptedMockBackend mock({{"GitLab", {"a", "b"}}}, {"d"});
  EXPECT_EQ(mock.complete({"GitLab", 0, "", ""}).content, "a");
  EXPECT_EQ(mock.complete({"GitLab", 1, "", ""}).content, "b");
  EXPECT_EQ(mock.complete({"GitLab", 7, "", ""}).content, "b");
  EXPECT_EQ(mock.complete({"Xdebug", 3, "", ""}).content, "d");
  auto round = ScriptedMockBackend::from_json(mock.to_json());
  EXPECT_EQ(round.complete({"GitLab", 1, "", ""}).content, "b");
}

TEST(LlmDecide, FallbackOnBootstrapExposesFirstService) {
  auto cfg = fully();
  DeadBackend dead;
  auto settings = fast_settings();
  auto r = llm_decide(dead, settings, EpochObservation{}, BeliefState::empty(cfg.catalog), cfg, "GitLab");
  EXPECT_TRUE(r.result.fallback);
  EXPECT_EQ(r.result.decision.exposed, std::vector<std::string>{cfg.catalog.services().front().id});
  EXPECT_EQ(dead.calls, 2);
  EXPECT_EQ(r.turn.attempts, 2);
  EXPECT_FALSE(r.turn.error.empty());
}

TEST(LlmDecide, MalformedReplyRepeatsPreviousDecision) {
  auto cfg = fully();
  ScriptedMockBackend mock({{"k", {R"({"expose": ["Xdebug"], "stages": ["Reconnaissance"]})", "no json here"}}});
  auto settings = fast_settings();
  auto first = llm_decide(mock, settings, EpochObservation{}, BeliefState::empty(cfg.catalog), cfg, "k");
  EXPECT_FALSE(first.result.fallback);
  EpochObservation obs;
  obs.epoch = 1;
  auto second = llm_decide(mock, settings, obs, first.result.belief, cfg, "k");
  EXPECT_TRUE(second.result.fallback);
  EXPECT_EQ(second.result.decision.exposed, std::vector<std::string>{"Xdebug"});
  EXPECT_EQ(second.result.prediction.stages, StageSet{S::Reconnaissance});
  EXPECT_EQ(second.turn.raw_response, "no json here");
  EXPECT_FALSE(second.turn.parsed);
}

TEST(LlmDecide, OverBudgetReplyIsTruncated) {
  auto cfg = fully();
  ScriptedMockBackend mock({}, {R"({"expose": ["DockerAPI", "GitLab"], "stages": []})"});
  auto r = llm_decide(mock, fast_settings(), EpochObservation{}, BeliefState::empty(cfg.catalog), cfg, "x");
  EXPECT_EQ(r.result.decision.exposed, std::vector<std::string>{"DockerAPI"});
}

TEST(LlmPolicy, RejectsTinyPromptCap) {
  auto cfg = fully();
  auto settings = fast_settings();
  settings.max_prompt_chars = 100;
  LlmPolicy policy("m", std::make_shared<ScriptedMockBackend>(), settings);
  EpisodeContext ctx;
  ctx.honeynet = &cfg;
  EXPECT_THROW(policy.start(ctx), Error);
}

TEST(LlmPolicy, OverclaimingMockIsPenalized) {
  // The attacker sits at InitialAccess; the model claims RootDataExfil too.
  RunConfig cfg;
  cfg.honeynet = fully();
  cfg.horizon = 2;
  cfg.noise = NoiseConfig::none();
  auto attacker = make_attacker(cfg.honeynet.catalog.at("GitLab"), PersistenceModel::deterministic());
  cfg.attackers = {attacker};
  const std::string expose_only = R"({"expose": ["GitLab"], "stages": []})";
  const std::string overclaim = R"({"expose": ["GitLab"], "stages": ["Reconnaissance", "RootDataExfil"]})";
  auto mock = std::make_shared<ScriptedMockBackend>(
      std::map<std::string, std::vector<std::string>>{{"GitLab", {expose_only, expose_only, overclaim}}});
  LlmPolicy policy("mock", mock, fast_settings());
  auto rec = run_episode(cfg, attacker, policy);
  ASSERT_EQ(rec.epochs.size(), 2u);
  const auto& last = rec.epochs.back();
  EXPECT_EQ(last.ground_truth, (StageSet{S::Reconnaissance, S::InitialAccess}));
  auto counts = compare_stage_sets(last.prediction.stages, last.ground_truth, ScoringMode::Cumulative);
  EXPECT_EQ(counts.tp, 1);
  EXPECT_EQ(counts.fp, 1);
  EXPECT_EQ(counts.fn, 1);
}

TEST(LlmPolicy, TurnsReachSinkBeforeDecisionIsUsed) {
  RunConfig cfg;
  cfg.honeynet = fully();
  cfg.horizon = 3;
  auto attacker = make_attacker(cfg.honeynet.catalog.at("Xdebug"), PersistenceModel::deterministic());
  cfg.attackers = {attacker};
  auto mock = std::make_shared<ScriptedMockBackend>(
      std::map<std::string, std::vector<std::string>>{{"Xdebug", make_aligned_script(cfg.honeynet.catalog, attacker)}});
  LlmPolicy policy("mock", mock, fast_settings());
  std::vector<AgentTurn> turns;
  auto rec = run_episode(cfg, attacker, policy, [&](const AgentTurn& t) { turns.push_back(t); });
  ASSERT_EQ(turns.size(), rec.epochs.size() + 1);
  EXPECT_EQ(turns.front().epoch, 0);
  for (std::size_t i = 0; i < rec.epochs.size(); ++i) {
    ASSERT_TRUE(turns[i + 1].decision);
    EXPECT_EQ(*turns[i + 1].decision, rec.epochs[i].decision);
  }
}

TEST(AlignedScript, TracksChainPerTurn) {
  auto catalog = builtin_catalog();
  auto attacker = make_attacker(catalog.at("ApacheStruts"), PersistenceModel::deterministic());
  auto script = make_aligned_script(catalog, attacker);
  ASSERT_EQ(script.size(), 5u);
  auto last = nlohmann::json::parse(script.back());
  EXPECT_EQ(last["stages"].size(), 4u);
  EXPECT_TRUE(last["done"].get<bool>());
  EXPECT_EQ(nlohmann::json::parse(script.front())["stages"].size(), 0u);
}

class HttpBackendTest : public ::testing::Test {
 protected:
  void SetUp() override {
    server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = nlohmann::json::parse(req.body);
      if (fail_) {
        res.status = 503;
        return;
      }
      nlohmann::json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", "pong"}}}}}}};
      res.set_content(reply.dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    ::setenv("HN_TEST_API_KEY", "sekret", 1);
  }
  void TearDown() override {
    server_.stop();
    thread_.join();
  }

  HttpBackendConfig config() const {
    HttpBackendConfig c;
    c.base_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1";
    c.model = "test-model";
    c.api_key_env = "HN_TEST_API_KEY";
    c.timeout_seconds = 5;
    return c;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  bool fail_ = false;
  std::string last_auth_;
  nlohmann::json last_body_;
};

TEST_F(HttpBackendTest, PostsChatCompletion) {
  HttpChatBackend backend(config());
  auto r = backend.complete({"GitLab", 0, "sys", "user prompt"});
  EXPECT_EQ(r.content, "pong");
  EXPECT_EQ(last_auth_, "Bearer sekret");
  EXPECT_EQ(last_body_["model"], "test-model");
  EXPECT_EQ(last_body_["temperature"], 0.0);
  ASSERT_EQ(last_body_["messages"].size(), 2u);
  EXPECT_EQ(last_body_["messages"][0]["role"], "system");
  EXPECT_EQ(last_body_["messages"][1]["content"], "user prompt");
  EXPECT_TRUE(backend.is_network());
}

TEST_F(HttpBackendTest, ServerErrorIsUnreachable) {
  fail_ = true;
  HttpChatBackend backend(config());
  try {
    backend.complete({"GitLab", 0, "", "x"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendUnreachable);
  }
}

TEST_F(HttpBackendTest, NoAuthHeaderWhenKeyEnvEmpty) {
  auto c = config();
  c.api_key_env = "";
  HttpChatBackend backend(c);
  backend.complete({"GitLab", 0, "", "x"});
  EXPECT_EQ(last_auth_, "");
}

TEST(HttpBackend, MissingKeyFailsAtConstruction) {
  ::unsetenv("HN_SURELY_UNSET_KEY");
  HttpBackendConfig c;
  c.api_key_env = "HN_SURELY_UNSET_KEY";
  try {
    HttpChatBackend backend(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BackendAuthMissing);
  }
}

TEST(HttpBackend, ExtractContent) {
  EXPECT_EQ(extract_chat_content(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
  EXPECT_THROW(extract_chat_content("{}"), Error);
}
