// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "euea/agent.hpp"
#include "euea/errors.hpp"
#include "euea/rng.hpp"
#include "stub_backend.hpp"
#include "support.hpp"

using namespace euea;
using namespace euea::testing;

namespace {

RecoveryCandidate cand(int index, double score) {
  return RecoveryCandidate{index, ActionChoice{ActionKind::RotateLeft, std::nullopt}, score, ""};
}

StepDraft sap_draft() {
  StepDraft d;
  d.frame = solid_frame(9);
  d.visible = std::set<ObjectRef>{ObjectRef{"Apple", "Apple_1"}};
  d.pose = Pose{1, 0, Heading::East};
  d.subgoal = Subgoal{"pick up the Apple", Phase::Interaction, 2};
  return d;
}

const Action kFailedPickup = Action::interact(ActionKind::PickupObject, ObjectRef{"Apple", std::nullopt});

}  // namespace

TEST_CASE("failure means an unchanged frame") {
  Frame a = solid_frame(7);
  CHECK(detect_failure(a, solid_frame(7)));
  std::vector<std::uint8_t> px(4 * 4 * 3, 7);
  px[5] = 8;
  CHECK_FALSE(detect_failure(a, Frame(4, 4, px)));
  CHECK_THROWS_AS(detect_failure(a, solid_frame(7, 5, 4)), DimensionMismatch);
}

TEST_CASE("candidate selection") {
  std::vector<RecoveryCandidate> c = {cand(1, 2.1), cand(2, 0.4), cand(3, 3.3)};
  CHECK(c[select_candidate(c)].index == 2);

  std::vector<RecoveryCandidate> tied = {cand(3, 0.5), cand(1, 0.5), cand(2, 0.9)};
  CHECK(tied[select_candidate(tied)].index == 1);

  CHECK_THROWS_AS(select_candidate(std::vector<RecoveryCandidate>{}), std::invalid_argument);
}

TEST_CASE("selection is unchanged by strictly increasing score maps") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<RecoveryCandidate> c;
    const int n = rng.range(1, 10);
    for (int i = 1; i <= n; ++i) c.push_back(cand(i, static_cast<double>(rng.range(0, 6)) / 2.0));
    const int chosen = c[select_candidate(c)].index;
    for (auto f : {+[](double x) { return std::exp(x); }, +[](double x) { return 3.0 * x + 1.0; },
                   +[](double x) { return std::log1p(x); }}) {
      auto m = c;
      for (auto& x : m) x.score = f(x.score);
      CHECK(m[select_candidate(m)].index == chosen);
    }
  }
}

TEST_CASE("recovery picks the most likely alternative") {
  StubBackend b;
  b.set(SkillKind::SAP, {{"PickupObject Apple", -0.01}, {"RotateLeft", -0.2}, {"OpenObject Apple", -0.7}});
  b.set(SkillKind::OD, {{"[16, 16, 48, 48]", 0.0}});
  AgentConfig cfg;
  cfg.n = 3;
  const Memory history(pick_task());
  auto out = recover(kFailedPickup, BoundingBox{0, 0, 2, 2}, history, sap_draft(), b, cfg);
  REQUIRE(out.candidates.size() == 3);
  CHECK(out.candidates[0].score == doctest::Approx(0.02));
  CHECK(out.candidates[1].score == doctest::Approx(0.2));
  CHECK(out.candidates[2].score == doctest::Approx(1.4));
  // The failed pair stays in the pool; it is simply the likeliest here.
  CHECK(out.chosen == 0);
  CHECK_FALSE(out.od_fallback);
  CHECK(out.bbox == BoundingBox{16, 16, 48, 48});
  REQUIRE(b.requests.size() == 2);
  CHECK(b.requests[0].sample_count == 3);
  CHECK(b.requests[0].prompt_text.find("PickupObject Apple just failed") != std::string::npos);
}

TEST_CASE("recovery can choose a navigation action without detection") {
  StubBackend b;
  b.set(SkillKind::SAP, {{"OpenObject Apple", -0.7}, {"RotateLeft", -0.2}});
  AgentConfig cfg;
  cfg.n = 2;
  auto out = recover(kFailedPickup, std::nullopt, Memory(pick_task()), sap_draft(), b, cfg);
  CHECK(out.action == Action::navigate(ActionKind::RotateLeft));
  CHECK_FALSE(out.bbox.has_value());
  CHECK(b.requests.size() == 1);
}

TEST_CASE("recovery falls back to re-detection when every sample repeats the failure") {
  StubBackend b;
  b.set(SkillKind::SAP, {{"PickupObject Apple", 0.0}});
  b.set(SkillKind::OD, {{"[0, 0, 8, 8]", -0.5}, {"[16, 16, 48, 48]", -0.1}, {"[16, 16, 48, 48]", -0.1}});
  AgentConfig cfg;
  cfg.n = 3;
  auto out = recover(kFailedPickup, BoundingBox{0, 0, 8, 8}, Memory(pick_task()), sap_draft(), b, cfg);
  CHECK(out.od_fallback);
  CHECK(out.action == kFailedPickup);
  REQUIRE(out.candidates.size() == 3);
  CHECK(std::holds_alternative<Box>(out.candidates[0].choice));
  CHECK(out.candidates[out.chosen].index == 2);
  CHECK(out.bbox == BoundingBox{16, 16, 48, 48});
  CHECK(b.requests.back().sample_count == 3);
}

TEST_CASE("recovery gives up when nothing parses") {
  StubBackend b;
  b.set(SkillKind::SAP, {{"I am not sure", 0.0}});
  b.set(SkillKind::OD, {{"left side", 0.0}});
  AgentConfig cfg;
  cfg.n = 2;
  CHECK_THROWS_AS(recover(kFailedPickup, std::nullopt, Memory(pick_task()), sap_draft(), b, cfg), RecoveryExhausted);
  CHECK(b.requests.size() == 2u * static_cast<std::size_t>(cfg.parse_retry_limit + 1));
}

TEST_CASE("agent config bounds") {
  AgentConfig c;
  CHECK_NOTHROW(c.validate());
  c.n = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AgentConfig{};
  c.k = -1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = AgentConfig{};
  c.max_steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("oracle episode in the corner room") {
  ScriptedOracle oracle;
  AgentConfig cfg;
  auto r = run_episode(corner_scene(), pick_task(), oracle, cfg);
  CHECK(r.success);
  CHECK(r.goal_condition_rate() == 1.0);
  CHECK(r.steps_taken == 7);
  CHECK(r.transcript.size() == 7);
  CHECK(r.failures == 0);
  CHECK(r.recoveries_attempted == 0);
  CHECK(r.stop_reason == "subgoals_exhausted");
  for (const auto& p : r.prompts) {
    if (p.kind == SkillKind::SAP) CHECK(p.window_steps <= cfg.k);
  }
  int or_calls = 0;
  for (const auto& p : r.prompts) or_calls += p.kind == SkillKind::OR ? 1 : 0;
  CHECK(or_calls == 7);
}

TEST_CASE("a wrong box on the put step") {
  const FaultSchedule faults{{FaultRule{4, 1, Corruption::WrongBox}}};

  SUBCASE("without recovery the agent repeats itself until the budget runs out") {
    ScriptedOracle oracle(faults);
    AgentConfig cfg;
    cfg.recovery_enabled = false;
    cfg.max_steps = 30;
    auto r = run_episode(corner_scene(), pick_task(), oracle, cfg);
    CHECK_FALSE(r.success);
    CHECK(r.stop_reason == "max_steps");
    CHECK(r.steps_taken == 30);
    CHECK(r.recoveries_attempted == 0);
    CHECK(r.failures == 30 - 6);
  }
  SUBCASE("with recovery one resample fixes it") {
    ScriptedOracle oracle(faults);
    auto r = run_episode(corner_scene(), pick_task(), oracle, AgentConfig{});
    CHECK(r.success);
    CHECK(r.failures == 1);
    CHECK(r.recoveries_attempted == 1);
    CHECK(r.recoveries_succeeded == 1);
    CHECK(r.failed_steps == std::vector<int>{7});
    CHECK(r.recovery_triggers == std::vector<int>{7});
  }
  SUBCASE("environment feedback also gets there") {
    ScriptedOracle oracle(faults);
    AgentConfig cfg;
    cfg.recovery_enabled = false;
    cfg.env_feedback = true;
    auto r = run_episode(corner_scene(), pick_task(), oracle, cfg);
    CHECK(r.success);
    CHECK(r.recoveries_attempted == 0);
    bool noticed = false;
    for (const auto& p : r.prompts) noticed = noticed || p.text.find("Environment feedback") != std::string::npos;
    CHECK(noticed);
  }
}

TEST_CASE("episodes are reproducible") {
  const auto ep = generate_episode(TaskType::Clean, 3);
  const FaultSchedule faults{{FaultRule{std::nullopt, 1, Corruption::WrongBox}}};
  ScriptedOracle a(faults), b(faults);
  auto ra = run_episode(ep.scene, ep.task, a, AgentConfig{});
  auto rb = run_episode(ep.scene, ep.task, b, AgentConfig{});
  CHECK(ra.transcript == rb.transcript);
  CHECK(ra.final_frame == rb.final_frame);
}
