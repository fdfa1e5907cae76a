// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "euea/errors.hpp"
#include "euea/skills.hpp"
#include "support.hpp"

using namespace euea;
using namespace euea::testing;

namespace {

const Subgoal kPick{"pick up the Apple", Phase::Interaction, 2};

// Ten steps on distinct frames; steps 4 and 9 are successful pickups.
Memory ten_steps() {
  Memory m(pick_task());
  for (int i = 1; i <= 10; ++i) {
    const bool grab = i == 4 || i == 9;
    Action a = grab ? Action::interact(ActionKind::PickupObject, ObjectRef{"Apple", "Apple_1"})
                    : Action::navigate(ActionKind::MoveAhead);
    std::optional<BoundingBox> box;
    if (grab) box = BoundingBox{16, 16, 48, 48};
    m.append(make_step(solid_frame(static_cast<std::uint8_t>(i)), a, box, ActionResult::Succeeded, kPick,
                       {ObjectRef{"Apple", "Apple_1"}}));
  }
  return m;
}

int count_of(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST_CASE("SAP prompt carries pose, visible set, subgoal and the memory window") {
  const Memory m = ten_steps();
  const Prompt p = build_prompt(SkillKind::SAP, m, 5, 4);
  REQUIRE(p.frames.size() == 1);
  CHECK(p.frames[0] == m.at(5).frame);
  CHECK(p.text.find("pick up the Apple") != std::string::npos);
  CHECK(p.text.find("Apple") != std::string::npos);
  for (int s = 1; s <= 4; ++s) CHECK(count_of(p.text, "Step " + std::to_string(s) + ":") == 1);
  CHECK(count_of(p.text, "Step 5:") == 0);

  const Prompt late = build_prompt(SkillKind::SAP, m, 10, 4);
  CHECK(count_of(late.text, "Step 5:") == 0);
  for (int s = 6; s <= 9; ++s) CHECK(count_of(late.text, "Step " + std::to_string(s) + ":") == 1);
}

TEST_CASE("action grounding looks at the previous and current frame") {
  const Memory m = ten_steps();
  const Prompt p = build_prompt(SkillKind::AG, m, 5, 4);
  REQUIRE(p.frames.size() == 2);
  CHECK(p.frames[0] == m.at(4).frame);
  CHECK(p.frames[1] == m.at(5).frame);
  CHECK_THROWS_AS(build_prompt(SkillKind::AG, m, 1, 4), MissingContext);
}

TEST_CASE("missing fields are named") {
  Memory history(pick_task());
  StepDraft d;
  d.frame = solid_frame(1);
  d.subgoal = kPick;
  try {
    build_prompt(SkillKind::OD, history, d);
    FAIL("expected MissingContext");
  } catch (const MissingContext& e) {
    CHECK(std::string(e.what()) == "action");
  }
  d.action = Action::navigate(ActionKind::MoveAhead);
  CHECK_THROWS_WITH_AS(build_prompt(SkillKind::OD, history, d), "object", MissingContext);
}

TEST_CASE("frame lists per skill") {
  const Memory m = ten_steps();
  CHECK(build_prompt(SkillKind::OR, m, 3, 4).frames.size() == 1);
  CHECK(build_prompt(SkillKind::OD, m, 4, 4).frames.size() == 1);
  CHECK(build_prompt(SkillKind::ASP, m, 4, 4).frames.size() == 1);
  // GRSub sees the whole run of its subgoal plus the current frame.
  CHECK(build_prompt(SkillKind::GRSub, m, 5, 4).frames.size() == 5);
  PromptOptions opt;
  opt.frame_budget = 3;
  const Prompt main = build_prompt(SkillKind::GRMain, m.prefix(9), StepDraft::from_step(m.at(10)), opt);
  REQUIRE(main.frames.size() == 3);
  CHECK(main.frames.back() == m.at(10).frame);
}

TEST_CASE("prompts are deterministic") {
  const Memory m = ten_steps();
  for (auto kind : {SkillKind::OR, SkillKind::SAP, SkillKind::STP, SkillKind::GRSub, SkillKind::FSC}) {
    const Prompt a = build_prompt(kind, m, 7, 4);
    const Prompt b = build_prompt(kind, m, 7, 4);
    CHECK(a.text == b.text);
    CHECK(a.frames == b.frames);
  }
}

TEST_CASE("recovery and feedback suffixes name the failed pair") {
  const Action failed = Action::interact(ActionKind::PickupObject, ObjectRef{"Apple", "Apple_1"});
  const std::string r = augment_recovery("base", failed);
  CHECK(r.rfind("base", 0) == 0);
  CHECK(r.find("PickupObject Apple") != std::string::npos);
  const std::string f = augment_env_feedback("base", failed);
  CHECK(f.find("PickupObject Apple failed") != std::string::npos);
}

TEST_CASE("answer parsing") {
  CHECK(std::get<YesNo>(parse_response(SkillKind::ASP, "Yes")).value);
  CHECK_FALSE(std::get<YesNo>(parse_response(SkillKind::GRSub, " no. ")).value);
  CHECK(std::get<Box>(parse_response(SkillKind::OD, "[12, 4, 30, 22]")).box == BoundingBox{12, 4, 30, 22});
  CHECK_THROWS_AS(parse_response(SkillKind::SAP, "open the pod bay doors"), ParseFailure);
  CHECK_THROWS_AS(parse_response(SkillKind::OD, "[30, 4, 12, 22]"), ParseFailure);
  CHECK_THROWS_AS(parse_response(SkillKind::ASP, "Maybe"), ParseFailure);
  CHECK_THROWS_AS(parse_response(SkillKind::FSC, "   "), ParseFailure);
  CHECK(std::get<ObjectSet>(parse_response(SkillKind::OR, "None")).names.empty());
  auto sap = std::get<ActionChoice>(parse_response(SkillKind::SAP, "pickupobject Apple"));
  CHECK(sap.action == ActionKind::PickupObject);
  CHECK(sap.object == std::optional<std::string>("Apple"));
  CHECK_THROWS_AS(parse_response(SkillKind::SAP, "MoveAhead Apple"), ParseFailure);
  CHECK_THROWS_AS(parse_response(SkillKind::SAP, "PickupObject"), ParseFailure);
}

TEST_CASE("answer rendering") {
  CHECK(render_answer(ObjectSet{{"Mug", "Apple"}}) == "Apple, Mug");
  CHECK(render_answer(ActionChoice{ActionKind::PickupObject, "Apple"}) == "PickupObject Apple");
  CHECK(render_answer(ActionChoice{ActionKind::RotateLeft, std::nullopt}) == "RotateLeft");
  CHECK(render_answer(YesNo{false}) == "No");
  CHECK(render_answer(Box{{1, 2, 3, 4}}) == "[1, 2, 3, 4]");
  CHECK(render_answer(ActionWithBox{ActionKind::PutObject, "Mug", {1, 2, 3, 4}}) == "PutObject Mug [1, 2, 3, 4]");
  CHECK(render_answer(SubgoalList{{Subgoal{"go to the Mug", Phase::Navigation, 1}}}) ==
        "1. Navigation: go to the Mug");
}

TEST_CASE("render then parse is the identity on 1000 random answers") {
  Rng rng(2026);
  for (int i = 0; i < 1000; ++i) {
    const SkillKind kind = kAllSkillKinds[rng.below(kAllSkillKinds.size())];
    const SkillOutput out = random_output(kind, rng);
    const std::string text = render_answer(out);
    CAPTURE(text);
    CHECK(parse_response(kind, text) == out);
  }
}

TEST_CASE("template files are validated") {
  const auto& builtin = PromptTemplates::builtin();
  for (auto kind : kAllSkillKinds) CHECK_FALSE(builtin.text(kind).empty());

  std::string text;
  for (auto kind : kAllSkillKinds) {
    std::string body = "ask";
    for (const auto& ph : template_placeholders(kind)) body += " {" + ph + "}";
    std::string name(to_string(kind));
    for (auto& c : name) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    text += "[" + name + "]\n" + body + "\n";
  }
  const auto custom = PromptTemplates::parse(text);
  CHECK(build_prompt(SkillKind::OR, ten_steps(), 2, 4).text != "ask");
  PromptOptions opt;
  opt.templates = &custom;
  StepDraft draft;
  draft.frame = solid_frame(1);
  CHECK(build_prompt(SkillKind::OR, Memory(pick_task()), draft, opt).text == "ask");

  CHECK_THROWS_AS(PromptTemplates::parse("[OR]\nonly one\n"), ConfigError);
  std::string stray = text;
  stray.replace(stray.find("[OR]\nask"), 8, "[OR]\nask {pose}");
  CHECK_THROWS_AS(PromptTemplates::parse(stray), ConfigError);
}
