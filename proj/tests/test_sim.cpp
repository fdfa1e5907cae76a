// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "euea/agent.hpp"
#include "euea/errors.hpp"
#include "euea/reward.hpp"
#include "euea/rng.hpp"
#include "euea/sim.hpp"
#include "support.hpp"

using namespace euea;
using namespace euea::testing;

namespace {

const VisibleObject& seen(const WorldState& w, const std::string& name) {
  static std::vector<VisibleObject> keep;
  keep = visible_objects(w);
  for (const auto& v : keep) {
    if (v.ref.name == name) return v;
  }
  FAIL("not visible: " << name);
  return keep.front();
}

Task heat_on_table() {
  Task t;
  t.type = TaskType::Heat;
  t.instruction = "put a hot apple on the table";
  GoalCondition hot;
  hot.predicate = Predicate::IsHot;
  hot.object = ObjectRef{"Apple", std::nullopt};
  t.goal_conditions = {hot, in_receptacle("Apple", "Table")};
  return t;
}

}  // namespace

TEST_CASE("reset is deterministic and renders a 64x64 frame") {
  auto a = reset(small_scene(), pick_task());
  auto b = reset(small_scene(), pick_task());
  CHECK(a.frame.width() == 64);
  CHECK(a.frame.height() == 64);
  CHECK(a.frame.pixels().size() == 64u * 64u * 3u);
  CHECK(a.state.agent == Pose{0, 0, Heading::East});
  CHECK(a.frame.hash() == b.frame.hash());
  CHECK(std::equal(a.frame.pixels().begin(), a.frame.pixels().end(), b.frame.pixels().begin()));
}

TEST_CASE("a task naming an absent object is rejected") {
  CHECK_THROWS_AS(reset(small_scene(), pick_task("Mug", "Table")), UnknownObject);
}

TEST_CASE("pickup succeeds only with a box on the object") {
  Simulator sim(small_scene(), pick_task());
  const auto apple = seen(sim.state(), "Apple");
  const Frame before = sim.frame();

  CHECK(sim.step(Action::interact(ActionKind::PickupObject, apple.ref), BoundingBox{0, 0, 8, 8}) ==
        ActionResult::Failed);
  CHECK(sim.frame() == before);
  CHECK_FALSE(sim.state().hand.has_value());

  CHECK(sim.step(Action::interact(ActionKind::PickupObject, apple.ref), apple.box) == ActionResult::Succeeded);
  CHECK(sim.state().hand == std::optional<std::string>("Apple_1"));
  CHECK(sim.frame().hash() != before.hash());
}

TEST_CASE("walking into a wall fails and leaves the frame alone") {
  SceneSpec s = small_scene();
  s.agent_start = Pose{0, 0, Heading::North};
  Simulator sim(s, pick_task());
  const Frame before = sim.frame();
  CHECK(sim.step(Action::navigate(ActionKind::MoveAhead), std::nullopt) == ActionResult::Failed);
  CHECK(sim.frame() == before);
  CHECK(sim.state().agent == s.agent_start);
}

TEST_CASE("visibility cone") {
  SUBCASE("an apple one cell ahead is seen and reachable") {
    Simulator sim(small_scene(), pick_task());
    auto vis = visible_objects(sim.state());
    REQUIRE(vis.size() == 1);
    CHECK(vis[0].ref.name == "Apple");
    CHECK(vis[0].box == BoundingBox{16, 16, 48, 48});
    CHECK(vis[0].reachable);
  }
  SUBCASE("contents of a closed fridge are hidden") {
    SceneSpec s = small_scene();
    s.objects = {make_object("Fridge_1", "Fridge", CellPos{2, 0}),
                 make_object("Apple_1", "Apple", InsideOf{"Fridge_1"})};
    Simulator sim(s, pick_task("Apple", "Fridge"));
    auto refs = visible_refs(sim.state());
    REQUIRE(refs.size() == 1);
    CHECK(refs.begin()->name == "Fridge");
  }
  SUBCASE("facing a wall sees nothing") {
    SceneSpec s = small_scene();
    s.agent_start = Pose{0, 0, Heading::West};
    Simulator sim(s, pick_task());
    CHECK(visible_objects(sim.state()).empty());
  }
}

TEST_CASE("frame hashes follow the state") {
  auto a = reset(small_scene(), pick_task());
  auto b = reset(small_scene(), pick_task());
  CHECK(render(a.state).hash() == render(b.state).hash());
  auto after = step(a.state, Action::interact(ActionKind::PickupObject, ObjectRef{"Apple", std::nullopt}),
                    BoundingBox{16, 16, 48, 48});
  REQUIRE(after.result == ActionResult::Succeeded);
  CHECK(after.frame.hash() != a.frame.hash());
  auto failed = step(a.state, Action::navigate(ActionKind::RotateLeft), std::nullopt);
  REQUIRE(failed.result == ActionResult::Succeeded);
  auto blocked = step(failed.state, Action::navigate(ActionKind::MoveAhead), std::nullopt);
  CHECK(blocked.result == ActionResult::Failed);
  CHECK(blocked.frame.hash() == failed.frame.hash());
}

TEST_CASE("expert plan in the corner room") {
  Simulator sim(corner_scene(), pick_task());
  const auto plan = expert_plan(sim.state(), pick_task());
  std::vector<std::string> texts;
  for (const auto& s : plan.subgoal_list()) texts.push_back(s.text);
  CHECK(texts == std::vector<std::string>{"go to the Apple", "pick up the Apple", "go to the Table",
                                          "put the Apple on the Table"});
  std::vector<ActionKind> kinds;
  for (const auto& st : plan.actions()) kinds.push_back(st.action.kind);
  CHECK(kinds == std::vector<ActionKind>{ActionKind::MoveAhead, ActionKind::MoveAhead, ActionKind::PickupObject,
                                         ActionKind::RotateRight, ActionKind::MoveAhead, ActionKind::MoveAhead,
                                         ActionKind::PutObject});
  for (const auto& st : plan.actions()) CHECK(sim.step(st.action, st.bbox) == ActionResult::Succeeded);
  CHECK(goal_satisfied(sim.state(), pick_task()).all);
}

TEST_CASE("expert plan edge cases") {
  SUBCASE("already satisfied") {
    SceneSpec s = corner_scene();
    s.objects[0].location = InsideOf{"Table_1"};
    Simulator sim(s, pick_task());
    CHECK(expert_plan(sim.state(), pick_task()).actions().empty());
  }
  SUBCASE("apple walled off") {
    SceneSpec s = corner_scene();
    s.walls = {CellPos{2, 0}, CellPos{2, 1}, CellPos{3, 1}};
    Simulator sim(s, pick_task());
    CHECK_THROWS_AS(expert_plan(sim.state(), pick_task()), Unreachable);
  }
}

TEST_CASE("goal progress counts satisfied conditions") {
  SceneSpec s = corner_scene();
  auto w = reset(s, heat_on_table()).state;
  auto p = goal_satisfied(w, heat_on_table());
  CHECK_FALSE(p.all);
  CHECK(p.fraction() == 0.0);

  w.object("Apple_1").is_hot = true;
  w.object("Apple_1").location = InHand{};
  w.hand = "Apple_1";
  p = goal_satisfied(w, heat_on_table());
  CHECK_FALSE(p.all);
  CHECK(p.fraction() == doctest::Approx(0.5));

  w.object("Apple_1").location = InsideOf{"Table_1"};
  w.hand.reset();
  p = goal_satisfied(w, heat_on_table());
  CHECK(p.all);
  CHECK(p.fraction() == 1.0);
}

TEST_CASE("state-change captions") {
  SceneSpec s = small_scene();
  s.objects = {make_object("Table_1", "Table", CellPos{1, 0}), make_object("Apple_1", "Apple", InsideOf{"Table_1"})};
  auto w = reset(s, pick_task()).state;
  CHECK(state_diff_caption(w, w) == "Nothing changes.");
  auto after = step(w, Action::interact(ActionKind::PickupObject, ObjectRef{"Apple", std::nullopt}),
                    seen(w, "Apple").box);
  REQUIRE(after.result == ActionResult::Succeeded);
  CHECK(state_diff_caption(w, after.state) ==
        "The Apple is now held by the agent; the Table no longer contains the Apple.");

  s.objects = {make_object("Microwave_1", "Microwave", CellPos{1, 0}),
               make_object("Apple_1", "Apple", InsideOf{"Microwave_1"})};
  w = reset(s, pick_task("Apple", "Microwave")).state;
  after = step(w, Action::interact(ActionKind::ToggleObjectOn, ObjectRef{"Microwave", std::nullopt}),
               seen(w, "Microwave").box);
  REQUIRE(after.result == ActionResult::Succeeded);
  CHECK(state_diff_caption(w, after.state) == "The Apple is now hot; the Microwave is now on.");
  CHECK(caption_implies_change(state_diff_caption(w, after.state)));
  CHECK_FALSE(caption_implies_change("Nothing changes."));
}

TEST_CASE("generated episodes are solvable by expert replay") {
  for (TaskType type : kAllTaskTypes) {
    for (std::uint64_t seed = 1; seed <= 15; ++seed) {
      CAPTURE(to_string(type));
      CAPTURE(seed);
      const auto ep = generate_episode(type, seed);
      const auto again = generate_episode(type, seed);
      CHECK(ep.scene == again.scene);
      CHECK(ep.task == again.task);
      Simulator sim(ep.scene, ep.task);
      for (const auto& st : expert_plan(sim.state(), ep.task).actions()) {
        const Frame before = sim.frame();
        REQUIRE(sim.step(st.action, st.bbox) == ActionResult::Succeeded);
        CHECK_FALSE(detect_failure(before, sim.frame()));
      }
      CHECK(goal_satisfied(sim.state(), ep.task).all);
    }
  }
}

TEST_CASE("failed steps never change the frame and successful ones always do") {
  Rng rng(11);
  int failures = 0;
  for (std::uint64_t ep_seed = 1; ep_seed <= 6; ++ep_seed) {
    const auto ep = generate_episode(kAllTaskTypes[ep_seed % 6], ep_seed);
    Simulator sim(ep.scene, ep.task);
    for (int i = 0; i < 80; ++i) {
      const ActionKind kind = kAllActionKinds[rng.below(kAllActionKinds.size())];
      auto vis = visible_objects(sim.state());
      Action a = Action::navigate(ActionKind::RotateLeft);
      std::optional<BoundingBox> box;
      if (is_navigation(kind) || vis.empty()) {
        a = Action::navigate(is_navigation(kind) ? kind : ActionKind::MoveAhead);
      } else {
        const auto& v = vis[rng.below(vis.size())];
        a = Action::interact(kind, ObjectRef{v.ref.name, std::nullopt});
        box = v.box;
      }
      const Frame before = sim.frame();
      const auto r = sim.step(a, box);
      failures += r == ActionResult::Failed ? 1 : 0;
      CHECK((r == ActionResult::Failed) == detect_failure(before, sim.frame()));
    }
  }
  CHECK(failures > 0);
}
