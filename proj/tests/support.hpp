// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Small fixtures shared by the unit tests.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "euea/core.hpp"
#include "euea/rng.hpp"
#include "euea/sim.hpp"

namespace euea::testing {

inline Frame solid_frame(std::uint8_t value, int w = 4, int h = 4) {
  return Frame(w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w * h * 3), value));
}

inline ObjectState make_object(const std::string& id, const std::string& name, ObjectLocation where) {
  ObjectState o;
  o.id = id;
  o.name = name;
  o.location = where;
  o.flags = default_class_flags(name);
  return o;
}

inline GoalCondition in_receptacle(const std::string& object, const std::string& receptacle) {
  GoalCondition c;
  c.predicate = Predicate::InReceptacle;
  c.object = ObjectRef{object, std::nullopt};
  c.receptacle = ObjectRef{receptacle, std::nullopt};
  return c;
}

inline Task pick_task(const std::string& object = "Apple", const std::string& receptacle = "Table") {
  Task t;
  t.type = TaskType::Pick;
  t.instruction = "put the " + object + " on the " + receptacle;
  t.goal_conditions = {in_receptacle(object, receptacle)};
  return t;
}

// Open 4x4 room: agent at (0,0) facing East, apple at (3,0), table at (2,3).
inline SceneSpec corner_scene() {
  SceneSpec s;
  s.scene_id = "corner";
  s.width = 4;
  s.height = 4;
  s.agent_start = Pose{0, 0, Heading::East};
  s.objects = {make_object("Apple_1", "Apple", CellPos{3, 0}), make_object("Table_1", "Table", CellPos{2, 3})};
  return s;
}

// 3x3 room with an apple two cells ahead of the agent and a table to its right.
inline SceneSpec small_scene() {
  SceneSpec s;
  s.scene_id = "small";
  s.width = 3;
  s.height = 3;
  s.agent_start = Pose{0, 0, Heading::East};
  s.objects = {make_object("Apple_1", "Apple", CellPos{1, 0}), make_object("Table_1", "Table", CellPos{0, 2})};
  return s;
}

inline MemoryStep make_step(const Frame& f, Action a, std::optional<BoundingBox> box, ActionResult r,
                            Subgoal sg, std::set<ObjectRef> visible = {}) {
  MemoryStep m;
  m.frame = f;
  m.visible = std::move(visible);
  m.pose = Pose{0, 0, Heading::North};
  m.action = std::move(a);
  m.bbox = box;
  m.result = r;
  m.subgoal = std::move(sg);
  return m;
}

inline const std::vector<std::string>& object_names() {
  static const std::vector<std::string> names = {"Apple", "Bowl", "Book", "Fridge", "Knife", "Lamp",
                                                 "Microwave", "Mug", "Sink", "Table", "Tomato", "Vase"};
  return names;
}

inline BoundingBox random_box(Rng& rng, int w = 64, int h = 64) {
  const int x0 = rng.range(0, w - 2);
  const int y0 = rng.range(0, h - 2);
  return BoundingBox{x0, y0, rng.range(x0 + 1, w), rng.range(y0 + 1, h)};
}

inline std::string random_name(Rng& rng) { return rng.pick(std::span<const std::string>(object_names())); }

/// A random answer of the variant `kind` produces.
inline SkillOutput random_output(SkillKind kind, Rng& rng) {
  switch (kind) {
    case SkillKind::OR: {
      ObjectSet s;
      const int n = rng.range(0, 4);
      for (int i = 0; i < n; ++i) s.names.insert(random_name(rng));
      return s;
    }
    case SkillKind::OD: return Box{random_box(rng)};
    case SkillKind::STP: {
      SubgoalList l;
      const int n = rng.range(1, 6);
      for (int i = 1; i <= n; ++i) {
        const bool nav = rng.below(2) == 0;
        l.subgoals.push_back(Subgoal{(nav ? "go to the " : "pick up the ") + random_name(rng),
                                     nav ? Phase::Navigation : Phase::Interaction, i});
      }
      return l;
    }
    case SkillKind::SAP: {
      ActionChoice c;
      c.action = kAllActionKinds[rng.below(kAllActionKinds.size())];
      if (!is_navigation(c.action)) c.object = random_name(rng);
      return c;
    }
    case SkillKind::ASP:
    case SkillKind::GRMain:
    case SkillKind::GRSub: return YesNo{rng.below(2) == 1};
    case SkillKind::FSC: {
      if (rng.below(3) == 0) return Caption{"Nothing changes."};
      return Caption{"The " + random_name(rng) + " is now held by the agent."};
    }
    case SkillKind::AG: {
      ActionWithBox a;
      a.action = kAllActionKinds[3 + rng.below(kAllActionKinds.size() - 3)];
      a.object = random_name(rng);
      a.box = random_box(rng);
      return a;
    }
  }
  return YesNo{};
}

}  // namespace euea::testing
