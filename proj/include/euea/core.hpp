// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Shared domain vocabulary: memory tuples, actions, boxes, subgoals, tasks and
// the skill instance/output records exchanged between modules.

#pragma once

#include <array>
#include <compare>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "euea/frame.hpp"

namespace euea {

/// Half-open integer pixel box [x_min, x_max) x [y_min, y_max).
struct BoundingBox {
  int x_min = 0;
  int y_min = 0;
  int x_max = 0;
  int y_max = 0;

  int width() const noexcept { return x_max - x_min; }
  int height() const noexcept { return y_max - y_min; }
  long long area() const noexcept { return valid() ? 1LL * width() * height() : 0; }
  bool valid() const noexcept { return x_min < x_max && y_min < y_max; }
  bool within(int raster_w, int raster_h) const noexcept {
    return valid() && x_min >= 0 && y_min >= 0 && x_max <= raster_w && y_max <= raster_h;
  }

  friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

struct ObjectRef {
  std::string name;
  std::optional<std::string> instance_id;

  friend auto operator<=>(const ObjectRef&, const ObjectRef&) = default;
};

enum class ActionKind {
  MoveAhead,
  RotateLeft,
  RotateRight,
  PickupObject,
  PutObject,
  OpenObject,
  CloseObject,
  ToggleObjectOn,
  ToggleObjectOff,
  SliceObject,
};

inline constexpr std::array<ActionKind, 10> kAllActionKinds = {
    ActionKind::MoveAhead,      ActionKind::RotateLeft,    ActionKind::RotateRight, ActionKind::PickupObject,
    ActionKind::PutObject,      ActionKind::OpenObject,    ActionKind::CloseObject, ActionKind::ToggleObjectOn,
    ActionKind::ToggleObjectOff, ActionKind::SliceObject,
};

constexpr bool is_navigation(ActionKind k) noexcept {
  return k == ActionKind::MoveAhead || k == ActionKind::RotateLeft || k == ActionKind::RotateRight;
}

std::string_view to_string(ActionKind k);
/// Case-insensitive lookup of the canonical action spelling.
std::optional<ActionKind> parse_action_kind(std::string_view s);

struct Action {
  ActionKind kind = ActionKind::MoveAhead;
  std::optional<ObjectRef> target;

  static Action navigate(ActionKind k);
  static Action interact(ActionKind k, ObjectRef target);

  /// Navigation kinds carry no target; interaction kinds carry one.
  bool well_formed() const noexcept { return is_navigation(kind) ? !target : target.has_value(); }

  friend bool operator==(const Action&, const Action&) = default;
};

enum class Heading { North, East, South, West };

std::string_view to_string(Heading h);
std::optional<Heading> parse_heading(std::string_view s);

struct Pose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::North;

  friend auto operator<=>(const Pose&, const Pose&) = default;
};

enum class Phase { Navigation, Interaction };

std::string_view to_string(Phase p);
std::optional<Phase> parse_phase(std::string_view s);

struct Subgoal {
  std::string text;
  Phase phase = Phase::Navigation;
  int index = 1;

  friend bool operator==(const Subgoal&, const Subgoal&) = default;
};

enum class ActionResult { Succeeded, Failed };

std::string_view to_string(ActionResult r);

/// One recorded interaction m_t = (f_t, v_t, p_t, a_t, o_t, b_t, r_t, sg_t).
/// `frame` is the observation the action was chosen on; o_t is `action.target`.
struct MemoryStep {
  Frame frame;
  std::set<ObjectRef> visible;
  Pose pose;
  Action action;
  std::optional<BoundingBox> bbox;
  ActionResult result = ActionResult::Failed;
  Subgoal subgoal;
  int step_index = 1;

  friend bool operator==(const MemoryStep&, const MemoryStep&) = default;
};

enum class TaskType { Look, Pick, PickTwo, Clean, Cool, Heat };

inline constexpr std::array<TaskType, 6> kAllTaskTypes = {TaskType::Look,  TaskType::Pick, TaskType::PickTwo,
                                                          TaskType::Clean, TaskType::Cool, TaskType::Heat};

std::string_view to_string(TaskType t);
std::optional<TaskType> parse_task_type(std::string_view s);

enum class Predicate { Holding, InReceptacle, IsOn, IsClean, IsHot, IsCold, IsSliced };

std::string_view to_string(Predicate p);
std::optional<Predicate> parse_predicate(std::string_view s);

/// A goal predicate. When `object.instance_id` is unset the condition ranges
/// over every instance of the class; `count` applies to InReceptacle.
struct GoalCondition {
  Predicate predicate = Predicate::Holding;
  ObjectRef object;
  std::optional<ObjectRef> receptacle;
  int count = 1;

  friend bool operator==(const GoalCondition&, const GoalCondition&) = default;
};

struct Task {
  TaskType type = TaskType::Pick;
  std::string instruction;
  std::vector<GoalCondition> goal_conditions;

  friend bool operator==(const Task&, const Task&) = default;
};

/// Ordered, append-only episode history. Step indices run 1..T.
class Memory {
 public:
  Memory() = default;
  explicit Memory(Task goal) : goal_(std::move(goal)) {}

  const Task& goal() const noexcept { return goal_; }
  std::span<const MemoryStep> steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_.size(); }
  bool empty() const noexcept { return steps_.empty(); }
  const MemoryStep& at(int step_index) const;
  const MemoryStep& back() const { return steps_.back(); }

  /// Appends a step; assigns step_index = size()+1 regardless of the input.
  const MemoryStep& append(MemoryStep step);

  /// Copy holding steps 1..t only.
  Memory prefix(int t) const;

  friend bool operator==(const Memory&, const Memory&) = default;

 private:
  Task goal_;
  std::vector<MemoryStep> steps_;
};

/// Steps with indices in [max(1, t-k), t-1]. Requires 1 <= t <= T+1 and k >= 0.
std::span<const MemoryStep> memory_window(const Memory& memory, int t, int k);

enum class SkillKind { OR, OD, STP, SAP, ASP, FSC, AG, GRMain, GRSub };

inline constexpr std::array<SkillKind, 9> kAllSkillKinds = {
    SkillKind::OR,  SkillKind::OD,  SkillKind::STP,    SkillKind::SAP,   SkillKind::ASP,
    SkillKind::FSC, SkillKind::AG,  SkillKind::GRMain, SkillKind::GRSub,
};

std::string_view to_string(SkillKind k);
std::optional<SkillKind> parse_skill_kind(std::string_view s);

enum class Split { Train, Validation, Eval };

std::string_view to_string(Split s);
std::optional<Split> parse_split(std::string_view s);

// Typed skill answers.
struct ObjectSet {
  std::set<std::string> names;
  friend bool operator==(const ObjectSet&, const ObjectSet&) = default;
};
struct Box {
  BoundingBox box;
  friend bool operator==(const Box&, const Box&) = default;
};
struct SubgoalList {
  std::vector<Subgoal> subgoals;
  friend bool operator==(const SubgoalList&, const SubgoalList&) = default;
};
struct ActionChoice {
  ActionKind action = ActionKind::MoveAhead;
  std::optional<std::string> object;  // absent for navigation kinds
  friend bool operator==(const ActionChoice&, const ActionChoice&) = default;
};
struct YesNo {
  bool value = false;
  friend bool operator==(const YesNo&, const YesNo&) = default;
};
struct Caption {
  std::string text;
  friend bool operator==(const Caption&, const Caption&) = default;
};
struct ActionWithBox {
  ActionKind action = ActionKind::PickupObject;
  std::string object;
  BoundingBox box;
  friend bool operator==(const ActionWithBox&, const ActionWithBox&) = default;
};

using SkillOutput = std::variant<ObjectSet, Box, SubgoalList, ActionChoice, YesNo, Caption, ActionWithBox>;

/// True iff the output alternative is the one produced by `kind`.
bool output_matches(SkillKind kind, const SkillOutput& out);
std::string_view output_variant_name(const SkillOutput& out);

struct SkillInstance {
  std::string id;
  SkillKind kind = SkillKind::OR;
  std::string prompt_text;
  std::vector<Frame> frames;
  SkillOutput ground_truth;
  std::string scene_id;
  Split split = Split::Train;

  friend bool operator==(const SkillInstance&, const SkillInstance&) = default;
};

}  // namespace euea
