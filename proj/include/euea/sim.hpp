// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// gridhome: a deterministic discrete household simulator. It supplies the
// ground truth behind every skill label (visible objects, boxes, action
// outcomes, state-change captions, expert plans, goal checks).

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "euea/core.hpp"

namespace euea {

struct SimConfig {
  int raster_width = 64;
  int raster_height = 64;
  int cone_depth = 3;
  double click_threshold = 0.5;

  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

struct CellPos {
  int x = 0;
  int y = 0;
  friend auto operator<=>(const CellPos&, const CellPos&) = default;
};

struct ClassFlags {
  bool pickupable = false;
  bool receptacle = false;
  bool openable = false;
  bool toggleable = false;
  bool sliceable = false;
  friend bool operator==(const ClassFlags&, const ClassFlags&) = default;
};

/// Flags for the built-in object vocabulary; unknown names get all-false.
ClassFlags default_class_flags(const std::string& name);

struct InHand {
  friend bool operator==(const InHand&, const InHand&) = default;
};
struct InsideOf {
  std::string receptacle_id;
  friend bool operator==(const InsideOf&, const InsideOf&) = default;
};
using ObjectLocation = std::variant<CellPos, InsideOf, InHand>;

struct ObjectState {
  std::string id;    // unique instance id, e.g. "Apple_1"
  std::string name;  // class name, e.g. "Apple"
  ObjectLocation location = CellPos{};
  ClassFlags flags;
  bool is_open = false;
  bool is_on = false;
  bool is_clean = true;
  bool is_hot = false;
  bool is_cold = false;
  bool is_sliced = false;

  ObjectRef ref() const { return ObjectRef{name, id}; }
  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

/// Pickupable objects a receptacle can hold.
inline constexpr int kReceptacleCapacity = 4;

struct SceneSpec {
  std::string scene_id;
  int width = 0;
  int height = 0;
  std::vector<CellPos> walls;
  std::vector<ObjectState> objects;
  Pose agent_start;

  friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

struct WorldState {
  SimConfig config;
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  std::map<std::string, ObjectState> objects;
  Pose agent;
  std::optional<std::string> hand;
  std::uint64_t rng_seed = 0;

  bool in_bounds(CellPos c) const noexcept { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_wall(CellPos c) const noexcept {
    return !in_bounds(c) || walls[static_cast<std::size_t>(c.y * width + c.x)] != 0;
  }
  const ObjectState& object(const std::string& id) const;
  ObjectState& object(const std::string& id);
  /// The object standing directly in a cell, if any.
  const ObjectState* top_level_at(CellPos c) const;
  /// Cell of the object itself or of its container; nullopt while held.
  std::optional<CellPos> cell_of(const std::string& id) const;
  /// Ids inside a receptacle, sorted.
  std::vector<std::string> contents_of(const std::string& receptacle_id) const;
  bool free_cell(CellPos c) const { return !is_wall(c) && top_level_at(c) == nullptr; }

  friend bool operator==(const WorldState&, const WorldState&) = default;
};

CellPos forward_of(const Pose& p, int depth = 1, int lateral = 0);

struct VisibleObject {
  ObjectRef ref;
  BoundingBox box;
  int depth = 1;
  int lateral = 0;
  bool reachable = false;  // interaction reach: container or object directly ahead
};

/// Objects in the visibility cone with their render boxes, sorted by id.
std::vector<VisibleObject> visible_objects(const WorldState& state);
std::set<ObjectRef> visible_refs(const WorldState& state);
std::optional<BoundingBox> ground_truth_box(const WorldState& state, const std::string& id);

Frame render(const WorldState& state);

struct ResetResult {
  WorldState state;
  Frame frame;
};

/// Builds the initial state. Throws UnknownObject when the task names an
/// object absent from the scene.
ResetResult reset(const SceneSpec& scene, const Task& task, const SimConfig& config = {});

struct StepResult {
  WorldState state;
  Frame frame;
  ActionResult result = ActionResult::Failed;
};

/// Applies one action in place. A failed attempt leaves the state untouched.
ActionResult apply_action(WorldState& state, const Action& action, const std::optional<BoundingBox>& bbox);

StepResult step(const WorldState& state, const Action& action, const std::optional<BoundingBox>& bbox);

/// Owns one evolving world and its current frame.
class Simulator {
 public:
  Simulator(const SceneSpec& scene, const Task& task, const SimConfig& config = {});

  const WorldState& state() const noexcept { return state_; }
  const Frame& frame() const noexcept { return frame_; }
  ActionResult step(const Action& action, const std::optional<BoundingBox>& bbox);

 private:
  WorldState state_;
  Frame frame_;
};

struct GoalProgress {
  bool all = false;
  int satisfied = 0;
  int total = 0;
  double fraction() const noexcept { return total == 0 ? 1.0 : static_cast<double>(satisfied) / total; }
};

bool condition_holds(const WorldState& state, const GoalCondition& cond);
GoalProgress goal_satisfied(const WorldState& state, const Task& task);

struct PlannedStep {
  Action action;
  std::optional<BoundingBox> bbox;
};

struct PlannedSubgoal {
  Subgoal subgoal;
  std::optional<ObjectRef> nav_target;  // set for navigation legs
  std::vector<PlannedStep> steps;
};

struct ExpertPlan {
  std::vector<PlannedSubgoal> subgoals;

  std::vector<Subgoal> subgoal_list() const;
  std::vector<PlannedStep> actions() const;
};

/// Shortest rotate/move sequence that leaves `target_id` directly ahead.
/// Throws Unreachable when no such pose can be reached.
std::vector<Action> navigation_path(const WorldState& state, const std::string& target_id);

/// Expert plan from an arbitrary state. Throws Unreachable when the task
/// cannot be completed.
ExpertPlan expert_plan(const WorldState& state, const Task& task);

std::string state_diff_caption(const WorldState& before, const WorldState& after);
inline constexpr const char* kNoChangeCaption = "Nothing changes.";

/// Random scene plus a task of the requested type; the expert plan is
/// guaranteed to reach the goal.
struct GeneratedEpisode {
  SceneSpec scene;
  Task task;
};
GeneratedEpisode generate_episode(TaskType type, std::uint64_t seed);

}  // namespace euea
