// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded generation of household scenes with one solvable task each.

#include <algorithm>
#include <array>

#include "euea/errors.hpp"
#include "euea/rng.hpp"
#include "euea/sim.hpp"
#include "euea/text.hpp"

namespace euea {
namespace {

constexpr std::array<const char*, 3> kSurfaces = {"Table", "CounterTop", "Shelf"};

const std::vector<std::string>& targets_for(TaskType t) {
  static const std::vector<std::string> look = {"Book", "Watch", "Pen", "Mug", "Keys"};
  static const std::vector<std::string> pick = {"Apple", "Mug", "Potato", "Tomato", "Book", "Bottle", "Cup"};
  static const std::vector<std::string> clean = {"Mug", "Plate", "Cup", "Apple", "Bowl"};
  static const std::vector<std::string> heat = {"Apple", "Potato", "Mug", "Bread", "Egg"};
  static const std::vector<std::string> cool = {"Apple", "Tomato", "Bottle", "Lettuce", "Potato"};
  switch (t) {
    case TaskType::Look: return look;
    case TaskType::Pick:
    case TaskType::PickTwo: return pick;
    case TaskType::Clean: return clean;
    case TaskType::Heat: return heat;
    case TaskType::Cool: return cool;
  }
  return pick;
}

const std::vector<std::string>& distractor_pool() {
  static const std::vector<std::string> pool = {"Apple", "Mug",   "Potato", "Tomato", "Book",  "Bottle",
                                                "Cup",   "Plate", "Bowl",   "Knife",  "Spoon", "Vase"};
  return pool;
}

ObjectState make_object(const std::string& name, int serial, ObjectLocation loc) {
  ObjectState o;
  o.name = name;
  o.id = name + "_" + std::to_string(serial);
  o.location = std::move(loc);
  o.flags = default_class_flags(name);
  return o;
}

std::string instruction_for(TaskType t, const std::string& obj, const std::string& dest) {
  switch (t) {
    case TaskType::Look: return "Examine the " + obj + " under the Lamp.";
    case TaskType::Pick: return "Put the " + obj + " on the " + dest + ".";
    case TaskType::PickTwo: return "Put two " + obj + "s on the " + dest + ".";
    case TaskType::Clean: return "Put a clean " + obj + " on the " + dest + ".";
    case TaskType::Heat: return "Put a hot " + obj + " on the " + dest + ".";
    case TaskType::Cool: return "Put a cold " + obj + " on the " + dest + ".";
  }
  return {};
}

std::optional<GeneratedEpisode> try_generate(TaskType type, std::uint64_t seed, Rng& rng) {
  SceneSpec scene;
  scene.scene_id = "gh-" + to_lower(std::string(to_string(type))) + "-" + std::to_string(seed);
  scene.width = rng.range(6, 8);
  scene.height = rng.range(6, 8);
  const int W = scene.width;
  const int H = scene.height;

  std::vector<CellPos> border;
  for (int x = 1; x < W - 1; ++x) {
    border.push_back({x, 0});
    border.push_back({x, H - 1});
  }
  for (int y = 1; y < H - 1; ++y) {
    border.push_back({0, y});
    border.push_back({W - 1, y});
  }
  rng.shuffle(std::span<CellPos>(border));

  const std::vector<std::string> fixtures = {"Table", "CounterTop", "Shelf", "Sink", "Fridge", "Microwave", "Lamp"};
  std::map<std::string, ObjectState> objects;
  for (std::size_t i = 0; i < fixtures.size(); ++i) {
    auto o = make_object(fixtures[i], 1, border[i]);
    objects[o.id] = o;
  }
  auto faucet = make_object("Faucet", 1, InsideOf{"Sink_1"});
  objects[faucet.id] = faucet;

  for (std::size_t i = fixtures.size(); i < border.size(); ++i) scene.walls.push_back(border[i]);
  for (CellPos corner : {CellPos{0, 0}, CellPos{W - 1, 0}, CellPos{0, H - 1}, CellPos{W - 1, H - 1}}) {
    scene.walls.push_back(corner);
  }

  // A couple of interior pillars.
  std::vector<CellPos> interior;
  for (int y = 1; y < H - 1; ++y) {
    for (int x = 1; x < W - 1; ++x) interior.push_back({x, y});
  }
  rng.shuffle(std::span<CellPos>(interior));
  const int pillars = rng.range(0, 2);
  for (int i = 0; i < pillars; ++i) scene.walls.push_back(interior[static_cast<std::size_t>(i)]);
  const CellPos start = interior[static_cast<std::size_t>(pillars)];
  scene.agent_start = Pose{start.x, start.y, static_cast<Heading>(rng.below(4))};

  // Task objects.
  const auto& pool = targets_for(type);
  const std::string target = pool[rng.below(pool.size())];
  const std::string dest = kSurfaces[rng.below(kSurfaces.size())];
  std::vector<std::string> sources;
  for (const char* s : kSurfaces) {
    if (dest != s) sources.emplace_back(s);
  }
  std::map<std::string, int> load;
  auto put_into = [&](ObjectState o, const std::string& receptacle_id) {
    o.location = InsideOf{receptacle_id};
    ++load[receptacle_id];
    objects[o.id] = o;
  };

  const int target_count = type == TaskType::PickTwo ? 2 : 1;
  for (int i = 1; i <= target_count; ++i) {
    auto o = make_object(target, i, CellPos{});
    if (type == TaskType::Clean) o.is_clean = false;
    put_into(o, sources[rng.below(sources.size())] + "_1");
  }

  std::vector<std::string> distractors;
  for (const auto& d : distractor_pool()) {
    if (d != target) distractors.push_back(d);
  }
  rng.shuffle(std::span<std::string>(distractors));
  const int n_distractors = rng.range(2, 4);
  for (int i = 0; i < n_distractors; ++i) {
    auto o = make_object(distractors[static_cast<std::size_t>(i)], 1, CellPos{});
    std::string where;
    if (rng.below(4) == 0) {
      where = "Fridge_1";
      o.is_cold = true;
    } else {
      where = std::string(kSurfaces[rng.below(kSurfaces.size())]) + "_1";
    }
    if (load[where] >= kReceptacleCapacity - (where == dest + "_1" ? 2 : 0)) continue;
    put_into(o, where);
  }

  for (auto& [id, o] : objects) scene.objects.push_back(o);

  Task task;
  task.type = type;
  task.instruction = instruction_for(type, target, dest);
  const ObjectRef t1{target, target + "_1"};
  const ObjectRef r1{dest, dest + "_1"};
  switch (type) {
    case TaskType::Look:
      task.goal_conditions = {{Predicate::Holding, t1, std::nullopt, 1},
                              {Predicate::IsOn, ObjectRef{"Lamp", "Lamp_1"}, std::nullopt, 1}};
      break;
    case TaskType::Pick: task.goal_conditions = {{Predicate::InReceptacle, t1, r1, 1}}; break;
    case TaskType::PickTwo:
      task.goal_conditions = {{Predicate::InReceptacle, ObjectRef{target, std::nullopt}, r1, 1},
                              {Predicate::InReceptacle, ObjectRef{target, std::nullopt}, r1, 2}};
      break;
    case TaskType::Clean:
      task.goal_conditions = {{Predicate::IsClean, t1, std::nullopt, 1}, {Predicate::InReceptacle, t1, r1, 1}};
      break;
    case TaskType::Heat:
      task.goal_conditions = {{Predicate::IsHot, t1, std::nullopt, 1}, {Predicate::InReceptacle, t1, r1, 1}};
      break;
    case TaskType::Cool:
      task.goal_conditions = {{Predicate::IsCold, t1, std::nullopt, 1}, {Predicate::InReceptacle, t1, r1, 1}};
      break;
  }

  try {
    auto r = reset(scene, task);
    auto plan = expert_plan(r.state, task);
    if (plan.subgoals.empty()) return std::nullopt;
  } catch (const Unreachable&) {
    return std::nullopt;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
  return GeneratedEpisode{std::move(scene), std::move(task)};
}

}  // namespace

GeneratedEpisode generate_episode(TaskType type, std::uint64_t seed) {
  Rng rng(seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(type) + 1);
  for (int attempt = 0; attempt < 64; ++attempt) {
    if (auto ep = try_generate(type, seed, rng)) return *std::move(ep);
  }
  throw Unreachable("could not generate a solvable scene for seed " + std::to_string(seed));
}

}  // namespace euea
