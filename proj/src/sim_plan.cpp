// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Goal checks, the state-conditioned expert planner, and state-diff captions.

#include <algorithm>
#include <deque>
#include <map>

#include "euea/errors.hpp"
#include "euea/sim.hpp"
#include "euea/text.hpp"

namespace euea {
namespace {

bool ref_matches(const ObjectRef& ref, const ObjectState& o) {
  return ref.instance_id ? *ref.instance_id == o.id : ref.name == o.name;
}

std::vector<const ObjectState*> candidates(const WorldState& s, const ObjectRef& ref) {
  std::vector<const ObjectState*> out;
  for (const auto& [id, o] : s.objects) {
    if (ref_matches(ref, o)) out.push_back(&o);
  }
  return out;
}

bool inside(const ObjectState& o, const ObjectState& r) {
  const auto* in = std::get_if<InsideOf>(&o.location);
  return in && in->receptacle_id == r.id;
}

bool inside_any(const WorldState& s, const ObjectState& o, const ObjectRef& receptacle) {
  const auto* in = std::get_if<InsideOf>(&o.location);
  return in && ref_matches(receptacle, s.object(in->receptacle_id));
}

}  // namespace

bool condition_holds(const WorldState& s, const GoalCondition& c) {
  auto objs = candidates(s, c.object);
  auto any = [&](auto pred) { return std::any_of(objs.begin(), objs.end(), pred); };
  switch (c.predicate) {
    case Predicate::Holding:
      return any([&](const ObjectState* o) { return s.hand && *s.hand == o->id; });
    case Predicate::InReceptacle: {
      if (!c.receptacle) return false;
      const auto n = std::count_if(objs.begin(), objs.end(),
                                   [&](const ObjectState* o) { return inside_any(s, *o, *c.receptacle); });
      return n >= c.count;
    }
    case Predicate::IsOn: return any([](const ObjectState* o) { return o->is_on; });
    case Predicate::IsClean: return any([](const ObjectState* o) { return o->is_clean; });
    case Predicate::IsHot: return any([](const ObjectState* o) { return o->is_hot; });
    case Predicate::IsCold: return any([](const ObjectState* o) { return o->is_cold; });
    case Predicate::IsSliced: return any([](const ObjectState* o) { return o->is_sliced; });
  }
  return false;
}

GoalProgress goal_satisfied(const WorldState& state, const Task& task) {
  GoalProgress g;
  g.total = static_cast<int>(task.goal_conditions.size());
  for (const auto& c : task.goal_conditions) g.satisfied += condition_holds(state, c) ? 1 : 0;
  g.all = g.satisfied == g.total;
  return g;
}

std::vector<Subgoal> ExpertPlan::subgoal_list() const {
  std::vector<Subgoal> out;
  for (const auto& sg : subgoals) out.push_back(sg.subgoal);
  return out;
}

std::vector<PlannedStep> ExpertPlan::actions() const {
  std::vector<PlannedStep> out;
  for (const auto& sg : subgoals) out.insert(out.end(), sg.steps.begin(), sg.steps.end());
  return out;
}

std::vector<Action> navigation_path(const WorldState& s, const std::string& target_id) {
  auto target = s.cell_of(target_id);
  if (!target) throw Unreachable(target_id + " is held; nothing to walk to");
  auto goal = [&](const Pose& p) { return forward_of(p) == *target; };
  if (goal(s.agent)) return {};

  auto key = [&](const Pose& p) { return (p.y * s.width + p.x) * 4 + static_cast<int>(p.heading); };
  const int n = s.width * s.height * 4;
  std::vector<int> parent(static_cast<std::size_t>(n), -1);
  std::vector<ActionKind> via(static_cast<std::size_t>(n), ActionKind::MoveAhead);
  std::vector<Pose> pose_of(static_cast<std::size_t>(n));
  std::deque<Pose> queue{s.agent};
  const int start = key(s.agent);
  parent[static_cast<std::size_t>(start)] = start;
  pose_of[static_cast<std::size_t>(start)] = s.agent;

  while (!queue.empty()) {
    Pose cur = queue.front();
    queue.pop_front();
    for (ActionKind k : {ActionKind::MoveAhead, ActionKind::RotateLeft, ActionKind::RotateRight}) {
      Pose next = cur;
      if (k == ActionKind::MoveAhead) {
        CellPos c = forward_of(cur);
        if (!s.free_cell(c)) continue;
        next.x = c.x;
        next.y = c.y;
      } else {
        const int turn = k == ActionKind::RotateLeft ? 3 : 1;
        next.heading = static_cast<Heading>((static_cast<int>(cur.heading) + turn) % 4);
      }
      const int nk = key(next);
      if (parent[static_cast<std::size_t>(nk)] != -1) continue;
      parent[static_cast<std::size_t>(nk)] = key(cur);
      via[static_cast<std::size_t>(nk)] = k;
      pose_of[static_cast<std::size_t>(nk)] = next;
      if (goal(next)) {
        std::vector<Action> path;
        for (int at = nk; at != start; at = parent[static_cast<std::size_t>(at)]) {
          path.push_back(Action::navigate(via[static_cast<std::size_t>(at)]));
        }
        std::reverse(path.begin(), path.end());
        return path;
      }
      queue.push_back(next);
    }
  }
  throw Unreachable("no path to " + target_id);
}

namespace {

// Builds an expert plan by acting on a private copy of the world, so every
// emitted action is known to succeed when replayed in order.
class Planner {
 public:
  Planner(const WorldState& s, const Task& task) : s_(s), task_(task) {}

  ExpertPlan run() {
    if (goal_satisfied(s_, task_).all) return std::move(plan_);
    switch (task_.type) {
      case TaskType::Look: look(); break;
      case TaskType::Pick: pick(); break;
      case TaskType::PickTwo: pick_two(); break;
      case TaskType::Clean: transform(Predicate::IsClean); break;
      case TaskType::Heat: transform(Predicate::IsHot); break;
      case TaskType::Cool: transform(Predicate::IsCold); break;
    }
    if (!goal_satisfied(s_, task_).all) throw Unreachable("expert plan does not reach the goal");
    return std::move(plan_);
  }

 private:
  const GoalCondition* find(Predicate p) const {
    for (const auto& c : task_.goal_conditions) {
      if (c.predicate == p) return &c;
    }
    return nullptr;
  }

  const GoalCondition& need(Predicate p) const {
    const auto* c = find(p);
    if (!c) throw Unreachable(std::string("task lacks a ") + std::string(to_string(p)) + " condition");
    return *c;
  }

  std::string first_id(const ObjectRef& ref) const {
    auto c = candidates(s_, ref);
    if (c.empty()) throw Unreachable("no object matching " + ref.name);
    if (s_.hand) {
      for (const auto* o : c) {
        if (o->id == *s_.hand) return o->id;
      }
    }
    return c.front()->id;
  }

  std::string fixture_id(const std::string& name) const { return first_id(ObjectRef{name, std::nullopt}); }
  const std::string& name(const std::string& id) const { return s_.object(id).name; }

  void begin(std::string text, Phase phase, std::optional<ObjectRef> nav = std::nullopt) {
    PlannedSubgoal sg;
    sg.subgoal = Subgoal{std::move(text), phase, static_cast<int>(plan_.subgoals.size()) + 1};
    sg.nav_target = std::move(nav);
    plan_.subgoals.push_back(std::move(sg));
  }

  void act(ActionKind kind, const std::optional<std::string>& target = std::nullopt) {
    PlannedStep st;
    if (target) {
      st.action = Action::interact(kind, s_.object(*target).ref());
      st.bbox = ground_truth_box(s_, *target);
    } else {
      st.action = Action::navigate(kind);
    }
    if (apply_action(s_, st.action, st.bbox) != ActionResult::Succeeded) {
      throw Unreachable("expert action " + std::string(to_string(kind)) + (target ? " " + *target : "") +
                        " is not executable");
    }
    plan_.subgoals.back().steps.push_back(std::move(st));
  }

  void go_to(const std::string& id) {
    auto path = navigation_path(s_, id);
    if (path.empty()) return;
    begin("go to the " + name(id), Phase::Navigation, s_.object(id).ref());
    for (const auto& a : path) act(a.kind);
  }

  std::string preposition(const std::string& receptacle_id) const {
    const auto& r = s_.object(receptacle_id);
    return (r.flags.openable || r.name == "Sink") ? "in" : "on";
  }

  // Puts a held object the task does not need into the nearest receptacle
  // with room.
  void clear_hand(const std::set<std::string>& keep) {
    if (!s_.hand || keep.count(*s_.hand)) return;
    const std::string held = *s_.hand;
    std::string best;
    std::size_t best_len = SIZE_MAX;
    for (const auto& [id, o] : s_.objects) {
      if (!o.flags.receptacle || o.flags.openable || id == held) continue;
      int n = 0;
      for (const auto& c : s_.contents_of(id)) n += s_.object(c).flags.pickupable ? 1 : 0;
      if (n >= kReceptacleCapacity) continue;
      try {
        auto len = navigation_path(s_, id).size();
        if (len < best_len) {
          best_len = len;
          best = id;
        }
      } catch (const Unreachable&) {
      }
    }
    if (best.empty()) throw Unreachable("nowhere to put down " + held);
    go_to(best);
    begin("put the " + name(held) + " " + preposition(best) + " the " + name(best), Phase::Interaction);
    act(ActionKind::PutObject, best);
  }

  void ensure_holding(const std::string& id, const std::set<std::string>& keep = {}) {
    if (s_.hand && *s_.hand == id) return;
    auto k = keep;
    k.insert(id);
    clear_hand(k);
    const ObjectState& o = s_.object(id);
    std::optional<std::string> container;
    if (const auto* in = std::get_if<InsideOf>(&o.location)) container = in->receptacle_id;
    go_to(container ? *container : id);
    begin("pick up the " + name(id), Phase::Interaction);
    if (container) {
      const auto& c = s_.object(*container);
      if (c.flags.toggleable && c.is_on) act(ActionKind::ToggleObjectOff, *container);
      if (c.flags.openable && !s_.object(*container).is_open) act(ActionKind::OpenObject, *container);
    }
    act(ActionKind::PickupObject, id);
  }

  void place(const std::string& id, const std::string& receptacle_id) {
    if (inside(s_.object(id), s_.object(receptacle_id))) return;
    ensure_holding(id);
    go_to(receptacle_id);
    begin("put the " + name(id) + " " + preposition(receptacle_id) + " the " + name(receptacle_id),
          Phase::Interaction);
    const auto& r = s_.object(receptacle_id);
    if (r.flags.toggleable && r.is_on) act(ActionKind::ToggleObjectOff, receptacle_id);
    if (r.flags.openable && !s_.object(receptacle_id).is_open) act(ActionKind::OpenObject, receptacle_id);
    act(ActionKind::PutObject, receptacle_id);
  }

  std::string receptacle_for(const GoalCondition& c) const {
    if (!c.receptacle) throw Unreachable("placement condition without receptacle");
    return first_id(*c.receptacle);
  }

  void look() {
    const auto& hold = need(Predicate::Holding);
    const auto& lamp_cond = need(Predicate::IsOn);
    const std::string target = first_id(hold.object);
    if (!condition_holds(s_, hold)) ensure_holding(target);
    if (!condition_holds(s_, lamp_cond)) {
      const std::string lamp = first_id(lamp_cond.object);
      go_to(lamp);
      begin("turn on the " + name(lamp), Phase::Interaction);
      act(ActionKind::ToggleObjectOn, lamp);
    }
  }

  void pick() {
    const auto& c = need(Predicate::InReceptacle);
    if (condition_holds(s_, c)) return;
    const std::string r = receptacle_for(c);
    std::string target;
    // Prefer an instance already in hand, else the first one not yet placed.
    for (const auto* o : candidates(s_, c.object)) {
      if (s_.hand && *s_.hand == o->id) target = o->id;
    }
    if (target.empty()) {
      for (const auto* o : candidates(s_, c.object)) {
        if (!inside(*o, s_.object(r))) {
          target = o->id;
          break;
        }
      }
    }
    if (target.empty()) throw Unreachable("no movable " + c.object.name);
    place(target, r);
  }

  void pick_two() {
    int required = 0;
    const GoalCondition* base = nullptr;
    for (const auto& c : task_.goal_conditions) {
      if (c.predicate == Predicate::InReceptacle && c.count >= required) {
        required = c.count;
        base = &c;
      }
    }
    if (!base) throw Unreachable("PickTwo task without placement condition");
    for (int guard = 0; guard < 8 && !condition_holds(s_, *base); ++guard) {
      GoalCondition one = *base;
      one.count = 1;
      const std::string r = receptacle_for(*base);
      std::string target;
      for (const auto* o : candidates(s_, base->object)) {
        if (s_.hand && *s_.hand == o->id && !inside(*o, s_.object(r))) target = o->id;
      }
      if (target.empty()) {
        for (const auto* o : candidates(s_, base->object)) {
          if (!inside(*o, s_.object(r))) {
            target = o->id;
            break;
          }
        }
      }
      if (target.empty()) throw Unreachable("not enough " + base->object.name + " instances");
      place(target, r);
    }
  }

  // Clean / Heat / Cool followed by placement.
  void transform(Predicate pred) {
    const auto& change = need(pred);
    const auto& placement = need(Predicate::InReceptacle);
    const std::string target = first_id(change.object);
    const std::string r = receptacle_for(placement);
    switch (pred) {
      case Predicate::IsClean: clean(target); break;
      case Predicate::IsHot: heat(target); break;
      case Predicate::IsCold: cool(target); break;
      default: break;
    }
    place(target, r);
  }

  void clean(const std::string& id) {
    const std::string sink = fixture_id("Sink");
    std::string faucet;
    for (const auto& c : s_.contents_of(sink)) {
      if (s_.object(c).name == "Faucet") faucet = c;
    }
    if (faucet.empty()) throw Unreachable("sink without faucet");
    const bool in_sink = inside(s_.object(id), s_.object(sink));
    const bool stage = !s_.object(id).is_clean || in_sink || s_.object(faucet).is_on;
    if (!stage) return;
    if (!s_.object(id).is_clean && !in_sink) ensure_holding(id);
    go_to(sink);
    begin("clean the " + name(id) + " in the " + name(sink), Phase::Interaction);
    if (!s_.object(id).is_clean) {
      if (!inside(s_.object(id), s_.object(sink))) act(ActionKind::PutObject, sink);
      if (s_.object(faucet).is_on) act(ActionKind::ToggleObjectOff, faucet);
      act(ActionKind::ToggleObjectOn, faucet);
    }
    if (s_.object(faucet).is_on) act(ActionKind::ToggleObjectOff, faucet);
    if (inside(s_.object(id), s_.object(sink))) act(ActionKind::PickupObject, id);
  }

  void heat(const std::string& id) {
    const std::string mw = fixture_id("Microwave");
    auto in_mw = [&] { return inside(s_.object(id), s_.object(mw)); };
    const auto& m = s_.object(mw);
    const bool stage = !s_.object(id).is_hot || in_mw() || m.is_on || m.is_open;
    if (!stage) return;
    if (!s_.object(id).is_hot && !in_mw()) ensure_holding(id);
    go_to(mw);
    begin("heat the " + name(id) + " with the " + name(mw), Phase::Interaction);
    if (!s_.object(id).is_hot) {
      if (!in_mw()) {
        if (s_.object(mw).is_on) act(ActionKind::ToggleObjectOff, mw);
        if (!s_.object(mw).is_open) act(ActionKind::OpenObject, mw);
        act(ActionKind::PutObject, mw);
      }
      if (s_.object(mw).is_on) act(ActionKind::ToggleObjectOff, mw);
      if (s_.object(mw).is_open) act(ActionKind::CloseObject, mw);
      act(ActionKind::ToggleObjectOn, mw);
    }
    if (s_.object(mw).is_on) act(ActionKind::ToggleObjectOff, mw);
    if (in_mw()) {
      if (!s_.object(mw).is_open) act(ActionKind::OpenObject, mw);
      act(ActionKind::PickupObject, id);
    }
    if (s_.object(mw).is_open) act(ActionKind::CloseObject, mw);
  }

  void cool(const std::string& id) {
    const std::string fridge = fixture_id("Fridge");
    auto in_fridge = [&] { return inside(s_.object(id), s_.object(fridge)); };
    const bool stage = !s_.object(id).is_cold || in_fridge() || s_.object(fridge).is_open;
    if (!stage) return;
    if (!s_.object(id).is_cold && !in_fridge()) ensure_holding(id);
    go_to(fridge);
    begin("cool the " + name(id) + " with the " + name(fridge), Phase::Interaction);
    if (!s_.object(id).is_cold) {
      if (!s_.object(fridge).is_open) act(ActionKind::OpenObject, fridge);
      if (in_fridge()) act(ActionKind::PickupObject, id);
      act(ActionKind::PutObject, fridge);
    }
    if (in_fridge()) {
      if (!s_.object(fridge).is_open) act(ActionKind::OpenObject, fridge);
      act(ActionKind::PickupObject, id);
    }
    if (s_.object(fridge).is_open) act(ActionKind::CloseObject, fridge);
  }

  WorldState s_;
  const Task& task_;
  ExpertPlan plan_;
};

}  // namespace

ExpertPlan expert_plan(const WorldState& state, const Task& task) { return Planner(state, task).run(); }

namespace {

std::string location_phrase(const WorldState& s, const ObjectLocation& loc) {
  if (const auto* in = std::get_if<InsideOf>(&loc)) return s.object(in->receptacle_id).name;
  return {};
}

}  // namespace

std::string state_diff_caption(const WorldState& before, const WorldState& after) {
  std::vector<std::string> clauses;
  if (before.agent.x != after.agent.x || before.agent.y != after.agent.y) {
    clauses.push_back("the agent moves to (" + std::to_string(after.agent.x) + ", " + std::to_string(after.agent.y) +
                      ")");
  }
  if (before.agent.heading != after.agent.heading) {
    clauses.push_back("the agent now faces " + std::string(to_string(after.agent.heading)));
  }
  for (const auto& [id, a] : after.objects) {
    auto it = before.objects.find(id);
    if (it == before.objects.end()) continue;
    const ObjectState& b = it->second;
    const std::string& n = a.name;
    if (!(a.location == b.location)) {
      const bool now_held = std::holds_alternative<InHand>(a.location);
      const bool was_held = std::holds_alternative<InHand>(b.location);
      if (now_held) clauses.push_back("the " + n + " is now held by the agent");
      const std::string from = location_phrase(before, b.location);
      if (!from.empty()) clauses.push_back("the " + from + " no longer contains the " + n);
      const std::string to = location_phrase(after, a.location);
      if (!to.empty()) clauses.push_back("the " + to + " now contains the " + n);
      if (was_held) clauses.push_back("the " + n + " is no longer held by the agent");
    }
    auto flag = [&](bool was, bool now, const char* on_text, const char* off_text) {
      if (was != now) clauses.push_back("the " + n + " is now " + (now ? on_text : off_text));
    };
    flag(b.is_open, a.is_open, "open", "closed");
    flag(b.is_on, a.is_on, "on", "off");
    flag(b.is_clean, a.is_clean, "clean", "dirty");
    flag(b.is_hot, a.is_hot, "hot", "no longer hot");
    flag(b.is_cold, a.is_cold, "cold", "no longer cold");
    flag(b.is_sliced, a.is_sliced, "sliced", "whole");
  }
  if (clauses.empty()) return kNoChangeCaption;
  std::string text = join(clauses, "; ");
  text[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
  return text + ".";
}

}  // namespace euea
