// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/core.hpp"

#include <algorithm>
#include <stdexcept>

#include "euea/text.hpp"

namespace euea {
namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(std::string_view s, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (iequals(name, s)) return value;
  }
  return std::nullopt;
}

template <typename Enum, std::size_t N>
std::string_view name_of(Enum e, const std::array<std::pair<Enum, std::string_view>, N>& table) {
  for (const auto& [value, name] : table) {
    if (value == e) return name;
  }
  throw std::logic_error("unnamed enum value");
}

constexpr std::array<std::pair<ActionKind, std::string_view>, 10> kActionNames = {{
    {ActionKind::MoveAhead, "MoveAhead"},
    {ActionKind::RotateLeft, "RotateLeft"},
    {ActionKind::RotateRight, "RotateRight"},
    {ActionKind::PickupObject, "PickupObject"},
    {ActionKind::PutObject, "PutObject"},
    {ActionKind::OpenObject, "OpenObject"},
    {ActionKind::CloseObject, "CloseObject"},
    {ActionKind::ToggleObjectOn, "ToggleObjectOn"},
    {ActionKind::ToggleObjectOff, "ToggleObjectOff"},
    {ActionKind::SliceObject, "SliceObject"},
}};

constexpr std::array<std::pair<Heading, std::string_view>, 4> kHeadingNames = {{
    {Heading::North, "North"},
    {Heading::East, "East"},
    {Heading::South, "South"},
    {Heading::West, "West"},
}};

constexpr std::array<std::pair<Phase, std::string_view>, 2> kPhaseNames = {{
    {Phase::Navigation, "Navigation"},
    {Phase::Interaction, "Interaction"},
}};

constexpr std::array<std::pair<ActionResult, std::string_view>, 2> kResultNames = {{
    {ActionResult::Succeeded, "Succeeded"},
    {ActionResult::Failed, "Failed"},
}};

constexpr std::array<std::pair<TaskType, std::string_view>, 6> kTaskNames = {{
    {TaskType::Look, "Look"},
    {TaskType::Pick, "Pick"},
    {TaskType::PickTwo, "PickTwo"},
    {TaskType::Clean, "Clean"},
    {TaskType::Cool, "Cool"},
    {TaskType::Heat, "Heat"},
}};

constexpr std::array<std::pair<Predicate, std::string_view>, 7> kPredicateNames = {{
    {Predicate::Holding, "holding"},
    {Predicate::InReceptacle, "in_receptacle"},
    {Predicate::IsOn, "is_on"},
    {Predicate::IsClean, "is_clean"},
    {Predicate::IsHot, "is_hot"},
    {Predicate::IsCold, "is_cold"},
    {Predicate::IsSliced, "is_sliced"},
}};

constexpr std::array<std::pair<SkillKind, std::string_view>, 9> kSkillNames = {{
    {SkillKind::OR, "OR"},
    {SkillKind::OD, "OD"},
    {SkillKind::STP, "STP"},
    {SkillKind::SAP, "SAP"},
    {SkillKind::ASP, "ASP"},
    {SkillKind::FSC, "FSC"},
    {SkillKind::AG, "AG"},
    {SkillKind::GRMain, "GRMain"},
    {SkillKind::GRSub, "GRSub"},
}};

constexpr std::array<std::pair<Split, std::string_view>, 3> kSplitNames = {{
    {Split::Train, "train"},
    {Split::Validation, "validation"},
    {Split::Eval, "eval"},
}};

}  // namespace

std::string_view to_string(ActionKind k) { return name_of(k, kActionNames); }
std::optional<ActionKind> parse_action_kind(std::string_view s) { return lookup(s, kActionNames); }
std::string_view to_string(Heading h) { return name_of(h, kHeadingNames); }
std::optional<Heading> parse_heading(std::string_view s) { return lookup(s, kHeadingNames); }
std::string_view to_string(Phase p) { return name_of(p, kPhaseNames); }
std::optional<Phase> parse_phase(std::string_view s) { return lookup(s, kPhaseNames); }
std::string_view to_string(ActionResult r) { return name_of(r, kResultNames); }
std::string_view to_string(TaskType t) { return name_of(t, kTaskNames); }
std::optional<TaskType> parse_task_type(std::string_view s) { return lookup(s, kTaskNames); }
std::string_view to_string(Predicate p) { return name_of(p, kPredicateNames); }
std::optional<Predicate> parse_predicate(std::string_view s) { return lookup(s, kPredicateNames); }
std::string_view to_string(SkillKind k) { return name_of(k, kSkillNames); }
std::optional<SkillKind> parse_skill_kind(std::string_view s) { return lookup(s, kSkillNames); }
std::string_view to_string(Split s) { return name_of(s, kSplitNames); }
std::optional<Split> parse_split(std::string_view s) { return lookup(s, kSplitNames); }

Action Action::navigate(ActionKind k) {
  if (!is_navigation(k)) throw std::invalid_argument("navigate() needs a navigation kind");
  return Action{k, std::nullopt};
}

Action Action::interact(ActionKind k, ObjectRef target) {
  if (is_navigation(k)) throw std::invalid_argument("interact() needs an interaction kind");
  return Action{k, std::move(target)};
}

const MemoryStep& Memory::at(int step_index) const {
  if (step_index < 1 || step_index > static_cast<int>(steps_.size())) {
    throw std::out_of_range("memory step " + std::to_string(step_index) + " out of range 1.." +
                            std::to_string(steps_.size()));
  }
  return steps_[static_cast<std::size_t>(step_index - 1)];
}

const MemoryStep& Memory::append(MemoryStep step) {
  step.step_index = static_cast<int>(steps_.size()) + 1;
  steps_.push_back(std::move(step));
  return steps_.back();
}

Memory Memory::prefix(int t) const {
  if (t < 0 || t > static_cast<int>(steps_.size())) throw std::out_of_range("prefix length");
  Memory m(goal_);
  m.steps_.assign(steps_.begin(), steps_.begin() + t);
  return m;
}

std::span<const MemoryStep> memory_window(const Memory& memory, int t, int k) {
  const int T = static_cast<int>(memory.size());
  if (t < 1 || t > T + 1) throw std::out_of_range("memory_window: t must lie in [1, T+1]");
  if (k < 0) throw std::invalid_argument("memory_window: k must be >= 0");
  const int first = std::max(1, t - k);
  const int count = std::max(0, t - first);
  return memory.steps().subspan(static_cast<std::size_t>(first - 1), static_cast<std::size_t>(count));
}

bool output_matches(SkillKind kind, const SkillOutput& out) {
  switch (kind) {
    case SkillKind::OR: return std::holds_alternative<ObjectSet>(out);
    case SkillKind::OD: return std::holds_alternative<Box>(out);
    case SkillKind::STP: return std::holds_alternative<SubgoalList>(out);
    case SkillKind::SAP: return std::holds_alternative<ActionChoice>(out);
    case SkillKind::ASP:
    case SkillKind::GRMain:
    case SkillKind::GRSub: return std::holds_alternative<YesNo>(out);
    case SkillKind::FSC: return std::holds_alternative<Caption>(out);
    case SkillKind::AG: return std::holds_alternative<ActionWithBox>(out);
  }
  return false;
}

std::string_view output_variant_name(const SkillOutput& out) {
  static constexpr std::array<std::string_view, 7> kNames = {"ObjectSet", "Box",     "SubgoalList",  "ActionChoice",
                                                             "YesNo",     "Caption", "ActionWithBox"};
  return kNames[out.index()];
}

}  // namespace euea
