// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Skill prompts and answer grammars. Prompts are rendered from one template
// file ([KIND] sections with named placeholders); answers round-trip through
// render_answer / parse_response.

#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "euea/core.hpp"

namespace euea {

/// Fields of step t that are known when a skill is queried. Which fields a
/// kind needs is fixed; absent ones raise MissingContext.
struct StepDraft {
  Frame frame;
  std::optional<std::set<ObjectRef>> visible;
  std::optional<Pose> pose;
  std::optional<Action> action;
  std::optional<BoundingBox> bbox;
  std::optional<Subgoal> subgoal;

  static StepDraft from_step(const MemoryStep& step);
};

struct Prompt {
  std::string text;
  std::vector<Frame> frames;
};

/// Placeholders allowed (and required) in each kind's template.
const std::set<std::string>& template_placeholders(SkillKind kind);

class PromptTemplates {
 public:
  /// The built-in wording.
  static const PromptTemplates& builtin();
  /// Parses a template file. Throws ConfigError on missing sections or
  /// placeholders outside the kind's set.
  static PromptTemplates parse(const std::string& text);
  static PromptTemplates load(const std::filesystem::path& path);

  const std::string& text(SkillKind kind) const;

 private:
  std::map<SkillKind, std::string> text_;
};

struct PromptOptions {
  int k = 4;             // SAP memory window
  int frame_budget = 1;  // frames attached to STP / GRMain prompts
  const PromptTemplates* templates = nullptr;
};

/// Renders the prompt for step t, where `history` holds steps 1..t-1 and the
/// goal. Throws MissingContext naming the first absent field.
Prompt build_prompt(SkillKind kind, const Memory& history, const StepDraft& current, const PromptOptions& opt = {});

/// Prompt for recorded step t (1 <= t <= T+1). At t = T+1 nothing of the
/// current step is known.
Prompt build_prompt(SkillKind kind, const Memory& memory, int t, int k);

/// Appends the recovery request naming the failed action-object pair.
std::string augment_recovery(const std::string& prompt_text, const Action& failed);
/// Appends the environment failure notice used by the feedback baseline.
std::string augment_env_feedback(const std::string& prompt_text, const Action& failed);

std::string render_answer(const SkillOutput& out);

/// Parses model text into the variant belonging to `kind`. Throws
/// ParseFailure carrying the offending text.
SkillOutput parse_response(SkillKind kind, const std::string& text);

std::string render_box(const BoundingBox& b);
std::string render_visible(const std::set<ObjectRef>& visible);

}  // namespace euea
