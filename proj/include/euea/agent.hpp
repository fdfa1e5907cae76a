// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Instruction-following episode loop: expert navigation legs with object
// recognition at every step, SAP -> OD -> execute during interaction
// subgoals, GRSub-driven advancement, and sampling-based recovery.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "euea/model.hpp"
#include "euea/skills.hpp"

namespace euea {

struct AgentConfig {
  int k = 4;   // memory window for SAP
  int n = 10;  // recovery samples
  bool recovery_enabled = true;
  bool env_feedback = false;
  int max_steps = 120;
  int parse_retry_limit = 2;
  double temperature = 0.7;  // recovery sampling temperature
  bool length_normalized = false;
  int max_tokens = 256;
  std::uint64_t seed = 0;
  SimConfig sim;
  const PromptTemplates* templates = nullptr;

  /// Throws ConfigError when k < 0, n < 1 or max_steps < 1.
  void validate() const;
};

/// True iff the two frames are identical. Throws DimensionMismatch.
bool detect_failure(const Frame& before, const Frame& after);

struct RecoveryCandidate {
  int index = 1;  // sampling index, 1-based
  std::variant<ActionChoice, Box> choice;
  double score = 0.0;
  std::string text;
};

/// Position of the lowest score; ties go to the lowest sampling index.
std::size_t select_candidate(std::span<const RecoveryCandidate> candidates);

struct RecoveryOutcome {
  Action action;
  std::optional<BoundingBox> bbox;
  std::vector<RecoveryCandidate> candidates;
  std::size_t chosen = 0;
  bool od_fallback = false;
};

/// Recovery after `failed` (executed with `failed_box`) failed. `history`
/// includes the failed step; `current` describes the step about to be taken.
/// `context` is forwarded to the backend. Throws RecoveryExhausted.
RecoveryOutcome recover(const Action& failed, const std::optional<BoundingBox>& failed_box, const Memory& history,
                        const StepDraft& current, Backend& backend, const AgentConfig& config,
                        const std::map<std::string, std::string>& context = {});

struct PromptRecord {
  int step = 1;  // step the prompt was issued for
  SkillKind kind = SkillKind::OR;
  std::string text;
  int frames = 0;
  int window_steps = 0;  // SAP only
};

struct EpisodeResult {
  std::string scene_id;
  TaskType task_type = TaskType::Pick;
  bool success = false;
  int conditions_satisfied = 0;
  int conditions_total = 0;
  int steps_taken = 0;
  int failures = 0;
  int recoveries_attempted = 0;
  int recoveries_succeeded = 0;
  std::string stop_reason;
  Memory transcript;
  Frame final_frame;
  std::vector<int> failed_steps;        // steps whose frame did not change
  std::vector<int> recovery_triggers;   // steps after which recovery ran
  std::vector<PromptRecord> prompts;

  double goal_condition_rate() const {
    return conditions_total == 0 ? 1.0 : static_cast<double>(conditions_satisfied) / conditions_total;
  }
};

EpisodeResult run_episode(const SceneSpec& scene, const Task& task, Backend& backend, const AgentConfig& config);

}  // namespace euea
