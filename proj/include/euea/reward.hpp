// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Rule-based rewards for the refinement stage and the metric kernels they
// share with skill evaluation.

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "euea/core.hpp"

namespace euea {

/// |a ∩ b| / |a ∪ b| over integer pixel areas; 0 when either box is empty.
double iou(const BoundingBox& a, const BoundingBox& b);

/// |pred ∩ gt| / |pred ∪ gt|; two empty sets score 1.
double jaccard(const std::set<std::string>& pred, const std::set<std::string>& gt);

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

/// 1 on an exact element-wise match, otherwise |LCS| / |gt| over canonical
/// subgoal strings. `gt` must be non-empty.
double sequence_order_score(const std::vector<std::string>& pred, const std::vector<std::string>& gt);
double sequence_order_score(const std::vector<Subgoal>& pred, const std::vector<Subgoal>& gt);

/// True unless the caption states that nothing changed.
bool caption_implies_change(std::string_view caption);

enum class RewardGroup { ObjectPerception, TaskPlanning, ActionUnderstanding, GoalRecognition };
RewardGroup reward_group(SkillKind kind);

/// Upper end of each skill's reward scale; rewards lie in [0, scale].
struct RewardScales {
  std::map<SkillKind, double> max_reward;

  double of(SkillKind kind) const;
  static RewardScales unit();
  /// JSON object mapping skill names to maxima, e.g. {"OD": 1.0}.
  static RewardScales from_json_text(const std::string& text);
};

struct RewardBreakdown {
  double r_op = 0.0;
  double r_tp = 0.0;
  double r_au = 0.0;
  double r_gr = 0.0;
  double r_total = 0.0;
  SkillKind active_skill = SkillKind::OR;
};

/// Scores one parsed response against an instance's ground truth. Only the
/// component of the instance's skill group is non-zero. Throws
/// VariantMismatch when the response is not the instance kind's variant.
RewardBreakdown reward(const SkillInstance& instance, const SkillOutput& response,
                       const RewardScales& scales = RewardScales::unit());

/// Reward for a raw response; unparseable text earns zero.
RewardBreakdown reward_text(const SkillInstance& instance, const std::string& response_text,
                            const RewardScales& scales = RewardScales::unit());

}  // namespace euea
