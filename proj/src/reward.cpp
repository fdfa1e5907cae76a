// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/reward.hpp"

#include <algorithm>

#include <json.hpp>

#include "euea/errors.hpp"
#include "euea/skills.hpp"
#include "euea/text.hpp"

namespace euea {

double iou(const BoundingBox& a, const BoundingBox& b) {
  if (!a.valid() || !b.valid()) return 0.0;
  const long long ix = std::max(0, std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min));
  const long long iy = std::max(0, std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min));
  const long long inter = ix * iy;
  const long long uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double jaccard(const std::set<std::string>& pred, const std::set<std::string>& gt) {
  if (pred.empty() && gt.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& p : pred) inter += gt.count(p);
  const std::size_t uni = pred.size() + gt.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double sequence_order_score(const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
  if (gt.empty()) throw std::invalid_argument("sequence_order_score: ground truth is empty");
  std::vector<std::string> p, g;
  for (const auto& s : pred) p.push_back(canonical_text(s));
  for (const auto& s : gt) g.push_back(canonical_text(s));
  if (p == g) return 1.0;
  return static_cast<double>(lcs_length(p, g)) / static_cast<double>(g.size());
}

double sequence_order_score(const std::vector<Subgoal>& pred, const std::vector<Subgoal>& gt) {
  std::vector<std::string> p, g;
  for (const auto& s : pred) p.push_back(s.text);
  for (const auto& s : gt) g.push_back(s.text);
  return sequence_order_score(p, g);
}

bool caption_implies_change(std::string_view caption) {
  const std::string c = canonical_text(caption);
  return !(c.empty() || c.find("nothing changes") != std::string::npos || c.find("no change") != std::string::npos);
}

RewardGroup reward_group(SkillKind kind) {
  switch (kind) {
    case SkillKind::OR:
    case SkillKind::OD: return RewardGroup::ObjectPerception;
    case SkillKind::STP:
    case SkillKind::SAP: return RewardGroup::TaskPlanning;
    case SkillKind::ASP:
    case SkillKind::FSC:
    case SkillKind::AG: return RewardGroup::ActionUnderstanding;
    case SkillKind::GRMain:
    case SkillKind::GRSub: return RewardGroup::GoalRecognition;
  }
  return RewardGroup::ObjectPerception;
}

double RewardScales::of(SkillKind kind) const {
  auto it = max_reward.find(kind);
  return it == max_reward.end() ? 1.0 : it->second;
}

RewardScales RewardScales::unit() {
  RewardScales s;
  for (auto k : kAllSkillKinds) s.max_reward[k] = 1.0;
  return s;
}

RewardScales RewardScales::from_json_text(const std::string& text) {
  RewardScales s = unit();
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("reward scale table: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("reward scale table must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    auto kind = parse_skill_kind(key);
    if (!kind) throw ConfigError("reward scale table: unknown skill " + key);
    if (!value.is_number() || value.get<double>() <= 0.0) {
      throw ConfigError("reward scale for " + key + " must be a positive number");
    }
    s.max_reward[*kind] = value.get<double>();
  }
  return s;
}

namespace {

bool same_name(const std::optional<std::string>& a, const std::optional<std::string>& b) {
  if (!a || !b) return !a && !b;
  return iequals(*a, *b);
}

template <typename T>
const T& expect(const SkillOutput& out, SkillKind kind) {
  const T* p = std::get_if<T>(&out);
  if (!p) {
    throw VariantMismatch(std::string(to_string(kind)) + " expects a different answer type than " +
                          std::string(output_variant_name(out)));
  }
  return *p;
}

}  // namespace

RewardBreakdown reward(const SkillInstance& instance, const SkillOutput& response, const RewardScales& scales) {
  const SkillKind kind = instance.kind;
  if (!output_matches(kind, response)) {
    throw VariantMismatch("response variant " + std::string(output_variant_name(response)) + " does not match " +
                          std::string(to_string(kind)));
  }
  if (!output_matches(kind, instance.ground_truth)) {
    throw VariantMismatch("instance " + instance.id + " carries a mismatched ground truth");
  }
  const SkillOutput& gt = instance.ground_truth;
  double value = 0.0;
  switch (kind) {
    case SkillKind::OR:
      value = jaccard(expect<ObjectSet>(response, kind).names, expect<ObjectSet>(gt, kind).names);
      break;
    case SkillKind::OD:
      value = iou(expect<Box>(response, kind).box, expect<Box>(gt, kind).box);
      break;
    case SkillKind::SAP: {
      const auto& p = expect<ActionChoice>(response, kind);
      const auto& g = expect<ActionChoice>(gt, kind);
      value = (p.action == g.action && same_name(p.object, g.object)) ? 1.0 : 0.0;
      break;
    }
    case SkillKind::STP:
      value = sequence_order_score(expect<SubgoalList>(response, kind).subgoals,
                                   expect<SubgoalList>(gt, kind).subgoals);
      break;
    case SkillKind::ASP:
    case SkillKind::GRMain:
    case SkillKind::GRSub:
      value = expect<YesNo>(response, kind).value == expect<YesNo>(gt, kind).value ? 1.0 : 0.0;
      break;
    case SkillKind::FSC:
      value = caption_implies_change(expect<Caption>(response, kind).text) ==
                      caption_implies_change(expect<Caption>(gt, kind).text)
                  ? 1.0
                  : 0.0;
      break;
    case SkillKind::AG: {
      const auto& p = expect<ActionWithBox>(response, kind);
      const auto& g = expect<ActionWithBox>(gt, kind);
      const bool pair = p.action == g.action && iequals(p.object, g.object);
      value = 0.5 * (pair ? 1.0 : 0.0) + 0.5 * iou(p.box, g.box);
      break;
    }
  }
  value *= scales.of(kind);

  RewardBreakdown out;
  out.active_skill = kind;
  switch (reward_group(kind)) {
    case RewardGroup::ObjectPerception: out.r_op = value; break;
    case RewardGroup::TaskPlanning: out.r_tp = value; break;
    case RewardGroup::ActionUnderstanding: out.r_au = value; break;
    case RewardGroup::GoalRecognition: out.r_gr = value; break;
  }
  out.r_total = out.r_op + out.r_tp + out.r_au + out.r_gr;
  return out;
}

RewardBreakdown reward_text(const SkillInstance& instance, const std::string& response_text,
                            const RewardScales& scales) {
  try {
    return reward(instance, parse_response(instance.kind, response_text), scales);
  } catch (const ParseFailure&) {
    RewardBreakdown zero;
    zero.active_skill = instance.kind;
    return zero;
  }
}

}  // namespace euea
