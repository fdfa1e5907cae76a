// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Skill benchmark metrics, task-suite evaluation and report rendering.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "euea/agent.hpp"
#include "euea/model.hpp"

namespace euea {

// ---------------------------------------------------------------------------
// Embeddings for the planning metric

class Embedder {
 public:
  virtual ~Embedder() = default;
  /// One vector per text. Throws EmbedderUnavailable.
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
  virtual std::string model_id() const = 0;
};

/// Client for POST {url}/embed {"texts": [...]} -> {"vectors": [...], "model_id": ...}.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(std::string base_url, int timeout_seconds = 30);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;
  std::string model_id() const override { return model_id_; }
  /// GET {url}/health succeeds.
  bool healthy() const;

 private:
  std::string scheme_host_;
  std::string path_prefix_;
  int timeout_seconds_;
  std::string model_id_ = "unknown";
};

double cosine(std::span<const double> a, std::span<const double> b);
/// |A ∩ B| / |A ∪ B| over lower-cased word tokens; 1 for two empty strings.
double token_jaccard(std::string_view a, std::string_view b);

struct Similarity {
  double value = 0.0;
  bool fallback = false;
};

/// Embedding cosine when an embedder is given and reachable, token-set
/// Jaccard otherwise.
Similarity planning_similarity(const std::string& pred, const std::string& gt, Embedder* embedder);

/// Position-wise similarity of two plans averaged over max(|pred|, |gt|).
Similarity plan_similarity(const std::vector<Subgoal>& pred, const std::vector<Subgoal>& gt, Embedder* embedder);

// ---------------------------------------------------------------------------
// Skill benchmark

enum class Metric { Grounding, Detection, GrMain, GrSub, ActionPrediction, ActionGrounding, Planning, StepByStep };
inline constexpr std::array<Metric, 8> kReportMetrics = {
    Metric::Grounding,        Metric::Detection,       Metric::GrMain,   Metric::GrSub,
    Metric::ActionPrediction, Metric::ActionGrounding, Metric::Planning, Metric::StepByStep,
};
std::string_view to_string(Metric m);
std::optional<Metric> metric_for(SkillKind kind);  // FSC has none

struct MetricStat {
  double sum = 0.0;
  int count = 0;
  int unparseable = 0;
  double mean() const { return count == 0 ? 0.0 : sum / count; }
};

struct SkillReport {
  std::map<Metric, MetricStat> metrics;
  std::string similarity = "token-jaccard";
  double action_grounding_iou = 0.5;

  bool has(Metric m) const { return metrics.count(m) && metrics.at(m).count > 0; }
  /// Percent for accuracy-style metrics, [0,1] for planning.
  double value(Metric m) const;
};

struct SkillEvalOptions {
  Embedder* embedder = nullptr;
  double action_grounding_iou = 0.5;
  int workers = 1;
};

struct InstanceScore {
  std::string instance_id;
  SkillKind kind = SkillKind::OR;
  std::string response;
  bool parsed = false;
  double score = 0.0;
};

struct SkillEvalResult {
  SkillReport report;
  std::vector<InstanceScore> scores;
};

SkillEvalResult evaluate_skills(std::span<const SkillInstance> dataset, Backend& backend,
                                const SkillEvalOptions& options = {});

// ---------------------------------------------------------------------------
// Task evaluation

struct EpisodeSpec {
  SceneSpec scene;
  Task task;
};

struct TypeStats {
  int episodes = 0;
  int successes = 0;
  double goal_condition_sum = 0.0;
};

struct TaskReport {
  std::map<TaskType, TypeStats> per_type;
  int episodes = 0;
  int successes = 0;
  double goal_condition_sum = 0.0;
  int failures = 0;
  int recoveries_attempted = 0;
  int recoveries_succeeded = 0;

  double success_rate(TaskType t) const;  // percent; only for present types
  double average_success() const;         // percent over all episodes
  double average_goal_condition() const;  // mean per-episode rate in [0,1]
};

using BackendFactory = std::function<std::unique_ptr<Backend>()>;

struct TaskEvalResult {
  TaskReport report;
  std::vector<EpisodeResult> episodes;  // input order
};

/// Runs every episode with a fresh backend from `factory`. Episode errors are
/// recorded as failures with stop_reason "error: ...".
TaskEvalResult evaluate_tasks(std::span<const EpisodeSpec> episodes, const BackendFactory& factory,
                              const AgentConfig& config, int workers = 1);

struct Suite {
  std::string name;
  std::vector<EpisodeSpec> episodes;
  FaultSchedule faults;
};

/// "desk60": ten generated tasks per type. "fault": the same tasks with a
/// WrongBox answer on the first attempt of every subgoal. "smoke": one per type.
Suite make_suite(const std::string& name, std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Reports

/// One labelled row per report; `report` renders several runs side by side.
using LabelledSkillReport = std::pair<std::string, SkillReport>;
using LabelledTaskReport = std::pair<std::string, TaskReport>;

std::string skill_report_markdown(std::span<const LabelledSkillReport> rows);
std::string skill_report_markdown(const SkillReport& r, const std::string& label);
std::string skill_report_csv(std::span<const LabelledSkillReport> rows);
std::string skill_report_csv(const SkillReport& r, const std::string& label);
nlohmann::json skill_report_json(const SkillReport& r);
/// Inverse of skill_report_json. Throws FormatError.
SkillReport skill_report_from_json(const nlohmann::json& j);

std::string task_report_markdown(std::span<const LabelledTaskReport> rows);
std::string task_report_markdown(const TaskReport& r, const std::string& label);
std::string task_report_csv(std::span<const LabelledTaskReport> rows);
std::string task_report_csv(const TaskReport& r, const std::string& label);
nlohmann::json task_report_json(const TaskReport& r);
/// Inverse of task_report_json. Throws FormatError.
TaskReport task_report_from_json(const nlohmann::json& j);

nlohmann::json episode_summary_json(const EpisodeResult& e);

}  // namespace euea
