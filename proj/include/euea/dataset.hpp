// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Skill datasets from trajectories, failure-rich random exploration, scene
// splits and the variance filter that picks the refinement subset.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "euea/model.hpp"
#include "euea/reward.hpp"
#include "euea/sim.hpp"
#include "euea/skills.hpp"

namespace euea {

enum class TrajectorySource { Expert, RandomExploration, Ingested };
std::string_view to_string(TrajectorySource s);
std::optional<TrajectorySource> parse_trajectory_source(std::string_view s);

struct Trajectory {
  std::string scene_id;
  Memory steps;  // goal + m_1..m_T
  TrajectorySource source = TrajectorySource::Expert;
  bool completed = false;
  Frame final_frame;                  // observation after m_T
  std::vector<std::string> captions;  // captions[t-1]: what step t changed

  const Task& task() const { return steps.goal(); }
  int length() const { return static_cast<int>(steps.size()); }
  /// Caption for step t, falling back to a result-derived sentence.
  std::string caption(int t) const;
};

nlohmann::json trajectory_to_json(const Trajectory& t);
Trajectory trajectory_from_json(const nlohmann::json& j);

/// Replays the expert plan of a fresh episode.
Trajectory expert_trajectory(const SceneSpec& scene, const Task& task, const SimConfig& config = {});

/// Uniformly random actions from random start poses. Throws EmptyOutput if
/// the whole batch contains no failed step.
std::vector<Trajectory> random_exploration(const SceneSpec& scene, const Task& task, int episodes,
                                           int steps_per_episode, std::uint64_t seed, const SimConfig& config = {});

struct SceneSplit {
  std::vector<std::string> train;
  std::vector<std::string> eval;
};

/// Deterministic shuffle-and-cut with |eval| = round(fraction * N).
SceneSplit split_scenes(const std::vector<std::string>& scenes, double holdout_fraction, std::uint64_t seed);

struct DatasetOptions {
  int k = 4;
  int frame_budget = 1;
  const PromptTemplates* templates = nullptr;
};

/// Instance counts the emission rules predict for one trajectory.
std::map<SkillKind, int> expected_counts(const Trajectory& t);

std::vector<SkillInstance> build_skill_dataset(std::span<const Trajectory> trajectories,
                                               const std::set<SkillKind>& kinds, Split split,
                                               const DatasetOptions& options = {});

/// Writes <dir>/<split>/<KIND>.jsonl per (split, kind) present plus the PNGs
/// under <dir>/frames. Returns the written paths.
std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& dir,
                                                 std::span<const SkillInstance> instances);
std::vector<SkillInstance> read_dataset(const std::filesystem::path& jsonl);

struct GrpoFilterConfig {
  int samples_per_instance = 8;
  double tau = 0.2;
  double temperature = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> cap;  // keep at most this many, highest variance first
  RewardScales scales = RewardScales::unit();

  void validate() const;
};

struct SampleStats {
  std::string instance_id;
  SkillKind kind = SkillKind::OR;
  std::vector<double> rewards;
  int correct_count = 0;
  double normalized_std = 0.0;
  bool selected = false;
};

/// Population standard deviation divided by the reward range.
double normalized_std(std::span<const double> rewards, double reward_range);

using RewardFn = std::function<RewardBreakdown(const SkillInstance&, const std::string&)>;

struct GrpoResult {
  std::vector<SkillInstance> selected;
  std::vector<SampleStats> stats;
};

/// Indices i with stats[i].normalized_std > tau, reduced to `cap` entries of
/// highest variance (ties by position) and returned in input order.
std::vector<std::size_t> grpo_selection(std::span<const SampleStats> stats, double tau,
                                        std::optional<std::size_t> cap = std::nullopt);

GrpoResult filter_grpo(std::span<const SkillInstance> instances, Backend& backend, const RewardFn& reward_fn,
                       const GrpoFilterConfig& config);

nlohmann::json sample_stats_to_json(const SampleStats& s);

}  // namespace euea
