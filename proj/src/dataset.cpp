// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "euea/errors.hpp"
#include "euea/rng.hpp"
#include "euea/serialization.hpp"
#include "euea/text.hpp"

namespace euea {

using nlohmann::json;

std::string_view to_string(TrajectorySource s) {
  switch (s) {
    case TrajectorySource::Expert: return "Expert";
    case TrajectorySource::RandomExploration: return "RandomExploration";
    case TrajectorySource::Ingested: return "Ingested";
  }
  return "Ingested";
}

std::optional<TrajectorySource> parse_trajectory_source(std::string_view s) {
  for (auto v : {TrajectorySource::Expert, TrajectorySource::RandomExploration, TrajectorySource::Ingested}) {
    if (iequals(to_string(v), s)) return v;
  }
  return std::nullopt;
}

std::string Trajectory::caption(int t) const {
  if (t >= 1 && t <= static_cast<int>(captions.size()) && !captions[static_cast<std::size_t>(t - 1)].empty()) {
    return captions[static_cast<std::size_t>(t - 1)];
  }
  const MemoryStep& m = steps.at(t);
  if (m.result == ActionResult::Failed) return kNoChangeCaption;
  std::string s = "The " + std::string(to_string(m.action.kind)) + " action";
  if (m.action.target) s += " on the " + m.action.target->name;
  return s + " changes the scene.";
}

json trajectory_to_json(const Trajectory& t) {
  return json{{"scene_id", t.scene_id},
              {"source", std::string(to_string(t.source))},
              {"completed", t.completed},
              {"task", t.task()},
              {"steps", std::vector<MemoryStep>(t.steps.steps().begin(), t.steps.steps().end())},
              {"final_frame", t.final_frame.empty() ? json(nullptr) : json(t.final_frame)},
              {"captions", t.captions}};
}

Trajectory trajectory_from_json(const json& j) {
  Trajectory t;
  t.scene_id = j.at("scene_id").get<std::string>();
  auto src = parse_trajectory_source(j.value("source", "Ingested"));
  if (!src) throw FormatError("unknown trajectory source");
  t.source = *src;
  t.completed = j.value("completed", false);
  t.steps = json{{"goal", j.at("task")}, {"steps", j.at("steps")}}.get<Memory>();
  if (j.contains("final_frame") && !j["final_frame"].is_null()) t.final_frame = j["final_frame"].get<Frame>();
  t.captions = j.value("captions", std::vector<std::string>{});
  return t;
}

Trajectory expert_trajectory(const SceneSpec& scene, const Task& task, const SimConfig& config) {
  auto r = reset(scene, task, config);
  WorldState state = std::move(r.state);
  Frame frame = std::move(r.frame);
  const ExpertPlan plan = expert_plan(state, task);

  Trajectory t;
  t.scene_id = scene.scene_id;
  t.steps = Memory(task);
  t.source = TrajectorySource::Expert;
  for (const auto& sg : plan.subgoals) {
    for (const auto& st : sg.steps) {
      MemoryStep m;
      m.frame = frame;
      m.visible = visible_refs(state);
      m.pose = state.agent;
      m.action = st.action;
      m.bbox = st.bbox;
      m.subgoal = sg.subgoal;
      auto next = step(state, st.action, st.bbox);
      m.result = next.result;
      t.captions.push_back(next.result == ActionResult::Succeeded ? state_diff_caption(state, next.state)
                                                                  : std::string(kNoChangeCaption));
      t.steps.append(std::move(m));
      state = std::move(next.state);
      frame = std::move(next.frame);
    }
  }
  t.final_frame = frame;
  t.completed = goal_satisfied(state, task).all;
  if (!t.completed) throw Unreachable("expert replay did not reach the goal in " + scene.scene_id);
  return t;
}

std::vector<Trajectory> random_exploration(const SceneSpec& scene, const Task& task, int episodes,
                                           int steps_per_episode, std::uint64_t seed, const SimConfig& config) {
  if (episodes < 1 || steps_per_episode < 1) throw std::invalid_argument("episodes and steps must be >= 1");
  Rng rng(seed);
  const auto fresh = reset(scene, task, config);
  std::vector<CellPos> free;
  for (int y = 0; y < fresh.state.height; ++y) {
    for (int x = 0; x < fresh.state.width; ++x) {
      if (fresh.state.free_cell({x, y})) free.push_back({x, y});
    }
  }
  const Subgoal explore{"explore the scene", Phase::Interaction, 1};

  std::vector<Trajectory> out;
  int failures = 0;
  for (int e = 0; e < episodes; ++e) {
    WorldState state = fresh.state;
    const CellPos start = free[rng.below(free.size())];
    state.agent = Pose{start.x, start.y, static_cast<Heading>(rng.below(4))};
    Frame frame = render(state);

    Trajectory t;
    t.scene_id = scene.scene_id;
    t.steps = Memory(task);
    t.source = TrajectorySource::RandomExploration;
    for (int i = 0; i < steps_per_episode; ++i) {
      const auto vis = visible_objects(state);
      ActionKind kind = kAllActionKinds[rng.below(kAllActionKinds.size())];
      if (!is_navigation(kind) && vis.empty()) kind = kAllActionKinds[rng.below(3)];
      MemoryStep m;
      m.frame = frame;
      m.visible = visible_refs(state);
      m.pose = state.agent;
      m.subgoal = explore;
      if (is_navigation(kind)) {
        m.action = Action::navigate(kind);
      } else {
        const auto& v = vis[rng.below(vis.size())];
        m.action = Action::interact(kind, v.ref);
        m.bbox = v.box;
      }
      auto next = step(state, m.action, m.bbox);
      m.result = next.result;
      if (next.result == ActionResult::Failed) ++failures;
      t.captions.push_back(next.result == ActionResult::Succeeded ? state_diff_caption(state, next.state)
                                                                  : std::string(kNoChangeCaption));
      t.steps.append(std::move(m));
      state = std::move(next.state);
      frame = std::move(next.frame);
    }
    t.final_frame = frame;
    t.completed = false;
    out.push_back(std::move(t));
  }
  if (failures == 0) throw EmptyOutput("random exploration of " + scene.scene_id + " produced no failed step");
  return out;
}

SceneSplit split_scenes(const std::vector<std::string>& scenes, double holdout_fraction, std::uint64_t seed) {
  if (scenes.size() < 2) throw TooFewScenes("need at least 2 scenes to split, got " + std::to_string(scenes.size()));
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
    throw std::invalid_argument("holdout fraction must lie strictly between 0 and 1");
  }
  std::vector<std::string> order = scenes;
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  const auto n = static_cast<long long>(order.size());
  const long long n_eval = std::clamp(std::llround(holdout_fraction * static_cast<double>(n)), 1LL, n - 1);
  SceneSplit s;
  s.eval.assign(order.begin(), order.begin() + n_eval);
  s.train.assign(order.begin() + n_eval, order.end());
  return s;
}

namespace {

bool is_interaction(const MemoryStep& m) { return m.action.target.has_value(); }

// Maximal runs of consecutive steps sharing a subgoal, as [first, last].
std::vector<std::pair<int, int>> subgoal_runs(const Memory& m) {
  std::vector<std::pair<int, int>> runs;
  for (const auto& s : m.steps()) {
    if (!runs.empty()) {
      const auto& prev = m.at(runs.back().second).subgoal;
      if (prev.index == s.subgoal.index && prev.text == s.subgoal.text) {
        runs.back().second = s.step_index;
        continue;
      }
    }
    runs.emplace_back(s.step_index, s.step_index);
  }
  return runs;
}

}  // namespace

std::map<SkillKind, int> expected_counts(const Trajectory& t) {
  const int T = t.length();
  std::map<SkillKind, int> c;
  for (auto k : kAllSkillKinds) c[k] = 0;
  for (const auto& m : t.steps.steps()) {
    ++c[SkillKind::OR];
    if (is_interaction(m)) {
      c[SkillKind::SAP] += 1;
      c[SkillKind::ASP] += m.bbox ? 1 : 0;
      c[SkillKind::OD] += m.bbox ? 1 : 0;
    }
    if (m.step_index >= 2) {
      const auto& p = t.steps.at(m.step_index - 1);
      c[SkillKind::AG] += (is_interaction(p) && p.bbox && p.result == ActionResult::Succeeded) ? 1 : 0;
    }
  }
  c[SkillKind::FSC] = std::max(0, T - 1);
  if (t.completed && T > 0) {
    c[SkillKind::STP] = 1;
    c[SkillKind::GRMain] = 1 + (T >= 2 ? 1 : 0);
    for (const auto& [a, b] : subgoal_runs(t.steps)) c[SkillKind::GRSub] += 1 + (b - a >= 1 ? 1 : 0);
  }
  return c;
}

std::vector<SkillInstance> build_skill_dataset(std::span<const Trajectory> trajectories,
                                               const std::set<SkillKind>& kinds, Split split,
                                               const DatasetOptions& options) {
  PromptOptions popt;
  popt.k = options.k;
  popt.frame_budget = options.frame_budget;
  popt.templates = options.templates;

  std::vector<SkillInstance> out;
  for (std::size_t ti = 0; ti < trajectories.size(); ++ti) {
    const Trajectory& tr = trajectories[ti];
    const Memory& mem = tr.steps;
    const int T = tr.length();
    const std::string base = tr.scene_id + "#" + std::to_string(ti);
    auto emit = [&](SkillKind kind, const std::string& tag, const Memory& history, const StepDraft& draft,
                    SkillOutput gt) {
      if (!kinds.count(kind)) return;
      Prompt p = build_prompt(kind, history, draft, popt);
      SkillInstance inst;
      inst.id = base + ":" + std::string(to_string(kind)) + ":" + tag;
      inst.kind = kind;
      inst.prompt_text = std::move(p.text);
      inst.frames = std::move(p.frames);
      inst.ground_truth = std::move(gt);
      inst.scene_id = tr.scene_id;
      inst.split = split;
      out.push_back(std::move(inst));
    };

    if (tr.completed && T > 0) {
      std::vector<Subgoal> plan;
      for (const auto& s : mem.steps()) {
        if (plan.empty() || plan.back().index != s.subgoal.index || plan.back().text != s.subgoal.text) {
          plan.push_back(s.subgoal);
        }
      }
      emit(SkillKind::STP, "1", mem.prefix(0), StepDraft::from_step(mem.at(1)), SubgoalList{plan});
    }

    for (int t = 1; t <= T; ++t) {
      const MemoryStep& m = mem.at(t);
      const Memory history = mem.prefix(t - 1);
      const StepDraft draft = StepDraft::from_step(m);
      const std::string tag = std::to_string(t);

      ObjectSet vis;
      for (const auto& r : m.visible) vis.names.insert(r.name);
      emit(SkillKind::OR, tag, history, draft, vis);

      if (is_interaction(m)) {
        ActionChoice choice{m.action.kind, m.action.target->name};
        emit(SkillKind::SAP, tag, history, draft, choice);
        if (m.bbox) {
          emit(SkillKind::OD, tag, history, draft, Box{*m.bbox});
          emit(SkillKind::ASP, tag, history, draft, YesNo{m.result == ActionResult::Succeeded});
        }
      }
      if (t <= T - 1) emit(SkillKind::FSC, tag, history, draft, Caption{tr.caption(t)});
      if (t >= 2) {
        const MemoryStep& p = mem.at(t - 1);
        if (is_interaction(p) && p.bbox && p.result == ActionResult::Succeeded) {
          emit(SkillKind::AG, tag, history, draft, ActionWithBox{p.action.kind, p.action.target->name, *p.bbox});
        }
      }
    }

    if (tr.completed && T > 0) {
      StepDraft end;
      end.frame = tr.final_frame.empty() ? mem.back().frame : tr.final_frame;
      emit(SkillKind::GRMain, "pos", mem, end, YesNo{true});
      if (T >= 2) emit(SkillKind::GRMain, "neg", mem.prefix(T - 1), StepDraft::from_step(mem.at(T)), YesNo{false});

      for (const auto& [a, b] : subgoal_runs(mem)) {
        StepDraft after;
        after.frame = b < T ? mem.at(b + 1).frame : end.frame;
        after.subgoal = mem.at(b).subgoal;
        emit(SkillKind::GRSub, std::to_string(b) + ":pos", mem.prefix(b), after, YesNo{true});
        if (b > a) {
          emit(SkillKind::GRSub, std::to_string(b) + ":neg", mem.prefix(b - 1), StepDraft::from_step(mem.at(b)),
               YesNo{false});
        }
      }
    }
  }
  if (out.empty()) throw EmptyOutput("no trajectory supports the requested skills");
  return out;
}

std::vector<std::filesystem::path> write_dataset(const std::filesystem::path& dir,
                                                 std::span<const SkillInstance> instances) {
  FrameStore store(dir);
  std::map<std::pair<Split, SkillKind>, std::vector<json>> rows;
  for (const auto& inst : instances) {
    json j = inst;
    for (std::size_t i = 0; i < inst.frames.size(); ++i) {
      const Frame& f = inst.frames[i];
      if (f.has_pixels()) store.save(f);
      j["frames"][i]["path"] = "../" + f.relative_path();
    }
    rows[{inst.split, inst.kind}].push_back(std::move(j));
  }
  std::vector<std::filesystem::path> written;
  for (const auto& [key, r] : rows) {
    auto path = dir / to_lower(to_string(key.first)) / (std::string(to_string(key.second)) + ".jsonl");
    write_jsonl(path, r);
    written.push_back(path);
  }
  return written;
}

std::vector<SkillInstance> read_dataset(const std::filesystem::path& jsonl) {
  std::vector<SkillInstance> out;
  for (const auto& row : read_jsonl(jsonl)) out.push_back(row.get<SkillInstance>());
  return out;
}

void GrpoFilterConfig::validate() const {
  if (samples_per_instance < 2) throw ConfigError("samples_per_instance must be >= 2");
  if (!(tau >= 0.0 && tau <= 1.0)) throw ConfigError("tau must lie in [0, 1]");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

double normalized_std(std::span<const double> rewards, double reward_range) {
  if (rewards.empty()) return 0.0;
  if (!(reward_range > 0.0)) throw std::invalid_argument("reward range must be positive");
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  return std::sqrt(ss / n) / reward_range;
}

std::vector<std::size_t> grpo_selection(std::span<const SampleStats> stats, double tau, std::optional<std::size_t> cap) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats[i].normalized_std > tau) idx.push_back(i);
  }
  if (cap && idx.size() > *cap) {
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return stats[a].normalized_std > stats[b].normalized_std; });
    idx.resize(*cap);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

GrpoResult filter_grpo(std::span<const SkillInstance> instances, Backend& backend, const RewardFn& reward_fn,
                       const GrpoFilterConfig& config) {
  config.validate();
  GrpoResult out;
  for (std::size_t i = 0; i < instances.size(); ++i) {
    const SkillInstance& inst = instances[i];
    GenerationRequest req;
    req.prompt_text = inst.prompt_text;
    req.frames = inst.frames;
    req.sample_count = config.samples_per_instance;
    req.temperature = config.temperature;
    req.seed = config.seed + i;
    req.skill = inst.kind;
    req.context[ctx::kInstanceId] = inst.id;
    std::vector<Completion> samples;
    try {
      samples = backend.generate(req);
    } catch (const Error& e) {
      throw BackendError(inst.id + ": " + e.what());
    }
    const double range = config.scales.of(inst.kind);
    SampleStats s;
    s.instance_id = inst.id;
    s.kind = inst.kind;
    for (const auto& c : samples) {
      const double r = reward_fn(inst, c.text).r_total;
      s.rewards.push_back(r);
      s.correct_count += r >= 0.5 * range ? 1 : 0;
    }
    s.normalized_std = normalized_std(s.rewards, range);
    out.stats.push_back(std::move(s));
  }
  for (std::size_t i : grpo_selection(out.stats, config.tau, config.cap)) {
    out.stats[i].selected = true;
    out.selected.push_back(instances[i]);
  }
  return out;
}

json sample_stats_to_json(const SampleStats& s) {
  return json{{"instance_id", s.instance_id},     {"kind", std::string(to_string(s.kind))},
              {"rewards", s.rewards},             {"correct_count", s.correct_count},
              {"normalized_std", s.normalized_std}, {"selected", s.selected}};
}

}  // namespace euea
