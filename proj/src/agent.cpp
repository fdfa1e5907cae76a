// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/agent.hpp"

#include <algorithm>

#include "euea/errors.hpp"
#include "euea/text.hpp"

namespace euea {

void AgentConfig::validate() const {
  if (k < 0) throw ConfigError("memory window k must be >= 0");
  if (n < 1) throw ConfigError("recovery samples n must be >= 1");
  if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  if (parse_retry_limit < 0) throw ConfigError("parse_retry_limit must be >= 0");
  if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
}

bool detect_failure(const Frame& before, const Frame& after) {
  if (before.width() != after.width() || before.height() != after.height()) {
    throw DimensionMismatch("frames differ in size: " + std::to_string(before.width()) + "x" +
                            std::to_string(before.height()) + " vs " + std::to_string(after.width()) + "x" +
                            std::to_string(after.height()));
  }
  return before.hash() == after.hash();
}

std::size_t select_candidate(std::span<const RecoveryCandidate> candidates) {
  if (candidates.empty()) throw std::invalid_argument("select_candidate: no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const auto& b = candidates[best];
    if (c.score < b.score || (c.score == b.score && c.index < b.index)) best = i;
  }
  return best;
}

namespace {

std::string action_text(const Action& a) {
  ActionChoice c;
  c.action = a.kind;
  if (a.target) c.object = a.target->name;
  return render_answer(c);
}

bool same_pair(const ActionChoice& c, const Action& a) {
  if (c.action != a.kind) return false;
  if (!c.object || !a.target) return !c.object && !a.target;
  return iequals(*c.object, a.target->name);
}

Action to_action(const ActionChoice& c) {
  if (!c.object) return Action::navigate(c.action);
  return Action::interact(c.action, ObjectRef{*c.object, std::nullopt});
}

struct Sampled {
  Completion completion;
  SkillOutput parsed;
  int index = 1;
};

// Draws `count` samples, re-drawing the whole batch while nothing parses.
std::vector<Sampled> sample_parsed(Backend& backend, GenerationRequest req, SkillKind kind, int retries) {
  std::vector<Sampled> out;
  int index = 0;
  for (int r = 0; r <= retries && out.empty(); ++r) {
    if (req.seed) req.seed = *req.seed + static_cast<std::uint64_t>(r) * 7919;
    for (auto& c : backend.generate(req)) {
      ++index;
      try {
        SkillOutput p = parse_response(kind, c.text);
        out.push_back({std::move(c), std::move(p), index});
      } catch (const ParseFailure&) {
      }
    }
  }
  return out;
}

double candidate_score(Backend& backend, const GenerationRequest& req, const Sampled& s, bool length_normalized) {
  const std::string rendered = render_answer(s.parsed);
  if (std::string(trim(s.completion.text)) == rendered) return total_nll(s.completion, length_normalized);
  try {
    double v = backend.score(req.prompt_text, req.frames, rendered);
    if (length_normalized) v /= static_cast<double>(std::max<std::size_t>(1, answer_tokens(rendered).size()));
    return v;
  } catch (const Unsupported&) {
    return total_nll(s.completion, length_normalized);
  }
}

}  // namespace

RecoveryOutcome recover(const Action& failed, const std::optional<BoundingBox>& failed_box, const Memory& history,
                        const StepDraft& current, Backend& backend, const AgentConfig& cfg,
                        const std::map<std::string, std::string>& context) {
  (void)failed_box;
  PromptOptions opt;
  opt.k = cfg.k;
  opt.templates = cfg.templates;
  const std::uint64_t base_seed = cfg.seed * 1000003ULL + static_cast<std::uint64_t>(history.size()) * 101ULL;

  GenerationRequest sap;
  {
    Prompt p = build_prompt(SkillKind::SAP, history, current, opt);
    sap.prompt_text = augment_recovery(p.text, failed);
    sap.frames = std::move(p.frames);
  }
  sap.skill = SkillKind::SAP;
  sap.sample_count = cfg.n;
  sap.temperature = cfg.temperature;
  sap.max_tokens = cfg.max_tokens;
  sap.seed = base_seed;
  sap.context = context;
  sap.context[ctx::kRecovery] = "1";
  sap.context[ctx::kFailedAction] = action_text(failed);

  RecoveryOutcome out;
  auto pairs = sample_parsed(backend, sap, SkillKind::SAP, cfg.parse_retry_limit);
  const bool all_failed_pair = std::all_of(pairs.begin(), pairs.end(), [&](const Sampled& s) {
    return same_pair(std::get<ActionChoice>(s.parsed), failed);
  });

  if (!pairs.empty() && !all_failed_pair) {
    for (const auto& s : pairs) {
      out.candidates.push_back({s.index, std::get<ActionChoice>(s.parsed),
                                candidate_score(backend, sap, s, cfg.length_normalized), s.completion.text});
    }
    out.chosen = select_candidate(out.candidates);
    const auto& choice = std::get<ActionChoice>(out.candidates[out.chosen].choice);
    out.action = to_action(choice);
    if (!choice.object) return out;

    StepDraft d = current;
    d.action = out.action;
    Prompt p = build_prompt(SkillKind::OD, history, d, opt);
    GenerationRequest od;
    od.prompt_text = std::move(p.text);
    od.frames = std::move(p.frames);
    od.skill = SkillKind::OD;
    od.max_tokens = cfg.max_tokens;
    od.seed = base_seed + 1;
    od.context = context;
    od.context[ctx::kRecovery] = "1";
    od.context[ctx::kObject] = *choice.object;
    auto boxes = sample_parsed(backend, od, SkillKind::OD, cfg.parse_retry_limit);
    if (boxes.empty()) throw RecoveryExhausted("no parseable box for the recovered action");
    out.bbox = std::get<Box>(boxes.front().parsed).box;
    return out;
  }

  // Every sample repeated the failed pair (or none parsed): re-detect instead.
  out.od_fallback = true;
  out.action = failed;
  if (!failed.target) throw RecoveryExhausted("failed navigation action has no box to re-detect");
  StepDraft d = current;
  d.action = failed;
  Prompt p = build_prompt(SkillKind::OD, history, d, opt);
  GenerationRequest od;
  od.prompt_text = std::move(p.text);
  od.frames = std::move(p.frames);
  od.skill = SkillKind::OD;
  od.sample_count = cfg.n;
  od.temperature = cfg.temperature;
  od.max_tokens = cfg.max_tokens;
  od.seed = base_seed + 2;
  od.context = context;
  od.context[ctx::kRecovery] = "1";
  od.context[ctx::kObject] = failed.target->name;
  od.context[ctx::kFailedAction] = action_text(failed);
  auto boxes = sample_parsed(backend, od, SkillKind::OD, cfg.parse_retry_limit);
  if (boxes.empty()) {
    throw RecoveryExhausted("all " + std::to_string(2 * cfg.n) + " recovery samples failed to parse");
  }
  for (const auto& s : boxes) {
    out.candidates.push_back(
        {s.index, std::get<Box>(s.parsed), candidate_score(backend, od, s, cfg.length_normalized), s.completion.text});
  }
  out.chosen = select_candidate(out.candidates);
  out.bbox = std::get<Box>(out.candidates[out.chosen].choice).box;
  return out;
}

namespace {

class EpisodeRunner {
 public:
  EpisodeRunner(const SceneSpec& scene, const Task& task, Backend& backend, const AgentConfig& cfg)
      : task_(task), backend_(backend), cfg_(cfg), sim_(scene, task, cfg.sim), memory_(task) {
    result_.scene_id = scene.scene_id;
    result_.task_type = task.type;
    opt_.k = cfg.k;
    opt_.templates = cfg.templates;
  }

  EpisodeResult run() {
    ExpertPlan plan;
    try {
      plan = expert_plan(sim_.state(), task_);
    } catch (const Unreachable& e) {
      return finish("unreachable");
    }
    std::string reason = "subgoals_exhausted";
    for (const auto& sg : plan.subgoals) {
      feedback_events_ = 0;
      const auto r = sg.subgoal.phase == Phase::Navigation ? navigate(sg) : interact(sg.subgoal);
      if (r) {
        reason = *r;
        break;
      }
    }
    return finish(reason);
  }

 private:
  using Stop = std::optional<std::string>;

  int next_step() const { return static_cast<int>(memory_.size()) + 1; }

  std::map<std::string, std::string> context(const Subgoal& sg) const {
    return {{ctx::kSubgoalIndex, std::to_string(sg.index)},
            {ctx::kSubgoalText, sg.text},
            {ctx::kAttempt, std::to_string(1 + feedback_events_)}};
  }

  // One greedy call with parse retries; nullopt when nothing parses.
  std::optional<SkillOutput> ask(SkillKind kind, const Prompt& p, std::map<std::string, std::string> context) {
    PromptRecord rec{next_step(), kind, p.text, static_cast<int>(p.frames.size()), 0};
    if (kind == SkillKind::SAP) {
      rec.window_steps = static_cast<int>(memory_window(memory_, next_step(), cfg_.k).size());
    }
    result_.prompts.push_back(std::move(rec));
    GenerationRequest req;
    req.prompt_text = p.text;
    req.frames = p.frames;
    req.skill = kind;
    req.max_tokens = cfg_.max_tokens;
    req.context = std::move(context);
    for (int r = 0; r <= cfg_.parse_retry_limit; ++r) {
      req.temperature = r == 0 ? 0.0 : cfg_.temperature;
      req.seed = cfg_.seed * 1000003ULL + static_cast<std::uint64_t>(next_step()) * 131ULL +
                 static_cast<std::uint64_t>(kind) * 17ULL + static_cast<std::uint64_t>(r);
      backend_.observe(sim_.state(), task_);
      auto out = backend_.generate(req);
      try {
        return parse_response(kind, out.front().text);
      } catch (const ParseFailure&) {
      }
    }
    return std::nullopt;
  }

  StepDraft draft(const Subgoal& sg) const {
    StepDraft d;
    d.frame = sim_.frame();
    d.pose = sim_.state().agent;
    d.subgoal = sg;
    return d;
  }

  // Fills v_t through object recognition.
  Stop recognise(StepDraft& d) {
    auto out = ask(SkillKind::OR, build_prompt(SkillKind::OR, memory_, d, opt_), context(*d.subgoal));
    if (!out) return "parse_failure";
    std::set<ObjectRef> vis;
    for (const auto& n : std::get<ObjectSet>(*out).names) vis.insert(ObjectRef{n, std::nullopt});
    d.visible = std::move(vis);
    return std::nullopt;
  }

  bool execute(StepDraft& d, const Action& a, const std::optional<BoundingBox>& box) {
    const Frame before = sim_.frame();
    sim_.step(a, box);
    const bool failed = detect_failure(before, sim_.frame());
    MemoryStep m;
    m.frame = d.frame;
    m.visible = d.visible.value_or(std::set<ObjectRef>{});
    m.pose = *d.pose;
    m.action = a;
    m.bbox = box;
    m.result = failed ? ActionResult::Failed : ActionResult::Succeeded;
    m.subgoal = *d.subgoal;
    const int t = memory_.append(std::move(m)).step_index;
    if (failed) {
      ++result_.failures;
      result_.failed_steps.push_back(t);
    }
    return !failed;
  }

  Stop navigate(const PlannedSubgoal& sg) {
    if (!sg.nav_target || !sg.nav_target->instance_id) return "unreachable";
    std::vector<Action> path;
    try {
      path = navigation_path(sim_.state(), *sg.nav_target->instance_id);
    } catch (const Unreachable&) {
      return "unreachable";
    }
    for (const auto& a : path) {
      if (next_step() > cfg_.max_steps) return "max_steps";
      StepDraft d = draft(sg.subgoal);
      if (auto s = recognise(d)) return s;
      execute(d, a, std::nullopt);
    }
    return std::nullopt;
  }

  Stop interact(const Subgoal& sg) {
    std::optional<std::pair<Action, std::optional<BoundingBox>>> forced;
    std::optional<Action> notice;
    while (true) {
      if (next_step() > cfg_.max_steps) return "max_steps";
      StepDraft d = draft(sg);
      if (auto s = recognise(d)) return s;

      Action a;
      std::optional<BoundingBox> box;
      const bool recovered = forced.has_value();
      if (forced) {
        a = forced->first;
        box = forced->second;
        forced.reset();
      } else {
        Prompt sap = build_prompt(SkillKind::SAP, memory_, d, opt_);
        auto cx = context(sg);
        if (notice) {
          sap.text = augment_env_feedback(sap.text, *notice);
          cx[ctx::kFailedAction] = action_text(*notice);
        }
        auto choice = ask(SkillKind::SAP, sap, cx);
        if (!choice) return "parse_failure";
        a = to_action(std::get<ActionChoice>(*choice));
        if (a.target) {
          d.action = a;
          auto cxo = context(sg);
          cxo[ctx::kObject] = a.target->name;
          auto b = ask(SkillKind::OD, build_prompt(SkillKind::OD, memory_, d, opt_), cxo);
          if (!b) return "parse_failure";
          box = std::get<Box>(*b).box;
        }
      }
      notice.reset();

      const bool ok = execute(d, a, box);
      if (recovered && ok) ++result_.recoveries_succeeded;
      if (!ok) {
        if (cfg_.recovery_enabled) {
          ++feedback_events_;
          ++result_.recoveries_attempted;
          result_.recovery_triggers.push_back(memory_.back().step_index);
          StepDraft next = draft(sg);
          next.visible = d.visible;
          backend_.observe(sim_.state(), task_);
          try {
            auto rec = recover(a, box, memory_, next, backend_, cfg_, context(sg));
            forced.emplace(rec.action, rec.bbox);
          } catch (const RecoveryExhausted&) {
            return "recovery_exhausted";
          }
        } else if (cfg_.env_feedback) {
          ++feedback_events_;
          notice = a;
        }
        continue;
      }

      StepDraft g;
      g.frame = sim_.frame();
      g.subgoal = sg;
      auto done = ask(SkillKind::GRSub, build_prompt(SkillKind::GRSub, memory_, g, opt_), context(sg));
      if (!done) return "parse_failure";
      if (std::get<YesNo>(*done).value) return std::nullopt;
    }
  }

  EpisodeResult finish(const std::string& reason) {
    const auto g = goal_satisfied(sim_.state(), task_);
    result_.success = g.all;
    result_.conditions_satisfied = g.satisfied;
    result_.conditions_total = g.total;
    result_.steps_taken = static_cast<int>(memory_.size());
    result_.stop_reason = reason;
    result_.final_frame = sim_.frame();
    result_.transcript = memory_;
    return std::move(result_);
  }

  const Task& task_;
  Backend& backend_;
  const AgentConfig& cfg_;
  Simulator sim_;
  Memory memory_;
  PromptOptions opt_;
  int feedback_events_ = 0;
  EpisodeResult result_;
};

}  // namespace

EpisodeResult run_episode(const SceneSpec& scene, const Task& task, Backend& backend, const AgentConfig& config) {
  config.validate();
  return EpisodeRunner(scene, task, backend, config).run();
}

}  // namespace euea
