// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// euea: command-line entry point for scene generation, agent runs, dataset
// builds, refinement filtering and evaluation.
//
// Settings merge in three layers: --config file, then EUEA_* environment
// variables, then flags. Every verb writes run.json next to its outputs.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "euea/agent.hpp"
#include "euea/dataset.hpp"
#include "euea/errors.hpp"
#include "euea/eval.hpp"
#include "euea/reward.hpp"
#include "euea/serialization.hpp"
#include "euea/skills.hpp"
#include "euea/text.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace euea;

namespace {

struct Settings {
  std::string backend = "oracle";
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string model;
  std::string api_key;
  int timeout_seconds = 120;
  std::string embed_url;
  std::uint64_t seed = 0;
  int workers = 1;
  int k = 4;
  int n = 10;
  int max_steps = 120;
  double temperature = 0.7;
  bool recovery = true;
  bool env_feedback = false;
  bool length_normalized = false;
  SimConfig sim;
  std::string reward_scales;
  std::string templates;
  std::string out = "out";
};

json settings_to_json(const Settings& s, bool redact) {
  return {{"backend", s.backend},
          {"base_url", s.base_url},
          {"model", s.model},
          {"api_key", redact && !s.api_key.empty() ? "<redacted>" : s.api_key},
          {"timeout_seconds", s.timeout_seconds},
          {"embed_url", s.embed_url},
          {"seed", s.seed},
          {"workers", s.workers},
          {"agent",
           {{"k", s.k},
            {"n", s.n},
            {"max_steps", s.max_steps},
            {"temperature", s.temperature},
            {"recovery", s.recovery},
            {"env_feedback", s.env_feedback},
            {"length_normalized", s.length_normalized}}},
          {"sim", s.sim},
          {"reward_scales", s.reward_scales},
          {"templates", s.templates},
          {"out", s.out}};
}

template <typename T>
void take(const json& j, const char* key, T& into) {
  if (j.contains(key)) into = j.at(key).get<T>();
}

void apply_json(Settings& s, const json& j) {
  static const std::set<std::string> known = {"backend", "base_url",  "model", "api_key",   "timeout_seconds",
                                              "embed_url", "seed",    "workers", "agent",   "sim",
                                              "reward_scales", "templates", "out"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config key \"" + key + "\"");
  }
  try {
    take(j, "backend", s.backend);
    take(j, "base_url", s.base_url);
    take(j, "model", s.model);
    take(j, "api_key", s.api_key);
    take(j, "timeout_seconds", s.timeout_seconds);
    take(j, "embed_url", s.embed_url);
    take(j, "seed", s.seed);
    take(j, "workers", s.workers);
    take(j, "reward_scales", s.reward_scales);
    take(j, "templates", s.templates);
    take(j, "out", s.out);
    if (j.contains("agent")) {
      const auto& a = j.at("agent");
      static const std::set<std::string> agent_keys = {"k", "n", "max_steps", "temperature", "recovery",
                                                       "env_feedback", "length_normalized"};
      for (const auto& [key, _] : a.items()) {
        if (!agent_keys.count(key)) throw ConfigError("unknown config key \"agent." + key + "\"");
      }
      take(a, "k", s.k);
      take(a, "n", s.n);
      take(a, "max_steps", s.max_steps);
      take(a, "temperature", s.temperature);
      take(a, "recovery", s.recovery);
      take(a, "env_feedback", s.env_feedback);
      take(a, "length_normalized", s.length_normalized);
    }
    if (j.contains("sim")) {
      json merged = s.sim;
      for (const auto& [key, value] : j.at("sim").items()) {
        if (!merged.contains(key)) throw ConfigError("unknown config key \"sim." + key + "\"");
        merged[key] = value;
      }
      s.sim = merged.get<SimConfig>();
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

void apply_env(Settings& s) {
  if (const char* v = std::getenv("EUEA_API_KEY")) s.api_key = v;
  if (const char* v = std::getenv("EUEA_BASE_URL")) s.base_url = v;
  if (const char* v = std::getenv("EUEA_MODEL")) s.model = v;
  if (const char* v = std::getenv("EUEA_EMBED_URL")) s.embed_url = v;
  if (const char* v = std::getenv("EUEA_BACKEND")) s.backend = v;
}

// Flag layer: every field is optional so unset flags leave lower layers alone.
struct Flags {
  std::string config;
  std::optional<std::string> backend, base_url, model, embed_url, reward_scales, templates, out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers, k, n, max_steps, timeout;
  std::optional<double> temperature;
  bool no_recovery = false;
  bool env_feedback = false;
  bool length_normalized = false;
};

void apply_flags(Settings& s, const Flags& f) {
  if (f.backend) s.backend = *f.backend;
  if (f.base_url) s.base_url = *f.base_url;
  if (f.model) s.model = *f.model;
  if (f.embed_url) s.embed_url = *f.embed_url;
  if (f.reward_scales) s.reward_scales = *f.reward_scales;
  if (f.templates) s.templates = *f.templates;
  if (f.out) s.out = *f.out;
  if (f.seed) s.seed = *f.seed;
  if (f.workers) s.workers = *f.workers;
  if (f.k) s.k = *f.k;
  if (f.n) s.n = *f.n;
  if (f.max_steps) s.max_steps = *f.max_steps;
  if (f.timeout) s.timeout_seconds = *f.timeout;
  if (f.temperature) s.temperature = *f.temperature;
  if (f.no_recovery) s.recovery = false;
  if (f.env_feedback) s.env_feedback = true;
  if (f.length_normalized) s.length_normalized = true;
}

void validate(const Settings& s) {
  if (s.backend != "oracle" && s.backend != "chat") {
    throw ConfigError("backend must be oracle or chat, got \"" + s.backend + "\"");
  }
  if (s.backend == "chat" && s.model.empty()) throw ConfigError("the chat backend needs a model name");
  if (s.workers < 1) throw ConfigError("workers must be >= 1");
  for (const auto& p : {s.reward_scales, s.templates}) {
    if (!p.empty() && !fs::exists(p)) throw ConfigError("referenced file does not exist: " + p);
  }
  if (s.sim.raster_width < 8 || s.sim.raster_height < 8 || s.sim.cone_depth < 1 ||
      !(s.sim.click_threshold > 0.0 && s.sim.click_threshold <= 1.0)) {
    throw ConfigError("simulator settings out of range");
  }
  AgentConfig a;
  a.k = s.k;
  a.n = s.n;
  a.max_steps = s.max_steps;
  a.validate();
}

// ---------------------------------------------------------------------------

struct Context {
  Settings settings;
  std::vector<std::string> argv;
  std::optional<PromptTemplates> templates;

  fs::path out() const { return settings.out; }

  const PromptTemplates* template_ptr() {
    if (!settings.templates.empty() && !templates) templates = PromptTemplates::load(settings.templates);
    return templates ? &*templates : nullptr;
  }

  AgentConfig agent_config() {
    AgentConfig a;
    a.k = settings.k;
    a.n = settings.n;
    a.max_steps = settings.max_steps;
    a.temperature = settings.temperature;
    a.recovery_enabled = settings.recovery;
    a.env_feedback = settings.env_feedback;
    a.length_normalized = settings.length_normalized;
    a.seed = settings.seed;
    a.sim = settings.sim;
    a.templates = template_ptr();
    return a;
  }

  RewardScales scales() const {
    if (settings.reward_scales.empty()) return RewardScales::unit();
    std::ifstream in(settings.reward_scales);
    std::stringstream buf;
    buf << in.rdbuf();
    return RewardScales::from_json_text(buf.str());
  }

  std::unique_ptr<Backend> backend(const FaultSchedule& faults, const std::optional<fs::path>& frame_root) const {
    if (settings.backend == "oracle") return std::make_unique<ScriptedOracle>(faults);
    ChatCompletionConfig c;
    c.base_url = settings.base_url;
    c.model = settings.model;
    c.api_key = settings.api_key;
    c.timeout_seconds = settings.timeout_seconds;
    c.log_path = out() / "transcripts" / "backend_log.jsonl";
    c.frame_root = frame_root;
    fs::create_directories(out() / "transcripts");
    return std::make_unique<ChatCompletionBackend>(c);
  }

  void write_run_json(const std::string& verb) const {
    json run = {{"verb", verb}, {"argv", argv}, {"config", settings_to_json(settings, true)}};
    write_json_file(out() / "run.json", run);
  }
};

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream o(p, std::ios::binary);
  if (!o) throw FormatError("cannot write " + p.string());
  o << text;
}

// Scene files hold {"scene": SceneSpec, "task": Task}.
std::vector<EpisodeSpec> load_scenes(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".json" && e.path().filename() != "index.json") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw ConfigError("no such scene file or directory: " + in);
    }
  }
  if (files.empty()) throw ConfigError("no scene files found");
  std::vector<EpisodeSpec> out;
  for (const auto& f : files) {
    const json j = read_json_file(f);
    try {
      out.push_back({j.at("scene").get<SceneSpec>(), j.at("task").get<Task>()});
    } catch (const json::exception& e) {
      throw FormatError(f.string() + ": " + e.what());
    }
  }
  return out;
}

// Trajectory files are JSONL next to a frames/ directory.
void save_trajectories(const fs::path& file, const std::vector<Trajectory>& trajectories) {
  FrameStore store(file.parent_path());
  std::vector<json> rows;
  for (const auto& t : trajectories) {
    for (const auto& m : t.steps.steps()) {
      if (m.frame.has_pixels()) store.save(m.frame);
    }
    if (t.final_frame.has_pixels()) store.save(t.final_frame);
    rows.push_back(trajectory_to_json(t));
  }
  write_jsonl(file, rows);
}

std::vector<Trajectory> load_trajectories(const fs::path& file) {
  FrameStore store(file.parent_path());
  std::vector<Trajectory> out;
  for (const auto& row : read_jsonl(file)) {
    Trajectory t = trajectory_from_json(row);
    Memory m(t.task());
    for (auto step : t.steps.steps()) {
      step.frame = store.load(step.frame);
      m.append(std::move(step));
    }
    t.steps = std::move(m);
    if (!t.final_frame.empty()) t.final_frame = store.load(t.final_frame);
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<fs::path> dataset_files(const std::vector<std::string>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".jsonl") found.push_back(e.path());
      }
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.emplace_back(in);
    } else {
      throw ConfigError("no such dataset file or directory: " + in);
    }
  }
  if (files.empty()) throw ConfigError("no dataset files found");
  return files;
}

// Dataset JSONL lives in <root>/<split>/; frames in <root>/frames/.
fs::path dataset_root(const fs::path& jsonl) { return jsonl.parent_path().parent_path(); }

std::set<SkillKind> parse_kinds(const std::vector<std::string>& names) {
  std::set<SkillKind> out;
  if (names.empty()) return {kAllSkillKinds.begin(), kAllSkillKinds.end()};
  for (const auto& n : names) {
    auto k = parse_skill_kind(n);
    if (!k) throw UsageError("unknown skill kind \"" + n + "\"");
    out.insert(*k);
  }
  return out;
}

FaultSchedule parse_faults(const std::vector<std::string>& specs) {
  // KIND[:ATTEMPT[:SUBGOAL]], e.g. WrongBox, WrongBox:1:3.
  FaultSchedule f;
  for (const auto& text : specs) {
    auto parts = split(text, ':');
    FaultRule r;
    auto c = parse_corruption(parts.at(0));
    if (!c) throw UsageError("unknown fault \"" + parts[0] + "\"");
    r.corruption = *c;
    try {
      if (parts.size() > 1) r.attempt = std::stoi(parts[1]);
      if (parts.size() > 2) r.subgoal_index = std::stoi(parts[2]);
    } catch (const std::exception&) {
      throw UsageError("bad fault \"" + text + "\"");
    }
    if (parts.size() > 3 || r.attempt < 1) throw UsageError("bad fault \"" + text + "\"");
    f.rules.push_back(r);
  }
  return f;
}

std::string file_stem_for(const EpisodeSpec& e, std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04zu-", i + 1);
  return buf + e.scene.scene_id;
}

// ---------------------------------------------------------------------------
// Verbs

struct GenScenesArgs {
  int count = 10;
  std::vector<std::string> types;
};

void gen_scenes(Context& ctx, const GenScenesArgs& a) {
  if (a.count < 1) throw UsageError("--count must be >= 1");
  std::vector<TaskType> types;
  for (const auto& t : a.types) {
    auto p = parse_task_type(t);
    if (!p) throw UsageError("unknown task type \"" + t + "\"");
    types.push_back(*p);
  }
  if (types.empty()) types.assign(kAllTaskTypes.begin(), kAllTaskTypes.end());
  const fs::path dir = ctx.out() / "scenes";
  fs::create_directories(dir);
  json index = json::array();
  for (TaskType t : types) {
    for (int i = 1; i <= a.count; ++i) {
      auto ep = generate_episode(t, ctx.settings.seed + static_cast<std::uint64_t>(i));
      const std::string file = ep.scene.scene_id + ".json";
      write_json_file(dir / file, json{{"scene", ep.scene}, {"task", ep.task}});
      index.push_back({{"file", file}, {"scene_id", ep.scene.scene_id}, {"task_type", std::string(to_string(t))},
                       {"instruction", ep.task.instruction}});
    }
  }
  write_json_file(dir / "index.json", index);
  std::cout << json{{"scenes", index.size()}, {"dir", dir.string()}}.dump() << '\n';
}

struct ExploreArgs {
  std::vector<std::string> scenes;
  int episodes = 10;
  int steps = 20;
};

void explore(Context& ctx, const ExploreArgs& a) {
  const auto specs = load_scenes(a.scenes);
  const fs::path dir = ctx.out() / "datasets" / "trajectories";
  int total = 0;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    auto tr = random_exploration(specs[i].scene, specs[i].task, a.episodes, a.steps,
                                 ctx.settings.seed + static_cast<std::uint64_t>(i), ctx.settings.sim);
    save_trajectories(dir / ("explore-" + specs[i].scene.scene_id + ".jsonl"), tr);
    total += static_cast<int>(tr.size());
  }
  std::cout << json{{"trajectories", total}, {"dir", dir.string()}}.dump() << '\n';
}

struct RunAgentArgs {
  std::string suite;
  std::vector<std::string> scenes;
  std::vector<std::string> faults;
  bool save_trajectories = false;
};

std::pair<std::vector<EpisodeSpec>, FaultSchedule> episodes_for(const Context& ctx, const std::string& suite,
                                                                const std::vector<std::string>& scenes,
                                                                const std::vector<std::string>& faults) {
  if (!suite.empty() && !scenes.empty()) throw UsageError("give either --suite or --scenes, not both");
  if (suite.empty() && scenes.empty()) throw UsageError("one of --suite or --scenes is required");
  std::vector<EpisodeSpec> eps;
  FaultSchedule fs_;
  if (!suite.empty()) {
    auto s = make_suite(suite, ctx.settings.seed);
    eps = std::move(s.episodes);
    fs_ = std::move(s.faults);
  } else {
    eps = load_scenes(scenes);
  }
  auto extra = parse_faults(faults);
  fs_.rules.insert(fs_.rules.end(), extra.rules.begin(), extra.rules.end());
  return {std::move(eps), std::move(fs_)};
}

json transcript_json(const EpisodeResult& r) {
  json prompts = json::array();
  for (const auto& p : r.prompts) {
    prompts.push_back({{"step", p.step}, {"kind", std::string(to_string(p.kind))}, {"frames", p.frames},
                       {"window_steps", p.window_steps}, {"text", p.text}});
  }
  return {{"summary", episode_summary_json(r)},
          {"failed_steps", r.failed_steps},
          {"recovery_triggers", r.recovery_triggers},
          {"memory", r.transcript},
          {"final_frame", r.final_frame},
          {"prompts", prompts}};
}

void run_agent(Context& ctx, const RunAgentArgs& a) {
  auto [eps, faults] = episodes_for(ctx, a.suite, a.scenes, a.faults);
  const AgentConfig cfg = ctx.agent_config();
  auto res = evaluate_tasks(eps, [&] { return ctx.backend(faults, std::nullopt); }, cfg, ctx.settings.workers);
  const fs::path dir = ctx.out() / "transcripts";
  FrameStore store(dir);
  std::vector<json> summaries;
  std::vector<Trajectory> trajectories;
  for (std::size_t i = 0; i < res.episodes.size(); ++i) {
    const auto& r = res.episodes[i];
    for (const auto& m : r.transcript.steps()) {
      if (m.frame.has_pixels()) store.save(m.frame);
    }
    if (r.final_frame.has_pixels()) store.save(r.final_frame);
    write_json_file(dir / (file_stem_for(eps[i], i) + ".json"), transcript_json(r));
    summaries.push_back(episode_summary_json(r));
    if (a.save_trajectories) {
      Trajectory t;
      t.scene_id = r.scene_id;
      t.steps = r.transcript;
      t.source = TrajectorySource::Ingested;
      t.completed = r.success;
      t.final_frame = r.final_frame;
      trajectories.push_back(std::move(t));
    }
  }
  write_jsonl(dir / "episodes.jsonl", summaries);
  if (a.save_trajectories) save_trajectories(ctx.out() / "datasets" / "trajectories" / "agent.jsonl", trajectories);
  json summary = task_report_json(res.report);
  summary["transcripts"] = dir.string();
  std::cout << summary.dump() << '\n';
}

struct BuildDatasetArgs {
  std::vector<std::string> scenes;
  std::vector<std::string> trajectories;
  std::vector<std::string> kinds;
  double holdout = 31.0 / 108.0;
  int k = 4;
  int frame_budget = 1;
};

void build_dataset(Context& ctx, const BuildDatasetArgs& a) {
  std::vector<Trajectory> all;
  if (!a.scenes.empty()) {
    for (const auto& e : load_scenes(a.scenes)) all.push_back(expert_trajectory(e.scene, e.task, ctx.settings.sim));
  }
  for (const auto& f : a.trajectories) {
    auto more = load_trajectories(f);
    all.insert(all.end(), more.begin(), more.end());
  }
  if (all.empty()) throw UsageError("build-dataset needs --scenes or --trajectories");
  std::vector<std::string> ids;
  for (const auto& t : all) ids.push_back(t.scene_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  const auto split = split_scenes(ids, a.holdout, ctx.settings.seed);
  const std::set<std::string> eval_ids(split.eval.begin(), split.eval.end());

  std::vector<Trajectory> train, eval;
  for (auto& t : all) (eval_ids.count(t.scene_id) ? eval : train).push_back(std::move(t));
  DatasetOptions opt;
  opt.k = a.k;
  opt.frame_budget = a.frame_budget;
  opt.templates = ctx.template_ptr();
  const auto kinds = parse_kinds(a.kinds);
  std::vector<SkillInstance> instances;
  for (auto [part, which] : {std::pair{&train, Split::Train}, std::pair{&eval, Split::Eval}}) {
    if (part->empty()) continue;
    auto built = build_skill_dataset(*part, kinds, which, opt);
    instances.insert(instances.end(), built.begin(), built.end());
  }
  const fs::path dir = ctx.out() / "datasets";
  const auto files = write_dataset(dir, instances);
  write_json_file(dir / "split.json", json{{"train", split.train}, {"eval", split.eval}, {"seed", ctx.settings.seed}});
  std::map<std::string, int> counts;
  for (const auto& i : instances) ++counts[std::string(to_string(i.split)) + "/" + std::string(to_string(i.kind))];
  std::cout << json{{"instances", instances.size()}, {"counts", counts}, {"files", files.size()}}.dump() << '\n';
}

struct GrpoFilterArgs {
  std::vector<std::string> datasets;
  int samples = 8;
  double tau = 0.2;
  std::optional<std::size_t> cap;
  double temperature = 1.0;
};

void grpo_filter(Context& ctx, const GrpoFilterArgs& a) {
  GrpoFilterConfig cfg;
  cfg.samples_per_instance = a.samples;
  cfg.tau = a.tau;
  cfg.cap = a.cap;
  cfg.temperature = a.temperature;
  cfg.seed = ctx.settings.seed;
  cfg.scales = ctx.scales();
  const auto reward_fn = [scales = cfg.scales](const SkillInstance& i, const std::string& text) {
    return reward_text(i, text, scales);
  };
  const fs::path dir = ctx.out() / "datasets";
  FrameStore out_store(dir);
  std::vector<json> stats_rows;
  std::size_t kept = 0, seen = 0;
  for (const auto& f : dataset_files(a.datasets)) {
    const auto instances = read_dataset(f);
    const FrameStore in_store(dataset_root(f));
    auto backend = ctx.backend({}, dataset_root(f));
    if (auto* o = dynamic_cast<ScriptedOracle*>(backend.get())) o->add_answers(instances);
    auto res = filter_grpo(instances, *backend, reward_fn, cfg);
    std::vector<json> rows;
    for (const auto& inst : res.selected) {
      json j = inst;
      for (std::size_t i = 0; i < inst.frames.size(); ++i) {
        out_store.save(in_store.load(inst.frames[i]));
        j["frames"][i]["path"] = "../" + inst.frames[i].relative_path();
      }
      rows.push_back(std::move(j));
    }
    write_jsonl(dir / "grpo" / f.filename(), rows);
    for (const auto& s : res.stats) stats_rows.push_back(sample_stats_to_json(s));
    kept += res.selected.size();
    seen += instances.size();
  }
  write_jsonl(ctx.out() / "reports" / "grpo_stats.jsonl", stats_rows);
  std::cout << json{{"instances", seen}, {"selected", kept}, {"tau", a.tau}}.dump() << '\n';
}

struct GrpoRewardArgs {
  std::vector<std::string> datasets;
  std::string responses;
};

void grpo_reward(Context& ctx, const GrpoRewardArgs& a) {
  std::map<std::string, SkillInstance> by_id;
  for (const auto& f : dataset_files(a.datasets)) {
    for (auto& inst : read_dataset(f)) by_id.emplace(inst.id, std::move(inst));
  }
  const auto scales = ctx.scales();
  std::vector<json> rows;
  std::map<std::string, std::pair<double, int>> per_kind;
  for (const auto& row : read_jsonl(a.responses)) {
    std::string id, text;
    try {
      id = row.at("id").get<std::string>();
      text = row.at("response").get<std::string>();
    } catch (const json::exception& e) {
      throw FormatError(a.responses + ": rows need \"id\" and \"response\": " + e.what());
    }
    auto it = by_id.find(id);
    if (it == by_id.end()) throw FormatError("response for unknown instance " + id);
    const auto r = reward_text(it->second, text, scales);
    rows.push_back({{"id", id},
                    {"kind", std::string(to_string(r.active_skill))},
                    {"r_op", r.r_op},
                    {"r_tp", r.r_tp},
                    {"r_au", r.r_au},
                    {"r_gr", r.r_gr},
                    {"r_total", r.r_total}});
    auto& pk = per_kind[std::string(to_string(r.active_skill))];
    pk.first += r.r_total;
    ++pk.second;
  }
  write_jsonl(ctx.out() / "reports" / "rewards.jsonl", rows);
  json means = json::object();
  for (const auto& [k, v] : per_kind) means[k] = v.first / v.second;
  std::cout << json{{"scored", rows.size()}, {"mean_reward", means}}.dump() << '\n';
}

struct EvalSkillsArgs {
  std::vector<std::string> datasets;
  std::string label;
  double ag_iou = 0.5;
};

void eval_skills(Context& ctx, const EvalSkillsArgs& a) {
  std::vector<SkillInstance> all;
  std::optional<fs::path> root;
  for (const auto& f : dataset_files(a.datasets)) {
    auto more = read_dataset(f);
    if (!root) root = dataset_root(f);
    all.insert(all.end(), more.begin(), more.end());
  }
  auto backend = ctx.backend({}, root);
  if (auto* o = dynamic_cast<ScriptedOracle*>(backend.get())) o->add_answers(all);
  std::unique_ptr<HttpEmbedder> embedder;
  if (!ctx.settings.embed_url.empty()) embedder = std::make_unique<HttpEmbedder>(ctx.settings.embed_url);
  SkillEvalOptions opt;
  opt.embedder = embedder.get();
  opt.action_grounding_iou = a.ag_iou;
  opt.workers = ctx.settings.workers;
  const auto res = evaluate_skills(all, *backend, opt);
  const std::string label = a.label.empty() ? backend->name() : a.label;
  const fs::path dir = ctx.out() / "reports";
  write_text(dir / "skills.md", skill_report_markdown(res.report, label));
  write_text(dir / "skills.csv", skill_report_csv(res.report, label));
  write_json_file(dir / "skills.json", json{{"label", label}, {"report", skill_report_json(res.report)}});
  std::vector<json> rows;
  for (const auto& s : res.scores) {
    rows.push_back({{"id", s.instance_id}, {"kind", std::string(to_string(s.kind))}, {"parsed", s.parsed},
                    {"score", s.score}, {"response", s.response}});
  }
  write_jsonl(dir / "skill_scores.jsonl", rows);
  std::cout << skill_report_json(res.report).dump() << '\n';
}

struct EvalTasksArgs {
  std::string suite;
  std::vector<std::string> scenes;
  std::vector<std::string> faults;
  std::string label;
};

void eval_tasks(Context& ctx, const EvalTasksArgs& a) {
  auto [eps, faults] = episodes_for(ctx, a.suite, a.scenes, a.faults);
  const AgentConfig cfg = ctx.agent_config();
  auto res = evaluate_tasks(eps, [&] { return ctx.backend(faults, std::nullopt); }, cfg, ctx.settings.workers);
  std::string label = a.label;
  if (label.empty()) {
    label = ctx.settings.backend;
    if (!cfg.recovery_enabled) label += " (no recovery)";
    if (cfg.env_feedback) label += " (env feedback)";
  }
  const fs::path dir = ctx.out() / "reports";
  write_text(dir / "tasks.md", task_report_markdown(res.report, label));
  write_text(dir / "tasks.csv", task_report_csv(res.report, label));
  write_json_file(dir / "tasks.json", json{{"label", label}, {"report", task_report_json(res.report)}});
  std::vector<json> rows;
  for (const auto& e : res.episodes) rows.push_back(episode_summary_json(e));
  write_jsonl(ctx.out() / "transcripts" / "episodes.jsonl", rows);
  std::cout << task_report_json(res.report).dump() << '\n';
}

struct ReportArgs {
  std::vector<std::string> inputs;
  std::string format = "md";
};

void report(Context& ctx, const ReportArgs& a) {
  if (a.format != "md" && a.format != "csv") throw UsageError("--format must be md or csv");
  std::vector<LabelledSkillReport> skills;
  std::vector<LabelledTaskReport> tasks;
  for (const auto& in : a.inputs) {
    const json j = read_json_file(in);
    if (!j.contains("report") || !j.contains("label")) throw FormatError(in + " is not a report file");
    const auto label = j["label"].get<std::string>();
    if (j["report"].contains("metrics")) {
      skills.emplace_back(label, skill_report_from_json(j["report"]));
    } else {
      tasks.emplace_back(label, task_report_from_json(j["report"]));
    }
  }
  std::string text;
  if (!tasks.empty()) text += a.format == "md" ? task_report_markdown(tasks) : task_report_csv(tasks);
  if (!skills.empty()) {
    if (!text.empty()) text += '\n';
    text += a.format == "md" ? skill_report_markdown(skills) : skill_report_csv(skills);
  }
  write_text(ctx.out() / "reports" / ("combined." + a.format), text);
  std::cout << text;
}

// ---------------------------------------------------------------------------

void print_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

int exit_code_for(const std::string& kind) {
  if (kind == "UsageError") return 2;
  if (kind == "ConfigError") return 3;
  return 1;
}

// A replayed run starts from the recorded settings instead of the config
// file and environment; flags given alongside --replay still win.
int run(std::vector<std::string> args, const json* recorded = nullptr) {
  for (std::size_t i = 0; i < args.size() && !recorded; ++i) {
    std::string path;
    if (args[i] == "--replay" && i + 1 < args.size()) {
      path = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (args[i].rfind("--replay=", 0) == 0) {
      path = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      continue;
    }
    if (!fs::exists(path)) throw ConfigError("replay file not found: " + path);
    const json run_json = read_json_file(path);
    if (!run_json.contains("argv") || !run_json.contains("config")) throw ConfigError(path + " is not a run.json");
    auto replay_args = run_json["argv"].get<std::vector<std::string>>();
    replay_args.insert(replay_args.end(), args.begin(), args.end());
    return run(std::move(replay_args), &run_json["config"]);
  }

  CLI::App app{"euea: embodied-agent evaluation harness"};
  app.require_subcommand(1);
  app.fallthrough();
  Flags flags;
  app.add_option("--config", flags.config, "JSON settings file (lowest precedence)");
  std::string replay_help;
  app.add_option("--replay", replay_help, "re-run the invocation recorded in a run.json");
  app.add_option("--backend", flags.backend, "oracle or chat");
  app.add_option("--base-url", flags.base_url, "chat-completion endpoint");
  app.add_option("--model", flags.model, "model name for the chat backend");
  app.add_option("--embed-url", flags.embed_url, "embedding service for the planning metric");
  app.add_option("--timeout", flags.timeout, "backend timeout in seconds");
  app.add_option("--seed", flags.seed, "global seed");
  app.add_option("--workers", flags.workers, "parallel instances or episodes");
  app.add_option("--out", flags.out, "output directory");
  app.add_option("--templates", flags.templates, "prompt template file");
  app.add_option("--reward-scales", flags.reward_scales, "JSON table of per-skill reward maxima");
  app.add_option("-k,--memory-window", flags.k, "SAP memory window");
  app.add_option("-n,--samples-on-failure", flags.n, "recovery samples");
  app.add_option("--max-steps", flags.max_steps, "step budget per episode");
  app.add_option("--temperature", flags.temperature, "recovery sampling temperature");
  app.add_flag("--no-recovery", flags.no_recovery, "disable the recovery step");
  app.add_flag("--env-feedback", flags.env_feedback, "tell the model which action failed");
  app.add_flag("--length-normalized", flags.length_normalized, "divide candidate scores by token count");
  for (auto* opt : app.get_options()) opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenScenesArgs gen;
  auto* c_gen = app.add_subcommand("gen-scenes", "generate scenes with tasks");
  c_gen->add_option("--count", gen.count, "scenes per task type");
  c_gen->add_option("--types", gen.types, "task types (default: all)");

  ExploreArgs exp;
  auto* c_exp = app.add_subcommand("explore", "random exploration trajectories");
  c_exp->add_option("--scenes", exp.scenes, "scene files or directories")->required();
  c_exp->add_option("--episodes", exp.episodes, "trajectories per scene");
  c_exp->add_option("--steps", exp.steps, "steps per trajectory");

  RunAgentArgs ra;
  auto* c_run = app.add_subcommand("run-agent", "run the agent and keep full transcripts");
  c_run->add_option("--suite", ra.suite, "desk60, fault or smoke");
  c_run->add_option("--scenes", ra.scenes, "scene files or directories");
  c_run->add_option("--fault", ra.faults, "extra fault KIND[:ATTEMPT[:SUBGOAL]]");
  c_run->add_flag("--save-trajectories", ra.save_trajectories, "also write agent trajectories for build-dataset");

  BuildDatasetArgs bd;
  auto* c_bd = app.add_subcommand("build-dataset", "skill datasets from expert or recorded trajectories");
  c_bd->add_option("--scenes", bd.scenes, "scenes to replay expert trajectories from");
  c_bd->add_option("--trajectories", bd.trajectories, "trajectory JSONL files");
  c_bd->add_option("--kinds", bd.kinds, "skill kinds (default: all)");
  c_bd->add_option("--holdout", bd.holdout, "fraction of scenes held out for evaluation");
  c_bd->add_option("--dataset-k", bd.k, "memory window in SAP prompts");
  c_bd->add_option("--frame-budget", bd.frame_budget, "frames attached to STP and GRMain prompts");

  GrpoFilterArgs gf;
  auto* c_gf = app.add_subcommand("grpo-filter", "keep instances whose sampled rewards vary");
  c_gf->add_option("--dataset", gf.datasets, "dataset JSONL files or split directories")->required();
  c_gf->add_option("--samples", gf.samples, "samples per instance");
  c_gf->add_option("--tau", gf.tau, "normalized standard deviation threshold");
  c_gf->add_option("--cap", gf.cap, "keep at most this many");
  c_gf->add_option("--sample-temperature", gf.temperature, "sampling temperature");

  GrpoRewardArgs gr;
  auto* c_gr = app.add_subcommand("grpo-reward", "score responses with the rule-based rewards");
  c_gr->add_option("--dataset", gr.datasets, "dataset JSONL files or split directories")->required();
  c_gr->add_option("--responses", gr.responses, "JSONL of {id, response}")->required();

  EvalSkillsArgs es;
  auto* c_es = app.add_subcommand("eval-skills", "skill benchmark");
  c_es->add_option("--dataset", es.datasets, "dataset JSONL files or split directories")->required();
  c_es->add_option("--label", es.label, "row label in reports");
  c_es->add_option("--ag-iou", es.ag_iou, "IoU needed for a correct action grounding");

  EvalTasksArgs et;
  auto* c_et = app.add_subcommand("eval-tasks", "instruction-following success rates");
  c_et->add_option("--suite", et.suite, "desk60, fault or smoke");
  c_et->add_option("--scenes", et.scenes, "scene files or directories");
  c_et->add_option("--fault", et.faults, "extra fault KIND[:ATTEMPT[:SUBGOAL]]");
  c_et->add_option("--label", et.label, "row label in reports");

  ReportArgs rp;
  auto* c_rp = app.add_subcommand("report", "combine report JSON files into one table");
  c_rp->add_option("--input", rp.inputs, "reports/*.json files")->required();
  c_rp->add_option("--format", rp.format, "md or csv");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    print_error("UsageError", e.what());
    return 2;
  }

  Settings s;
  if (recorded) {
    apply_json(s, *recorded);
    if (s.api_key == "<redacted>") s.api_key.clear();
    if (const char* v = std::getenv("EUEA_API_KEY")) s.api_key = v;
  } else {
    if (!flags.config.empty()) {
      if (!fs::exists(flags.config)) throw ConfigError("config file not found: " + flags.config);
      apply_json(s, read_json_file(flags.config));
    }
    apply_env(s);
  }
  apply_flags(s, flags);
  validate(s);
  Context ctx;
  ctx.argv = args;
  ctx.settings = s;

  const std::string verb = app.get_subcommands().front()->get_name();
  for (const char* sub : {"datasets", "transcripts", "reports"}) fs::create_directories(ctx.out() / sub);
  if (verb == "gen-scenes") gen_scenes(ctx, gen);
  else if (verb == "explore") explore(ctx, exp);
  else if (verb == "run-agent") run_agent(ctx, ra);
  else if (verb == "build-dataset") build_dataset(ctx, bd);
  else if (verb == "grpo-filter") grpo_filter(ctx, gf);
  else if (verb == "grpo-reward") grpo_reward(ctx, gr);
  else if (verb == "eval-skills") eval_skills(ctx, es);
  else if (verb == "eval-tasks") eval_tasks(ctx, et);
  else if (verb == "report") report(ctx, rp);
  ctx.write_run_json(verb);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const Error& e) {
    print_error(e.kind(), e.what());
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    print_error("InternalError", e.what());
    return 1;
  }
}
