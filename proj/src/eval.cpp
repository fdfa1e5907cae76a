// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/eval.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "euea/errors.hpp"
#include "euea/reward.hpp"
#include "euea/serialization.hpp"
#include "euea/skills.hpp"
#include "euea/text.hpp"

namespace euea {

using nlohmann::json;

namespace {

std::pair<std::string, std::string> split_url(const std::string& url) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, url_re)) throw ConfigError("invalid URL " + url);
  std::string prefix = m[2].matched ? m[2].str() : "";
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// exception after all threads stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
          next = n;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

HttpEmbedder::HttpEmbedder(std::string base_url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
  std::tie(scheme_host_, path_prefix_) = split_url(base_url);
}

bool HttpEmbedder::healthy() const {
  httplib::Client c(scheme_host_);
  c.set_connection_timeout(timeout_seconds_, 0);
  c.set_read_timeout(timeout_seconds_, 0);
  auto res = c.Get(path_prefix_ + "/health");
  return res && res->status == 200;
}

std::vector<std::vector<double>> HttpEmbedder::embed(const std::vector<std::string>& texts) {
  httplib::Client c(scheme_host_);
  c.set_connection_timeout(timeout_seconds_, 0);
  c.set_read_timeout(timeout_seconds_, 0);
  auto res = c.Post(path_prefix_ + "/embed", json{{"texts", texts}}.dump(), "application/json");
  if (!res) throw EmbedderUnavailable(scheme_host_ + ": " + httplib::to_string(res.error()));
  if (res->status != 200) throw EmbedderUnavailable("embedder answered HTTP " + std::to_string(res->status));
  try {
    auto j = json::parse(res->body);
    auto vectors = j.at("vectors").get<std::vector<std::vector<double>>>();
    if (vectors.size() != texts.size()) throw EmbedderUnavailable("embedder returned the wrong number of vectors");
    model_id_ = j.value("model_id", "unknown");
    return vectors;
  } catch (const json::exception& e) {
    throw EmbedderUnavailable(std::string("malformed embedder response: ") + e.what());
  }
}

double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionMismatch("embedding sizes differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

double token_jaccard(std::string_view a, std::string_view b) {
  auto ta = word_tokens(a);
  auto tb = word_tokens(b);
  return jaccard(std::set<std::string>(ta.begin(), ta.end()), std::set<std::string>(tb.begin(), tb.end()));
}

Similarity planning_similarity(const std::string& pred, const std::string& gt, Embedder* embedder) {
  if (embedder) {
    try {
      auto v = embedder->embed({pred, gt});
      return {cosine(v[0], v[1]), false};
    } catch (const EmbedderUnavailable&) {
    }
  }
  return {token_jaccard(pred, gt), true};
}

Similarity plan_similarity(const std::vector<Subgoal>& pred, const std::vector<Subgoal>& gt, Embedder* embedder) {
  const std::size_t n = std::max(pred.size(), gt.size());
  if (n == 0) return {1.0, embedder == nullptr};
  Similarity total{0.0, false};
  for (std::size_t i = 0; i < std::min(pred.size(), gt.size()); ++i) {
    auto s = planning_similarity(pred[i].text, gt[i].text, embedder);
    total.value += s.value;
    total.fallback = total.fallback || s.fallback;
  }
  total.value /= static_cast<double>(n);
  return total;
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::Grounding: return "grounding";
    case Metric::Detection: return "detection";
    case Metric::GrMain: return "gr_main";
    case Metric::GrSub: return "gr_sub";
    case Metric::ActionPrediction: return "action_prediction";
    case Metric::ActionGrounding: return "action_grounding";
    case Metric::Planning: return "planning";
    case Metric::StepByStep: return "step_by_step";
  }
  return "unknown";
}

std::optional<Metric> metric_for(SkillKind kind) {
  switch (kind) {
    case SkillKind::OR: return Metric::Grounding;
    case SkillKind::OD: return Metric::Detection;
    case SkillKind::STP: return Metric::Planning;
    case SkillKind::SAP: return Metric::StepByStep;
    case SkillKind::ASP: return Metric::ActionPrediction;
    case SkillKind::AG: return Metric::ActionGrounding;
    case SkillKind::GRMain: return Metric::GrMain;
    case SkillKind::GRSub: return Metric::GrSub;
    case SkillKind::FSC: return std::nullopt;
  }
  return std::nullopt;
}

double SkillReport::value(Metric m) const {
  auto it = metrics.find(m);
  if (it == metrics.end()) return 0.0;
  return m == Metric::Planning ? it->second.mean() : 100.0 * it->second.mean();
}

SkillEvalResult evaluate_skills(std::span<const SkillInstance> dataset, Backend& backend,
                                const SkillEvalOptions& options) {
  std::vector<InstanceScore> scores(dataset.size());
  std::vector<char> fallback(dataset.size(), 0);
  parallel_for(dataset.size(), options.workers, [&](std::size_t i) {
    const SkillInstance& inst = dataset[i];
    GenerationRequest req;
    req.prompt_text = inst.prompt_text;
    req.frames = inst.frames;
    req.temperature = 0.0;
    req.sample_count = 1;
    req.seed = i;
    req.skill = inst.kind;
    req.context[ctx::kInstanceId] = inst.id;
    std::vector<Completion> out;
    try {
      out = backend.generate(req);
    } catch (const Error& e) {
      throw BackendError(inst.id + ": " + e.what());
    }
    InstanceScore& s = scores[i];
    s.instance_id = inst.id;
    s.kind = inst.kind;
    s.response = out.empty() ? "" : out.front().text;
    SkillOutput parsed;
    try {
      parsed = parse_response(inst.kind, s.response);
      s.parsed = true;
    } catch (const ParseFailure&) {
      return;
    }
    const SkillOutput& gt = inst.ground_truth;
    switch (inst.kind) {
      case SkillKind::OR: s.score = jaccard(std::get<ObjectSet>(parsed).names, std::get<ObjectSet>(gt).names); break;
      case SkillKind::OD: s.score = iou(std::get<Box>(parsed).box, std::get<Box>(gt).box); break;
      case SkillKind::STP: {
        auto sim = plan_similarity(std::get<SubgoalList>(parsed).subgoals, std::get<SubgoalList>(gt).subgoals,
                                   options.embedder);
        s.score = sim.value;
        fallback[i] = sim.fallback ? 1 : 0;
        break;
      }
      case SkillKind::SAP:
      case SkillKind::ASP:
      case SkillKind::GRMain:
      case SkillKind::GRSub:
      case SkillKind::FSC: s.score = reward(inst, parsed).r_total; break;
      case SkillKind::AG: {
        const auto& p = std::get<ActionWithBox>(parsed);
        const auto& g = std::get<ActionWithBox>(gt);
        const bool ok = p.action == g.action && iequals(p.object, g.object) &&
                        iou(p.box, g.box) >= options.action_grounding_iou;
        s.score = ok ? 1.0 : 0.0;
        break;
      }
    }
  });

  SkillEvalResult res;
  res.report.action_grounding_iou = options.action_grounding_iou;
  bool any_planning = false, any_fallback = false;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    auto m = metric_for(scores[i].kind);
    if (!m) continue;
    auto& st = res.report.metrics[*m];
    ++st.count;
    st.sum += scores[i].score;
    st.unparseable += scores[i].parsed ? 0 : 1;
    if (*m == Metric::Planning && scores[i].parsed) {
      any_planning = true;
      any_fallback = any_fallback || fallback[i];
    }
  }
  if (options.embedder && any_planning && !any_fallback) {
    res.report.similarity = "embedding:" + options.embedder->model_id();
  } else if (options.embedder && any_fallback) {
    res.report.similarity = "token-jaccard (embedder unavailable)";
  }
  res.scores = std::move(scores);
  return res;
}

double TaskReport::success_rate(TaskType t) const {
  auto it = per_type.find(t);
  if (it == per_type.end() || it->second.episodes == 0) throw std::out_of_range("no episodes of that type");
  return 100.0 * it->second.successes / it->second.episodes;
}

double TaskReport::average_success() const { return episodes == 0 ? 0.0 : 100.0 * successes / episodes; }

double TaskReport::average_goal_condition() const { return episodes == 0 ? 0.0 : goal_condition_sum / episodes; }

TaskEvalResult evaluate_tasks(std::span<const EpisodeSpec> episodes, const BackendFactory& factory,
                              const AgentConfig& config, int workers) {
  config.validate();
  TaskEvalResult out;
  out.episodes.resize(episodes.size());
  parallel_for(episodes.size(), workers, [&](std::size_t i) {
    const auto& item = episodes[i];
    try {
      auto backend = factory();
      AgentConfig cfg = config;
      cfg.seed = config.seed + i;
      out.episodes[i] = run_episode(item.scene, item.task, *backend, cfg);
    } catch (const std::exception& e) {
      EpisodeResult r;
      r.scene_id = item.scene.scene_id;
      r.task_type = item.task.type;
      r.conditions_total = static_cast<int>(item.task.goal_conditions.size());
      r.stop_reason = std::string("error: ") + e.what();
      r.transcript = Memory(item.task);
      out.episodes[i] = std::move(r);
    }
  });
  TaskReport& rep = out.report;
  for (const auto& e : out.episodes) {
    auto& t = rep.per_type[e.task_type];
    ++t.episodes;
    t.successes += e.success ? 1 : 0;
    t.goal_condition_sum += e.goal_condition_rate();
    ++rep.episodes;
    rep.successes += e.success ? 1 : 0;
    rep.goal_condition_sum += e.goal_condition_rate();
    rep.failures += e.failures;
    rep.recoveries_attempted += e.recoveries_attempted;
    rep.recoveries_succeeded += e.recoveries_succeeded;
  }
  return out;
}

Suite make_suite(const std::string& name, std::uint64_t seed) {
  Suite s;
  s.name = name;
  int per_type = 0;
  if (name == "desk60" || name == "fault") {
    per_type = 10;
  } else if (name == "smoke") {
    per_type = 1;
  } else {
    throw ConfigError("unknown suite \"" + name + "\" (expected desk60, fault or smoke)");
  }
  for (TaskType t : kAllTaskTypes) {
    for (int i = 1; i <= per_type; ++i) {
      auto ep = generate_episode(t, seed + static_cast<std::uint64_t>(i));
      s.episodes.push_back({std::move(ep.scene), std::move(ep.task)});
    }
  }
  if (name == "fault") s.faults.rules.push_back({std::nullopt, 1, Corruption::WrongBox});
  return s;
}

namespace {

const char* metric_header(Metric m) {
  switch (m) {
    case Metric::Grounding: return "Object Grounding";
    case Metric::Detection: return "Object Detection";
    case Metric::GrMain: return "Goal Recognition Main";
    case Metric::GrSub: return "Goal Recognition Sub";
    case Metric::ActionPrediction: return "Action Prediction";
    case Metric::ActionGrounding: return "Action Grounding";
    case Metric::Planning: return "Planning";
    case Metric::StepByStep: return "Step-by-step";
  }
  return "";
}

std::string metric_cell(const SkillReport& r, Metric m) {
  if (!r.has(m)) return "n/a";
  return fmt(r.value(m), m == Metric::Planning ? 3 : 2);
}

const char* type_header(TaskType t) {
  switch (t) {
    case TaskType::Look: return "Look";
    case TaskType::Pick: return "Pick";
    case TaskType::PickTwo: return "Pick Two";
    case TaskType::Clean: return "Clean";
    case TaskType::Cool: return "Cool";
    case TaskType::Heat: return "Heat";
  }
  return "";
}

std::string type_cell(const TaskReport& r, TaskType t) {
  auto it = r.per_type.find(t);
  if (it == r.per_type.end() || it->second.episodes == 0) return "n/a";
  return fmt(r.success_rate(t), 2);
}

}  // namespace

std::string skill_report_markdown(std::span<const LabelledSkillReport> rows) {
  std::ostringstream o;
  o << "| Model |";
  for (Metric m : kReportMetrics) o << ' ' << metric_header(m) << " |";
  o << "\n|---|";
  for (std::size_t i = 0; i < kReportMetrics.size(); ++i) o << "---:|";
  o << '\n';
  for (const auto& [label, r] : rows) {
    o << "| " << label << " |";
    for (Metric m : kReportMetrics) o << ' ' << metric_cell(r, m) << " |";
    o << '\n';
  }
  o << '\n';
  for (const auto& [label, r] : rows) {
    o << label << ": planning similarity " << r.similarity << ", action grounding at IoU >= "
      << fmt(r.action_grounding_iou, 2) << ".\n";
  }
  return o.str();
}

std::string skill_report_markdown(const SkillReport& r, const std::string& label) {
  const LabelledSkillReport row{label, r};
  return skill_report_markdown(std::span(&row, 1));
}

std::string skill_report_csv(std::span<const LabelledSkillReport> rows) {
  std::ostringstream o;
  o << "model";
  for (Metric m : kReportMetrics) o << ',' << to_string(m);
  o << '\n';
  for (const auto& [label, r] : rows) {
    o << label;
    for (Metric m : kReportMetrics) o << ',' << (r.has(m) ? fmt(r.value(m), 4) : "");
    o << '\n';
  }
  return o.str();
}

std::string skill_report_csv(const SkillReport& r, const std::string& label) {
  const LabelledSkillReport row{label, r};
  return skill_report_csv(std::span(&row, 1));
}

json skill_report_json(const SkillReport& r) {
  json j = {{"similarity", r.similarity}, {"action_grounding_iou", r.action_grounding_iou}, {"metrics", json::object()}};
  for (const auto& [m, st] : r.metrics) {
    j["metrics"][std::string(to_string(m))] = {
        {"value", r.value(m)}, {"sum", st.sum}, {"count", st.count}, {"unparseable", st.unparseable}};
  }
  return j;
}

SkillReport skill_report_from_json(const json& j) {
  try {
    SkillReport r;
    r.similarity = j.at("similarity").get<std::string>();
    r.action_grounding_iou = j.at("action_grounding_iou").get<double>();
    for (const auto& [name, v] : j.at("metrics").items()) {
      std::optional<Metric> metric;
      for (Metric m : kReportMetrics) {
        if (to_string(m) == name) metric = m;
      }
      if (!metric) throw FormatError("unknown metric " + name);
      r.metrics[*metric] = MetricStat{v.at("sum").get<double>(), v.at("count").get<int>(), v.at("unparseable").get<int>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("skill report: ") + e.what());
  }
}

std::string task_report_markdown(std::span<const LabelledTaskReport> rows) {
  std::ostringstream o;
  o << "| Model | Avg. |";
  for (TaskType t : kAllTaskTypes) o << ' ' << type_header(t) << " |";
  o << " Goal Condition |\n|---|---:|";
  for (std::size_t i = 0; i < kAllTaskTypes.size(); ++i) o << "---:|";
  o << "---:|\n";
  for (const auto& [label, r] : rows) {
    o << "| " << label << " | " << fmt(r.average_success(), 2) << " |";
    for (TaskType t : kAllTaskTypes) o << ' ' << type_cell(r, t) << " |";
    o << ' ' << fmt(r.average_goal_condition(), 3) << " |\n";
  }
  o << '\n';
  for (const auto& [label, r] : rows) {
    o << label << ": " << r.episodes << " episodes, " << r.failures << " failed actions, "
      << r.recoveries_succeeded << " of " << r.recoveries_attempted << " recoveries succeeded.\n";
  }
  return o.str();
}

std::string task_report_markdown(const TaskReport& r, const std::string& label) {
  const LabelledTaskReport row{label, r};
  return task_report_markdown(std::span(&row, 1));
}

std::string task_report_csv(std::span<const LabelledTaskReport> rows) {
  std::ostringstream o;
  o << "model,avg";
  for (TaskType t : kAllTaskTypes) o << ',' << to_lower(to_string(t));
  o << ",goal_condition,episodes,failures,recoveries_attempted,recoveries_succeeded\n";
  for (const auto& [label, r] : rows) {
    o << label << ',' << fmt(r.average_success(), 4);
    for (TaskType t : kAllTaskTypes) {
      auto it = r.per_type.find(t);
      o << ',' << (it == r.per_type.end() ? "" : fmt(r.success_rate(t), 4));
    }
    o << ',' << fmt(r.average_goal_condition(), 6) << ',' << r.episodes << ',' << r.failures << ','
      << r.recoveries_attempted << ',' << r.recoveries_succeeded << '\n';
  }
  return o.str();
}

std::string task_report_csv(const TaskReport& r, const std::string& label) {
  const LabelledTaskReport row{label, r};
  return task_report_csv(std::span(&row, 1));
}

json task_report_json(const TaskReport& r) {
  json types = json::object();
  for (const auto& [t, st] : r.per_type) {
    types[std::string(to_string(t))] = {{"episodes", st.episodes},
                                        {"successes", st.successes},
                                        {"success_rate", r.success_rate(t)},
                                        {"goal_condition_sum", st.goal_condition_sum},
                                        {"goal_condition", st.goal_condition_sum / st.episodes}};
  }
  return {{"episodes", r.episodes},
          {"successes", r.successes},
          {"average_success", r.average_success()},
          {"goal_condition_sum", r.goal_condition_sum},
          {"average_goal_condition", r.average_goal_condition()},
          {"failures", r.failures},
          {"recoveries_attempted", r.recoveries_attempted},
          {"recoveries_succeeded", r.recoveries_succeeded},
          {"per_type", types}};
}

TaskReport task_report_from_json(const json& j) {
  try {
    TaskReport r;
    r.episodes = j.at("episodes").get<int>();
    r.successes = j.at("successes").get<int>();
    r.goal_condition_sum = j.at("goal_condition_sum").get<double>();
    r.failures = j.at("failures").get<int>();
    r.recoveries_attempted = j.at("recoveries_attempted").get<int>();
    r.recoveries_succeeded = j.at("recoveries_succeeded").get<int>();
    for (const auto& [name, v] : j.at("per_type").items()) {
      auto t = parse_task_type(name);
      if (!t) throw FormatError("unknown task type " + name);
      r.per_type[*t] = TypeStats{v.at("episodes").get<int>(), v.at("successes").get<int>(),
                                 v.at("goal_condition_sum").get<double>()};
    }
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("task report: ") + e.what());
  }
}

json episode_summary_json(const EpisodeResult& e) {
  return {{"scene_id", e.scene_id},
          {"task_type", std::string(to_string(e.task_type))},
          {"success", e.success},
          {"goal_condition_rate", e.goal_condition_rate()},
          {"conditions_satisfied", e.conditions_satisfied},
          {"conditions_total", e.conditions_total},
          {"steps_taken", e.steps_taken},
          {"failures", e.failures},
          {"recoveries_attempted", e.recoveries_attempted},
          {"recoveries_succeeded", e.recoveries_succeeded},
          {"stop_reason", e.stop_reason}};
}

}  // namespace euea
