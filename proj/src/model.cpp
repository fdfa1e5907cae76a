// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>


#include <httplib.h>
#include <json.hpp>

#include "euea/errors.hpp"
#include "euea/reward.hpp"
#include "euea/skills.hpp"
#include "euea/text.hpp"

namespace euea {

using nlohmann::json;

std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::Stop: return "stop";
    case FinishReason::Length: return "length";
    case FinishReason::Other: return "other";
  }
  return "other";
}

double total_nll(std::span<const TokenLogprob> tokens, bool length_normalized) {
  double s = 0.0;
  for (const auto& t : tokens) s -= t.logprob;
  if (length_normalized && !tokens.empty()) s /= static_cast<double>(tokens.size());
  return s;
}

std::string Backend::cache_key(const std::string& prompt, const std::vector<Frame>& frames, const std::string& text) {
  std::string k = prompt;
  k += '\x1f';
  for (const auto& f : frames) k += f.hash() + ",";
  k += '\x1f';
  k += text;
  return k;
}

void Backend::remember(const GenerationRequest& request, const std::vector<Completion>& completions) {
  std::lock_guard lock(cache_mu_);
  for (const auto& c : completions) {
    sampled_.emplace(cache_key(request.prompt_text, request.frames, c.text), c.token_logprobs);
  }
}

double Backend::score(const std::string& prompt_text, const std::vector<Frame>& frames, const std::string& target_text) {
  if (target_text.empty()) throw std::invalid_argument("score: empty target text");
  std::lock_guard lock(cache_mu_);
  auto it = sampled_.find(cache_key(prompt_text, frames, target_text));
  if (it == sampled_.end()) {
    throw Unsupported(name() + " cannot score text it has not sampled: \"" + target_text + "\"");
  }
  return total_nll(it->second);
}

std::string_view to_string(Corruption c) {
  switch (c) {
    case Corruption::WrongBox: return "WrongBox";
    case Corruption::RepeatFailedAction: return "RepeatFailedAction";
    case Corruption::WrongObject: return "WrongObject";
  }
  return "WrongBox";
}

std::optional<Corruption> parse_corruption(std::string_view s) {
  for (Corruption c : {Corruption::WrongBox, Corruption::RepeatFailedAction, Corruption::WrongObject}) {
    if (iequals(to_string(c), s)) return c;
  }
  return std::nullopt;
}

std::optional<Corruption> FaultSchedule::active(int subgoal_index, int attempt) const {
  for (const auto& r : rules) {
    if (r.attempt == attempt && (!r.subgoal_index || *r.subgoal_index == subgoal_index)) return r.corruption;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scripted oracle

ScriptedOracle::ScriptedOracle(FaultSchedule faults) : faults_(std::move(faults)) {
  for (const auto& r : faults_.rules) {
    if (r.attempt < 1) throw ConfigError("fault rule attempt must be >= 1");
  }
}

void ScriptedOracle::observe(const WorldState& state, const Task& task) {
  world_ = state;
  task_ = task;
}

void ScriptedOracle::add_answers(std::span<const SkillInstance> instances) {
  for (const auto& i : instances) answers_[i.id] = i.ground_truth;
}

namespace {

int context_int(const GenerationRequest& r, const char* key, int fallback) {
  auto it = r.context.find(key);
  if (it == r.context.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    return fallback;
  }
}

std::optional<std::string> context_str(const GenerationRequest& r, const char* key) {
  auto it = r.context.find(key);
  if (it == r.context.end()) return std::nullopt;
  return it->second;
}

std::optional<PlannedStep> next_expert_step(const WorldState& w, const Task& task) {
  try {
    auto plan = expert_plan(w, task);
    auto steps = plan.actions();
    if (steps.empty()) return std::nullopt;
    return steps.front();
  } catch (const Unreachable&) {
    return std::nullopt;
  }
}

// Instance the model most plausibly means by a bare class name.
const VisibleObject* pick_instance(const std::vector<VisibleObject>& vis, const std::string& name,
                                   const std::optional<std::string>& preferred_id) {
  const VisibleObject* reachable = nullptr;
  const VisibleObject* any = nullptr;
  for (const auto& v : vis) {
    if (!iequals(v.ref.name, name)) continue;
    if (preferred_id && v.ref.instance_id == preferred_id) return &v;
    if (v.reachable && !reachable) reachable = &v;
    if (!any) any = &v;
  }
  return reachable ? reachable : any;
}

// A box of the same size moved off every clickable instance of `name`.
BoundingBox displaced_box(const WorldState& w, const std::vector<VisibleObject>& vis, const BoundingBox& b,
                          const std::string& name) {
  const int W = w.config.raster_width;
  const int H = w.config.raster_height;
  auto clamp_shift = [&](int dx, int dy) {
    BoundingBox s{b.x_min + dx, b.y_min + dy, b.x_max + dx, b.y_max + dy};
    if (s.x_min < 0) s = {0, s.y_min, b.width(), s.y_max};
    if (s.x_max > W) s = {W - b.width(), s.y_min, W, s.y_max};
    if (s.y_min < 0) s = {s.x_min, 0, s.x_max, b.height()};
    if (s.y_max > H) s = {s.x_min, H - b.height(), s.x_max, H};
    return s;
  };
  auto misses = [&](const BoundingBox& s) {
    for (const auto& v : vis) {
      if (v.reachable && iequals(v.ref.name, name) && iou(s, v.box) >= w.config.click_threshold) return false;
    }
    return true;
  };
  for (auto [dx, dy] : {std::pair{b.width(), 0}, std::pair{-b.width(), 0}, std::pair{0, b.height()},
                        std::pair{0, -b.height()}}) {
    BoundingBox s = clamp_shift(dx, dy);
    if (s.valid() && misses(s)) return s;
  }
  for (BoundingBox s : {BoundingBox{0, 0, 2, 2}, BoundingBox{W - 2, H - 2, W, H}}) {
    if (misses(s)) return s;
  }
  return BoundingBox{0, 0, 1, 1};
}

}  // namespace

ScriptedOracle::Answer ScriptedOracle::world_answer(SkillKind kind, const GenerationRequest& req) const {
  if (!world_ || !task_) throw Unsupported("oracle has no world to answer " + std::string(to_string(kind)) + " from");
  const WorldState& w = *world_;
  const auto vis = visible_objects(w);
  const int sg_index = context_int(req, ctx::kSubgoalIndex, 1);
  const int attempt = context_int(req, ctx::kAttempt, 1);
  const auto fault = faults_.active(sg_index, attempt);

  switch (kind) {
    case SkillKind::OR: {
      ObjectSet s;
      for (const auto& v : vis) s.names.insert(v.ref.name);
      return {render_answer(s), true};
    }
    case SkillKind::OD: {
      const auto name = context_str(req, ctx::kObject);
      if (!name) throw Unsupported("oracle OD request without an object");
      std::optional<std::string> preferred;
      if (auto st = next_expert_step(w, *task_); st && st->action.target && iequals(st->action.target->name, *name)) {
        preferred = st->action.target->instance_id;
      }
      const VisibleObject* v = pick_instance(vis, *name, preferred);
      if (!v) return {render_box(BoundingBox{0, 0, 1, 1}), false};
      if (fault == Corruption::WrongBox) return {render_box(displaced_box(w, vis, v->box, *name)), false};
      return {render_box(v->box), true};
    }
    case SkillKind::SAP: {
      if (fault == Corruption::RepeatFailedAction) {
        if (auto failed = context_str(req, ctx::kFailedAction)) return {*failed, false};
      }
      auto st = next_expert_step(w, *task_);
      if (!st) return {"RotateLeft", false};
      ActionChoice c;
      c.action = st->action.kind;
      if (st->action.target) c.object = st->action.target->name;
      if (fault == Corruption::WrongObject && c.object) {
        // Prefer a name that cannot be clicked from here so the slip fails.
        std::optional<std::string> other;
        for (int pass = 0; pass < 2 && !other; ++pass) {
          for (const auto& v : vis) {
            if (iequals(v.ref.name, *c.object) || (pass == 0 && v.reachable)) continue;
            other = v.ref.name;
            break;
          }
        }
        if (other) {
          c.object = *other;
          return {render_answer(c), false};
        }
      }
      return {render_answer(c), true};
    }
    case SkillKind::STP: {
      try {
        return {render_answer(SubgoalList{expert_plan(w, *task_).subgoal_list()}), true};
      } catch (const Unreachable&) {
        return {"1. Interaction: give up", false};
      }
    }
    case SkillKind::GRMain: return {render_answer(YesNo{goal_satisfied(w, *task_).all}), true};
    case SkillKind::GRSub: {
      const auto text = context_str(req, ctx::kSubgoalText);
      if (!text) throw Unsupported("oracle GRSub request without a subgoal");
      bool done = true;
      try {
        auto plan = expert_plan(w, *task_);
        done = plan.subgoals.empty() || plan.subgoals.front().subgoal.text != *text;
      } catch (const Unreachable&) {
        done = false;
      }
      return {render_answer(YesNo{done}), true};
    }
    case SkillKind::ASP:
    case SkillKind::FSC: {
      const auto action_text = context_str(req, ctx::kAction);
      const auto box_text = context_str(req, ctx::kBox);
      if (!action_text) throw Unsupported("oracle needs action context");
      const auto choice = std::get<ActionChoice>(parse_response(SkillKind::SAP, *action_text));
      std::optional<BoundingBox> box;
      if (choice.object) {
        if (!box_text) throw Unsupported("oracle needs bbox context for an interaction");
        box = std::get<Box>(parse_response(SkillKind::OD, *box_text)).box;
      }
      Action a = choice.object ? Action::interact(choice.action, ObjectRef{*choice.object, std::nullopt})
                               : Action::navigate(choice.action);
      WorldState after = w;
      const auto r = apply_action(after, a, box);
      if (kind == SkillKind::ASP) return {render_answer(YesNo{r == ActionResult::Succeeded}), true};
      return {r == ActionResult::Succeeded ? state_diff_caption(w, after) : std::string(kNoChangeCaption), true};
    }
    case SkillKind::AG: throw Unsupported("oracle answers AG only from a dataset answer key");
  }
  throw Unsupported("unknown skill");
}

ScriptedOracle::Answer ScriptedOracle::answer(const GenerationRequest& req) const {
  if (auto id = context_str(req, ctx::kInstanceId)) {
    auto it = answers_.find(*id);
    if (it != answers_.end()) return {render_answer(it->second), true};
  }
  if (!req.skill) throw Unsupported("oracle request names no skill");
  return world_answer(*req.skill, req);
}

std::vector<Completion> ScriptedOracle::generate(const GenerationRequest& request) {
  if (request.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  const Answer a = answer(request);
  Completion c;
  c.text = a.text;
  for (auto& tok : answer_tokens(a.text)) {
    c.token_logprobs.push_back({std::move(tok), a.canonical ? 0.0 : kOracleOffAnswerLogprob});
  }
  std::vector<Completion> out(static_cast<std::size_t>(request.sample_count), c);
  remember(request, out);
  return out;
}

// ---------------------------------------------------------------------------
// Chat-completion client

ChatCompletionBackend::ChatCompletionBackend(ChatCompletionConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.base_url, m, url_re)) throw ConfigError("invalid backend URL " + config_.base_url);
  scheme_host_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : "";
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  if (config_.model.empty()) throw ConfigError("backend model name is empty");
}

std::string ChatCompletionBackend::request_body(const GenerationRequest& request, int sample_count) const {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.prompt_text}});
  std::optional<FrameStore> store;
  if (config_.frame_root) store.emplace(*config_.frame_root);
  for (const auto& f : request.frames) {
    Frame px = f;
    if (!px.has_pixels()) {
      if (!store) throw FormatError("frame " + f.hash() + " has no pixels and no frame root is configured");
      px = store->load(f);
    }
    auto png = encode_png(px);
    content.push_back(
        {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  json body = {{"model", config_.model},
               {"messages", json::array({{{"role", "user"}, {"content", content}}})},
               {"max_tokens", request.max_tokens},
               {"temperature", request.temperature},
               {"n", sample_count},
               {"logprobs", true}};
  if (request.seed) body["seed"] = *request.seed;
  return body.dump();
}

std::vector<Completion> ChatCompletionBackend::parse_body(const std::string& body) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw ProtocolError("response has no choices");
  }
  std::vector<Completion> out;
  for (const auto& ch : j["choices"]) {
    Completion c;
    const auto& msg = ch.value("message", json::object());
    if (!msg.contains("content") || !msg["content"].is_string()) throw ProtocolError("choice without text content");
    c.text = msg["content"].get<std::string>();
    const auto lp = ch.find("logprobs");
    if (lp == ch.end() || !lp->is_object() || !lp->contains("content") || !(*lp)["content"].is_array()) {
      throw ProtocolError("choice without token logprobs");
    }
    for (const auto& t : (*lp)["content"]) {
      if (!t.contains("token") || !t.contains("logprob") || !t["logprob"].is_number()) {
        throw ProtocolError("malformed logprob entry");
      }
      double v = t["logprob"].get<double>();
      if (!std::isfinite(v) || v > 0.0) throw ProtocolError("logprob out of range");
      c.token_logprobs.push_back({t["token"].get<std::string>(), v});
    }
    const std::string fr = ch.value("finish_reason", "stop");
    c.finish_reason = fr == "stop" ? FinishReason::Stop : fr == "length" ? FinishReason::Length : FinishReason::Other;
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<Completion> ChatCompletionBackend::generate(const GenerationRequest& request) {
  if (request.sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
  httplib::Client client(scheme_host_);
  client.set_connection_timeout(config_.timeout_seconds, 0);
  client.set_read_timeout(config_.timeout_seconds, 0);
  if (!config_.api_key.empty()) client.set_bearer_token_auth(config_.api_key);

  std::vector<Completion> out;
  // Some servers ignore n; keep asking until enough choices arrived.
  for (int round = 0; static_cast<int>(out.size()) < request.sample_count; ++round) {
    if (round >= request.sample_count) throw ProtocolError("server keeps returning too few choices");
    const int want = request.sample_count - static_cast<int>(out.size());
    GenerationRequest r = request;
    if (r.seed) r.seed = *r.seed + static_cast<std::uint64_t>(round);
    const std::string body = request_body(r, want);
    auto res = client.Post(path_prefix_ + "/chat/completions", body, "application/json");
    if (!res) throw TransportError(scheme_host_ + ": " + httplib::to_string(res.error()));
    if (config_.log_path) {
      std::lock_guard lock(log_mu_);
      std::ofstream log(*config_.log_path, std::ios::app);
      json row = {{"request", json::parse(body)}, {"status", res->status}, {"response", res->body}};
      log << row.dump() << '\n';
    }
    if (res->status != 200) {
      throw TransportError(scheme_host_ + " answered HTTP " + std::to_string(res->status) + ": " +
                           res->body.substr(0, 200));
    }
    for (auto& c : parse_body(res->body)) {
      if (static_cast<int>(out.size()) < request.sample_count) out.push_back(std::move(c));
    }
  }
  remember(request, out);
  return out;
}

}  // namespace euea
