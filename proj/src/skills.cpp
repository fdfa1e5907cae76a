// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/skills.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <sstream>

#include "euea/errors.hpp"
#include "euea/text.hpp"

namespace euea {

extern const char* const kBuiltinPromptTemplates;  // generated at configure time

StepDraft StepDraft::from_step(const MemoryStep& step) {
  StepDraft d;
  d.frame = step.frame;
  d.visible = step.visible;
  d.pose = step.pose;
  d.action = step.action;
  d.bbox = step.bbox;
  d.subgoal = step.subgoal;
  return d;
}

const std::set<std::string>& template_placeholders(SkillKind kind) {
  static const std::map<SkillKind, std::set<std::string>> table = {
      {SkillKind::OR, {}},
      {SkillKind::OD, {"subgoal", "action", "object"}},
      {SkillKind::STP, {"main_goal", "memory"}},
      {SkillKind::SAP, {"subgoal", "pose", "visible", "memory"}},
      {SkillKind::ASP, {"action", "object", "bbox"}},
      {SkillKind::FSC, {"action", "object", "bbox"}},
      {SkillKind::AG, {}},
      {SkillKind::GRMain, {"main_goal", "memory"}},
      {SkillKind::GRSub, {"subgoal", "memory"}},
  };
  return table.at(kind);
}

namespace {

const std::regex& placeholder_re() {
  static const std::regex re(R"(\{([a-z_]+)\})");
  return re;
}

std::set<std::string> placeholders_in(const std::string& text) {
  std::set<std::string> out;
  for (std::sregex_iterator it(text.begin(), text.end(), placeholder_re()), end; it != end; ++it) {
    out.insert((*it)[1].str());
  }
  return out;
}

std::string substitute(const std::string& tpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t last = 0;
  for (std::sregex_iterator it(tpl.begin(), tpl.end(), placeholder_re()), end; it != end; ++it) {
    out.append(tpl, last, static_cast<std::size_t>(it->position()) - last);
    out += values.at((*it)[1].str());
    last = static_cast<std::size_t>(it->position() + it->length());
  }
  out.append(tpl, last);
  return out;
}

}  // namespace

PromptTemplates PromptTemplates::parse(const std::string& text) {
  PromptTemplates t;
  std::optional<SkillKind> current;
  std::vector<std::string> lines;
  auto flush = [&] {
    if (!current) return;
    while (!lines.empty() && trim(lines.back()).empty()) lines.pop_back();
    std::size_t first = 0;
    while (first < lines.size() && trim(lines[first]).empty()) ++first;
    std::vector<std::string> body(lines.begin() + static_cast<std::ptrdiff_t>(first), lines.end());
    t.text_[*current] = join(body, "\n");
    lines.clear();
  };
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty() && line.front() == '#') continue;
    std::string_view tl = trim(line);
    if (tl.size() > 2 && tl.front() == '[' && tl.back() == ']') {
      flush();
      auto kind = parse_skill_kind(tl.substr(1, tl.size() - 2));
      if (!kind) throw ConfigError("prompt templates: unknown section " + std::string(tl));
      if (t.text_.count(*kind)) throw ConfigError("prompt templates: duplicate section " + std::string(tl));
      current = kind;
      continue;
    }
    if (current) lines.push_back(line);
  }
  flush();
  for (SkillKind k : kAllSkillKinds) {
    auto it = t.text_.find(k);
    if (it == t.text_.end() || it->second.empty()) {
      throw ConfigError("prompt templates: missing section [" + std::string(to_string(k)) + "]");
    }
    if (placeholders_in(it->second) != template_placeholders(k)) {
      throw ConfigError("prompt templates: [" + std::string(to_string(k)) +
                        "] must use exactly the placeholders {" + join({template_placeholders(k).begin(),
                                                                        template_placeholders(k).end()},
                                                                       "} {") +
                        "}");
    }
  }
  return t;
}

const PromptTemplates& PromptTemplates::builtin() {
  static const PromptTemplates t = parse(kBuiltinPromptTemplates);
  return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read prompt templates " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

const std::string& PromptTemplates::text(SkillKind kind) const { return text_.at(kind); }

std::string render_box(const BoundingBox& b) {
  return "[" + std::to_string(b.x_min) + ", " + std::to_string(b.y_min) + ", " + std::to_string(b.x_max) + ", " +
         std::to_string(b.y_max) + "]";
}

std::string render_visible(const std::set<ObjectRef>& visible) {
  std::set<std::string> names;
  for (const auto& r : visible) names.insert(r.name);
  if (names.empty()) return "None";
  return join({names.begin(), names.end()}, ", ");
}

namespace {

std::string render_pose(const Pose& p) {
  return "(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") facing " + std::string(to_string(p.heading));
}

std::string render_action(const Action& a) {
  std::string s(to_string(a.kind));
  if (a.target) s += " " + a.target->name;
  return s;
}

std::string render_step(const MemoryStep& m, bool with_subgoal) {
  std::string s = "Step " + std::to_string(m.step_index) + ": " + render_action(m.action);
  if (m.bbox) s += " " + render_box(*m.bbox);
  s += m.result == ActionResult::Succeeded ? " -> succeeded" : " -> failed";
  if (with_subgoal) s += " (subgoal " + std::to_string(m.subgoal.index) + ": " + m.subgoal.text + ")";
  return s;
}

std::string render_steps(std::span<const MemoryStep> steps, bool with_subgoal) {
  if (steps.empty()) return "(none)";
  std::vector<std::string> lines;
  for (const auto& m : steps) lines.push_back(render_step(m, with_subgoal));
  return join(lines, "\n");
}

const Frame& need_frame(const StepDraft& d) {
  if (d.frame.empty()) throw MissingContext("frame");
  return d.frame;
}

const Subgoal& need_subgoal(const StepDraft& d) {
  if (!d.subgoal) throw MissingContext("subgoal");
  return *d.subgoal;
}

const Action& need_interaction(const StepDraft& d) {
  if (!d.action) throw MissingContext("action");
  if (!d.action->target) throw MissingContext("object");
  return *d.action;
}

// Trailing history steps that belong to the draft's subgoal.
std::span<const MemoryStep> subgoal_run(const Memory& history, const Subgoal& sg) {
  auto steps = history.steps();
  std::size_t b = steps.size();
  while (b > 0 && steps[b - 1].subgoal.index == sg.index && steps[b - 1].subgoal.text == sg.text) --b;
  return steps.subspan(b);
}

std::vector<Frame> budget_frames(const Memory& history, const StepDraft& d, int budget) {
  std::vector<Frame> frames;
  if (!d.frame.empty()) frames.push_back(d.frame);
  auto steps = history.steps();
  for (std::size_t i = steps.size(); i > 0 && static_cast<int>(frames.size()) < budget; --i) {
    frames.insert(frames.begin(), steps[i - 1].frame);
  }
  if (frames.empty()) throw MissingContext("frame");
  return frames;
}

}  // namespace

Prompt build_prompt(SkillKind kind, const Memory& history, const StepDraft& cur, const PromptOptions& opt) {
  const PromptTemplates& tpl = opt.templates ? *opt.templates : PromptTemplates::builtin();
  std::map<std::string, std::string> v;
  Prompt p;
  switch (kind) {
    case SkillKind::OR:
      p.frames = {need_frame(cur)};
      break;
    case SkillKind::OD: {
      const Action& a = need_interaction(cur);
      v["subgoal"] = need_subgoal(cur).text;
      v["action"] = std::string(to_string(a.kind));
      v["object"] = a.target->name;
      p.frames = {need_frame(cur)};
      break;
    }
    case SkillKind::STP:
    case SkillKind::GRMain:
      v["main_goal"] = history.goal().instruction;
      v["memory"] = render_steps(history.steps(), true);
      p.frames = budget_frames(history, cur, std::max(1, opt.frame_budget));
      break;
    case SkillKind::SAP: {
      if (opt.k < 0) throw std::invalid_argument("memory window k must be non-negative");
      if (!cur.visible) throw MissingContext("visible");
      if (!cur.pose) throw MissingContext("pose");
      v["subgoal"] = need_subgoal(cur).text;
      v["pose"] = render_pose(*cur.pose);
      v["visible"] = render_visible(*cur.visible);
      const int t = static_cast<int>(history.size()) + 1;
      v["memory"] = render_steps(memory_window(history, t, opt.k), false);
      p.frames = {need_frame(cur)};
      break;
    }
    case SkillKind::ASP:
    case SkillKind::FSC: {
      if (kind == SkillKind::FSC && cur.action && is_navigation(cur.action->kind)) {
        v["action"] = std::string(to_string(cur.action->kind));
        v["object"] = "none";
        v["bbox"] = "none";
        p.frames = {need_frame(cur)};
        break;
      }
      const Action& a = need_interaction(cur);
      if (!cur.bbox) throw MissingContext("bbox");
      v["action"] = std::string(to_string(a.kind));
      v["object"] = a.target->name;
      v["bbox"] = render_box(*cur.bbox);
      p.frames = {need_frame(cur)};
      break;
    }
    case SkillKind::AG:
      if (history.empty()) throw MissingContext("previous_frame");
      p.frames = {history.back().frame, need_frame(cur)};
      break;
    case SkillKind::GRSub: {
      const Subgoal& sg = need_subgoal(cur);
      auto run = subgoal_run(history, sg);
      v["subgoal"] = sg.text;
      v["memory"] = render_steps(run, false);
      for (const auto& m : run) p.frames.push_back(m.frame);
      p.frames.push_back(need_frame(cur));
      break;
    }
  }
  p.text = substitute(tpl.text(kind), v);
  return p;
}

Prompt build_prompt(SkillKind kind, const Memory& memory, int t, int k) {
  if (t < 1 || t > static_cast<int>(memory.size()) + 1) {
    throw std::out_of_range("step " + std::to_string(t) + " outside 1.." + std::to_string(memory.size() + 1));
  }
  StepDraft draft;
  if (t <= static_cast<int>(memory.size())) draft = StepDraft::from_step(memory.at(t));
  PromptOptions opt;
  opt.k = k;
  return build_prompt(kind, memory.prefix(t - 1), draft, opt);
}

std::string augment_recovery(const std::string& prompt_text, const Action& failed) {
  return prompt_text + "\nThe action " + render_action(failed) +
         " just failed. Propose a different action that still serves the subgoal.";
}

std::string augment_env_feedback(const std::string& prompt_text, const Action& failed) {
  return prompt_text + "\nEnvironment feedback: " + render_action(failed) + " failed.";
}

std::string render_answer(const SkillOutput& out) {
  return std::visit(
      [](const auto& o) -> std::string {
        using T = std::decay_t<decltype(o)>;
        if constexpr (std::is_same_v<T, ObjectSet>) {
          if (o.names.empty()) return "None";
          return join({o.names.begin(), o.names.end()}, ", ");
        } else if constexpr (std::is_same_v<T, Box>) {
          return render_box(o.box);
        } else if constexpr (std::is_same_v<T, SubgoalList>) {
          std::vector<std::string> lines;
          for (const auto& s : o.subgoals) {
            lines.push_back(std::to_string(s.index) + ". " + std::string(to_string(s.phase)) + ": " + s.text);
          }
          return join(lines, "\n");
        } else if constexpr (std::is_same_v<T, ActionChoice>) {
          std::string s(to_string(o.action));
          if (o.object) s += " " + *o.object;
          return s;
        } else if constexpr (std::is_same_v<T, YesNo>) {
          return o.value ? "Yes" : "No";
        } else if constexpr (std::is_same_v<T, Caption>) {
          return o.text;
        } else {
          return std::string(to_string(o.action)) + " " + o.object + " " + render_box(o.box);
        }
      },
      out);
}

namespace {

bool is_name(std::string_view s) {
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s.front()))) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string_view strip_period(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.back() == '.') s.remove_suffix(1);
  return trim(s);
}

BoundingBox parse_box(std::string_view text, const std::string& original) {
  static const std::regex re(R"(^\[\s*(-?\d{1,6})\s*,\s*(-?\d{1,6})\s*,\s*(-?\d{1,6})\s*,\s*(-?\d{1,6})\s*\]$)");
  std::string s(trim(text));
  std::smatch m;
  if (!std::regex_match(s, m, re)) throw ParseFailure("expected [x_min, y_min, x_max, y_max]", original);
  BoundingBox b{std::stoi(m[1]), std::stoi(m[2]), std::stoi(m[3]), std::stoi(m[4])};
  if (!b.valid()) throw ParseFailure("empty box", original);
  return b;
}

std::vector<std::string> whitespace_words(std::string_view s) {
  std::vector<std::string> out;
  for (auto& t : answer_tokens(s)) {
    std::string_view w = trim(t);
    if (!w.empty()) out.emplace_back(w);
  }
  return out;
}

ActionChoice parse_choice(const std::string& text) {
  auto words = whitespace_words(strip_period(text));
  if (words.empty()) throw ParseFailure("empty action", text);
  auto kind = parse_action_kind(words[0]);
  if (!kind) throw ParseFailure("unknown action", text);
  ActionChoice c;
  c.action = *kind;
  if (is_navigation(*kind)) {
    if (words.size() != 1) throw ParseFailure("movement actions take no object", text);
    return c;
  }
  if (words.size() != 2 || !is_name(words[1])) throw ParseFailure("expected <Action> <Object>", text);
  c.object = words[1];
  return c;
}

}  // namespace

SkillOutput parse_response(SkillKind kind, const std::string& text) {
  switch (kind) {
    case SkillKind::OR: {
      std::string_view s = strip_period(text);
      ObjectSet out;
      if (s.empty() || iequals(s, "none")) return out;
      for (const auto& part : split(s, ',')) {
        std::string_view name = trim(part);
        if (!is_name(name) || iequals(name, "none")) throw ParseFailure("bad object name", text);
        out.names.insert(std::string(name));
      }
      return out;
    }
    case SkillKind::OD: return Box{parse_box(text, text)};
    case SkillKind::STP: {
      static const std::regex line_re(R"(^(\d+)\.\s*(Navigation|Interaction)\s*:\s*(.*\S)\s*$)", std::regex::icase);
      SubgoalList out;
      for (const auto& raw : split(text, '\n')) {
        std::string line(trim(raw));
        if (line.empty()) continue;
        std::smatch m;
        if (!std::regex_match(line, m, line_re)) throw ParseFailure("expected \"N. Phase: subgoal\"", text);
        Subgoal sg;
        sg.index = std::stoi(m[1]);
        sg.phase = *parse_phase(m[2].str());
        sg.text = m[3].str();
        out.subgoals.push_back(std::move(sg));
      }
      if (out.subgoals.empty()) throw ParseFailure("empty plan", text);
      return out;
    }
    case SkillKind::SAP: return parse_choice(text);
    case SkillKind::ASP:
    case SkillKind::GRMain:
    case SkillKind::GRSub: {
      std::string_view s = strip_period(text);
      if (iequals(s, "yes")) return YesNo{true};
      if (iequals(s, "no")) return YesNo{false};
      throw ParseFailure("expected Yes or No", text);
    }
    case SkillKind::FSC: {
      std::string_view s = trim(text);
      if (s.empty()) throw ParseFailure("empty caption", text);
      return Caption{std::string(s)};
    }
    case SkillKind::AG: {
      std::string s(trim(text));
      const auto open = s.find('[');
      if (open == std::string::npos) throw ParseFailure("missing bounding box", text);
      ActionChoice c = parse_choice(s.substr(0, open));
      if (!c.object) throw ParseFailure("action grounding needs an interaction", text);
      return ActionWithBox{c.action, *c.object, parse_box(std::string_view(s).substr(open), text)};
    }
  }
  throw ParseFailure("unknown skill", text);
}

}  // namespace euea
