// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include "euea/serialization.hpp"

#include <fstream>

#include "euea/errors.hpp"

namespace euea {
namespace {

template <typename E, typename F>
E enum_from(const json& j, F parse, const char* what) {
  const auto s = j.get<std::string>();
  auto v = parse(s);
  if (!v) throw FormatError(std::string("unknown ") + what + " \"" + s + "\"");
  return *v;
}

template <typename T>
void opt_to(json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? json(*v) : json(nullptr);
}

template <typename T>
void opt_from(const json& j, const char* key, std::optional<T>& v) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) {
    v.reset();
  } else {
    v = it->template get<T>();
  }
}

}  // namespace

void to_json(json& j, const BoundingBox& b) { j = json::array({b.x_min, b.y_min, b.x_max, b.y_max}); }
void from_json(const json& j, BoundingBox& b) {
  if (!j.is_array() || j.size() != 4) throw FormatError("bounding box must be [x_min, y_min, x_max, y_max]");
  b = BoundingBox{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

void to_json(json& j, const ObjectRef& r) {
  j = json{{"name", r.name}};
  opt_to(j, "instance_id", r.instance_id);
}
void from_json(const json& j, ObjectRef& r) {
  r.name = j.at("name").get<std::string>();
  opt_from(j, "instance_id", r.instance_id);
}

void to_json(json& j, const Action& a) {
  j = json{{"kind", std::string(to_string(a.kind))}};
  opt_to(j, "target", a.target);
}
void from_json(const json& j, Action& a) {
  a.kind = enum_from<ActionKind>(j.at("kind"), parse_action_kind, "action kind");
  opt_from(j, "target", a.target);
}

void to_json(json& j, const Pose& p) { j = json{{"x", p.x}, {"y", p.y}, {"heading", std::string(to_string(p.heading))}}; }
void from_json(const json& j, Pose& p) {
  p.x = j.at("x").get<int>();
  p.y = j.at("y").get<int>();
  p.heading = enum_from<Heading>(j.at("heading"), parse_heading, "heading");
}

void to_json(json& j, const Frame& f) {
  j = json{{"width", f.width()}, {"height", f.height()}, {"hash", f.hash()}, {"path", f.relative_path()}};
}
void from_json(const json& j, Frame& f) {
  f = Frame::reference(j.at("width").get<int>(), j.at("height").get<int>(), j.at("hash").get<std::string>());
}

void to_json(json& j, const Subgoal& s) {
  j = json{{"text", s.text}, {"phase", std::string(to_string(s.phase))}, {"index", s.index}};
}
void from_json(const json& j, Subgoal& s) {
  s.text = j.at("text").get<std::string>();
  s.phase = enum_from<Phase>(j.at("phase"), parse_phase, "phase");
  s.index = j.at("index").get<int>();
}

void to_json(json& j, const MemoryStep& m) {
  j = json{{"step_index", m.step_index},
           {"frame", m.frame},
           {"visible", std::vector<ObjectRef>(m.visible.begin(), m.visible.end())},
           {"pose", m.pose},
           {"action", m.action},
           {"result", std::string(to_string(m.result))},
           {"subgoal", m.subgoal}};
  opt_to(j, "bbox", m.bbox);
}
void from_json(const json& j, MemoryStep& m) {
  m.step_index = j.at("step_index").get<int>();
  m.frame = j.at("frame").get<Frame>();
  auto vis = j.at("visible").get<std::vector<ObjectRef>>();
  m.visible = std::set<ObjectRef>(vis.begin(), vis.end());
  m.pose = j.at("pose").get<Pose>();
  m.action = j.at("action").get<Action>();
  opt_from(j, "bbox", m.bbox);
  const auto r = j.at("result").get<std::string>();
  if (r == "Succeeded") {
    m.result = ActionResult::Succeeded;
  } else if (r == "Failed") {
    m.result = ActionResult::Failed;
  } else {
    throw FormatError("unknown result \"" + r + "\"");
  }
  m.subgoal = j.at("subgoal").get<Subgoal>();
}

void to_json(json& j, const GoalCondition& c) {
  j = json{{"predicate", std::string(to_string(c.predicate))}, {"object", c.object}, {"count", c.count}};
  opt_to(j, "receptacle", c.receptacle);
}
void from_json(const json& j, GoalCondition& c) {
  c.predicate = enum_from<Predicate>(j.at("predicate"), parse_predicate, "predicate");
  c.object = j.at("object").get<ObjectRef>();
  opt_from(j, "receptacle", c.receptacle);
  c.count = j.value("count", 1);
}

void to_json(json& j, const Task& t) {
  j = json{{"task_type", std::string(to_string(t.type))},
           {"instruction", t.instruction},
           {"goal_conditions", t.goal_conditions}};
}
void from_json(const json& j, Task& t) {
  t.type = enum_from<TaskType>(j.at("task_type"), parse_task_type, "task type");
  t.instruction = j.at("instruction").get<std::string>();
  t.goal_conditions = j.at("goal_conditions").get<std::vector<GoalCondition>>();
  if (t.goal_conditions.empty()) throw FormatError("task without goal conditions");
}

void to_json(json& j, const Memory& m) {
  j = json{{"goal", m.goal()}, {"steps", std::vector<MemoryStep>(m.steps().begin(), m.steps().end())}};
}
void from_json(const json& j, Memory& m) {
  m = Memory(j.at("goal").get<Task>());
  for (const auto& s : j.at("steps")) {
    auto step = s.get<MemoryStep>();
    if (step.step_index != static_cast<int>(m.size()) + 1) throw FormatError("memory step indices must run 1..T");
    m.append(std::move(step));
  }
}

void to_json(json& j, const SkillOutput& o) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, ObjectSet>) {
          j = json{{"type", "object_set"}, {"names", v.names}};
        } else if constexpr (std::is_same_v<T, Box>) {
          j = json{{"type", "box"}, {"box", v.box}};
        } else if constexpr (std::is_same_v<T, SubgoalList>) {
          j = json{{"type", "subgoal_list"}, {"subgoals", v.subgoals}};
        } else if constexpr (std::is_same_v<T, ActionChoice>) {
          j = json{{"type", "action_choice"}, {"action", std::string(to_string(v.action))}};
          opt_to(j, "object", v.object);
        } else if constexpr (std::is_same_v<T, YesNo>) {
          j = json{{"type", "yes_no"}, {"value", v.value}};
        } else if constexpr (std::is_same_v<T, Caption>) {
          j = json{{"type", "caption"}, {"text", v.text}};
        } else {
          j = json{{"type", "action_with_box"},
                   {"action", std::string(to_string(v.action))},
                   {"object", v.object},
                   {"box", v.box}};
        }
      },
      o);
}
void from_json(const json& j, SkillOutput& o) {
  const auto type = j.at("type").get<std::string>();
  if (type == "object_set") {
    o = ObjectSet{j.at("names").get<std::set<std::string>>()};
  } else if (type == "box") {
    o = Box{j.at("box").get<BoundingBox>()};
  } else if (type == "subgoal_list") {
    o = SubgoalList{j.at("subgoals").get<std::vector<Subgoal>>()};
  } else if (type == "action_choice") {
    ActionChoice c;
    c.action = enum_from<ActionKind>(j.at("action"), parse_action_kind, "action kind");
    opt_from(j, "object", c.object);
    o = c;
  } else if (type == "yes_no") {
    o = YesNo{j.at("value").get<bool>()};
  } else if (type == "caption") {
    o = Caption{j.at("text").get<std::string>()};
  } else if (type == "action_with_box") {
    o = ActionWithBox{enum_from<ActionKind>(j.at("action"), parse_action_kind, "action kind"),
                      j.at("object").get<std::string>(), j.at("box").get<BoundingBox>()};
  } else {
    throw FormatError("unknown skill output type \"" + type + "\"");
  }
}

void to_json(json& j, const SkillInstance& s) {
  j = json{{"id", s.id},
           {"kind", std::string(to_string(s.kind))},
           {"prompt_text", s.prompt_text},
           {"frames", s.frames},
           {"ground_truth", s.ground_truth},
           {"scene_id", s.scene_id},
           {"split", std::string(to_string(s.split))}};
}
void from_json(const json& j, SkillInstance& s) {
  s.id = j.at("id").get<std::string>();
  s.kind = enum_from<SkillKind>(j.at("kind"), parse_skill_kind, "skill kind");
  s.prompt_text = j.at("prompt_text").get<std::string>();
  s.frames = j.at("frames").get<std::vector<Frame>>();
  s.ground_truth = j.at("ground_truth").get<SkillOutput>();
  if (!output_matches(s.kind, s.ground_truth)) throw FormatError("instance " + s.id + ": ground truth variant mismatch");
  s.scene_id = j.at("scene_id").get<std::string>();
  s.split = enum_from<Split>(j.at("split"), parse_split, "split");
}

void to_json(json& j, const CellPos& c) { j = json::array({c.x, c.y}); }
void from_json(const json& j, CellPos& c) {
  if (!j.is_array() || j.size() != 2) throw FormatError("cell must be [x, y]");
  c = CellPos{j[0].get<int>(), j[1].get<int>()};
}

void to_json(json& j, const ObjectState& o) {
  j = json{{"id", o.id},
           {"name", o.name},
           {"is_open", o.is_open},
           {"is_on", o.is_on},
           {"is_clean", o.is_clean},
           {"is_hot", o.is_hot},
           {"is_cold", o.is_cold},
           {"is_sliced", o.is_sliced}};
  if (const auto* c = std::get_if<CellPos>(&o.location)) {
    j["cell"] = *c;
  } else if (const auto* in = std::get_if<InsideOf>(&o.location)) {
    j["inside"] = in->receptacle_id;
  } else {
    j["held"] = true;
  }
  if (o.flags != default_class_flags(o.name)) {
    j["flags"] = json{{"pickupable", o.flags.pickupable},
                      {"receptacle", o.flags.receptacle},
                      {"openable", o.flags.openable},
                      {"toggleable", o.flags.toggleable},
                      {"sliceable", o.flags.sliceable}};
  }
}
void from_json(const json& j, ObjectState& o) {
  o.id = j.at("id").get<std::string>();
  o.name = j.at("name").get<std::string>();
  if (j.contains("cell")) {
    o.location = j["cell"].get<CellPos>();
  } else if (j.contains("inside")) {
    o.location = InsideOf{j["inside"].get<std::string>()};
  } else if (j.value("held", false)) {
    o.location = InHand{};
  } else {
    throw FormatError("object " + o.id + " has no location");
  }
  o.flags = default_class_flags(o.name);
  if (j.contains("flags")) {
    const auto& f = j["flags"];
    o.flags.pickupable = f.value("pickupable", false);
    o.flags.receptacle = f.value("receptacle", false);
    o.flags.openable = f.value("openable", false);
    o.flags.toggleable = f.value("toggleable", false);
    o.flags.sliceable = f.value("sliceable", false);
  }
  o.is_open = j.value("is_open", false);
  o.is_on = j.value("is_on", false);
  o.is_clean = j.value("is_clean", true);
  o.is_hot = j.value("is_hot", false);
  o.is_cold = j.value("is_cold", false);
  o.is_sliced = j.value("is_sliced", false);
}

void to_json(json& j, const SceneSpec& s) {
  j = json{{"scene_id", s.scene_id}, {"width", s.width},     {"height", s.height},
           {"walls", s.walls},       {"objects", s.objects}, {"agent_start", s.agent_start}};
}
void from_json(const json& j, SceneSpec& s) {
  s.scene_id = j.at("scene_id").get<std::string>();
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.walls = j.value("walls", std::vector<CellPos>{});
  s.objects = j.at("objects").get<std::vector<ObjectState>>();
  s.agent_start = j.at("agent_start").get<Pose>();
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"raster_width", c.raster_width},
           {"raster_height", c.raster_height},
           {"cone_depth", c.cone_depth},
           {"click_threshold", c.click_threshold}};
}
void from_json(const json& j, SimConfig& c) {
  SimConfig d;
  c.raster_width = j.value("raster_width", d.raster_width);
  c.raster_height = j.value("raster_height", d.raster_height);
  c.cone_depth = j.value("cone_depth", d.cone_depth);
  c.click_threshold = j.value("click_threshold", d.click_threshold);
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<json> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return rows;
}

void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  for (const auto& r : rows) out << r.dump() << '\n';
}

}  // namespace euea
