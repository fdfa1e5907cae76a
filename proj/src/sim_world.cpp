// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "euea/errors.hpp"
#include "euea/reward.hpp"
#include "euea/sim.hpp"

namespace euea {
namespace {

struct Vec {
  int x;
  int y;
};

Vec heading_vec(Heading h) {
  switch (h) {
    case Heading::North: return {0, -1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, 1};
    case Heading::West: return {-1, 0};
  }
  return {0, 0};
}

Heading rotate(Heading h, int quarter_turns) {
  int v = (static_cast<int>(h) + quarter_turns % 4 + 4) % 4;
  return static_cast<Heading>(v);
}

struct Rgb {
  std::uint8_t r, g, b;
};

class Canvas {
 public:
  Canvas(int w, int h) : w_(w), h_(h), px_(static_cast<std::size_t>(3) * w * h) {}

  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    x0 = std::clamp(x0, 0, w_);
    x1 = std::clamp(x1, 0, w_);
    y0 = std::clamp(y0, 0, h_);
    y1 = std::clamp(y1, 0, h_);
    for (int y = y0; y < y1; ++y) {
      for (int x = x0; x < x1; ++x) set(x, y, c);
    }
  }
  void set(int x, int y, Rgb c) {
    auto i = static_cast<std::size_t>(3 * (y * w_ + x));
    px_[i] = c.r;
    px_[i + 1] = c.g;
    px_[i + 2] = c.b;
  }
  Rgb get(int x, int y) const {
    auto i = static_cast<std::size_t>(3 * (y * w_ + x));
    return {px_[i], px_[i + 1], px_[i + 2]};
  }
  std::vector<std::uint8_t> take() { return std::move(px_); }

 private:
  int w_;
  int h_;
  std::vector<std::uint8_t> px_;
};

Rgb class_color(const std::string& name) {
  // FNV-1a over the class name, mapped into a mid-brightness band.
  std::uint32_t hsh = 2166136261u;
  for (unsigned char c : name) {
    hsh ^= c;
    hsh *= 16777619u;
  }
  auto chan = [](std::uint32_t v) { return static_cast<std::uint8_t>(60 + v % 171); };
  return {chan(hsh), chan(hsh >> 8), chan(hsh >> 16)};
}

BoundingBox clip(BoundingBox b, int w, int h) {
  b.x_min = std::clamp(b.x_min, 0, w);
  b.x_max = std::clamp(b.x_max, 0, w);
  b.y_min = std::clamp(b.y_min, 0, h);
  b.y_max = std::clamp(b.y_max, 0, h);
  return b;
}

BoundingBox cell_box(const SimConfig& cfg, int depth, int lateral) {
  const int W = cfg.raster_width;
  const int H = cfg.raster_height;
  const int size = static_cast<int>(std::lround(static_cast<double>(H) / (depth + 1)));
  const int cx = static_cast<int>(std::lround(W / 2.0 + lateral * (W / 3.0)));
  const int x0 = cx - size / 2;
  const int y0 = H / 2 - size / 2;
  return clip(BoundingBox{x0, y0, x0 + size, y0 + size}, W, H);
}

bool contents_visible(const ObjectState& receptacle) {
  return receptacle.flags.receptacle && (!receptacle.flags.openable || receptacle.is_open);
}

struct Placed {
  const ObjectState* obj;
  BoundingBox box;
  int depth;
  int lateral;
  bool reachable;
};

// Layout shared by the renderer and the visibility oracle, in paint order.
std::vector<Placed> layout(const WorldState& s) {
  std::vector<Placed> out;
  const int D = s.config.cone_depth;
  for (int depth = D; depth >= 1; --depth) {
    for (int lateral : {-1, 1, 0}) {
      CellPos c = forward_of(s.agent, depth, lateral);
      const ObjectState* top = s.top_level_at(c);
      if (!top) continue;
      BoundingBox box = cell_box(s.config, depth, lateral);
      if (!box.valid()) continue;
      const bool reach = depth == 1 && lateral == 0;
      out.push_back({top, box, depth, lateral, reach});
      if (!contents_visible(*top)) continue;
      auto contents = s.contents_of(top->id);
      if (contents.empty()) continue;
      const int m = static_cast<int>(contents.size());
      const int rx0 = box.x_min + 1;
      const int rw = box.width() - 2;
      const int ry0 = box.y_min + box.height() / 4;
      const int ry1 = box.y_max - box.height() / 4;
      for (int i = 0; i < m; ++i) {
        BoundingBox slot{rx0 + i * rw / m, ry0, rx0 + (i + 1) * rw / m, ry1};
        if (!slot.valid()) continue;
        out.push_back({&s.object(contents[static_cast<std::size_t>(i)]), slot, depth, lateral, reach});
      }
    }
  }
  return out;
}

void paint_object(Canvas& cv, const ObjectState& o, const BoundingBox& b) {
  Rgb base = class_color(o.name);
  if (o.is_hot) base.r = 255;
  if (o.is_cold) base.b = 255;
  for (int y = b.y_min; y < b.y_max; ++y) {
    for (int x = b.x_min; x < b.x_max; ++x) {
      Rgb c = base;
      const int rx = x - b.x_min;
      const int ry = y - b.y_min;
      if (!o.is_clean && (rx + ry) % 4 == 0) c = {90, 60, 20};
      if (o.is_sliced && rx % 3 == 0) c = {10, 10, 10};
      cv.set(x, y, c);
    }
  }
  if (o.flags.openable && o.is_open && b.width() > 4 && b.height() > 4) {
    const Rgb rim{20, 20, 20};
    cv.fill(b.x_min, b.y_min, b.x_max, b.y_min + 2, rim);
    cv.fill(b.x_min, b.y_max - 2, b.x_max, b.y_max, rim);
    cv.fill(b.x_min, b.y_min, b.x_min + 2, b.y_max, rim);
    cv.fill(b.x_max - 2, b.y_min, b.x_max, b.y_max, rim);
  }
  if (o.flags.toggleable && o.is_on) {
    const int top = b.y_min + (b.height() > 4 ? 1 : 0);
    cv.fill(b.x_min + (b.width() > 2 ? 1 : 0), top, b.x_max - (b.width() > 2 ? 1 : 0), top + 2, {255, 255, 120});
  }
}

Rgb floor_color(const WorldState& s, CellPos c) {
  if (!s.in_bounds(c)) return {0, 0, 0};
  const auto r = static_cast<std::uint8_t>(20 + 13 * c.x);
  const auto g = static_cast<std::uint8_t>(20 + 13 * c.y);
  const std::uint8_t b = s.is_wall(c) ? 220 : (s.top_level_at(c) ? 140 : 60);
  return {r, g, b};
}

Rgb heading_color(Heading h) {
  switch (h) {
    case Heading::North: return {200, 0, 0};
    case Heading::East: return {0, 200, 0};
    case Heading::South: return {0, 0, 200};
    case Heading::West: return {200, 200, 0};
  }
  return {0, 0, 0};
}

bool names_match(const ObjectRef& ref, const ObjectState& o) {
  if (ref.instance_id) return *ref.instance_id == o.id;
  return ref.name == o.name;
}

int pickupable_count(const WorldState& s, const std::string& receptacle_id) {
  int n = 0;
  for (const auto& id : s.contents_of(receptacle_id)) {
    if (s.object(id).flags.pickupable) ++n;
  }
  return n;
}

// Picks the reachable visible instance matching `ref` with the best overlap
// against the submitted box; requires IoU >= the click threshold.
const ObjectState* resolve_target(const WorldState& s, const ObjectRef& ref, const std::optional<BoundingBox>& bbox) {
  if (!bbox || !bbox->valid()) return nullptr;
  const ObjectState* best = nullptr;
  double best_iou = -1.0;
  for (const auto& p : layout(s)) {
    if (!p.reachable || !names_match(ref, *p.obj)) continue;
    const double v = iou(*bbox, p.box);
    if (v > best_iou || (v == best_iou && best && p.obj->id < best->id)) {
      best = p.obj;
      best_iou = v;
    }
  }
  if (!best || best_iou < s.config.click_threshold) return nullptr;
  return best;
}

bool apply_interaction(WorldState& s, ActionKind kind, ObjectState& t) {
  switch (kind) {
    case ActionKind::PickupObject: {
      if (!t.flags.pickupable || s.hand) return false;
      t.location = InHand{};
      s.hand = t.id;
      return true;
    }
    case ActionKind::PutObject: {
      if (!s.hand || !t.flags.receptacle || t.id == *s.hand) return false;
      if (t.flags.openable && !t.is_open) return false;
      if (pickupable_count(s, t.id) >= kReceptacleCapacity) return false;
      ObjectState& held = s.object(*s.hand);
      held.location = InsideOf{t.id};
      if (t.name == "Fridge") {
        held.is_cold = true;
        held.is_hot = false;
      }
      s.hand.reset();
      return true;
    }
    case ActionKind::OpenObject:
      if (!t.flags.openable || t.is_open || (t.flags.toggleable && t.is_on)) return false;
      t.is_open = true;
      return true;
    case ActionKind::CloseObject:
      if (!t.flags.openable || !t.is_open) return false;
      t.is_open = false;
      return true;
    case ActionKind::ToggleObjectOn: {
      if (!t.flags.toggleable || t.is_on || (t.flags.openable && t.is_open)) return false;
      t.is_on = true;
      if (t.name == "Microwave") {
        for (const auto& id : s.contents_of(t.id)) {
          auto& o = s.object(id);
          if (!o.flags.pickupable) continue;
          o.is_hot = true;
          o.is_cold = false;
        }
      }
      if (t.name == "Faucet") {
        if (const auto* in = std::get_if<InsideOf>(&t.location)) {
          for (const auto& id : s.contents_of(in->receptacle_id)) {
            auto& o = s.object(id);
            if (o.flags.pickupable) o.is_clean = true;
          }
        }
      }
      return true;
    }
    case ActionKind::ToggleObjectOff:
      if (!t.flags.toggleable || !t.is_on) return false;
      t.is_on = false;
      return true;
    case ActionKind::SliceObject:
      if (!t.flags.sliceable || t.is_sliced) return false;
      t.is_sliced = true;
      return true;
    default:
      return false;
  }
}

}  // namespace

ClassFlags default_class_flags(const std::string& name) {
  ClassFlags f;
  static const std::set<std::string> kOpenReceptacles = {"Table", "CounterTop", "Shelf", "Desk", "Sink"};
  static const std::set<std::string> kSliceable = {"Apple", "Tomato", "Potato", "Bread", "Lettuce"};
  static const std::set<std::string> kPickupable = {"Apple", "Tomato", "Potato", "Bread", "Lettuce", "Mug",
                                                    "Cup",   "Plate",  "Bowl",   "Book",  "Knife",   "Bottle",
                                                    "Egg",   "Pen",    "Watch",  "Spoon", "Vase",    "Keys"};
  if (kOpenReceptacles.count(name)) f.receptacle = true;
  if (name == "Fridge" || name == "Cabinet") f.receptacle = f.openable = true;
  if (name == "Microwave") f.receptacle = f.openable = f.toggleable = true;
  if (name == "Lamp" || name == "Faucet") f.toggleable = true;
  if (kPickupable.count(name)) f.pickupable = true;
  if (kSliceable.count(name)) f.sliceable = true;
  return f;
}

const ObjectState& WorldState::object(const std::string& id) const {
  auto it = objects.find(id);
  if (it == objects.end()) throw UnknownObject("no object with id " + id);
  return it->second;
}

ObjectState& WorldState::object(const std::string& id) {
  auto it = objects.find(id);
  if (it == objects.end()) throw UnknownObject("no object with id " + id);
  return it->second;
}

const ObjectState* WorldState::top_level_at(CellPos c) const {
  for (const auto& [id, o] : objects) {
    if (const auto* p = std::get_if<CellPos>(&o.location); p && *p == c) return &o;
  }
  return nullptr;
}

std::optional<CellPos> WorldState::cell_of(const std::string& id) const {
  const ObjectState* o = &object(id);
  for (int guard = 0; guard < 8; ++guard) {
    if (const auto* p = std::get_if<CellPos>(&o->location)) return *p;
    if (const auto* in = std::get_if<InsideOf>(&o->location)) {
      o = &object(in->receptacle_id);
      continue;
    }
    return std::nullopt;
  }
  throw std::logic_error("containment cycle at " + id);
}

std::vector<std::string> WorldState::contents_of(const std::string& receptacle_id) const {
  std::vector<std::string> out;
  for (const auto& [id, o] : objects) {
    if (const auto* in = std::get_if<InsideOf>(&o.location); in && in->receptacle_id == receptacle_id) {
      out.push_back(id);
    }
  }
  return out;
}

CellPos forward_of(const Pose& p, int depth, int lateral) {
  Vec f = heading_vec(p.heading);
  Vec r = heading_vec(rotate(p.heading, 1));
  return {p.x + depth * f.x + lateral * r.x, p.y + depth * f.y + lateral * r.y};
}

std::vector<VisibleObject> visible_objects(const WorldState& state) {
  std::vector<VisibleObject> out;
  for (const auto& p : layout(state)) {
    out.push_back({p.obj->ref(), p.box, p.depth, p.lateral, p.reachable});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.ref < b.ref; });
  return out;
}

std::set<ObjectRef> visible_refs(const WorldState& state) {
  std::set<ObjectRef> out;
  for (const auto& v : visible_objects(state)) out.insert(v.ref);
  return out;
}

std::optional<BoundingBox> ground_truth_box(const WorldState& state, const std::string& id) {
  for (const auto& p : layout(state)) {
    if (p.obj->id == id) return p.box;
  }
  return std::nullopt;
}

Frame render(const WorldState& s) {
  const int W = s.config.raster_width;
  const int H = s.config.raster_height;
  Canvas cv(W, H);
  cv.fill(0, 0, W, H, {28, 28, 36});
  cv.fill(0, 0, W, 3, heading_color(s.agent.heading));

  // Floor band: one tile per cone cell, colour-coded by absolute cell
  // coordinates, so any change of pose changes the image.
  const int D = s.config.cone_depth;
  const int band_top = H * 3 / 4;
  const int band_h = H - band_top;
  for (int depth = 1; depth <= D; ++depth) {
    const int y1 = H - (depth - 1) * band_h / D;
    const int y0 = H - depth * band_h / D;
    for (int lateral = -1; lateral <= 1; ++lateral) {
      const int x0 = (lateral + 1) * W / 3;
      const int x1 = (lateral + 2) * W / 3;
      cv.fill(x0, y0, x1, y1, floor_color(s, forward_of(s.agent, depth, lateral)));
    }
  }

  for (const auto& p : layout(s)) paint_object(cv, *p.obj, p.box);

  if (s.hand) {
    const auto& held = s.object(*s.hand);
    BoundingBox inset{W - 14, 4, W - 2, 14};
    paint_object(cv, held, inset);
  }
  return Frame(W, H, cv.take());
}

ResetResult reset(const SceneSpec& scene, const Task& task, const SimConfig& config) {
  if (scene.width <= 0 || scene.height <= 0 || scene.width > 16 || scene.height > 16) {
    throw std::invalid_argument("scene dimensions must lie in 1..16");
  }
  WorldState s;
  s.config = config;
  s.width = scene.width;
  s.height = scene.height;
  s.walls.assign(static_cast<std::size_t>(scene.width * scene.height), 0);
  for (const auto& w : scene.walls) {
    if (!s.in_bounds(w)) throw std::invalid_argument("wall outside the grid");
    s.walls[static_cast<std::size_t>(w.y * s.width + w.x)] = 1;
  }
  for (const auto& o : scene.objects) {
    if (!s.objects.emplace(o.id, o).second) throw std::invalid_argument("duplicate object id " + o.id);
  }
  for (const auto& [id, o] : s.objects) {
    if (const auto* c = std::get_if<CellPos>(&o.location)) {
      if (s.is_wall(*c)) throw std::invalid_argument(id + " placed on a wall or outside the grid");
      for (const auto& [id2, o2] : s.objects) {
        if (id2 != id && std::holds_alternative<CellPos>(o2.location) && std::get<CellPos>(o2.location) == *c) {
          throw std::invalid_argument(id + " and " + id2 + " share a cell");
        }
      }
    } else if (const auto* in = std::get_if<InsideOf>(&o.location)) {
      auto it = s.objects.find(in->receptacle_id);
      if (it == s.objects.end() || !it->second.flags.receptacle) {
        throw std::invalid_argument(id + " placed inside a non-receptacle");
      }
    } else {
      if (s.hand) throw std::invalid_argument("more than one held object");
      s.hand = id;
    }
  }
  s.agent = scene.agent_start;
  if (!s.free_cell({s.agent.x, s.agent.y})) throw std::invalid_argument("agent starts on an occupied cell");

  auto known = [&](const ObjectRef& ref) {
    return std::any_of(s.objects.begin(), s.objects.end(), [&](const auto& kv) { return names_match(ref, kv.second); });
  };
  for (const auto& cond : task.goal_conditions) {
    if (!known(cond.object)) throw UnknownObject("goal references missing object " + cond.object.name);
    if (cond.receptacle && !known(*cond.receptacle)) {
      throw UnknownObject("goal references missing receptacle " + cond.receptacle->name);
    }
  }
  Frame f = render(s);
  return {std::move(s), std::move(f)};
}

ActionResult apply_action(WorldState& s, const Action& action, const std::optional<BoundingBox>& bbox) {
  if (!action.well_formed()) return ActionResult::Failed;
  switch (action.kind) {
    case ActionKind::MoveAhead: {
      CellPos next = forward_of(s.agent);
      if (!s.free_cell(next)) return ActionResult::Failed;
      s.agent.x = next.x;
      s.agent.y = next.y;
      return ActionResult::Succeeded;
    }
    case ActionKind::RotateLeft:
      s.agent.heading = rotate(s.agent.heading, -1);
      return ActionResult::Succeeded;
    case ActionKind::RotateRight:
      s.agent.heading = rotate(s.agent.heading, 1);
      return ActionResult::Succeeded;
    default:
      break;
  }
  const ObjectState* target = resolve_target(s, *action.target, bbox);
  if (!target) return ActionResult::Failed;
  return apply_interaction(s, action.kind, s.object(target->id)) ? ActionResult::Succeeded : ActionResult::Failed;
}

StepResult step(const WorldState& state, const Action& action, const std::optional<BoundingBox>& bbox) {
  StepResult out{state, Frame{}, ActionResult::Failed};
  out.result = apply_action(out.state, action, bbox);
  out.frame = render(out.state);
  return out;
}

Simulator::Simulator(const SceneSpec& scene, const Task& task, const SimConfig& config) {
  auto r = reset(scene, task, config);
  state_ = std::move(r.state);
  frame_ = std::move(r.frame);
}

ActionResult Simulator::step(const Action& action, const std::optional<BoundingBox>& bbox) {
  ActionResult r = apply_action(state_, action, bbox);
  if (r == ActionResult::Succeeded) frame_ = render(state_);
  return r;
}

}  // namespace euea
