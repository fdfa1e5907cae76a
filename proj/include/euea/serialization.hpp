// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// Canonical snake_case JSON encodings. Frames are written as references
// ({width, height, hash, path}); the pixels live in PNG files under frames/.

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "euea/core.hpp"
#include "euea/sim.hpp"

namespace euea {

using json = nlohmann::json;

void to_json(json& j, const BoundingBox& b);
void from_json(const json& j, BoundingBox& b);
void to_json(json& j, const ObjectRef& r);
void from_json(const json& j, ObjectRef& r);
void to_json(json& j, const Action& a);
void from_json(const json& j, Action& a);
void to_json(json& j, const Pose& p);
void from_json(const json& j, Pose& p);
void to_json(json& j, const Frame& f);
void from_json(const json& j, Frame& f);
void to_json(json& j, const Subgoal& s);
void from_json(const json& j, Subgoal& s);
void to_json(json& j, const MemoryStep& m);
void from_json(const json& j, MemoryStep& m);
void to_json(json& j, const GoalCondition& c);
void from_json(const json& j, GoalCondition& c);
void to_json(json& j, const Task& t);
void from_json(const json& j, Task& t);
void to_json(json& j, const Memory& m);
void from_json(const json& j, Memory& m);
void to_json(json& j, const SkillOutput& o);
void from_json(const json& j, SkillOutput& o);
void to_json(json& j, const SkillInstance& s);
void from_json(const json& j, SkillInstance& s);

void to_json(json& j, const CellPos& c);
void from_json(const json& j, CellPos& c);
void to_json(json& j, const ObjectState& o);
void from_json(const json& j, ObjectState& o);
void to_json(json& j, const SceneSpec& s);
void from_json(const json& j, SceneSpec& s);
void to_json(json& j, const SimConfig& c);
void from_json(const json& j, SimConfig& c);

/// Reads a JSON file; wraps parse errors in FormatError naming the path.
json read_json_file(const std::filesystem::path& path);
/// Writes `j` with two-space indentation and a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);

std::vector<json> read_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, const std::vector<json>& rows);

}  // namespace euea
