// Copyright 2026 The EUEA Harness Authors
// SPDX-License-Identifier: Apache-2.0

// _euea: thin Python bindings. Structured values cross the boundary as the
// same JSON the CLI writes, decoded into dicts and lists.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "euea/agent.hpp"
#include "euea/dataset.hpp"
#include "euea/errors.hpp"
#include "euea/eval.hpp"
#include "euea/reward.hpp"
#include "euea/serialization.hpp"
#include "euea/skills.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace euea;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& o) {
  return json::parse(py::module_::import("json").attr("dumps")(o).cast<std::string>());
}

template <typename T>
T decode(const py::handle& o, const char* what) {
  try {
    return from_py(o).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad ") + what + ": " + e.what());
  }
}

SkillKind kind_of(const std::string& name) {
  auto k = parse_skill_kind(name);
  if (!k) throw UsageError("unknown skill kind \"" + name + "\"");
  return *k;
}

BoundingBox box_of(const std::tuple<int, int, int, int>& t) {
  return {std::get<0>(t), std::get<1>(t), std::get<2>(t), std::get<3>(t)};
}

AgentConfig agent_config(int k, int n, bool recovery, bool env_feedback, int max_steps, std::uint64_t seed) {
  AgentConfig c;
  c.k = k;
  c.n = n;
  c.recovery_enabled = recovery;
  c.env_feedback = env_feedback;
  c.max_steps = max_steps;
  c.seed = seed;
  c.validate();
  return c;
}

}  // namespace

PYBIND11_MODULE(_euea, m) {
  m.doc() = "Embodied-agent harness core";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (e.kind() + ": " + e.what()).c_str());
    }
  });

  m.def("iou", [](std::tuple<int, int, int, int> a, std::tuple<int, int, int, int> b) {
    return iou(box_of(a), box_of(b));
  });
  m.def("jaccard", [](std::set<std::string> pred, std::set<std::string> gt) { return jaccard(pred, gt); });
  m.def("sequence_order_score", [](std::vector<std::string> pred, std::vector<std::string> gt) {
    return sequence_order_score(pred, gt);
  });
  m.def("normalized_std", [](std::vector<double> rewards, double range) { return normalized_std(rewards, range); });

  m.def("parse_response", [](const std::string& kind, const std::string& text) {
    return to_py(json(parse_response(kind_of(kind), text)));
  });
  m.def("render_answer", [](py::object output) { return render_answer(decode<SkillOutput>(output, "output")); });
  m.def(
      "reward_text",
      [](py::object instance, const std::string& response) {
        const auto r = reward_text(decode<SkillInstance>(instance, "instance"), response);
        return to_py({{"r_op", r.r_op},
                      {"r_tp", r.r_tp},
                      {"r_au", r.r_au},
                      {"r_gr", r.r_gr},
                      {"r_total", r.r_total},
                      {"kind", std::string(to_string(r.active_skill))}});
      },
      py::arg("instance"), py::arg("response"));

  m.def(
      "generate_episode",
      [](const std::string& type, std::uint64_t seed) {
        auto t = parse_task_type(type);
        if (!t) throw UsageError("unknown task type \"" + type + "\"");
        const auto ep = generate_episode(*t, seed);
        return to_py({{"scene", ep.scene}, {"task", ep.task}});
      },
      py::arg("task_type"), py::arg("seed") = 0);

  m.def(
      "expert_trajectory",
      [](py::object scene, py::object task) {
        return to_py(trajectory_to_json(
            expert_trajectory(decode<SceneSpec>(scene, "scene"), decode<Task>(task, "task"))));
      },
      py::arg("scene"), py::arg("task"));

  m.def(
      "initial_frame",
      [](py::object scene, py::object task) {
        const Frame f = reset(decode<SceneSpec>(scene, "scene"), decode<Task>(task, "task")).frame;
        const auto px = f.pixels();
        return py::make_tuple(f.width(), f.height(), py::bytes(reinterpret_cast<const char*>(px.data()), px.size()));
      },
      py::arg("scene"), py::arg("task"));

  m.def(
      "build_dataset",
      [](py::object scene, py::object task, std::vector<std::string> kinds, int k) {
        std::set<SkillKind> wanted;
        for (const auto& n : kinds) wanted.insert(kind_of(n));
        if (wanted.empty()) wanted = {kAllSkillKinds.begin(), kAllSkillKinds.end()};
        const auto t = expert_trajectory(decode<SceneSpec>(scene, "scene"), decode<Task>(task, "task"));
        DatasetOptions opt;
        opt.k = k;
        return to_py(json(build_skill_dataset(std::span(&t, 1), wanted, Split::Train, opt)));
      },
      py::arg("scene"), py::arg("task"), py::arg("kinds") = std::vector<std::string>{}, py::arg("k") = 4);

  m.def(
      "run_episode",
      [](py::object scene, py::object task, int k, int n, bool recovery, bool env_feedback, int max_steps,
         std::uint64_t seed, std::vector<std::string> faults) {
        FaultSchedule schedule;
        for (const auto& f : faults) {
          auto c = parse_corruption(f);
          if (!c) throw UsageError("unknown fault \"" + f + "\"");
          schedule.rules.push_back({std::nullopt, 1, *c});
        }
        ScriptedOracle oracle(schedule);
        const auto r = run_episode(decode<SceneSpec>(scene, "scene"), decode<Task>(task, "task"), oracle,
                                   agent_config(k, n, recovery, env_feedback, max_steps, seed));
        json out = episode_summary_json(r);
        out["failed_steps"] = r.failed_steps;
        out["memory"] = r.transcript;
        return to_py(out);
      },
      py::arg("scene"), py::arg("task"), py::arg("k") = 4, py::arg("n") = 10, py::arg("recovery") = true,
      py::arg("env_feedback") = false, py::arg("max_steps") = 120, py::arg("seed") = 0,
      py::arg("faults") = std::vector<std::string>{});

  m.def(
      "evaluate_suite",
      [](const std::string& name, bool recovery, bool env_feedback, int max_steps, std::uint64_t seed, int workers) {
        const auto suite = make_suite(name, seed);
        const auto cfg = agent_config(4, 10, recovery, env_feedback, max_steps, seed);
        TaskEvalResult res;
        {
          py::gil_scoped_release release;
          res = evaluate_tasks(
              suite.episodes, [&] { return std::make_unique<ScriptedOracle>(suite.faults); }, cfg, workers);
        }
        return to_py(task_report_json(res.report));
      },
      py::arg("suite"), py::arg("recovery") = true, py::arg("env_feedback") = false, py::arg("max_steps") = 120,
      py::arg("seed") = 0, py::arg("workers") = 1);
}
