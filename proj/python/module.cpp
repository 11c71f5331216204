#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "topoexplore/control.hpp"
#include "topoexplore/core.hpp"
#include "topoexplore/hallucination.hpp"
#include "topoexplore/optimality.hpp"

namespace py = pybind11;
using namespace topo;

PYBIND11_MODULE(_topoexplore, m) {
  m.doc() = "Graph-based active exploration core: pose algebra, D-optimality "
            "of weighted pose graphs, and the full exploration episode loop.";

  // --- pose algebra -------------------------------------------------------
  py::class_<core::Pose2>(m, "Pose2")
      .def(py::init<>())
      .def(py::init<double, double, double>(), py::arg("x"), py::arg("y"), py::arg("theta"))
      .def_readwrite("x", &core::Pose2::x)
      .def_readwrite("y", &core::Pose2::y)
      .def_readwrite("theta", &core::Pose2::theta)
      .def("__repr__", [](const core::Pose2& p) {
        return "Pose2(" + std::to_string(p.x) + ", " + std::to_string(p.y) + ", " +
               std::to_string(p.theta) + ")";
      });

  py::class_<core::RelativePose2>(m, "RelativePose2")
      .def(py::init<>())
      .def(py::init<double, double, double>(), py::arg("dx"), py::arg("dy"), py::arg("dtheta"))
      .def_readwrite("dx", &core::RelativePose2::dx)
      .def_readwrite("dy", &core::RelativePose2::dy)
      .def_readwrite("dtheta", &core::RelativePose2::dtheta)
      .def("__repr__", [](const core::RelativePose2& p) {
        return "RelativePose2(" + std::to_string(p.dx) + ", " + std::to_string(p.dy) + ", " +
               std::to_string(p.dtheta) + ")";
      });

  m.def("normalize_angle", &core::normalize_angle, py::arg("theta"));
  m.def("compose", &core::compose, py::arg("a"), py::arg("b"));
  m.def("between", &core::between, py::arg("a"), py::arg("b"));
  m.def("inverse", &core::inverse, py::arg("p"));

  // --- graphs -------------------------------------------------------------
  py::class_<core::WeightedPoseGraph>(m, "WeightedPoseGraph")
      .def_property_readonly("num_vertices",
                             [](const core::WeightedPoseGraph& g) { return g.base.num_vertices(); })
      .def_property_readonly("num_edges",
                             [](const core::WeightedPoseGraph& g) { return g.base.num_edges(); })
      .def_property_readonly("weights",
                             [](const core::WeightedPoseGraph& g) { return g.weights; })
      .def_property_readonly("is_connected",
                             [](const core::WeightedPoseGraph& g) { return g.base.is_connected(); })
      .def("serialize", [](const core::WeightedPoseGraph& g) { return core::serialize_graph(g); });

  m.def("parse_graph", &core::parse_graph, py::arg("text"),
        "Parse VERTEX_SE2/EDGE_SE2 text into a weighted pose graph.");

  // --- optimality ---------------------------------------------------------
  m.def("kiefer_criterion", &optimality::kiefer_criterion, py::arg("m"), py::arg("p"));
  m.def("dopt_matrix", &optimality::dopt_matrix, py::arg("m"));
  m.def("log_tree_weight", &optimality::log_tree_weight, py::arg("graph"));
  m.def("dopt_graph", &optimality::dopt_graph, py::arg("graph"));

  // --- hallucination helpers ----------------------------------------------
  m.def(
      "lc_probability",
      [](int n_p, int n_p_min, int n_p_max) {
        core::LoopClosureParams p;
        p.n_p_min = n_p_min;
        p.n_p_max = n_p_max;
        return hallucination::lc_probability(n_p, p);
      },
      py::arg("n_p"), py::arg("n_p_min") = 3, py::arg("n_p_max") = 6);
  m.def(
      "apply_novelty",
      [](const Eigen::Matrix3d& h, double sigma) {
        return hallucination::apply_novelty(core::InfoMatrix(h), sigma).m;
      },
      py::arg("h"), py::arg("sigma"));

  // --- worlds and episodes --------------------------------------------------
  py::class_<core::World>(m, "World")
      .def_property_readonly("num_landmarks",
                             [](const core::World& w) { return w.landmarks.size(); })
      .def_property_readonly("num_walls", [](const core::World& w) { return w.walls.size(); })
      .def_property_readonly("bounds", [](const core::World& w) {
        return py::make_tuple(w.bounds.xmin, w.bounds.ymin, w.bounds.xmax, w.bounds.ymax);
      });

  m.def("parse_world", &core::parse_world, py::arg("text"));
  m.def("load_world", &core::load_world, py::arg("path"));

  py::class_<core::SensorModel>(m, "SensorModel")
      .def(py::init<>())
      .def_readwrite("fov", &core::SensorModel::fov)
      .def_readwrite("max_range", &core::SensorModel::max_range)
      .def_readwrite("range_noise_std", &core::SensorModel::range_noise_std)
      .def_readwrite("bearing_noise_std", &core::SensorModel::bearing_noise_std);

  py::class_<control::ExplorationConfig>(m, "ExplorationConfig")
      .def(py::init<>())
      .def_readwrite("sensor", &control::ExplorationConfig::sensor)
      .def_readwrite("grid_resolution", &control::ExplorationConfig::grid_resolution)
      .def_readwrite("inflation_radius", &control::ExplorationConfig::inflation_radius)
      .def_readwrite("vertex_spacing", &control::ExplorationConfig::vertex_spacing)
      .def_readwrite("epoch_cap", &control::ExplorationConfig::epoch_cap)
      .def_readwrite("jobs", &control::ExplorationConfig::jobs);

  py::class_<control::EpisodeResult>(m, "EpisodeResult")
      .def_property_readonly(
          "num_epochs", [](const control::EpisodeResult& r) { return r.log.epochs.size(); })
      .def_property_readonly("incomplete",
                             [](const control::EpisodeResult& r) { return r.log.incomplete; })
      .def_property_readonly("had_certain_loop_closure",
                             [](const control::EpisodeResult& r) {
                               return r.had_certain_loop_closure;
                             })
      .def_property_readonly("coverage",
                             [](const control::EpisodeResult& r) {
                               return r.log.epochs.empty() ? 0.0 : r.log.epochs.back().coverage;
                             })
      .def_property_readonly("final_graph_text",
                             [](const control::EpisodeResult& r) {
                               return core::serialize_graph(r.final_graph);
                             })
      .def(
          "csv",
          [](const control::EpisodeResult& r, bool include_timings) {
            return r.log.to_csv(include_timings);
          },
          py::arg("include_timings") = false);

  m.def(
      "run_episode",
      [](const core::World& world, const core::Pose2& start,
         const control::ExplorationConfig& cfg, std::uint64_t seed) {
        return control::run_episode(world, start, cfg, seed);
      },
      py::arg("world"), py::arg("start"), py::arg("config"), py::arg("seed"),
      py::call_guard<py::gil_scoped_release>());
}
