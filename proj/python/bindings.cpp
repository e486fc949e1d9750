#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "odpa/core.hpp"
#include "odpa/dpa.hpp"
#include "odpa/experiments.hpp"
#include "odpa/io.hpp"
#include "odpa/kernels.hpp"
#include "odpa/metrics.hpp"
#include "odpa/transport.hpp"

namespace py = pybind11;
using namespace odpa;

namespace {

py::array_t<double> opinions_array(const ParticleState& s) {
    py::array_t<double> out({s.n_agents, s.n_points()});
    std::copy(s.x.begin(), s.x.end(), out.mutable_data());
    return out;
}

py::array_t<double> nodes_array(const ParticleState& s) {
    py::array_t<double> out({s.n_agents, s.dim});
    std::copy(s.a.begin(), s.a.end(), out.mutable_data());
    return out;
}

Scenario scenario_arg(const py::object& obj) {
    if (py::isinstance<py::str>(obj)) return parse_scenario(obj.cast<std::string>());
    return obj.cast<Scenario>();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Deterministic particle approximation of opinion densities on a co-evolving network.";

    py::register_exception<SchemaError>(m, "SchemaError", PyExc_ValueError);
    py::register_exception<ScenarioError>(m, "ScenarioError", PyExc_ValueError);
    py::register_exception<StepCollapse>(m, "StepCollapse", PyExc_RuntimeError);

    py::class_<AttitudeParams>(m, "AttitudeParams")
        .def(py::init<>())
        .def(py::init<double, double, double, double>(), py::arg("r_f"), py::arg("r_a"), py::arg("r_r"),
             py::arg("r_l"))
        .def_readwrite("r_f", &AttitudeParams::r_f)
        .def_readwrite("r_a", &AttitudeParams::r_a)
        .def_readwrite("r_r", &AttitudeParams::r_r)
        .def_readwrite("r_l", &AttitudeParams::r_l)
        .def_static("preset", [](const std::string& name) {
            const auto p = AttitudeParams::preset(name);
            if (!p) throw py::value_error("unknown attitude preset: " + name);
            return *p;
        })
        .def("__repr__", [](const AttitudeParams& p) {
            return "AttitudeParams(" + std::to_string(p.r_f) + ", " + std::to_string(p.r_a) + ", " +
                   std::to_string(p.r_r) + ", " + std::to_string(p.r_l) + ")";
        });

    py::class_<Scenario>(m, "Scenario")
        .def_static("from_json", &parse_scenario, py::arg("text"))
        .def_static("load", [](const std::string& path) { return load_scenario(path); }, py::arg("path"))
        .def("to_json", &scenario_to_json)
        .def("digest", &scenario_digest)
        .def("realize", &realize)
        .def_property_readonly("n_agents", &Scenario::n_agents)
        .def_readwrite("attitude", &Scenario::attitude)
        .def_readwrite("interaction_radius", &Scenario::interaction_radius)
        .def_readwrite("diffusion_enabled", &Scenario::diffusion_enabled)
        .def_readwrite("seed", &Scenario::seed)
        .def_property(
            "n_particles", [](const Scenario& s) { return s.run.n_particles; },
            [](Scenario& s, int n) { s.run.n_particles = n; })
        .def_property(
            "t_final", [](const Scenario& s) { return s.run.t_final; }, [](Scenario& s, double t) { s.run.t_final = t; })
        .def_property(
            "dt", [](const Scenario& s) { return s.run.dt; }, [](Scenario& s, double dt) { s.run.dt = dt; })
        .def_property(
            "snapshot_every", [](const Scenario& s) { return s.run.snapshot_every; },
            [](Scenario& s, double v) { s.run.snapshot_every = v; });

    py::class_<ParticleState>(m, "ParticleState")
        .def_readonly("t", &ParticleState::t)
        .def_readonly("masses", &ParticleState::masses)
        .def_readonly("sigma_N", &ParticleState::sigma_N)
        .def_property_readonly("x", &opinions_array)
        .def_property_readonly("a", &nodes_array)
        .def_property_readonly("mean_opinions", &mean_opinions);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("scenario", &Trajectory::scenario)
        .def_readonly("snapshots", &Trajectory::snapshots)
        .def_readonly("interval_max_speed", &Trajectory::interval_max_speed)
        .def_readonly("stopped_early", &Trajectory::stopped_early)
        .def_property_readonly("times", [](const Trajectory& t) {
            std::vector<double> out;
            for (const auto& s : t.snapshots) out.push_back(s.t);
            return out;
        })
        .def_property_readonly("steps", [](const Trajectory& t) { return t.stats.steps; })
        .def_property_readonly("rejections", [](const Trajectory& t) { return t.stats.rejections; });

    m.def(
        "validate",
        [](const py::object& scenario) {
            py::list out;
            for (const auto& v : validate(scenario_arg(scenario))) {
                py::dict d;
                d["code"] = v.code;
                d["field"] = v.field;
                d["message"] = v.message;
                out.append(d);
            }
            return out;
        },
        py::arg("scenario"), "Violations of a Scenario or scenario JSON text; empty when valid.");

    m.def(
        "simulate",
        [](const py::object& scenario) {
            const Scenario s = scenario_arg(scenario);
            py::gil_scoped_release release;
            return simulate(s);
        },
        py::arg("scenario"));

    m.def("attitude_zeta", &attitude_zeta, py::arg("s"), py::arg("params"));
    m.def("omega", &omega, py::arg("a_dist"), py::arg("radius"));
    m.def("kernel_K_model", &kernel_K_model, py::arg("w"), py::arg("v"), py::arg("mu_i"), py::arg("mu_j"),
          py::arg("a_dist"), py::arg("params"), py::arg("radius"));
    m.def("mobility_A_model", &mobility_A_model, py::arg("w"), py::arg("mu_j"));

    m.def(
        "quantile_partition_gaussian",
        [](double mean, double variance, double mass, int n) {
            return quantile_partition(GaussianDensity{mean, variance}, mass, n);
        },
        py::arg("mean"), py::arg("variance"), py::arg("mass"), py::arg("n_intervals"));
    m.def(
        "discrete_mean", [](const std::vector<double>& x) { return discrete_mean(x); }, py::arg("x"));
    m.def(
        "discrete_densities", [](const std::vector<double>& x, double sigma_N) { return discrete_densities(x, sigma_N); },
        py::arg("x"), py::arg("sigma_N"));
    m.def(
        "wasserstein1",
        [](const std::vector<double>& x1, double s1, const std::vector<double>& x2, double s2) {
            return wasserstein1(reconstruct(x1, s1), reconstruct(x2, s2));
        },
        py::arg("x1"), py::arg("sigma_N1"), py::arg("x2"), py::arg("sigma_N2"),
        "Scaled W1 between the piecewise-constant reconstructions of two particle sets.");
    m.def(
        "first_moment", [](const std::vector<double>& x, double sigma_N) { return first_moment(reconstruct(x, sigma_N)); },
        py::arg("x"), py::arg("sigma_N"));
    m.def(
        "total_variation",
        [](const std::vector<double>& x, double sigma_N) { return total_variation(reconstruct(x, sigma_N)); },
        py::arg("x"), py::arg("sigma_N"));
    m.def(
        "empirical_wasserstein_gap",
        [](const std::vector<double>& x, double sigma_N) { return empirical_wasserstein_gap(x, sigma_N); },
        py::arg("x"), py::arg("sigma_N"));

    m.def(
        "bimodality_gap", [](const std::vector<double>& means) { return bimodality_gap(means); }, py::arg("means"));
    m.def("polarization_index", [](const ParticleState& s) { return polarization_index(s); }, py::arg("state"));
    m.def(
        "network_clusters",
        [](const ParticleState& s, double radius) { return network_clusters(s, radius).members; }, py::arg("state"),
        py::arg("radius"));
    m.def(
        "cluster_opinion_spread",
        [](const ParticleState& s, double radius) { return cluster_opinion_spread(s, network_clusters(s, radius)); },
        py::arg("state"), py::arg("radius"));

    m.def(
        "write_run",
        [](const Trajectory& t, const std::string& dir) {
            const auto manifest = make_manifest(t, 0.0, "");
            write_snapshots(t, dir, manifest);
            write_plot_data(t, dir);
        },
        py::arg("trajectory"), py::arg("out_dir"));

    m.attr("__version__") = kToolVersion;
}
