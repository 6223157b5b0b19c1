// Python bindings for the particle laboratory.  The module mirrors the CLI:
// config maps in, run directories / summaries out, plus direct access to the
// oracles and tables for notebook work.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <string>
#include <vector>

#include "kslab/bessel.hpp"
#include "kslab/criteria.hpp"
#include "kslab/harness.hpp"

namespace py = pybind11;
using namespace kslab;

namespace {

RunSpec spec_from_dict(const std::map<std::string, std::string> &config) {
    KeyMap map(config.begin(), config.end());
    return run_spec_from(map);
}

py::dict estimate_dict(const NamedEstimate &e) {
    py::dict d;
    d["name"] = e.name;
    d["value"] = e.value;
    d["std_error"] = e.std_error;
    d["n"] = e.n;
    d["window"] = e.window;
    return d;
}

py::array_t<double> snapshots_array(const TrajectoryRecord &rec) {
    const py::ssize_t s = static_cast<py::ssize_t>(rec.snapshots.size());
    const py::ssize_t n = rec.n;
    py::array_t<double> arr({s, n, static_cast<py::ssize_t>(2)});
    auto view = arr.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < s; ++k)
        for (py::ssize_t i = 0; i < n; ++i) {
            view(k, i, 0) = rec.snapshots[k].positions[i].x;
            view(k, i, 1) = rec.snapshots[k].positions[i].y;
        }
    return arr;
}

py::dict record_dict(const TrajectoryRecord &rec) {
    py::dict d;
    d["seed"] = rec.seed;
    d["collapsed"] = rec.collapsed;
    d["collapse_time"] = rec.collapse_time;
    d["collapse_cluster"] = rec.collapse_cluster;
    d["steps"] = rec.stats.steps;
    d["taming_steps"] = rec.stats.taming_steps;
    std::vector<double> times;
    for (const auto &snap : rec.snapshots) times.push_back(snap.t);
    d["times"] = times;
    d["positions"] = snapshots_array(rec);
    return d;
}

} // namespace

PYBIND11_MODULE(_kslab, m) {
    m.doc() = "Stochastic particle system with singular pairwise attraction: "
              "simulation, diagnostics, and reference oracles.";

    m.def(
        "simulate",
        [](const std::map<std::string, std::string> &config) {
            const auto spec = spec_from_dict(config);
            const auto records = simulate_replicas(spec, 0);
            py::list out;
            for (const auto &rec : records) out.append(record_dict(rec));
            return out;
        },
        py::arg("config"),
        "Simulate every replica of one configuration; returns a list of "
        "replica dicts with snapshot arrays of shape (snapshots, n, 2).");

    m.def(
        "run",
        [](const std::map<std::string, std::string> &config) {
            const auto spec = spec_from_dict(config);
            const auto records = simulate_replicas(spec, 0);
            const auto report = run_diagnostics(spec, records);
            const auto dir = resolve_output_dir(spec.cfg.output_dir);
            write_run_dir(dir, spec, shared_family().content_hash, records, report);
            py::dict d;
            d["output_dir"] = dir;
            int collapsed = 0;
            for (const auto &rec : records) collapsed += rec.collapsed ? 1 : 0;
            d["replicas"] = static_cast<int>(records.size());
            d["collapsed"] = collapsed;
            py::list est;
            for (const auto &e : report.estimates) est.append(estimate_dict(e));
            d["estimates"] = est;
            return d;
        },
        py::arg("config"),
        "Simulate, run the selected diagnostics, and persist a run directory; "
        "returns the summary.");

    m.def(
        "diagnostics",
        [](const std::map<std::string, std::string> &config) {
            const auto spec = spec_from_dict(config);
            const auto records = simulate_replicas(spec, 0);
            const auto report = run_diagnostics(spec, records);
            py::list est;
            for (const auto &e : report.estimates) est.append(estimate_dict(e));
            py::dict series;
            for (const auto &s : report.series) {
                py::dict one;
                one["t"] = s.series.t;
                one["value"] = s.series.v;
                series[py::str(s.name)] = one;
            }
            py::dict d;
            d["estimates"] = est;
            d["series"] = series;
            return d;
        },
        py::arg("config"), "Simulate and return the diagnostics without writing files.");

    m.def(
        "verify",
        [](const std::string &root) {
            const auto rep = verify_root(root);
            py::list out;
            for (const auto &o : rep.outcomes) {
                py::dict d;
                d["id"] = o.id;
                d["status"] = o.status;
                d["detail"] = o.detail;
                out.append(d);
            }
            return out;
        },
        py::arg("root"),
        "Evaluate every registered acceptance criterion against the stored "
        "runs under root.");

    m.def(
        "dimension_table",
        [](double theta, int n) {
            const auto table = dimension_table(theta, n);
            py::dict d;
            d["d"] = table.d;
            d["k2"] = table.k2;
            return d;
        },
        py::arg("theta"), py::arg("n"),
        "Cluster dimension d(k) for k = 2..n (index 0 is k=2) and the "
        "critical cluster size k2 (-1 when not defined).");

    m.def(
        "bessel_path",
        [](double dimension, double z0, double horizon, double dt, std::uint64_t seed,
           bool absorb_at_zero) {
            BesselConfig cfg;
            cfg.dimension = dimension;
            cfg.z0 = z0;
            cfg.horizon = horizon;
            cfg.dt = dt;
            cfg.absorb_at_zero = absorb_at_zero;
            return py::array_t<double>(py::cast(simulate_bessel(cfg, seed)));
        },
        py::arg("dimension"), py::arg("z0") = 1.0, py::arg("horizon") = 1.0,
        py::arg("dt") = 1e-3, py::arg("seed") = 1, py::arg("absorb_at_zero") = false,
        "One squared-Bessel path on the step grid.");

    m.def(
        "zero_hitting_fraction",
        [](double dimension, double z0, double horizon, double dt, int replicas,
           std::uint64_t seed) {
            BesselConfig cfg;
            cfg.dimension = dimension;
            cfg.z0 = z0;
            cfg.horizon = horizon;
            cfg.dt = dt;
            return zero_hitting_fraction(cfg, replicas, seed);
        },
        py::arg("dimension"), py::arg("z0") = 1.0, py::arg("horizon") = 5.0,
        py::arg("dt") = 1e-3, py::arg("replicas") = 500, py::arg("seed") = 1,
        "Fraction of squared-Bessel paths that touch 0 before the horizon.");

    m.def("min_population", &min_population, py::arg("theta"),
          "Smallest admissible particle count for the given interaction strength.");

    m.attr("version") = kVersion;
}
