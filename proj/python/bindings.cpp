#include "z2neck/error.hpp"
#include "z2neck/experiments.hpp"
#include "z2neck/green_maps.hpp"
#include "z2neck/mode_solver.hpp"
#include "z2neck/radial_ode.hpp"
#include "z2neck/source.hpp"

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace z2neck;

namespace {

using KeyValues = std::map<std::string, std::string>;

ModelGeometry geometry_from(const KeyValues& kv)
{
    for (const auto& [key, value] : kv)
        if (!GeometryConfig::is_geometry_key(key)) throw ConfigError("unknown geometry key '" + key + "'");
    return build_geometry(GeometryConfig::from_map(kv));
}

py::dict criterion_dict(const Criterion& c)
{
    py::dict d;
    d["name"] = c.name;
    d["value"] = c.value;
    d["target"] = c.target;
    d["tolerance"] = c.tolerance;
    d["comparison"] = to_string(c.comparison);
    d["pass"] = c.pass;
    d["citation"] = c.citation;
    return d;
}

}  // namespace

PYBIND11_MODULE(_z2neck, m)
{
    m.doc() = "mode solver and experiments for model manifolds with long necks";

    // translators run newest first, so the base class goes first
    py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);

    m.def("experiments", [] {
        std::vector<std::pair<std::string, std::string>> out;
        for (const auto& e : experiment_list()) out.emplace_back(e.name, e.summary);
        return out;
    });

    m.def(
        "run_experiment",
        [](const KeyValues& kv) {
            ExperimentConfig cfg = make_config(kv);
            ExperimentResult r;
            {
                py::gil_scoped_release release;
                r = run_experiment(cfg);
            }
            py::dict d;
            d["name"] = r.name;
            d["passed"] = r.passed();
            d["header"] = r.header;
            d["rows"] = r.rows;
            py::list crit;
            for (const auto& c : r.criteria) crit.append(criterion_dict(c));
            d["criteria"] = crit;
            d["info"] = r.info;
            d["warnings"] = r.warnings;
            return d;
        },
        py::arg("config"), "run an experiment from config keys given as strings; nothing is written to disk");

    m.def("alpha", [](int n, int mm) { return ModeIndex{n, mm}.alpha(); }, py::arg("n"), py::arg("m"));

    m.def(
        "metric",
        [](const KeyValues& geometry, double x) {
            MetricCoeffs c = geometry_from(geometry).metric(x);
            return std::make_tuple(c.g_rr, c.g_pp, c.g_tt);
        },
        py::arg("geometry"), py::arg("x"), "(g_rr, g_phiphi, g_thetatheta) at global position x");

    m.def(
        "r_total", [](const KeyValues& geometry) { return geometry_from(geometry).r_total(); }, py::arg("geometry"));

    m.def(
        "ratio_bound",
        [](const KeyValues& geometry, int n, int mm, double s) {
            return ratio_bound(geometry_from(geometry), n, mm, s);
        },
        py::arg("geometry"), py::arg("n"), py::arg("m"), py::arg("s"));

    m.def(
        "cn_constant", [](const KeyValues& geometry, int n) { return Cn_constant(geometry_from(geometry), n); },
        py::arg("geometry"), py::arg("n"));

    m.def(
        "mode_coefficient",
        [](const KeyValues& geometry, std::uint64_t source_seed, int n, int mm, int end) {
            ModelGeometry g = geometry_from(geometry);
            std::vector<int> ns;
            for (int k = 1; k <= std::abs(n); k += 2) ns.push_back(k);
            SourceSpec f = SourceSpec::random(source_seed, g.interior().length(), ns, std::abs(mm));
            ModeIndex stored = n < 0 ? ModeIndex{-n, -mm} : ModeIndex{n, mm};
            ModeCoefficients c;
            {
                py::gil_scoped_release release;
                c = compute_mode_coefficients(g, f, {stored}, {});
            }
            return c.value({n, mm}, end);
        },
        py::arg("geometry"), py::arg("source_seed"), py::arg("n"), py::arg("m"), py::arg("end") = 0,
        "u_nm at an end for the seeded random interior source");
}
