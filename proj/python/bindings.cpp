#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "flowmap/analysis.hpp"
#include "flowmap/polyflow.hpp"
#include "flowmap/settings.hpp"
#include "flowmap/steane.hpp"
#include "flowmap/tmr.hpp"

namespace py = pybind11;
using namespace flowmap;

namespace {

FailureVector point(const FlowMap& f, const std::map<std::string, double>& values) {
    std::vector<double> v(f.dimension(), 0.0);
    for (const auto& [name, x] : values) {
        v[f.index_of(name)] = x;
    }
    return FailureVector(f.variables(), v);
}

std::map<std::string, double> as_dict(const FailureVector& x) {
    std::map<std::string, double> out;
    for (std::size_t i = 0; i < x.size(); ++i) {
        out[x.names()[i]] = x.values()[i];
    }
    return out;
}

Setting setting_for(const FlowMap& f, const std::string& spec) {
    return resolve_setting(spec, f.variables());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Flow-map threshold analysis";

    py::register_exception<VariableBindingError>(m, "VariableBindingError", PyExc_KeyError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<ConfigurationError>(m, "ConfigurationError", PyExc_ValueError);

    py::class_<FlowMap>(m, "FlowMap")
        .def_property_readonly("variables", &FlowMap::variables)
        .def("component", [](const FlowMap& f, const std::string& name) {
            return f.component(name).to_string();
        })
        .def("__call__", [](const FlowMap& f, const std::map<std::string, double>& x) {
            return as_dict(eval_map(f, point(f, x)));
        })
        .def("iterate", [](const FlowMap& f, const std::map<std::string, double>& x, int levels) {
            return as_dict(iterate(f, point(f, x), levels));
        })
        .def("compose", [](const FlowMap& outer, const FlowMap& inner) { return compose(outer, inner); })
        .def("to_json", &serialize_flowmap)
        .def_property_readonly("hash", &flowmap_hash);

    m.def("tmr_flow_map", [] { return tmr::tmr_flow_map(); });
    m.def("uv_example_map", &uv_example_map);
    m.def("parse_flowmap", [](const std::string& text) { return parse_flowmap(text); });

    m.def(
        "pseudothreshold",
        [](const FlowMap& f, const std::string& location, const std::string& setting, int level) {
            const auto r = pseudothreshold(f, location, setting_for(f, setting), level);
            return r.found ? py::cast(r.value) : py::none();
        },
        py::arg("map"), py::arg("location"), py::arg("setting") = "diagonal", py::arg("level") = 1);

    m.def(
        "asymptotic_threshold",
        [](const FlowMap& f, const std::string& location, const std::string& setting) {
            const auto r = asymptotic_location_threshold(f, location, setting_for(f, setting));
            return r.converged ? py::cast(r.value) : py::none();
        },
        py::arg("map"), py::arg("location"), py::arg("setting") = "diagonal");

    m.def("fixed_points", [](const FlowMap& f) {
        std::vector<std::map<std::string, double>> out;
        for (const auto& p : fixed_points(f, Region::unit(f.dimension()))) {
            out.push_back(as_dict(p));
        }
        return out;
    });

    m.def(
        "trajectory",
        [](const FlowMap& f, const std::map<std::string, double>& start, int max_level) {
            std::vector<std::map<std::string, double>> out;
            for (const auto& p : trajectory(f, point(f, start), max_level)) {
                out.push_back(as_dict(p));
            }
            return out;
        },
        py::arg("map"), py::arg("start"), py::arg("max_level") = 20);

    m.def(
        "threshold_set",
        [](const FlowMap& f, const std::string& x, const std::string& y, double hi,
           std::size_t resolution) {
            ThresholdSlice slice;
            slice.x_var = x;
            slice.y_var = y;
            slice.x_hi = slice.y_hi = hi;
            const auto r = threshold_set(f, slice, resolution);
            py::dict d;
            d["largest_cube_edge"] = r.largest_cube_edge;
            d["step"] = r.x_step;
            d["below"] = r.below_count;
            d["above"] = r.above_count;
            d["undetermined"] = r.undetermined_count;
            d["ray_violations"] = r.ray_violations;
            return d;
        },
        py::arg("map"), py::arg("x"), py::arg("y"), py::arg("hi") = 0.5,
        py::arg("resolution") = 200);

    m.def("low_order_bound", [](const FlowMap& f, std::uint32_t degree) {
        const auto r = low_order_bound(f, degree);
        py::dict d;
        d["bound"] = r.bound;
        d["location"] = r.location;
        d["exact"] = r.exact ? py::cast(r.exact->str()) : py::none();
        return d;
    });

    m.def("tmr_netlist", [](const std::string& kind) {
        if (kind == "w") return tmr::build_replacement(tmr::Kind::wire).netlist();
        if (kind == "v") return tmr::build_replacement(tmr::Kind::voter).netlist();
        if (kind == "f") return tmr::build_replacement(tmr::Kind::fanout).netlist();
        throw py::value_error("kind must be 'w', 'v' or 'f'");
    });

    m.def("steane_census", [](const std::string& kind) {
        const auto c = kind == "ec" ? steane::build_ec() : steane::build_exrec(steane::parse_kind(kind));
        std::map<std::string, std::size_t> out;
        const auto counts = c.census();
        for (std::size_t k = 0; k < steane::kKinds; ++k) {
            out[steane::location_names()[k]] = counts[k];
        }
        return out;
    });

    m.def(
        "mc_failure",
        [](const std::string& kind, const std::map<std::string, double>& rates,
           std::uint64_t trials, std::uint64_t seed, unsigned threads) {
            const auto c = steane::build_exrec(steane::parse_kind(kind));
            std::vector<double> v;
            for (const auto& name : steane::location_names()) {
                const auto it = rates.find(name);
                v.push_back(it == rates.end() ? 0.0 : it->second);
            }
            const auto e = steane::mc_failure(c, FailureVector(steane::location_names(), v), trials,
                                              seed, threads);
            py::dict d;
            d["trials"] = e.trials;
            d["failures"] = e.failures;
            d["p_hat"] = e.p_hat;
            d["stderr"] = e.stderr_;
            return d;
        },
        py::arg("kind"), py::arg("rates"), py::arg("trials"), py::arg("seed"), py::arg("threads") = 1);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        "Run the command-line tool in-process; returns (exit code, stdout, stderr).");
}
