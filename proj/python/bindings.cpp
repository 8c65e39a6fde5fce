#include "foldfinder/cli.hpp"
#include "foldfinder/cw.hpp"
#include "foldfinder/error.hpp"
#include "foldfinder/fold.hpp"
#include "foldfinder/nehari.hpp"
#include "foldfinder/spectrum.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace foldfinder;

namespace {

Field as_field(const Problem& p, const Eigen::VectorXd& values) {
    if (values.size() != p.components() * p.grid().nodes()) {
        throw InvalidArgument("state must have components * nodes entries");
    }
    return Field(p.components(), values);
}

py::dict report_dict(const SolveReport& r) {
    py::dict d;
    d["state"] = r.state.values();
    d["lambda"] = r.lambda;
    d["energy"] = r.energy;
    d["delta"] = r.delta;
    d["residual"] = r.residual_norm;
    d["iterations"] = r.iterations;
    d["converged"] = r.converged;
    return d;
}

py::dict fold_dict(const FoldPoint& f) {
    py::dict d;
    d["u"] = f.u.values();
    d["v"] = f.v.values();
    d["lambda"] = f.lambda;
    d["delta"] = f.delta;
    d["residual_f"] = f.residual_f;
    d["residual_hv"] = f.residual_hv;
    d["newton_iterations"] = f.newton_iterations;
    d["converged"] = f.converged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Fold-point solver for concave-convex Dirichlet systems";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidArgument>(m, "InvalidArgument", error.ptr());
    py::register_exception<DomainError>(m, "DomainError", error.ptr());
    py::register_exception<ConvergenceError>(m, "ConvergenceError", error.ptr());
    py::register_exception<NoFold>(m, "NoFold", error.ptr());
    py::register_exception<FiberEmpty>(m, "FiberEmpty", error.ptr());

    py::class_<Grid>(m, "Grid")
        .def_property_readonly("nodes", &Grid::nodes)
        .def_property_readonly("dimension", &Grid::dimension)
        .def_property_readonly("weights", [](const Grid& g) { return g.weights; })
        .def("__repr__", [](const Grid& g) { return "Grid('" + describe(g) + "')"; });
    m.def("interval", &make_interval, py::arg("n"), py::arg("length") = 1.0);
    m.def("rectangle", &make_rectangle, py::arg("nx"), py::arg("ny"), py::arg("lx") = 1.0, py::arg("ly") = 1.0);
    m.def("principal_laplacian_eigenvalue", py::overload_cast<const Grid&>(&principal_laplacian_eigenvalue));

    py::class_<ModelSpec>(m, "Model")
        .def_property_readonly("name", &ModelSpec::name)
        .def_property_readonly("components", &ModelSpec::components)
        .def_property_readonly("q", &ModelSpec::q)
        .def("g", &ModelSpec::g)
        .def("G", &ModelSpec::primitive);
    m.def("abc_model", &abc_model, py::arg("q") = 1.5, py::arg("gamma") = 4.0);
    m.def("coupled_model", &coupled_model, py::arg("q") = 1.5);
    m.def("sublinear_model", &sublinear_model, py::arg("components") = 1, py::arg("q") = 1.5);
    m.def(
        "terms_model",
        [](const std::string& terms, int components, double q) {
            return ModelSpec("terms", components, q, parse_terms(terms, components));
        },
        py::arg("terms"), py::arg("components") = 1, py::arg("q") = 1.5);
    m.def("validate_hypotheses", [](const ModelSpec& s) {
        const HypothesisReport r = validate_hypotheses(s);
        py::dict d;
        d["solvable"] = r.solvable();
        d["all_pass"] = r.all_pass();
        d["theta"] = r.theta;
        d["report"] = r.to_string();
        return d;
    });

    py::class_<Problem>(m, "Problem")
        .def(py::init<Grid, ModelSpec>(), py::arg("grid"), py::arg("model"))
        .def_property_readonly("grid", &Problem::grid)
        .def_property_readonly("model", &Problem::model)
        .def("phi", [](const Problem& p, const Eigen::VectorXd& u, double l) { return phi(p, as_field(p, u), l); })
        .def("rayleigh", [](const Problem& p, const Eigen::VectorXd& u) { return rayleigh_nl(p, as_field(p, u)); })
        .def("stability_index",
             [](const Problem& p, const Eigen::VectorXd& u) { return stability_index(p, as_field(p, u)).delta; })
        .def("cw_value",
             [](const Problem& p, const Eigen::VectorXd& u) { return cw_value(p, as_field(p, u)).lambda_cw; })
        .def("upper_bound", [](const Problem& p) { return upper_bound_lambda(p.model(), p.grid()); })
        .def("solve_sublinear",
             [](const Problem& p, double lambda) { return solve_sublinear(p, lambda).values(); })
        .def(
            "solve",
            [](const Problem& p, double lambda, double tol) {
                NehariOptions o;
                o.tol = tol;
                return report_dict(solve_nehari(p, lambda, o));
            },
            py::arg("lambda_"), py::arg("tol") = 1e-10)
        .def("fold_direct",
             [](const Problem& p) {
                 const CwAscentResult a = cw_ascend(p, solve_sublinear(p, 1.0));
                 if (a.diverged) throw NoFold("ascent diverged: no fold");
                 return fold_dict(moore_spence_from_state(p, a.best.state));
             })
        .def(
            "fold_continuation",
            [](const Problem& p, double lambda_start, double step, double tol) {
                return fold_dict(detect_fold(p, continue_branch(p, lambda_start, step, 400), tol).fold);
            },
            py::arg("lambda_start") = 1.0, py::arg("step") = 0.5, py::arg("tol") = 1e-8)
        .def(
            "continue_branch",
            [](const Problem& p, double lambda_start, double step, int max_records) {
                const Branch b = continue_branch(p, lambda_start, step, max_records);
                py::list out;
                for (const auto& r : b.records) {
                    py::dict d;
                    d["lambda"] = r.lambda;
                    d["sup_norm"] = r.sup_norm;
                    d["energy"] = r.energy;
                    d["delta"] = r.delta;
                    out.append(d);
                }
                return out;
            },
            py::arg("lambda_start") = 1.0, py::arg("step") = 0.5, py::arg("max_records") = 400);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::vector<const char*> argv{"foldfinder"};
            for (const auto& a : args) argv.push_back(a.c_str());
            std::ostringstream out, err;
            const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"));
}
