#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numbers>
#include <sstream>

#include "excurse/covariance.hpp"
#include "excurse/deform.hpp"
#include "excurse/error.hpp"
#include "excurse/excursion.hpp"
#include "excurse/field_sim.hpp"
#include "excurse/identify.hpp"
#include "excurse/mean_table.hpp"
#include "excurse/spiral_est.hpp"
#include "excurse/version.hpp"

namespace py = pybind11;
using namespace excurse;

namespace {

py::array_t<double> to_array(const GridField& f) {
    py::array_t<double> a({f.spec.rows, f.spec.cols});
    auto m = a.mutable_unchecked<2>();
    for (int i = 0; i < f.spec.rows; ++i)
        for (int j = 0; j < f.spec.cols; ++j) m(i, j) = f.at(i, j);
    return a;
}

GridField from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a, double spacing) {
    if (a.ndim() != 2) throw DomainError("expected a 2-D array");
    GridField f;
    f.spec.rows = static_cast<int>(a.shape(0));
    f.spec.cols = static_cast<int>(a.shape(1));
    f.spec.spacing = spacing;
    f.values.assign(a.data(), a.data() + a.size());
    f.validate();
    return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Excursion sets of deformed Gaussian random fields";
    m.attr("__version__") = kVersion;

    static py::exception<Error> error(m, "Error");
    static py::exception<DomainError> domain_error(m, "DomainError", error.ptr());
    static py::exception<NumericError> numeric_error(m, "NumericError", error.ptr());
    static py::exception<IoError> io_error(m, "IoError", error.ptr());
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const DomainError& e) {
            py::set_error(domain_error, e.what());
        } catch (const NumericError& e) {
            py::set_error(numeric_error, e.what());
        } catch (const IoError& e) {
            py::set_error(io_error, e.what());
        } catch (const Error& e) {
            py::set_error(error, e.what());
        }
    });

    py::class_<CovarianceModel>(m, "CovarianceModel")
        .def_static("gaussian", &CovarianceModel::gaussian)
        .def_static("powered_exponential", &CovarianceModel::powered_exponential, py::arg("power"))
        .def_static("matern", &CovarianceModel::matern, py::arg("smoothness"))
        .def_property_readonly("name", &CovarianceModel::name)
        .def_property_readonly("scale", &CovarianceModel::scale)
        .def("radial", &CovarianceModel::radial, py::arg("r"))
        .def("__call__", [](const CovarianceModel& c, double x, double y) { return c.evaluate(Vec2(x, y)); });

    m.def("rho", &rho, py::arg("i"), py::arg("u"));
    m.def("expected_chi_2d", &expected_chi_2d, py::arg("area"), py::arg("perimeter"), py::arg("u"));
    m.def("expected_chi_1d", &expected_chi_1d, py::arg("length"), py::arg("u"));
    m.def("expected_phi", &expected_phi, py::arg("dim"), py::arg("measure"), py::arg("u"));

    m.def(
        "simulate",
        [](double x0, double y0, double spacing, int rows, int cols, std::uint64_t seed, const CovarianceModel& model) {
            GridSpec spec{Vec2(x0, y0), spacing, rows, cols};
            return to_array(simulate(spec, model, seed));
        },
        py::arg("x0"), py::arg("y0"), py::arg("spacing"), py::arg("rows"), py::arg("cols"), py::arg("seed"),
        py::arg("model") = CovarianceModel::gaussian());

    m.def(
        "euler_characteristic",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values, double u) {
            const GridField f = from_array(values, 1.0);
            return euler_characteristic_2d(excursion_mask(f, u)).chi;
        },
        py::arg("values"), py::arg("u"));
    m.def(
        "modified_euler",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& values, double u) {
            const GridField f = from_array(values, 1.0);
            return modified_euler_2d(excursion_mask(f, u));
        },
        py::arg("values"), py::arg("u"));

    py::class_<Deformation>(m, "Deformation")
        .def_static("identity", &Deformation::identity)
        .def_static("linear", [](const Mat2& a) { return Deformation::linear(a); }, py::arg("matrix"))
        .def_static("rotation", &Deformation::rotation, py::arg("angle"), py::arg("factor") = 1.0)
        .def_static(
            "tensorial",
            [](const std::string& t1, const std::string& t2) {
                return Deformation::tensorial(ScalarFunction::from_expression(t1), ScalarFunction::from_expression(t2));
            },
            py::arg("theta1"), py::arg("theta2"))
        .def_static(
            "spiral",
            [](const std::string& f, const std::string& g) {
                return Deformation::spiral({ScalarFunction::from_expression(f), ScalarFunction::from_expression(g)});
            },
            py::arg("f"), py::arg("g") = "0")
        .def_property_readonly("description", &Deformation::description)
        .def("__call__", [](const Deformation& d, const Vec2& x) { return d.eval(x); })
        .def("jacobian", &Deformation::jacobian)
        .def("inverse", &Deformation::inverse);

    m.def(
        "image_area",
        [](const Deformation& d, double s, double t) { return image_area(d, Rect::make(s, t)); },
        py::arg("theta"), py::arg("s"), py::arg("t"));
    m.def(
        "is_spiral", [](const Deformation& d) { return is_spiral(d).is_spiral; }, py::arg("theta"));

    py::class_<JacobianSummary>(m, "JacobianSummary")
        .def_readonly("a", &JacobianSummary::a)
        .def_readonly("b", &JacobianSummary::b)
        .def_readonly("c", &JacobianSummary::c);
    m.def("jacobian_summary", &jacobian_summary, py::arg("theta"), py::arg("x"));

    m.def(
        "dilatation",
        [](double a, double b, double c) {
            const auto d = dilatation(a, b, c);
            return py::make_tuple(d.values[0], d.values[1], d.modulus);
        },
        py::arg("a"), py::arg("b"), py::arg("c"));

    m.def(
        "analytic_table_csv",
        [](const Deformation& theta, const std::vector<std::tuple<std::string, double, double>>& domains,
           const std::vector<double>& levels) {
            std::vector<TableDomain> d;
            for (const auto& [k, s, t] : domains) d.push_back({domain_kind_from_string(k), s, t});
            std::ostringstream os;
            build_analytic_table(theta, d, levels).write_csv(os, "python");
            return os.str();
        },
        py::arg("theta"), py::arg("domains"), py::arg("levels"));
    m.def(
        "identify_linear",
        [](const std::string& csv, double s, double t, double u) {
            const auto id = identify_linear(MeanECTable::parse_csv(csv), s, t, u);
            return py::make_tuple(id.abc.a, id.abc.b, id.abc.c);
        },
        py::arg("table_csv"), py::arg("s"), py::arg("t"), py::arg("u"));

    m.def(
        "chi_isotropy",
        [](const Deformation& theta, double s, double t, int angles, double u) {
            std::vector<double> a;
            for (int k = 0; k < angles; ++k) a.push_back(2.0 * std::numbers::pi * k / angles);
            const auto r = chi_isotropy_test(theta, Rect::make(s, t, 0.0, Vec2(0.5, 0.5)), a, u);
            return py::make_tuple(r.pass, r.max_deviation, r.worst_angle);
        },
        py::arg("theta"), py::arg("s"), py::arg("t"), py::arg("angles") = 16, py::arg("u") = 1.0);

    m.def("detjac_constant", &detjac_constant, py::arg("u"));
}
