// pybind11 surface for the core operations: Grassmann arithmetic, the
// expression language, connections, flows, metrics, and the projective
// equivalence pipeline.

#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "supergeo/model.hpp"

namespace py = pybind11;
using namespace supergeo;

namespace {

std::vector<GrassmannNumber> to_values(const py::object& obj, int generators) {
    std::vector<GrassmannNumber> out;
    for (const auto& item : obj) {
        if (py::isinstance<GrassmannNumber>(item))
            out.push_back(item.cast<GrassmannNumber>());
        else
            out.push_back(GrassmannNumber::scalar(generators, item.cast<double>()));
    }
    return out;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "computational supergeometry: Grassmann arithmetic, superdomain "
              "connections, geodesic flows, metrics, projective equivalence";

    py::register_exception<ParseError>(m, "ModelParseError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<BlowupError>(m, "BlowupError", PyExc_RuntimeError);

    py::enum_<Parity>(m, "Parity")
        .value("EVEN", Parity::Even)
        .value("ODD", Parity::Odd)
        .value("INHOMOGENEOUS", Parity::Inhomogeneous);

    py::class_<GrassmannNumber>(m, "GrassmannNumber")
        .def_static("zero", &GrassmannNumber::zero, py::arg("generators"))
        .def_static("scalar", &GrassmannNumber::scalar, py::arg("generators"), py::arg("value"))
        .def_static("generator", &GrassmannNumber::generator, py::arg("generators"),
                    py::arg("k"))
        .def_static("monomial", &GrassmannNumber::monomial, py::arg("generators"),
                    py::arg("mask"), py::arg("value"))
        .def_static("parse", &parse_grassmann, py::arg("text"), py::arg("generators"))
        .def_property_readonly("generators", &GrassmannNumber::generators)
        .def("coefficient", &GrassmannNumber::coefficient, py::arg("mask"))
        .def("body", &GrassmannNumber::body)
        .def("soul", &GrassmannNumber::soul)
        .def("parity", &GrassmannNumber::parity)
        .def("conjugate", &GrassmannNumber::conjugate)
        .def("inverse", &GrassmannNumber::inverse)
        .def("norm_max", &GrassmannNumber::norm_max)
        .def("is_zero", &GrassmannNumber::is_zero)
        .def("terms", &GrassmannNumber::terms)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(-py::self)
        .def(py::self == py::self)
        .def("__rmul__", [](const GrassmannNumber& a, double c) { return c * a; })
        .def("__mul__", [](const GrassmannNumber& a, double c) { return a * c; })
        .def("__repr__", [](const GrassmannNumber& a) { return to_string(a); });

    py::class_<CoordinateSystem>(m, "CoordinateSystem")
        .def(py::init<std::vector<std::string>, std::vector<std::string>>(), py::arg("even"),
             py::arg("odd"))
        .def_property_readonly("names", &CoordinateSystem::names)
        .def("size", &CoordinateSystem::size)
        .def("even_count", &CoordinateSystem::even_count)
        .def("odd_count", &CoordinateSystem::odd_count)
        .def("parity", &CoordinateSystem::parity, py::arg("i"))
        .def("__repr__", [](const CoordinateSystem& cs) {
            std::string s = "CoordinateSystem(";
            for (int i = 0; i < cs.size(); ++i)
                s += (i ? ", " : "") + cs.name(i);
            return s + ")";
        });

    py::class_<SuperExpr>(m, "SuperExpr")
        .def(py::init<double>())
        .def_static("coordinate", &SuperExpr::coordinate, py::arg("name"), py::arg("parity"))
        .def("parity", [](const SuperExpr& e) { return infer_parity(e); })
        .def("diff",
             [](const SuperExpr& e, const CoordinateSystem& cs, const std::string& name) {
                 return differentiate(e, cs, name);
             })
        .def("substitute", &substitute)
        .def(py::self + py::self)
        .def(py::self - py::self)
        .def(py::self * py::self)
        .def(py::self / py::self)
        .def(-py::self)
        .def("__pow__", [](const SuperExpr& e, int n) { return pow_expr(e, n); })
        .def("__repr__", [](const SuperExpr& e) { return print_expr(e); });

    m.def("parse_expr",
          [](const std::string& src, const CoordinateSystem& cs) { return parse_expr(src, cs); },
          py::arg("source"), py::arg("coords"));

    py::class_<SuperPoint>(m, "SuperPoint")
        .def(py::init([](const CoordinateSystem& cs, const py::object& values, int generators) {
                 return SuperPoint(std::make_shared<CoordinateSystem>(cs),
                                   to_values(values, generators));
             }),
             py::arg("coords"), py::arg("values"), py::arg("generators"))
        .def_property_readonly("values", &SuperPoint::values)
        .def_property_readonly("generators", &SuperPoint::generators);

    m.def("evaluate",
          [](const SuperExpr& e, const SuperPoint& p) { return evaluate_at(e, p); },
          py::arg("expr"), py::arg("point"));

    m.def("expand_coefficients",
          [](const SuperExpr& e, const CoordinateSystem& cs,
             const std::vector<std::string>& odd) {
              std::map<std::uint32_t, SuperExpr> parts = expand_coefficients(e, cs, odd);
              py::dict out;
              for (auto& [mask, part] : parts)
                  out[py::int_(mask)] = part;
              return out;
          });

    py::class_<ExprTensor3>(m, "Tensor3")
        .def(py::init([](const CoordinateSystem& cs) {
            return ExprTensor3(std::make_shared<CoordinateSystem>(cs));
        }))
        .def("entry", &ExprTensor3::entry, py::arg("i"), py::arg("j"), py::arg("k"))
        .def("set_entry", &ExprTensor3::set_entry);

    py::class_<ChristoffelField, ExprTensor3>(m, "ChristoffelField")
        .def(py::init([](const CoordinateSystem& cs) {
            return ChristoffelField(std::make_shared<CoordinateSystem>(cs));
        }))
        .def("validate_parities", &ChristoffelField::validate_parities);

    m.def("torsion_residual",
          [](const ChristoffelField& gamma, const std::vector<SuperPoint>& samples) {
              auto r = is_torsion_free(gamma, samples);
              return py::make_tuple(r.ok, r.max_residual);
          });

    py::class_<OneForm>(m, "OneForm")
        .def(py::init([](const CoordinateSystem& cs, std::vector<SuperExpr> comps) {
            return OneForm(std::make_shared<CoordinateSystem>(cs), std::move(comps));
        }))
        .def("component", &OneForm::component)
        .def("scaled", &OneForm::scaled);

    m.def("shift_connection", &shift_connection);
    m.def("difference_tensor", &difference_tensor);
    m.def("recover_oneform",
          [](const DifferenceTensor& S, const std::vector<SuperPoint>& samples, double tol) {
              RecoveredOneForm rec = recover_oneform(S, samples, tol);
              return py::make_tuple(rec.projective,
                                    rec.alpha ? py::cast(*rec.alpha) : py::none(),
                                    rec.residual);
          },
          py::arg("difference"), py::arg("samples"), py::arg("tol") = 1e-9);

    py::class_<Trajectory>(m, "Trajectory")
        .def_readonly("times", &Trajectory::times)
        .def_readonly("states", &Trajectory::states)
        .def_readonly("step", &Trajectory::step);

    py::class_<GeodesicField>(m, "GeodesicField")
        .def(py::init<const ChristoffelField&>())
        .def("integrate",
             [](const GeodesicField& g, const SuperPoint& x, const py::object& v, double t_end,
                double step, double blowup) {
                 return g.integrate(x, to_values(v, x.generators()), t_end,
                                    IntegratorOptions{step, blowup});
             },
             py::arg("x"), py::arg("v"), py::arg("t_end"), py::arg("step") = 1e-3,
             py::arg("blowup") = 1e12)
        .def("point_of_state",
             [](const GeodesicField& g, const std::vector<GrassmannNumber>& state) {
                 std::vector<GrassmannNumber> out;
                 for (int i = 0; i < g.base_coords().size(); ++i)
                     out.push_back(state.at(g.phase_index_of_coordinate(i)));
                 return out;
             })
        .def("velocity_of_state",
             [](const GeodesicField& g, const std::vector<GrassmannNumber>& state) {
                 return g.unpack_velocity(state);
             });

    m.def("exp_map",
          [](const GeodesicField& g, const SuperPoint& x, const py::object& v, double step) {
              TangentVector t{x, to_values(v, x.generators())};
              SuperPoint end = exp_map(g, t, IntegratorOptions{step, 1e12});
              return end.values();
          },
          py::arg("field"), py::arg("x"), py::arg("v"), py::arg("step") = 1e-3);

    py::class_<SuperMetric::Builder>(m, "MetricBuilder")
        .def(py::init([](const CoordinateSystem& cs) {
            return SuperMetric::Builder(std::make_shared<CoordinateSystem>(cs));
        }))
        .def("set_entry", &SuperMetric::Builder::set_entry, py::return_value_policy::reference)
        .def("build", &SuperMetric::Builder::build);

    py::class_<SuperMetric>(m, "SuperMetric")
        .def("entry", &SuperMetric::entry)
        .def("inverse_entry", &SuperMetric::inverse_entry)
        .def("pair",
             [](const SuperMetric& g, const SuperPoint& p, const py::object& v,
                const py::object& w) {
                 return g.pair(p, to_values(v, p.generators()), to_values(w, p.generators()));
             })
        .def("flat",
             [](const SuperMetric& g, const SuperPoint& p, const py::object& v) {
                 return g.flat(p, to_values(v, p.generators()));
             })
        .def("sharp",
             [](const SuperMetric& g, const SuperPoint& p, const py::object& alpha) {
                 return g.sharp(p, to_values(alpha, p.generators()));
             })
        .def("energy",
             [](const SuperMetric& g, const SuperPoint& p, const py::object& v) {
                 return g.energy(p, to_values(v, p.generators()));
             })
        .def("inverse_residual", [](const SuperMetric& g, const std::vector<SuperPoint>& pts) {
            return g.inverse_residual(pts);
        });

    m.def("levi_civita", &levi_civita);
    m.def("compatibility_check",
          [](const SuperMetric& g, const ChristoffelField& gamma,
             const std::vector<SuperPoint>& samples) {
              return compatibility_check(g, gamma, samples);
          });

    py::class_<CotangentPoint>(m, "CotangentPoint")
        .def(py::init([](const SuperPoint& x, const py::object& momenta) {
                 return CotangentPoint{x, to_values(momenta, x.generators())};
             }),
             py::arg("x"), py::arg("momenta"))
        .def_readonly("x", &CotangentPoint::x)
        .def_readonly("momenta", &CotangentPoint::momenta);

    m.def("intertwine_check",
          [](const SuperMetric& g, const std::vector<CotangentPoint>& samples) {
              return intertwine_check(g, samples);
          });

    py::class_<Reparametrization>(m, "Reparametrization")
        .def_readonly("times", &Reparametrization::times)
        .def_readonly("r", &Reparametrization::r)
        .def_readonly("s", &Reparametrization::s);

    m.def("solve_reparametrization",
          [](const ChristoffelField& gamma, const OneForm& alpha, const SuperPoint& x,
             const py::object& v, double t_end, double step) {
              TangentVector init{x, to_values(v, x.generators())};
              return solve_reparametrization(gamma, alpha, init, t_end,
                                             IntegratorOptions{step, 1e12});
          },
          py::arg("gamma"), py::arg("alpha"), py::arg("x"), py::arg("v"), py::arg("t_end"),
          py::arg("step") = 1e-3);

    py::class_<EquivalenceReport>(m, "EquivalenceReport")
        .def_readonly("equivalent", &EquivalenceReport::equivalent)
        .def_readonly("reason", &EquivalenceReport::reason)
        .def_readonly("form_residual", &EquivalenceReport::form_residual)
        .def_readonly("init_residuals", &EquivalenceReport::init_residuals)
        .def("render", &EquivalenceReport::render);

    m.def("same_geodesics_check",
          [](const ChristoffelField& a, const ChristoffelField& b,
             const std::vector<std::pair<SuperPoint, py::object>>& inits, double t_end,
             double step, double tol, const std::vector<SuperPoint>& samples) {
              std::vector<TangentVector> tv;
              for (const auto& [x, v] : inits)
                  tv.push_back(TangentVector{x, to_values(v, x.generators())});
              return same_geodesics_check(a, b, tv, t_end, IntegratorOptions{step, 1e12}, tol,
                                          samples);
          },
          py::arg("gamma_a"), py::arg("gamma_b"), py::arg("inits"), py::arg("t_end") = 1.0,
          py::arg("step") = 1e-3, py::arg("tol") = 1e-6, py::arg("samples"));

    py::class_<ModelSettings>(m, "ModelSettings")
        .def_readonly("h", &ModelSettings::h)
        .def_readonly("t_end", &ModelSettings::t_end)
        .def_readonly("tolerance", &ModelSettings::tolerance)
        .def_readonly("generators", &ModelSettings::generators)
        .def_readonly("samples", &ModelSettings::samples)
        .def_readonly("seed", &ModelSettings::seed);

    py::class_<Model>(m, "Model")
        .def_property_readonly("coords", [](const Model& m_) { return m_.coords(); })
        .def_property_readonly("settings", &Model::settings)
        .def("has_metric", &Model::has_metric)
        .def("metric", &Model::metric, py::return_value_policy::reference_internal)
        .def("connection", &Model::connection, py::return_value_policy::reference_internal)
        .def("has_oneform", &Model::has_oneform)
        .def("oneform", &Model::oneform, py::return_value_policy::reference_internal);

    m.def("load_model", &load_model_file, py::arg("path"));
    m.def("sample_points", &model_sample_points, py::arg("model"), py::arg("count"),
          py::arg("seed"));
    m.def("sample_cotangent_points", &model_sample_cotangent, py::arg("model"),
          py::arg("count"), py::arg("seed"));
}
