#include "supergeo/projective.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace supergeo {

ChristoffelField shift_connection(const ChristoffelField& gamma, const OneForm& alpha) {
    if (!gamma.coords().same_as(alpha.coords()))
        throw DomainError("connection and one-form live on different systems");
    alpha.require_even();
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    ChristoffelField out(gamma.coords_ptr());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                SuperExpr e = gamma.entry(i, j, k);
                if (i == k)
                    e = e + alpha.component(j);
                if (i == j) {
                    double sign = (cs.parity_bit(j) && cs.parity_bit(k)) ? -1.0 : 1.0;
                    e = e + SuperExpr(sign) * alpha.component(k);
                }
                out.set_entry(i, j, k, e);
            }
    return out;
}

DifferenceTensor projective_difference_form(const OneForm& alpha) {
    const CoordinateSystem& cs = alpha.coords();
    const int n = cs.size();
    DifferenceTensor s(alpha.coords_ptr());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                SuperExpr e(0.0);
                if (i == k)
                    e = e - alpha.component(j);
                if (i == j) {
                    double sign = (cs.parity_bit(j) && cs.parity_bit(k)) ? -1.0 : 1.0;
                    e = e - SuperExpr(sign) * alpha.component(k);
                }
                s.set_entry(i, j, k, e);
            }
    return s;
}

RecoveredOneForm recover_oneform(const DifferenceTensor& S, std::span<const SuperPoint> samples,
                                 double tol) {
    const CoordinateSystem& cs = S.coords();
    const int n = cs.size();

    // alpha_m = -S^w_{wm} for any witness w != m; on a line, -S^m_{mm}/2
    std::vector<SuperExpr> comps(n, SuperExpr(0.0));
    for (int m = 0; m < n; ++m) {
        if (n == 1) {
            comps[m] = SuperExpr(-0.5) * S.entry(m, m, m);
        } else {
            int w = (m == 0) ? 1 : 0;
            comps[m] = -S.entry(w, w, m);
        }
    }
    OneForm alpha(S.coords_ptr(), std::move(comps));

    DifferenceTensor rebuilt = projective_difference_form(alpha);
    double worst = 0.0;
    for (const auto& p : samples) {
        EvalCache cache;
        auto got = S.eval_at(p, &cache);
        auto want = rebuilt.eval_at(p, &cache);
        for (std::size_t idx = 0; idx < got.size(); ++idx)
            worst = std::max(worst, (got[idx] - want[idx]).norm_max());
    }

    RecoveredOneForm out;
    out.residual = worst;
    out.projective = worst <= tol;
    if (out.projective)
        out.alpha = std::move(alpha);
    return out;
}

namespace {

struct ReparState {
    GrassmannNumber r;
    GrassmannNumber s;
};

} // namespace

Reparametrization solve_reparametrization(const ChristoffelField& gamma, const OneForm& alpha,
                                          const TangentVector& init, double t_end,
                                          const IntegratorOptions& opt) {
    alpha.require_even();
    require_even_bundle(init);
    const int L = init.base.generators();

    GeodesicField g(gamma);
    DenseTrajectory dense(g.field(), g.pack_state(init.base, init.components), opt, L);
    OneForm alpha_ode = alpha.scaled(-2.0);

    auto contraction = [&](const GrassmannNumber& r) {
        auto state = dense.state_at(r);
        SuperPoint pos = g.unpack_point(state, L);
        auto vel = g.unpack_velocity(state);
        return alpha_ode.contract(vel, pos);
    };
    auto rhs = [&](const ReparState& st) {
        return ReparState{st.s, st.s * st.s * contraction(st.r)};
    };
    auto step_from = [&](const ReparState& st, double h) {
        ReparState k1 = rhs(st);
        ReparState k2 = rhs({st.r + (h / 2) * k1.r, st.s + (h / 2) * k1.s});
        ReparState k3 = rhs({st.r + (h / 2) * k2.r, st.s + (h / 2) * k2.s});
        ReparState k4 = rhs({st.r + h * k3.r, st.s + h * k3.s});
        return ReparState{st.r + (h / 6) * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r),
                          st.s + (h / 6) * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s)};
    };

    Reparametrization out;
    out.r.push_back(GrassmannNumber::zero(L));
    out.s.push_back(GrassmannNumber::scalar(L, 1.0));
    out.times.push_back(0.0);
    if (t_end == 0.0) {
        out.step = opt.step;
        return out;
    }
    long long steps = static_cast<long long>(std::ceil(std::abs(t_end) / opt.step - 1e-12));
    if (steps < 1)
        steps = 1;
    double h = t_end / static_cast<double>(steps);
    out.step = h;
    ReparState st{out.r.back(), out.s.back()};
    for (long long k = 1; k <= steps; ++k) {
        st = step_from(st, h);
        for (const auto& value : {st.r, st.s})
            for (const auto& [mask, c] : value.terms()) {
                (void)mask;
                if (!std::isfinite(c) || std::abs(c) > opt.blowup_bound)
                    throw BlowupError("reparametrization left its numeric domain after t = " +
                                          format_double(out.times.back()),
                                      out.times.back());
            }
        out.times.push_back(k == steps ? t_end : h * static_cast<double>(k));
        out.r.push_back(st.r);
        out.s.push_back(st.s);
    }
    return out;
}

EquivalenceReport same_geodesics_check(const ChristoffelField& gamma_a,
                                       const ChristoffelField& gamma_b,
                                       std::span<const TangentVector> inits, double t_end,
                                       const IntegratorOptions& opt, double tol,
                                       std::span<const SuperPoint> samples) {
    if (!gamma_a.coords().same_as(gamma_b.coords()))
        throw DomainError("connections live on different coordinate systems");
    auto tf_a = is_torsion_free(gamma_a, samples);
    auto tf_b = is_torsion_free(gamma_b, samples);
    if (!tf_a.ok)
        throw DomainError("first connection is not torsion-free (residual " +
                          format_double(tf_a.max_residual) + ")");
    if (!tf_b.ok)
        throw DomainError("second connection is not torsion-free (residual " +
                          format_double(tf_b.max_residual) + ")");

    EquivalenceReport report;
    report.tolerance = tol;

    DifferenceTensor S = difference_tensor(gamma_a, gamma_b);
    RecoveredOneForm rec = recover_oneform(S, samples);
    report.form_residual = rec.residual;
    if (!rec.projective) {
        report.equivalent = false;
        report.reason = "difference tensor is not of projective form (residual " +
                        format_double(rec.residual) + ")";
        return report;
    }
    report.alpha = rec.alpha;

    GeodesicField ga(gamma_a);
    GeodesicField gb(gamma_b);
    const CoordinateSystem& cs = gamma_a.coords();

    report.equivalent = true;
    for (const auto& init : inits) {
        const int L = init.base.generators();
        try {
            Reparametrization rep =
                solve_reparametrization(gamma_a, *rec.alpha, init, t_end, opt);
            Trajectory hat = gb.integrate(init.base, init.components, t_end, opt);
            DenseTrajectory dense_a(ga.field(), ga.pack_state(init.base, init.components), opt,
                                    L);
            double worst = 0.0;
            for (std::size_t k = 0; k < rep.times.size(); ++k) {
                auto state_a = dense_a.state_at(rep.r[k]);
                const auto& state_b = hat.states.at(k);
                for (int i = 0; i < cs.size(); ++i) {
                    GrassmannNumber diff = state_a[ga.phase_index_of_coordinate(i)] -
                                           state_b[gb.phase_index_of_coordinate(i)];
                    worst = std::max(worst, diff.norm_max());
                }
            }
            report.reparams.push_back(std::move(rep));
            report.init_residuals.push_back(worst);
            report.init_errors.emplace_back();
            if (worst > tol) {
                report.equivalent = false;
                if (report.reason.empty())
                    report.reason = "geodesic coincidence residual " + format_double(worst) +
                                    " above tolerance " + format_double(tol);
            }
        } catch (const BlowupError& e) {
            report.reparams.emplace_back();
            report.init_residuals.push_back(std::numeric_limits<double>::infinity());
            report.init_errors.emplace_back(e.what());
            report.equivalent = false;
            if (report.reason.empty())
                report.reason = std::string("integration failed: ") + e.what();
        }
    }
    return report;
}

std::string EquivalenceReport::render() const {
    std::ostringstream os;
    os << "projective-equivalence check\n";
    os << "  tolerance: " << format_double(tolerance) << "\n";
    os << "  projective-form residual: " << format_double(form_residual) << "\n";
    if (alpha) {
        const CoordinateSystem& cs = alpha->coords();
        for (int i = 0; i < cs.size(); ++i)
            os << "  alpha(" << cs.name(i) << ") = " << print_expr(alpha->component(i)) << "\n";
    }
    for (std::size_t k = 0; k < init_residuals.size(); ++k) {
        os << "  init " << (k + 1) << ": ";
        if (!init_errors[k].empty())
            os << "error: " << init_errors[k] << "\n";
        else
            os << "max residual = " << format_double(init_residuals[k]) << "\n";
    }
    if (equivalent)
        os << "verdict: EQUIVALENT\n";
    else
        os << "verdict: NOT-EQUIVALENT " << (reason.empty() ? "(unspecified)" : reason) << "\n";
    return os.str();
}

} // namespace supergeo
