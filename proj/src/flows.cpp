#include "supergeo/flows.hpp"

#include <cmath>
#include <ostream>

namespace supergeo {

std::vector<GrassmannNumber> ExprVectorField::eval(std::span<const GrassmannNumber> state,
                                                   int generators) const {
    if (state.size() != components.size())
        throw DomainError("field state size mismatch");
    EvalEnv env{phase.get(), state, generators};
    EvalCache cache;
    std::vector<GrassmannNumber> out;
    out.reserve(components.size());
    for (const auto& c : components)
        out.push_back(evaluate(c, env, &cache));
    return out;
}

namespace {

void check_bounds(const std::vector<GrassmannNumber>& state, double bound, double last_time) {
    for (const auto& v : state)
        for (const auto& [mask, c] : v.terms()) {
            (void)mask;
            if (!std::isfinite(c) || std::abs(c) > bound)
                throw BlowupError("flow left its numeric domain (coefficient bound " +
                                      format_double(bound) + " exceeded after t = " +
                                      format_double(last_time) + ")",
                                  last_time);
        }
}

std::vector<GrassmannNumber> axpy(const std::vector<GrassmannNumber>& base, double scale,
                                  const std::vector<GrassmannNumber>& dir) {
    std::vector<GrassmannNumber> out;
    out.reserve(base.size());
    for (std::size_t i = 0; i < base.size(); ++i)
        out.push_back(base[i] + scale * dir[i]);
    return out;
}

std::vector<GrassmannNumber> rk4_step_real(const ExprVectorField& field,
                                           const std::vector<GrassmannNumber>& state, double h,
                                           int generators) {
    auto k1 = field.eval(state, generators);
    auto k2 = field.eval(axpy(state, h / 2, k1), generators);
    auto k3 = field.eval(axpy(state, h / 2, k2), generators);
    auto k4 = field.eval(axpy(state, h, k3), generators);
    std::vector<GrassmannNumber> out;
    out.reserve(state.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        out.push_back(state[i] +
                      (h / 6) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    return out;
}

// one RK4 step of ds/dsigma = scale * f(s) over sigma in [0,1]; exact when
// scale is nilpotent of order <= 4
std::vector<GrassmannNumber> rk4_step_scaled(const ExprVectorField& field,
                                             const std::vector<GrassmannNumber>& state,
                                             const GrassmannNumber& scale, int generators) {
    auto mulscale = [&](std::vector<GrassmannNumber> v) {
        for (auto& x : v)
            x = scale * x;
        return v;
    };
    auto gaxpy = [&](const std::vector<GrassmannNumber>& base, double w,
                     const std::vector<GrassmannNumber>& dir) {
        std::vector<GrassmannNumber> out;
        out.reserve(base.size());
        for (std::size_t i = 0; i < base.size(); ++i)
            out.push_back(base[i] + w * dir[i]);
        return out;
    };
    auto k1 = mulscale(field.eval(state, generators));
    auto k2 = mulscale(field.eval(gaxpy(state, 0.5, k1), generators));
    auto k3 = mulscale(field.eval(gaxpy(state, 0.5, k2), generators));
    auto k4 = mulscale(field.eval(gaxpy(state, 1.0, k3), generators));
    std::vector<GrassmannNumber> out;
    out.reserve(state.size());
    for (std::size_t i = 0; i < state.size(); ++i)
        out.push_back(state[i] + (1.0 / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    return out;
}

} // namespace

Trajectory rk4_integrate(const ExprVectorField& field, std::vector<GrassmannNumber> init,
                         double t_end, const IntegratorOptions& opt, int generators) {
    if (!(opt.step > 0))
        throw DomainError("integrator step must be positive");
    if (!std::isfinite(t_end))
        throw DomainError("t_end must be finite");
    Trajectory traj;
    traj.integrator = "rk4";
    check_bounds(init, opt.blowup_bound, 0.0);
    traj.times.push_back(0.0);
    traj.states.push_back(std::move(init));
    if (t_end == 0.0) {
        traj.step = opt.step;
        return traj;
    }
    long long steps = static_cast<long long>(std::ceil(std::abs(t_end) / opt.step - 1e-12));
    if (steps < 1)
        steps = 1;
    double h = t_end / static_cast<double>(steps);
    traj.step = h;
    for (long long k = 1; k <= steps; ++k) {
        std::vector<GrassmannNumber> next =
            rk4_step_real(field, traj.states.back(), h, generators);
        double t = (k == steps) ? t_end : h * static_cast<double>(k);
        check_bounds(next, opt.blowup_bound, traj.times.back());
        traj.times.push_back(t);
        traj.states.push_back(std::move(next));
    }
    return traj;
}

std::vector<GrassmannNumber> rk4_flow_to(const ExprVectorField& field,
                                         std::vector<GrassmannNumber> init, double t_end,
                                         const IntegratorOptions& opt, int generators) {
    return rk4_integrate(field, std::move(init), t_end, opt, generators).states.back();
}

std::vector<GrassmannNumber> flow_state_at(const ExprVectorField& field,
                                           std::vector<GrassmannNumber> init,
                                           const GrassmannNumber& t_even,
                                           const IntegratorOptions& opt) {
    if (t_even.parity() != Parity::Even)
        throw DomainError("flow time must be even");
    const int generators = t_even.generators();
    double body = t_even.body();
    GrassmannNumber nil = t_even.soul();
    std::vector<GrassmannNumber> state =
        (body == 0.0) ? std::move(init)
                      : rk4_flow_to(field, std::move(init), body, opt, generators);
    if (!nil.is_zero())
        state = rk4_step_scaled(field, state, nil, generators);
    check_bounds(state, opt.blowup_bound, body);
    return state;
}

// ---------------------------------------------------------------------------
// geodesic field

namespace {

CoordinateSystemPtr tangent_phase_system(const CoordinateSystem& base) {
    std::vector<std::string> evens, odds;
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Even)
            evens.push_back(base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Even)
            evens.push_back("d" + base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Odd)
            odds.push_back(base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Odd)
            odds.push_back("d" + base.name(i));
    return std::make_shared<CoordinateSystem>(std::move(evens), std::move(odds));
}

} // namespace

GeodesicField::GeodesicField(const ChristoffelField& gamma)
    : gamma_(gamma), base_(gamma.coords_ptr()) {
    const CoordinateSystem& cs = *base_;
    const int n = cs.size();
    field_.phase = tangent_phase_system(cs);
    field_.components.assign(static_cast<std::size_t>(field_.phase->size()), SuperExpr(0.0));

    for (int i = 0; i < n; ++i) {
        SuperExpr vi = SuperExpr::coordinate("d" + cs.name(i), cs.parity(i));
        field_.components[phase_index_of_coordinate(i)] = vi;

        SuperExpr acc(0.0);
        for (int j = 0; j < n; ++j) {
            SuperExpr vj = SuperExpr::coordinate("d" + cs.name(j), cs.parity(j));
            for (int k = 0; k < n; ++k) {
                const SuperExpr& g = gamma_.entry(i, j, k);
                if (g.is_zero_constant())
                    continue;
                SuperExpr vk = SuperExpr::coordinate("d" + cs.name(k), cs.parity(k));
                acc = acc + vk * vj * g;
            }
        }
        field_.components[phase_index_of_velocity(i)] = -acc;
    }
}

int GeodesicField::phase_index_of_coordinate(int i) const {
    const int p = base_->even_count();
    return (i < p) ? i : p + i; // evens: [0,p) ; odds: [2p, 2p+q)
}

int GeodesicField::phase_index_of_velocity(int i) const {
    const int p = base_->even_count();
    const int q = base_->odd_count();
    return (i < p) ? p + i : 2 * p + q + (i - p);
}

std::vector<GrassmannNumber> GeodesicField::pack_state(const SuperPoint& x,
                                                       std::span<const GrassmannNumber> v) const {
    if (!x.coords().same_as(*base_))
        throw DomainError("point lives in a different coordinate system");
    if (static_cast<int>(v.size()) != base_->size())
        throw DomainError("velocity component count mismatch");
    std::vector<GrassmannNumber> state(static_cast<std::size_t>(2 * base_->size()),
                                       GrassmannNumber::zero(x.generators()));
    for (int i = 0; i < base_->size(); ++i) {
        state[phase_index_of_coordinate(i)] = x.value(i);
        state[phase_index_of_velocity(i)] = v[i];
    }
    return state;
}

SuperPoint GeodesicField::unpack_point(std::span<const GrassmannNumber> state,
                                       int generators) const {
    (void)generators;
    std::vector<GrassmannNumber> vals;
    vals.reserve(base_->size());
    for (int i = 0; i < base_->size(); ++i)
        vals.push_back(state[phase_index_of_coordinate(i)]);
    return SuperPoint(base_, std::move(vals));
}

std::vector<GrassmannNumber>
GeodesicField::unpack_velocity(std::span<const GrassmannNumber> state) const {
    std::vector<GrassmannNumber> vals;
    vals.reserve(base_->size());
    for (int i = 0; i < base_->size(); ++i)
        vals.push_back(state[phase_index_of_velocity(i)]);
    return vals;
}

std::pair<std::vector<GrassmannNumber>, std::vector<GrassmannNumber>>
GeodesicField::eval(const SuperPoint& x, std::span<const GrassmannNumber> v) const {
    TangentVector t{x, std::vector<GrassmannNumber>(v.begin(), v.end())};
    require_even_bundle(t);
    auto rhs = field_.eval(pack_state(x, v), x.generators());
    std::vector<GrassmannNumber> xdot, vdot;
    for (int i = 0; i < base_->size(); ++i) {
        xdot.push_back(rhs[phase_index_of_coordinate(i)]);
        vdot.push_back(rhs[phase_index_of_velocity(i)]);
    }
    return {std::move(xdot), std::move(vdot)};
}

Trajectory GeodesicField::integrate(const SuperPoint& x, std::span<const GrassmannNumber> v,
                                    double t_end, const IntegratorOptions& opt) const {
    TangentVector t{x, std::vector<GrassmannNumber>(v.begin(), v.end())};
    require_even_bundle(t);
    return rk4_integrate(field_, pack_state(x, v), t_end, opt, x.generators());
}

// ---------------------------------------------------------------------------
// dense trajectory

DenseTrajectory::DenseTrajectory(const ExprVectorField& field, std::vector<GrassmannNumber> init,
                                 const IntegratorOptions& opt, int generators)
    : field_(field), opt_(opt), generators_(generators) {
    forward_.push_back(std::move(init));
    forward_derivs_.emplace_back();
}

const std::vector<GrassmannNumber>& DenseTrajectory::grid_state(long long k) {
    extend_to(k);
    return k >= 0 ? forward_[static_cast<std::size_t>(k)]
                  : backward_[static_cast<std::size_t>(-k - 1)];
}

const std::vector<GrassmannNumber>& DenseTrajectory::grid_deriv(long long k) {
    extend_to(k);
    auto& slot = k >= 0 ? forward_derivs_[static_cast<std::size_t>(k)]
                        : backward_derivs_[static_cast<std::size_t>(-k - 1)];
    if (!slot)
        slot = field_.eval(grid_state(k), generators_);
    return *slot;
}

void DenseTrajectory::extend_to(long long k) {
    if (k >= 0) {
        while (static_cast<long long>(forward_.size()) <= k) {
            double t_last = opt_.step * static_cast<double>(forward_.size() - 1);
            std::vector<GrassmannNumber> next =
                rk4_step_real(field_, forward_.back(), opt_.step, generators_);
            check_bounds(next, opt_.blowup_bound, t_last);
            forward_.push_back(std::move(next));
            forward_derivs_.emplace_back();
        }
    } else {
        while (static_cast<long long>(backward_.size()) < -k) {
            const std::vector<GrassmannNumber>& last =
                backward_.empty() ? forward_.front() : backward_.back();
            double t_last = -opt_.step * static_cast<double>(backward_.size());
            std::vector<GrassmannNumber> next = rk4_step_real(field_, last, -opt_.step, generators_);
            check_bounds(next, opt_.blowup_bound, t_last);
            backward_.push_back(std::move(next));
            backward_derivs_.emplace_back();
        }
    }
}

std::vector<GrassmannNumber> DenseTrajectory::state_at(double t) {
    const double h = opt_.step;
    double kf = std::floor(t / h);
    long long k = static_cast<long long>(kf);
    double theta = (t - kf * h) / h;
    if (theta < 1e-14)
        return grid_state(k);
    if (theta > 1.0 - 1e-14)
        return grid_state(k + 1);
    // grow the grid before borrowing references into it
    extend_to(k);
    extend_to(k + 1);
    const auto& f0 = grid_deriv(k);
    const auto& f1 = grid_deriv(k + 1);
    const auto& s0 = grid_state(k);
    const auto& s1 = grid_state(k + 1);
    double t2 = theta * theta, t3 = t2 * theta;
    double h00 = 2 * t3 - 3 * t2 + 1;
    double h10 = t3 - 2 * t2 + theta;
    double h01 = -2 * t3 + 3 * t2;
    double h11 = t3 - t2;
    std::vector<GrassmannNumber> out;
    out.reserve(s0.size());
    for (std::size_t i = 0; i < s0.size(); ++i)
        out.push_back(h00 * s0[i] + (h10 * h) * f0[i] + h01 * s1[i] + (h11 * h) * f1[i]);
    return out;
}

std::vector<GrassmannNumber> DenseTrajectory::state_at(const GrassmannNumber& t_even) {
    if (t_even.parity() != Parity::Even)
        throw DomainError("flow time must be even");
    std::vector<GrassmannNumber> state = state_at(t_even.body());
    GrassmannNumber nil = t_even.soul();
    if (!nil.is_zero())
        state = rk4_step_scaled(field_, state, nil, generators_);
    return state;
}

// ---------------------------------------------------------------------------
// dilation, exponential map, odd flow

TangentVector dilate(const TangentVector& t, const GrassmannNumber& lambda) {
    if (lambda.parity() != Parity::Even)
        throw DomainError("dilation factor must be even");
    TangentVector out = t;
    for (auto& c : out.components)
        c = lambda * c;
    return out;
}

SuperPoint exp_map(const GeodesicField& field, const TangentVector& t,
                   const IntegratorOptions& opt) {
    require_even_bundle(t);
    try {
        Trajectory traj = field.integrate(t.base, t.components, 1.0, opt);
        return field.unpack_point(traj.back(), t.base.generators());
    } catch (const BlowupError& e) {
        throw DomainError(std::string("initial vector outside the exponential-map domain: ") +
                          e.what());
    }
}

std::vector<GrassmannNumber> odd_autocommutator_obstruction(const ChristoffelField& gamma,
                                                            const SuperPoint& x,
                                                            std::span<const GrassmannNumber> vbar) {
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    const int L = x.generators();
    if (static_cast<int>(vbar.size()) != n)
        throw DomainError("component count mismatch");
    EvalCache cache;
    std::vector<GrassmannNumber> out(n, GrassmannNumber::zero(L));
    for (int i = 0; i < n; ++i) {
        GrassmannNumber acc = GrassmannNumber::zero(L);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const SuperExpr& g = gamma.entry(i, j, k);
                if (g.is_zero_constant())
                    continue;
                double sign = cs.parity_bit(k) ? -1.0 : 1.0;
                acc += sign * (vbar[k] * vbar[j] * evaluate_at(g, x, &cache));
            }
        out[i] = -2.0 * acc;
    }
    return out;
}

std::pair<SuperPoint, TangentVector> odd_geodesic_flow(const ChristoffelField& gamma,
                                                       const SuperPoint& x,
                                                       const TangentVector& vbar,
                                                       const GrassmannNumber& tau,
                                                       std::span<const SuperPoint> tf_samples,
                                                       double tol) {
    if (!tau.is_zero() && tau.parity() != Parity::Odd)
        throw DomainError("odd flow time must be odd");
    require_odd_bundle(vbar);
    if (!vbar.base.coords().same_as(gamma.coords()))
        throw DomainError("vector lives in a different coordinate system");

    std::vector<SuperPoint> samples(tf_samples.begin(), tf_samples.end());
    samples.push_back(x);
    auto report = is_torsion_free(gamma, samples, tol);
    if (!report.ok) {
        auto obstruction = odd_autocommutator_obstruction(gamma, x, vbar.components);
        throw OddFlowError("odd geodesic flow needs a torsion-free connection "
                           "(auto-commutator obstruction is nonzero; torsion residual " +
                               format_double(report.max_residual) + ")",
                           std::move(obstruction));
    }

    std::vector<GrassmannNumber> moved;
    moved.reserve(x.values().size());
    for (int i = 0; i < x.coords().size(); ++i)
        moved.push_back(x.value(i) + tau * vbar.components[i]);
    SuperPoint shifted(x.coords_ptr(), std::move(moved));
    return {shifted, TangentVector{shifted, vbar.components}};
}

// ---------------------------------------------------------------------------
// CSV

void write_trajectory_csv(std::ostream& os, const GeodesicField& field, const Trajectory& traj,
                          int generators, std::span<const ExtraColumn> extras) {
    const CoordinateSystem& cs = field.base_coords();
    const std::uint32_t masks = std::uint32_t{1} << generators;
    os << "t";
    for (int i = 0; i < cs.size(); ++i)
        for (std::uint32_t m = 0; m < masks; ++m)
            os << "," << cs.name(i) << "[" << mask_label(m) << "]";
    for (int i = 0; i < cs.size(); ++i)
        for (std::uint32_t m = 0; m < masks; ++m)
            os << ",d" << cs.name(i) << "[" << mask_label(m) << "]";
    for (const auto& col : extras)
        for (std::uint32_t m = 0; m < masks; ++m)
            os << "," << col.name << "[" << mask_label(m) << "]";
    os << "\n";

    for (std::size_t row = 0; row < traj.states.size(); ++row) {
        os << format_double(traj.times[row]);
        const auto& state = traj.states[row];
        for (int i = 0; i < cs.size(); ++i) {
            const GrassmannNumber& v = state[field.phase_index_of_coordinate(i)];
            for (std::uint32_t m = 0; m < masks; ++m)
                os << "," << format_double(v.coefficient(m));
        }
        for (int i = 0; i < cs.size(); ++i) {
            const GrassmannNumber& v = state[field.phase_index_of_velocity(i)];
            for (std::uint32_t m = 0; m < masks; ++m)
                os << "," << format_double(v.coefficient(m));
        }
        for (const auto& col : extras) {
            const GrassmannNumber& v = col.values.at(row);
            for (std::uint32_t m = 0; m < masks; ++m)
                os << "," << format_double(v.coefficient(m));
        }
        os << "\n";
    }
}

} // namespace supergeo
