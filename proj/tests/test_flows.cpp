#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>

#include "supergeo/flows.hpp"
#include "test_support.hpp"

using namespace supergeo;
using namespace supergeo::testsupport;

namespace {

const int L = 4;

GrassmannNumber sc(double v) { return GrassmannNumber::scalar(L, v); }
GrassmannNumber gen(int k) { return GrassmannNumber::generator(L, k); }

// Gamma^1_{11} = 2a on the line; geodesics x(t) = x0 + log(1 + 2 a v t)/(2a)
ChristoffelField log_model(double two_a) {
    auto cs = system_1_0();
    ChristoffelField gamma(cs);
    gamma.set_entry(0, 0, 0, SuperExpr(two_a));
    return gamma;
}

} // namespace

TEST_CASE("geodesic field values") {
    auto flat_cs = system_1_0();
    ChristoffelField flat(flat_cs);
    GeodesicField g(flat);
    SuperPoint x(flat_cs, {sc(0.3)});
    auto [xdot, vdot] = g.eval(x, std::vector<GrassmannNumber>{sc(2)});
    CHECK(xdot[0] == sc(2));
    CHECK(vdot[0].is_zero());

    GeodesicField glog(log_model(1.0));
    auto [xd2, vd2] = glog.eval(x, std::vector<GrassmannNumber>{sc(3)});
    CHECK(xd2[0] == sc(3));
    CHECK(vd2[0] == sc(-9)); // -2a v^2 with 2a = 1
}

TEST_CASE("geodesic field on a 1|2 superdomain") {
    auto cs = system_1_2();
    ChristoffelField gamma(cs);
    gamma.set_entry(0, 0, 0, parse_expr("xi1*xi2", *cs));
    GeodesicField g(gamma);

    SuperPoint x(cs, {sc(0.7), gen(1), gen(2)});
    GrassmannNumber v1 = sc(1.5) + 0.5 * (gen(3) * gen(4));
    std::vector<GrassmannNumber> v = {v1, gen(3), gen(4)};
    auto [xdot, vdot] = g.eval(x, v);
    for (int i = 0; i < 3; ++i)
        CHECK((xdot[i] - v[i]).norm_max() <= 1e-15);

    // hand expansion via the coefficient-expansion oracle: the only
    // contribution is -(v^1)^2 * xi1 xi2
    auto parts = expand_coefficients(gamma.entry(0, 0, 0), *cs,
                                     std::vector<std::string>{"xi1", "xi2"});
    REQUIRE(parts.count(0b11) == 1);
    GrassmannNumber coeff = evaluate_at(parts.at(0b11), x);
    GrassmannNumber expected = -(v1 * v1 * (x.value(1) * x.value(2) * coeff));
    CHECK((vdot[0] - expected).norm_max() <= 1e-14);
    CHECK(vdot[1].is_zero());
    CHECK(vdot[2].is_zero());
}

TEST_CASE("flat flow is exact and keeps the initial state") {
    auto cs = system_1_0();
    ChristoffelField flat(cs);
    GeodesicField g(flat);
    SuperPoint x(cs, {sc(0.25)});
    GrassmannNumber v = sc(1) + gen(1) * gen(2); // nilpotent-shifted velocity
    Trajectory traj = g.integrate(x, std::vector<GrassmannNumber>{v}, 1.0,
                                  IntegratorOptions{1e-3, 1e12});
    CHECK(traj.states.front()[0] == sc(0.25));
    CHECK(traj.states.front()[1] == v);

    GrassmannNumber x_end = traj.back()[0];
    GrassmannNumber want = sc(0.25) + 1.0 * v;
    CHECK((x_end - want).norm_max() <= 1e-12);
    CHECK(traj.back()[1] == v);
    CHECK(traj.times.back() == 1.0);
}

TEST_CASE("log model endpoint") {
    GeodesicField g(log_model(1.0)); // a = 0.5
    auto cs = g.base_coords_ptr();
    SuperPoint x0(cs, {sc(0)});
    Trajectory traj =
        g.integrate(x0, std::vector<GrassmannNumber>{sc(1)}, 1.0, IntegratorOptions{1e-3, 1e12});
    CHECK(std::abs(traj.back()[0].body() - std::log(2.0)) <= 1e-8);
    // velocity 1/(1+t) at t=1
    CHECK(std::abs(traj.back()[1].body() - 0.5) <= 1e-8);
}

TEST_CASE("blow-up detection reports the last valid time") {
    GeodesicField g(log_model(-10.0)); // vdot = +10 v^2, singular at t = 0.1
    auto cs = g.base_coords_ptr();
    SuperPoint x0(cs, {sc(0)});
    try {
        g.integrate(x0, std::vector<GrassmannNumber>{sc(1)}, 1.0, IntegratorOptions{1e-3, 1e12});
        CHECK(false);
    } catch (const BlowupError& e) {
        CHECK(e.last_valid_time() > 0.05);
        CHECK(e.last_valid_time() < 0.15);
    }
}

TEST_CASE("flow at a Grassmann time is exact on the flat model") {
    auto cs = system_1_0();
    ChristoffelField flat(cs);
    GeodesicField g(flat);
    GrassmannNumber v = sc(2) + gen(1) * gen(2);
    GrassmannNumber t = sc(0.5) + 0.25 * (gen(3) * gen(4));
    auto state = flow_state_at(g.field(), g.pack_state(SuperPoint(cs, {sc(1)}), {&v, 1}), t,
                               IntegratorOptions{1e-2, 1e12});
    GrassmannNumber want = sc(1) + t * v;
    CHECK((state[0] - want).norm_max() <= 1e-12);
    CHECK((state[1] - v).norm_max() <= 1e-15);
}

TEST_CASE("nilpotent time shift matches the first-order expansion") {
    GeodesicField g(log_model(1.0));
    auto cs = g.base_coords_ptr();
    IntegratorOptions opt{1e-3, 1e12};
    auto init = g.pack_state(SuperPoint(cs, {sc(0)}), std::vector<GrassmannNumber>{sc(1)});

    GrassmannNumber nu = 0.3 * (gen(1) * gen(2)); // nu^2 = 0
    GrassmannNumber t = sc(0.6) + nu;
    auto shifted = flow_state_at(g.field(), init, t, opt);

    auto base = rk4_flow_to(g.field(), init, 0.6, opt, L);
    auto deriv = g.field().eval(base, L);
    // state(b + nu) = state(b) + nu * state'(b) exactly, since nu^2 = 0
    for (int i = 0; i < 2; ++i)
        CHECK((shifted[i] - (base[i] + nu * deriv[i])).norm_max() <= 1e-12);
}

TEST_CASE("dilation identity") {
    GeodesicField g(log_model(1.0));
    auto cs = g.base_coords_ptr();
    IntegratorOptions opt{1e-2, 1e12};
    const double tol = 10 * std::pow(opt.step, 4);

    std::vector<GrassmannNumber> lambdas = {sc(0), sc(0.5), sc(2),
                                            sc(1) + gen(1) * gen(2)};
    SuperPoint x0(cs, {sc(0)});
    GrassmannNumber v = sc(0.4) + 0.2 * (gen(3) * gen(4));
    for (const auto& lambda : lambdas) {
        for (double t : {0.0, 0.3, 0.7, 1.0}) {
            auto lhs = flow_state_at(g.field(), g.pack_state(x0, {&v, 1}),
                                     lambda * sc(t), opt);
            GrassmannNumber lv = lambda * v;
            auto rhs = flow_state_at(g.field(), g.pack_state(x0, {&lv, 1}), sc(t), opt);
            CHECK((lhs[0] - rhs[0]).norm_max() <= tol);
            CHECK((rhs[1] - lambda * lhs[1]).norm_max() <= tol);
        }
    }
}

TEST_CASE("flow semigroup and reversibility") {
    auto cs = system_1_2();
    ChristoffelField gamma(cs);
    gamma.set_entry(0, 0, 0, parse_expr("0.5 + xi1*xi2", *cs));
    GeodesicField g(gamma);
    IntegratorOptions opt{1e-2, 1e12};
    const double tol = 10 * std::pow(opt.step, 4);

    SuperPoint x0(cs, {sc(0.1), gen(1), gen(2)});
    std::vector<GrassmannNumber> v = {sc(0.8), 0.5 * gen(3), 0.25 * gen(4)};
    auto init = g.pack_state(x0, v);

    auto at_t = rk4_flow_to(g.field(), init, 0.4, opt, L);
    auto then_s = rk4_flow_to(g.field(), at_t, 0.35, opt, L);
    auto direct = rk4_flow_to(g.field(), init, 0.75, opt, L);
    for (std::size_t i = 0; i < direct.size(); ++i)
        CHECK((then_s[i] - direct[i]).norm_max() <= tol);

    auto back = rk4_flow_to(g.field(), at_t, -0.4, opt, L);
    for (std::size_t i = 0; i < init.size(); ++i)
        CHECK((back[i] - init[i]).norm_max() <= tol);
}

TEST_CASE("dilate") {
    auto cs = system_1_2();
    SuperPoint base(cs, {sc(1), gen(1), gen(2)});
    TangentVector t{base, {sc(2), gen(3), gen(4)}};

    TangentVector same = dilate(t, sc(1));
    for (int i = 0; i < 3; ++i)
        CHECK(same.components[i] == t.components[i]);

    TangentVector zero = dilate(t, sc(0));
    for (int i = 0; i < 3; ++i)
        CHECK(zero.components[i].is_zero());
    CHECK(zero.base.value(0) == base.value(0)); // base point untouched

    CHECK_THROWS_AS(dilate(t, gen(1)), DomainError);
}

TEST_CASE("exponential map") {
    auto cs = system_1_0();
    ChristoffelField flat(cs);
    GeodesicField g(flat);
    IntegratorOptions opt{1e-3, 1e12};

    SuperPoint x(cs, {sc(0.5)});
    GrassmannNumber v = sc(0.75) + gen(1) * gen(2);
    SuperPoint end = exp_map(g, TangentVector{x, {v}}, opt);
    CHECK((end.value(0) - (sc(0.5) + v)).norm_max() <= 1e-12);

    SuperPoint still = exp_map(g, TangentVector{x, {sc(0)}}, opt);
    CHECK(still.value(0) == sc(0.5));

    GeodesicField glog(log_model(1.0));
    auto lcs = glog.base_coords_ptr();
    SuperPoint origin(lcs, {sc(0)});
    SuperPoint lend = exp_map(glog, TangentVector{origin, {sc(1)}}, opt);
    CHECK(std::abs(lend.value(0).body() - std::log(2.0)) <= 1e-8);

    GeodesicField gbad(log_model(-10.0));
    auto bcs = gbad.base_coords_ptr();
    CHECK_THROWS_AS(exp_map(gbad, TangentVector{SuperPoint(bcs, {sc(0)}), {sc(1)}}, opt),
                    DomainError);
}

TEST_CASE("odd geodesic flow is a straight odd line") {
    auto cs = system_1_2();
    ChristoffelField gamma(cs);
    gamma.set_entry(0, 0, 0, parse_expr("xi1*xi2", *cs)); // torsion-free
    SuperPoint x(cs, {sc(0.4), gen(1), gen(2)});
    TangentVector vbar{x, {gen(3), sc(2), sc(-1)}};
    GrassmannNumber tau = 0.5 * gen(4);

    auto [moved, vout] = odd_geodesic_flow(gamma, x, vbar, tau, {});
    CHECK((moved.value(0) - (x.value(0) + tau * gen(3))).norm_max() <= 1e-15);
    CHECK((moved.value(1) - (x.value(1) + tau * sc(2))).norm_max() <= 1e-15);
    CHECK((moved.value(2) - (x.value(2) + tau * sc(-1))).norm_max() <= 1e-15);
    for (int i = 0; i < 3; ++i)
        CHECK(vout.components[i] == vbar.components[i]);

    // tau = 0 keeps the point
    auto [same, vsame] = odd_geodesic_flow(gamma, x, vbar, GrassmannNumber::zero(L), {});
    for (int i = 0; i < 3; ++i)
        CHECK(same.value(i) == x.value(i));

    // flowing twice adds 2 tau vbar (tau^2 = 0 contributes nothing more)
    TangentVector vmoved{moved, vbar.components};
    auto [twice, v2] = odd_geodesic_flow(gamma, moved, vmoved, tau, {});
    for (int i = 0; i < 3; ++i)
        CHECK((twice.value(i) - (x.value(i) + 2.0 * (tau * vbar.components[i]))).norm_max() <=
              1e-15);
}

TEST_CASE("auto-commutator obstruction detects torsion") {
    auto cs = system_2_2();
    ChristoffelField flat(cs);
    SuperPoint x(cs, {sc(1), sc(0.5), gen(1), gen(2)});
    std::vector<GrassmannNumber> vbar = {gen(3), gen(4), sc(1), sc(0.5)};

    for (auto& v : odd_autocommutator_obstruction(flat, x, vbar))
        CHECK(v.is_zero());

    Sampler sampler(7, L);
    ChristoffelField tf = random_torsion_free_christoffel(cs, sampler.rng());
    for (auto& v : odd_autocommutator_obstruction(tf, x, vbar))
        CHECK(v.norm_max() <= 1e-12);

    // torsion on an even pair gives a nonzero obstruction at generic vbar
    ChristoffelField twisted(cs);
    twisted.set_entry(0, 0, 1, SuperExpr(1.0));
    auto obstruction = odd_autocommutator_obstruction(twisted, x, vbar);
    // -2 * vbar^2 vbar^1 Gamma^1_{12} = -2 t4 t3 = 2 t3 t4
    CHECK((obstruction[0] - 2.0 * (gen(3) * gen(4))).norm_max() <= 1e-14);

    TangentVector vb{x, vbar};
    CHECK_THROWS_AS(odd_geodesic_flow(twisted, x, vb, 0.5 * gen(1), {}), OddFlowError);
    try {
        odd_geodesic_flow(twisted, x, vb, 0.5 * gen(1), {});
    } catch (const OddFlowError& e) {
        REQUIRE(e.obstruction.size() == 4);
        CHECK(e.obstruction[0].norm_max() > 0.5);
    }
}

TEST_CASE("dense trajectory interpolation") {
    GeodesicField g(log_model(1.0));
    auto cs = g.base_coords_ptr();
    IntegratorOptions opt{1e-2, 1e12};
    auto init = g.pack_state(SuperPoint(cs, {sc(0)}), std::vector<GrassmannNumber>{sc(1)});
    DenseTrajectory dense(g.field(), init, opt, L);

    for (double t : {0.003, 0.195, 0.5041, 0.83, 1.0, 1.337}) {
        auto interp = dense.state_at(t);
        double exact = std::log(1.0 + t);
        CHECK(std::abs(interp[0].body() - exact) <= 1e-7);
    }
    // negative times extend backwards: log(1 + t) valid down to t > -1
    auto backward = dense.state_at(-0.35);
    CHECK(std::abs(backward[0].body() - std::log(0.65)) <= 1e-7);

    // Grassmann query time
    GrassmannNumber tg = sc(0.37) + 0.2 * (gen(1) * gen(2));
    auto shifted = dense.state_at(tg);
    // first order in the nilpotent part: x(b) + nu/(1+b)
    double b = 0.37;
    CHECK(std::abs(shifted[0].body() - std::log(1.37)) <= 1e-7);
    CHECK(std::abs(shifted[0].coefficient(0b11) - 0.2 / (1 + b)) <= 1e-7);
}

TEST_CASE("trajectory csv") {
    auto cs = system_1_0();
    ChristoffelField flat(cs);
    GeodesicField g(flat);
    const int l2 = 2;
    SuperPoint x(cs, {GrassmannNumber::scalar(l2, 1)});
    GrassmannNumber v = GrassmannNumber::scalar(l2, 2) +
                        GrassmannNumber::generator(l2, 1) * GrassmannNumber::generator(l2, 2);
    Trajectory traj = g.integrate(x, {&v, 1}, 1.0, IntegratorOptions{0.5, 1e12});

    std::ostringstream os;
    write_trajectory_csv(os, g, traj, l2);
    std::string text = os.str();
    CHECK(text.find("t,x1[body],x1[1],x1[2],x1[1_2],dx1[body],dx1[1],dx1[2],dx1[1_2]\n") == 0);
    CHECK(text.find("\n0,1,0,0,0,2,0,0,1\n") != std::string::npos);
    CHECK(text.find("\n1,3,0,0,1,2,0,0,1\n") != std::string::npos);

    ExtraColumn energy{"energy", {GrassmannNumber::scalar(l2, 2), GrassmannNumber::scalar(l2, 2),
                                  GrassmannNumber::scalar(l2, 2)}};
    std::ostringstream os2;
    write_trajectory_csv(os2, g, traj, l2, {&energy, 1});
    CHECK(os2.str().find("energy[body],energy[1],energy[2],energy[1_2]") != std::string::npos);
}
