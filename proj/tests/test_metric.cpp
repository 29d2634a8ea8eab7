#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_support.hpp"

using namespace supergeo;
using namespace supergeo::testsupport;

namespace {

const int L = 4;

GrassmannNumber sc(double v) { return GrassmannNumber::scalar(L, v); }
GrassmannNumber gen(int k) { return GrassmannNumber::generator(L, k); }

SuperMetric identity_metric(const CoordinateSystemPtr& cs) {
    SuperMetric::Builder b(cs);
    for (int i = 0; i < cs->even_count(); ++i)
        b.set_entry(i, i, SuperExpr(1.0));
    for (int i = cs->even_count(); i + 1 < cs->size(); i += 2)
        b.set_entry(i, i + 1, SuperExpr(1.0));
    return b.build();
}

CotangentPoint random_cotangent(const CoordinateSystemPtr& cs, Sampler& sampler, double lo = 0.5,
                                double hi = 1.5) {
    SuperPoint x = random_point(cs, sampler, lo, hi);
    std::vector<GrassmannNumber> momenta;
    for (int i = 0; i < cs->size(); ++i) {
        if (cs->parity(i) == Parity::Even)
            momenta.push_back(sampler.even_value(-1.0, 1.0, 2, 0.4));
        else
            momenta.push_back(sampler.odd_value(1 + i % sampler.generators(), 0.6));
    }
    return CotangentPoint{x, std::move(momenta)};
}

} // namespace

TEST_CASE("metric pairing on the identity metric") {
    auto cs = system_2_0();
    SuperMetric g = identity_metric(cs);
    SuperPoint p(cs, {sc(0.3), sc(-1.2)});
    std::vector<GrassmannNumber> v = {sc(2), sc(3)};
    std::vector<GrassmannNumber> w = {sc(-1), sc(4)};
    CHECK(g.pair(p, v, w) == sc(10));
}

TEST_CASE("graded symmetry of the pairing") {
    auto cs = system_2_2();
    Sampler sampler(3, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    for (int trial = 0; trial < 10; ++trial) {
        SuperPoint p = random_point(cs, sampler);
        // even vector: components with slot parities; odd vector: reversed
        std::vector<GrassmannNumber> ve = {sampler.even_value(-1, 1, 1, 0.4),
                                           sampler.even_value(-1, 1, 1, 0.4),
                                           sampler.odd_value(1, 0.5), sampler.odd_value(2, 0.5)};
        std::vector<GrassmannNumber> vo = {sampler.odd_value(3, 0.7), sampler.odd_value(4, 0.7),
                                           sampler.even_value(-1, 1, 1, 0.3),
                                           sampler.even_value(-1, 1, 1, 0.3)};
        // even-even: symmetric
        CHECK((g.pair(p, ve, ve) - g.pair(p, ve, ve)).norm_max() <= 1e-13);
        std::vector<GrassmannNumber> we = {sampler.even_value(-1, 1, 1, 0.4),
                                           sampler.even_value(-1, 1, 1, 0.4),
                                           sampler.odd_value(2, 0.5), sampler.odd_value(3, 0.5)};
        CHECK((g.pair(p, ve, we) - g.pair(p, we, ve)).norm_max() <= 1e-12);
        // odd-odd: antisymmetric
        std::vector<GrassmannNumber> wo = {sampler.odd_value(1, 0.7), sampler.odd_value(2, 0.7),
                                           sampler.even_value(-1, 1, 1, 0.3),
                                           sampler.even_value(-1, 1, 1, 0.3)};
        CHECK((g.pair(p, vo, wo) + g.pair(p, wo, vo)).norm_max() <= 1e-12);
        // even-odd: symmetric with sign +1
        CHECK((g.pair(p, ve, wo) - g.pair(p, wo, ve)).norm_max() <= 1e-12);
    }
}

TEST_CASE("odd-block pairing matches the hand expansion") {
    auto cs = std::make_shared<CoordinateSystem>(std::vector<std::string>{},
                                                 std::vector<std::string>{"xi1", "xi2"});
    SuperMetric::Builder b(cs);
    b.set_entry(0, 1, SuperExpr(1.0)); // g_{12} = 1 = -g_{21}
    SuperMetric g = b.build();

    SuperPoint p(cs, {gen(1), gen(2)});
    GrassmannNumber a = sc(1) + gen(1) * gen(2);
    GrassmannNumber c = sc(2) - 0.5 * (gen(3) * gen(4));
    std::vector<GrassmannNumber> v = {a, sc(0)};
    std::vector<GrassmannNumber> w = {sc(0), c};
    // <v,w|g> = v^1 sigma(w^2) g_{12}; sigma fixes even values
    CHECK((g.pair(p, v, w) - a * c).norm_max() <= 1e-14);

    std::vector<GrassmannNumber> v2 = {sc(0), a};
    std::vector<GrassmannNumber> w2 = {c, sc(0)};
    CHECK((g.pair(p, v2, w2) + a * c).norm_max() <= 1e-14);
}

TEST_CASE("flat and sharp on simple metrics") {
    auto line = system_1_0();
    SuperMetric::Builder b(line);
    b.set_entry(0, 0, SuperExpr(2.0));
    SuperMetric g = b.build();
    SuperPoint p(line, {sc(1)});
    auto up = g.sharp(p, std::vector<GrassmannNumber>{sc(1)});
    CHECK((up[0] - sc(0.5)).norm_max() <= 1e-15);
    auto down = g.flat(p, std::vector<GrassmannNumber>{sc(1)});
    CHECK((down[0] - sc(2)).norm_max() <= 1e-15);
}

TEST_CASE("sharp inverts flat") {
    auto cs = system_2_2();
    Sampler sampler(7, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    for (int trial = 0; trial < 10; ++trial) {
        SuperPoint p = random_point(cs, sampler);
        std::vector<GrassmannNumber> v = {sampler.even_value(-1, 1, 2, 0.5),
                                          sampler.even_value(-1, 1, 2, 0.5),
                                          sampler.odd_value(1, 0.7), sampler.odd_value(2, 0.7)};
        auto back = g.sharp(p, g.flat(p, v));
        for (int i = 0; i < 4; ++i)
            CHECK((back[i] - v[i]).norm_max() <= 1e-10);
    }
}

TEST_CASE("inverse identities and inverse symmetry") {
    auto cs = system_2_2();
    Sampler sampler(11, L);
    for (int trial = 0; trial < 5; ++trial) {
        SuperMetric g = random_metric_2_2(cs, sampler.rng());
        auto samples = random_points(cs, sampler, 10);
        CHECK(g.inverse_residual(samples) <= 1e-10);

        const int n = cs->size();
        for (const auto& p : samples) {
            EvalCache cache;
            auto gi = g.eval_inverse(p, &cache);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) {
                    int bi = cs->parity_bit(i), bj = cs->parity_bit(j);
                    double sign = ((bi + bj + bi * bj) % 2 == 0) ? 1.0 : -1.0;
                    GrassmannNumber diff =
                        gi[i * n + j] - sign * gi[j * n + i];
                    CHECK(diff.norm_max() <= 1e-10);
                }
        }
    }
}

TEST_CASE("metric invariants battery") {
    auto cs = system_2_2();
    Sampler sampler(13, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    auto samples = random_points(cs, sampler, 100);
    const int n = cs->size();
    for (const auto& p : samples) {
        EvalCache cache;
        auto gv = g.eval_matrix(p, &cache);
        // graded symmetry and parity
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double sign = (cs->parity_bit(i) && cs->parity_bit(j)) ? -1.0 : 1.0;
                CHECK((gv[i * n + j] - sign * gv[j * n + i]).norm_max() <= 1e-12);
                if (!gv[i * n + j].is_zero()) {
                    Parity want = (cs->parity_bit(i) + cs->parity_bit(j)) % 2 == 0
                                      ? Parity::Even
                                      : Parity::Odd;
                    CHECK(gv[i * n + j].parity() == want);
                }
            }
        // body nondegeneracy via the inverse identities
    }
    CHECK(g.inverse_residual(samples) <= 1e-10);
}

TEST_CASE("levi-civita of a constant metric vanishes") {
    auto cs = system_2_2();
    SuperMetric g = identity_metric(cs);
    ChristoffelField gamma = levi_civita(g);
    Sampler sampler(17, L);
    SuperPoint p = random_point(cs, sampler);
    for (auto& v : gamma.eval_at(p))
        CHECK(v.norm_max() <= 1e-14);
}

TEST_CASE("levi-civita of the classical surface metric") {
    auto cs = system_2_0();
    SuperMetric::Builder b(cs);
    b.set_entry(0, 0, SuperExpr(1.0));
    b.set_entry(1, 1, parse_expr("x1^2", *cs));
    SuperMetric g = b.build();
    ChristoffelField gamma = levi_civita(g);

    for (double x1 : {0.5, 1.0, 2.0}) {
        SuperPoint p(cs, {sc(x1), sc(0.7)});
        EvalCache cache;
        CHECK(std::abs(evaluate_at(gamma.entry(1, 0, 1), p, &cache).body() - 1.0 / x1) <= 1e-12);
        CHECK(std::abs(evaluate_at(gamma.entry(1, 1, 0), p, &cache).body() - 1.0 / x1) <= 1e-12);
        CHECK(std::abs(evaluate_at(gamma.entry(0, 1, 1), p, &cache).body() - (-x1)) <= 1e-12);
        CHECK(evaluate_at(gamma.entry(0, 0, 0), p, &cache).norm_max() <= 1e-13);
    }
}

TEST_CASE("levi-civita matches a finite-difference oracle on classical metrics") {
    auto cs = system_2_0();
    Sampler sampler(23, L);
    SuperMetric g = random_metric_2_0(cs, sampler.rng());
    ChristoffelField gamma = levi_civita(g);

    const double step = 1e-5;
    auto gbody = [&](int i, int j, double x1, double x2) {
        SuperPoint p(cs, {sc(x1), sc(x2)});
        return evaluate_at(g.entry(i, j), p).body();
    };
    for (int trial = 0; trial < 5; ++trial) {
        double x1 = sampler.rng().uniform(-0.4, 0.4);
        double x2 = sampler.rng().uniform(-0.4, 0.4);
        // classical Christoffel symbols from central differences
        double dg[2][2][2];
        for (int a = 0; a < 2; ++a)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) {
                    double hi = (a == 0) ? gbody(i, j, x1 + step, x2) : gbody(i, j, x1, x2 + step);
                    double lo = (a == 0) ? gbody(i, j, x1 - step, x2) : gbody(i, j, x1, x2 - step);
                    dg[a][i][j] = (hi - lo) / (2 * step);
                }
        SuperPoint p(cs, {sc(x1), sc(x2)});
        EvalCache cache;
        double g00 = gbody(0, 0, x1, x2), g01 = gbody(0, 1, x1, x2), g11 = gbody(1, 1, x1, x2);
        double det = g00 * g11 - g01 * g01;
        double gi[2][2] = {{g11 / det, -g01 / det}, {-g01 / det, g00 / det}};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int k = 0; k < 2; ++k) {
                    double want = 0.0;
                    for (int l = 0; l < 2; ++l)
                        want += 0.5 * (dg[j][k][l] + dg[k][j][l] - dg[l][j][k]) * gi[l][i];
                    double got = evaluate_at(gamma.entry(i, j, k), p, &cache).body();
                    CHECK(std::abs(got - want) <= 1e-6);
                }
    }
}

TEST_CASE("levi-civita is torsion-free and compatible") {
    auto cs = system_2_2();
    Sampler sampler(29, L);
    for (int trial = 0; trial < 3; ++trial) {
        SuperMetric g = random_metric_2_2(cs, sampler.rng());
        ChristoffelField gamma = levi_civita(g);
        auto samples = random_points(cs, sampler, 20);
        CHECK(is_torsion_free(gamma, samples).ok);
        CHECK(compatibility_check(g, gamma, samples) <= 1e-10);
    }
}

TEST_CASE("compatibility flags perturbed connections") {
    auto cs = system_2_2();
    Sampler sampler(31, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    ChristoffelField gamma = levi_civita(g);
    auto samples = random_points(cs, sampler, 20);

    ChristoffelField perturbed(cs);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                perturbed.set_entry(i, j, k, gamma.entry(i, j, k));
    perturbed.set_entry(0, 0, 0, gamma.entry(0, 0, 0) + SuperExpr(1e-3));
    double residual = compatibility_check(g, perturbed, samples);
    CHECK(residual > 1e-4);
}

TEST_CASE("uniqueness: graded-symmetric perturbations break compatibility") {
    auto cs = system_2_2();
    Sampler sampler(37, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    ChristoffelField gamma = levi_civita(g);
    auto samples = random_points(cs, sampler, 20);

    // add a random graded-symmetric (torsion-free) perturbation
    ChristoffelField delta = random_torsion_free_christoffel(cs, sampler.rng(), 0.05);
    ChristoffelField perturbed(cs);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            for (int k = 0; k < 4; ++k)
                perturbed.set_entry(i, j, k, gamma.entry(i, j, k) + delta.entry(i, j, k));
    CHECK(is_torsion_free(perturbed, samples).ok);
    CHECK(compatibility_check(g, perturbed, samples) > 1e-4);
}

TEST_CASE("hamiltonian on the identity metric") {
    auto cs = system_2_0();
    SuperMetric g = identity_metric(cs);
    HamiltonianSystem hs(g);
    CotangentPoint pt{SuperPoint(cs, {sc(0.2), sc(0.4)}), {sc(1), sc(0)}};
    CHECK((hs.eval_hamiltonian(pt) - sc(0.5)).norm_max() <= 1e-15);

    auto [xdot, pdot] = hs.eval_field(pt);
    CHECK((xdot[0] - sc(1)).norm_max() <= 1e-15);
    CHECK(xdot[1].norm_max() <= 1e-15);
    CHECK(pdot[0].norm_max() <= 1e-15);
    CHECK(pdot[1].norm_max() <= 1e-15);
}

TEST_CASE("hamiltonian agrees with the kinetic-energy definition") {
    auto cs = system_2_2();
    Sampler sampler(41, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    HamiltonianSystem hs(g);
    for (int trial = 0; trial < 10; ++trial) {
        CotangentPoint pt = random_cotangent(cs, sampler);
        GrassmannNumber h = hs.eval_hamiltonian(pt);
        auto v = hs.sharp_velocity(pt);
        GrassmannNumber kinetic = g.energy(pt.x, v);
        CHECK((h - kinetic).norm_max() <= 1e-10);
        // sharp_velocity agrees with the metric's sharp
        auto v2 = g.sharp(pt.x, pt.momenta);
        for (int i = 0; i < 4; ++i)
            CHECK((v[i] - v2[i]).norm_max() <= 1e-12);
    }
}

TEST_CASE("hamiltonian vanishes on odd-part momenta") {
    auto cs = system_2_2();
    Sampler sampler(43, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    const int n = cs->size();
    for (int trial = 0; trial < 10; ++trial) {
        SuperPoint x = random_point(cs, sampler);
        // odd-part momenta: parity eps_i + 1
        std::vector<GrassmannNumber> pbar;
        for (int i = 0; i < n; ++i) {
            if (cs->parity(i) == Parity::Even)
                pbar.push_back(sampler.odd_value(1 + i % L, 0.8));
            else
                pbar.push_back(sampler.even_value(-1, 1, 2, 0.5));
        }
        EvalCache cache;
        auto gi = g.eval_inverse(x, &cache);
        GrassmannNumber h = GrassmannNumber::zero(L);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                GrassmannNumber term = gi[j * n + k] * pbar[k] * pbar[j];
                h += cs->parity_bit(k) ? -term : term;
            }
        CHECK((0.5 * h).norm_max() <= 1e-12);
    }
}

TEST_CASE("hamiltonian field matches the general formula") {
    auto cs2 = system_2_0();
    SuperMetric::Builder b(cs2);
    b.set_entry(0, 0, SuperExpr(1.0));
    b.set_entry(1, 1, parse_expr("x1^2", *cs2));
    SuperMetric surface = b.build();
    HamiltonianSystem hs_surface(surface);
    Sampler sampler(47, L);
    std::vector<CotangentPoint> pts;
    for (int i = 0; i < 10; ++i)
        pts.push_back(random_cotangent(cs2, sampler));
    CHECK(hamiltonian_field_residual(hs_surface, pts) <= 1e-10);

    auto cs = system_2_2();
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    HamiltonianSystem hs(g);
    std::vector<CotangentPoint> pts2;
    for (int i = 0; i < 10; ++i)
        pts2.push_back(random_cotangent(cs, sampler));
    CHECK(hamiltonian_field_residual(hs, pts2) <= 1e-10);
}

TEST_CASE("energy is conserved along the hamiltonian flow") {
    auto cs = system_2_2();
    Sampler sampler(53, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng(), 0.15, 0.15);
    HamiltonianSystem hs(g);
    CotangentPoint pt = random_cotangent(cs, sampler);
    IntegratorOptions opt{1e-2, 1e12};
    Trajectory traj = rk4_integrate(hs.field(), hs.pack_state(pt), 1.0, opt, L);

    EvalEnv env0{&hs.phase_coords(), traj.states.front(), L};
    GrassmannNumber h0 = evaluate(hs.hamiltonian(), env0);
    const double tol = 10 * std::pow(opt.step, 4);
    for (const auto& state : traj.states) {
        EvalEnv env{&hs.phase_coords(), state, L};
        CHECK((evaluate(hs.hamiltonian(), env) - h0).norm_max() <= tol);
    }
}

TEST_CASE("energy is conserved along levi-civita geodesics") {
    auto cs = system_2_2();
    Sampler sampler(59, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng(), 0.15, 0.15);
    ChristoffelField gamma = levi_civita(g);
    GeodesicField geo(gamma);
    IntegratorOptions opt{1e-2, 1e12};

    SuperPoint x = random_point(cs, sampler, -0.3, 0.3);
    std::vector<GrassmannNumber> v = {sc(0.4), sc(-0.3), 0.4 * gen(1), 0.4 * gen(2)};
    Trajectory traj = geo.integrate(x, v, 1.0, opt);
    GrassmannNumber e0 = g.energy(x, v);
    const double tol = 10 * std::pow(opt.step, 4);
    for (const auto& state : traj.states) {
        SuperPoint xt = geo.unpack_point(state, L);
        auto vt = geo.unpack_velocity(state);
        CHECK((g.energy(xt, vt) - e0).norm_max() <= tol);
    }
}

TEST_CASE("hamiltonian field intertwines with the geodesic field") {
    Sampler sampler(61, L);

    auto cs_const = system_2_0();
    SuperMetric flat = identity_metric(cs_const);
    std::vector<CotangentPoint> pts;
    for (int i = 0; i < 10; ++i)
        pts.push_back(random_cotangent(cs_const, sampler));
    CHECK(intertwine_check(flat, pts) <= 1e-12);

    SuperMetric::Builder b(cs_const);
    b.set_entry(0, 0, SuperExpr(1.0));
    b.set_entry(1, 1, parse_expr("x1^2", *cs_const));
    SuperMetric surface = b.build();
    CHECK(intertwine_check(surface, pts) <= 1e-10);

    auto cs = system_2_2();
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    std::vector<CotangentPoint> pts2;
    for (int i = 0; i < 10; ++i)
        pts2.push_back(random_cotangent(cs, sampler));
    CHECK(intertwine_check(g, pts2) <= 1e-10);
}

TEST_CASE("numeric inverse fallback agrees with the symbolic inverse") {
    auto cs = system_2_2();
    Sampler sampler(67, L);
    SuperMetric g = random_metric_2_2(cs, sampler.rng());
    for (int trial = 0; trial < 5; ++trial) {
        SuperPoint p = random_point(cs, sampler);
        auto symbolic = g.eval_inverse(p);
        auto numeric = g.eval_inverse_numeric(p);
        for (std::size_t idx = 0; idx < symbolic.size(); ++idx)
            CHECK((symbolic[idx] - numeric[idx]).norm_max() <= 1e-11);
    }
}

TEST_CASE("metric builder validation") {
    auto cs = system_2_2();
    SuperMetric::Builder b(cs);
    CHECK_THROWS_AS(b.set_entry(1, 0, SuperExpr(1.0)), DomainError);

    SuperMetric::Builder odd_diag(cs);
    CHECK_THROWS_AS(odd_diag.set_entry(2, 2, SuperExpr(1.0)).build(), DomainError);

    SuperMetric::Builder bad_parity(cs);
    CHECK_THROWS_AS(bad_parity.set_entry(0, 2, SuperExpr(1.0)).build(), DomainError);
}
