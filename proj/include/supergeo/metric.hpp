#pragma once

#include <span>
#include <vector>

#include "supergeo/flows.hpp"

namespace supergeo {

// Even graded-symmetric metric field g_{ij}(x, xi) with a symbolic inverse.
// Entries are supplied for j >= i; the lower triangle is filled by graded
// symmetry g_{ji} = (-1)^{eps_i eps_j} g_{ij}. The inverse is the row-ordered
// adjugate over the row-ordered determinant (the determinant is even, so it
// inverts at evaluation time); the inverse identities are checked by
// inverse_residual and by the test suites at sample points.
class SuperMetric {
public:
    class Builder {
    public:
        explicit Builder(CoordinateSystemPtr coords);
        // i, j are 0-based with j >= i
        Builder& set_entry(int i, int j, SuperExpr e);
        SuperMetric build() const;

    private:
        CoordinateSystemPtr coords_;
        std::vector<SuperExpr> upper_;
    };

    const CoordinateSystem& coords() const { return *coords_; }
    const CoordinateSystemPtr& coords_ptr() const { return coords_; }
    int dim() const { return coords_->size(); }

    const SuperExpr& entry(int i, int j) const;
    const SuperExpr& inverse_entry(int i, int j) const;
    const SuperExpr& determinant() const { return det_; }

    std::vector<GrassmannNumber> eval_matrix(const SuperPoint& p, EvalCache* cache = nullptr) const;
    std::vector<GrassmannNumber> eval_inverse(const SuperPoint& p, EvalCache* cache = nullptr) const;

    // <v,w|g> = sum_{ij} v^i sigma^{eps_i}(w^j) g_{ij}
    GrassmannNumber pair(const SuperPoint& p, std::span<const GrassmannNumber> v,
                         std::span<const GrassmannNumber> w) const;

    // beta_i = (-1)^{eps_i} sum_j v^j g_{ji}
    std::vector<GrassmannNumber> flat(const SuperPoint& p,
                                      std::span<const GrassmannNumber> v) const;
    // v^j = sum_i (-1)^{eps_i} alpha_i g^{ij}
    std::vector<GrassmannNumber> sharp(const SuperPoint& p,
                                       std::span<const GrassmannNumber> alpha) const;

    // kinetic energy (1/2) <v,v|g>
    GrassmannNumber energy(const SuperPoint& p, std::span<const GrassmannNumber> v) const;

    // max norm of sum_j g_{ij} g^{jk} - delta_i^k and sum_j g^{kj} g_{ji} - delta_i^k
    double inverse_residual(std::span<const SuperPoint> samples) const;

    // per-point inverse through Grassmann Gaussian elimination; the fallback
    // route that does not go through the symbolic adjugate
    std::vector<GrassmannNumber> eval_inverse_numeric(const SuperPoint& p) const;

private:
    SuperMetric(CoordinateSystemPtr coords, std::vector<SuperExpr> entries);
    CoordinateSystemPtr coords_;
    std::vector<SuperExpr> g_;    // n*n, both triangles
    std::vector<SuperExpr> ginv_; // n*n
    SuperExpr det_;
};

// Torsion-free metric-compatible connection:
// Gamma^i_{jk} = 1/2 sum_l (d_j g_{kl} + (-1)^{eps_j eps_k} d_k g_{jl}
//                - (-1)^{eps_l(eps_j+eps_k)} d_l g_{jk}) g^{li}.
ChristoffelField levi_civita(const SuperMetric& g);

// Max residual of the compatibility identity
//   d_p <Y,Z|g> = <nabla_p Y, Z|g> + (-1)^{eps_p eps_j} <Y, nabla_p Z|g>
// over all coordinate-field triples at the samples.
double compatibility_check(const SuperMetric& g, const ChristoffelField& gamma,
                           std::span<const SuperPoint> samples);

// Point of the even cotangent bundle: base point plus momenta of parity eps_i.
struct CotangentPoint {
    SuperPoint x;
    std::vector<GrassmannNumber> momenta;
};

void require_even_cotangent(const CotangentPoint& pt);

// Phase-space data of the free particle: Hamiltonian H(x, p), its vector
// field, and the fiberwise map to velocities v^j = sum_i (-1)^{eps_i} p_i g^{ij}.
// Momentum coordinates are named "p_" + <coordinate>; states pack
// [x_even, p_even, x_odd, p_odd] in phase-coordinate order.
class HamiltonianSystem {
public:
    explicit HamiltonianSystem(const SuperMetric& g);

    const CoordinateSystem& phase_coords() const { return *phase_; }
    const SuperExpr& hamiltonian() const { return h_; }
    const ExprVectorField& field() const { return field_; }
    const SuperExpr& sharp_component(int j) const { return sharp_.at(j); }

    int phase_index_of_coordinate(int i) const;
    int phase_index_of_momentum(int i) const;

    std::vector<GrassmannNumber> pack_state(const CotangentPoint& pt) const;

    GrassmannNumber eval_hamiltonian(const CotangentPoint& pt) const;
    // values of X_H split into (xdot, pdot)
    std::pair<std::vector<GrassmannNumber>, std::vector<GrassmannNumber>>
    eval_field(const CotangentPoint& pt) const;
    // velocities of the sharp map at a cotangent point
    std::vector<GrassmannNumber> sharp_velocity(const CotangentPoint& pt) const;

private:
    CoordinateSystemPtr base_;
    CoordinateSystemPtr phase_;
    SuperExpr h_;
    ExprVectorField field_;
    std::vector<SuperExpr> sharp_;
};

// Residual of the Hamiltonian field against the general formula
//   X_f = sum_i ((-1)^{eps_i} sigma^{eps_i}(d_{p_i} f) d_{x^i}
//               - sigma^{eps_i}(d_{x^i} f) d_{p_i})
// applied to f = H; checks the defining contraction against the symplectic
// form on the even cotangent bundle.
double hamiltonian_field_residual(const HamiltonianSystem& hs,
                                  std::span<const CotangentPoint> samples);

// Residual of the intertwining of X_H with the geodesic field of the
// Levi-Civita connection under the sharp map, at the given cotangent points.
double intertwine_check(const SuperMetric& g, std::span<const CotangentPoint> samples);

} // namespace supergeo
