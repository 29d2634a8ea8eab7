#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "supergeo/connection.hpp"

namespace supergeo {

// First-order system on a phase space: one component expression per phase
// coordinate. All components of one evaluation share an expression cache, so
// common subtrees (metric inverses, determinants) are computed once per call.
struct ExprVectorField {
    CoordinateSystemPtr phase;
    std::vector<SuperExpr> components;

    std::vector<GrassmannNumber> eval(std::span<const GrassmannNumber> state,
                                      int generators) const;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<GrassmannNumber>> states;
    double step = 0.0;
    std::string integrator = "rk4";

    const std::vector<GrassmannNumber>& back() const { return states.back(); }
};

struct IntegratorOptions {
    double step = 1e-3;
    double blowup_bound = 1e12;
};

// Classical fixed-step RK4, applied coefficientwise to the Grassmann state.
// The step count is ceil(|t_end|/step) with a uniformly adjusted step so the
// grid lands on t_end exactly; t_end < 0 integrates backwards. Throws
// BlowupError when any coefficient leaves [-bound, bound] or turns non-finite.
Trajectory rk4_integrate(const ExprVectorField& field, std::vector<GrassmannNumber> init,
                         double t_end, const IntegratorOptions& opt, int generators);

// Single state at time t_end (last state of rk4_integrate).
std::vector<GrassmannNumber> rk4_flow_to(const ExprVectorField& field,
                                         std::vector<GrassmannNumber> init, double t_end,
                                         const IntegratorOptions& opt, int generators);

// Flow state at an even Grassmann time: integrate to the body, then take one
// exact step in the nilpotent part (the flow is polynomial in a nilpotent
// time shift, and one RK4 step reproduces that polynomial exactly for
// nilpotency order <= 4).
std::vector<GrassmannNumber> flow_state_at(const ExprVectorField& field,
                                           std::vector<GrassmannNumber> init,
                                           const GrassmannNumber& t_even,
                                           const IntegratorOptions& opt);

// Geodesic vector field on the even tangent bundle of the connection's
// superdomain. Phase coordinates are the base coordinates followed by
// velocity coordinates named "d" + <coordinate>; the phase state is packed
// [x_even, v_even, x_odd, v_odd] in that coordinate order.
class GeodesicField {
public:
    explicit GeodesicField(const ChristoffelField& gamma);

    const ChristoffelField& christoffel() const { return gamma_; }
    const CoordinateSystem& base_coords() const { return *base_; }
    const CoordinateSystemPtr& base_coords_ptr() const { return base_; }
    const ExprVectorField& field() const { return field_; }

    int phase_index_of_coordinate(int i) const;
    int phase_index_of_velocity(int i) const;

    std::vector<GrassmannNumber> pack_state(const SuperPoint& x,
                                            std::span<const GrassmannNumber> v) const;
    SuperPoint unpack_point(std::span<const GrassmannNumber> state, int generators) const;
    std::vector<GrassmannNumber> unpack_velocity(std::span<const GrassmannNumber> state) const;

    // (xdot, vdot) at a state of the even tangent bundle
    std::pair<std::vector<GrassmannNumber>, std::vector<GrassmannNumber>>
    eval(const SuperPoint& x, std::span<const GrassmannNumber> v) const;

    Trajectory integrate(const SuperPoint& x, std::span<const GrassmannNumber> v, double t_end,
                         const IntegratorOptions& opt) const;

private:
    ChristoffelField gamma_;
    CoordinateSystemPtr base_;
    ExprVectorField field_;
};

// Lazily extended trajectory of a field with cubic Hermite interpolation
// between grid states; accepts even Grassmann query times (nilpotent part
// handled by one exact step).
class DenseTrajectory {
public:
    DenseTrajectory(const ExprVectorField& field, std::vector<GrassmannNumber> init,
                    const IntegratorOptions& opt, int generators);

    std::vector<GrassmannNumber> state_at(const GrassmannNumber& t_even);
    std::vector<GrassmannNumber> state_at(double t);

private:
    const ExprVectorField& field_;
    IntegratorOptions opt_;
    int generators_;
    std::vector<std::vector<GrassmannNumber>> forward_;  // states at 0, h, 2h, ...
    std::vector<std::vector<GrassmannNumber>> backward_; // states at -h, -2h, ...
    std::vector<std::optional<std::vector<GrassmannNumber>>> forward_derivs_;
    std::vector<std::optional<std::vector<GrassmannNumber>>> backward_derivs_;

    const std::vector<GrassmannNumber>& grid_state(long long k);
    const std::vector<GrassmannNumber>& grid_deriv(long long k);
    void extend_to(long long k);
};

// Fiberwise scaling (x, v) -> (x, lambda v); lambda must be even.
TangentVector dilate(const TangentVector& t, const GrassmannNumber& lambda);

// Base point of the time-1 flow; blow-up is reported as a DomainError naming
// the exponential-map domain.
SuperPoint exp_map(const GeodesicField& field, const TangentVector& t,
                   const IntegratorOptions& opt);

// Per-coordinate obstruction to integrating the odd-bundle analog of the
// geodesic field: -2 sum_{jk} (-1)^{eps_k} vbar^k vbar^j Gamma^i_{jk}(x).
// Vanishes exactly when the connection is torsion-free.
std::vector<GrassmannNumber> odd_autocommutator_obstruction(const ChristoffelField& gamma,
                                                            const SuperPoint& x,
                                                            std::span<const GrassmannNumber> vbar);

struct OddFlowError : DomainError {
    OddFlowError(const std::string& msg, std::vector<GrassmannNumber> obstruction_values)
        : DomainError(msg), obstruction(std::move(obstruction_values)) {}
    std::vector<GrassmannNumber> obstruction;
};

// Exact straight-line flow (x + tau*vbar, vbar) of the odd tangent bundle;
// requires a torsion-free connection (checked at the base point and the
// given samples) and an odd tau.
std::pair<SuperPoint, TangentVector> odd_geodesic_flow(const ChristoffelField& gamma,
                                                       const SuperPoint& x,
                                                       const TangentVector& vbar,
                                                       const GrassmannNumber& tau,
                                                       std::span<const SuperPoint> tf_samples,
                                                       double tol = 1e-10);

// CSV with one row per accepted step: "t" then every Grassmann coefficient
// of every base coordinate and velocity component ("x1[body]", "x1[1_2]",
// velocity columns prefixed with 'd'), then any extra columns.
struct ExtraColumn {
    std::string name;
    std::vector<GrassmannNumber> values; // one per trajectory row
};

void write_trajectory_csv(std::ostream& os, const GeodesicField& field, const Trajectory& traj,
                          int generators, std::span<const ExtraColumn> extras = {});

} // namespace supergeo
