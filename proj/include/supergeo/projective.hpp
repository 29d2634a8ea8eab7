#pragma once

#include <optional>
#include <string>
#include <vector>

#include "supergeo/flows.hpp"

namespace supergeo {

// Connection shifted by an even 1-form:
//   Gammahat^i_{jk} = Gamma^i_{jk} + delta^i_k alpha_j
//                     + (-1)^{eps_j eps_k} delta^i_j alpha_k.
// The shifted connection has the same geodesics up to reparametrization.
ChristoffelField shift_connection(const ChristoffelField& gamma, const OneForm& alpha);

// Difference tensor of a shift: diff(gamma, shift(gamma, alpha)), i.e.
//   S^i_{jk} = -(delta^i_k alpha_j + (-1)^{eps_j eps_k} delta^i_j alpha_k).
DifferenceTensor projective_difference_form(const OneForm& alpha);

struct RecoveredOneForm {
    bool projective = false;     // S has the shape of a shift difference
    std::optional<OneForm> alpha; // the shift 1-form (recover . diff . shift = id)
    double residual = 0.0;       // max reconstruction residual over the samples
};

// Inverts S -> alpha when S = projective_difference_form(alpha); otherwise
// reports failure with the reconstruction residual.
RecoveredOneForm recover_oneform(const DifferenceTensor& S, std::span<const SuperPoint> samples,
                                 double tol = 1e-9);

// Reparametrization r with r(0) = 0, r'(0) = 1 carrying the geodesics of
// gamma onto those of shift_connection(gamma, alpha):
//   r' = s,   s' = s^2 * <Psi_2(r)|alpha_ode(Psi_1(r))>,
// where alpha_ode = -2 alpha is the projective normal form of the shift.
struct Reparametrization {
    std::vector<double> times;
    std::vector<GrassmannNumber> r;
    std::vector<GrassmannNumber> s;
    double step = 0.0;
};

Reparametrization solve_reparametrization(const ChristoffelField& gamma, const OneForm& alpha,
                                          const TangentVector& init, double t_end,
                                          const IntegratorOptions& opt);

struct EquivalenceReport {
    bool equivalent = false;
    std::string reason;                   // set when not equivalent
    double form_residual = 0.0;           // projective-form reconstruction residual
    std::optional<OneForm> alpha;         // recovered shift 1-form
    std::vector<Reparametrization> reparams; // one per initial condition
    std::vector<double> init_residuals;   // geodesic-coincidence residual per init
    std::vector<std::string> init_errors; // integration failures, empty if fine
    double tolerance = 1e-6;

    std::string render() const;
};

// Full pipeline: S = diff(A, B); alpha = recover(S); r = reparametrization;
// verdict EQUIVALENT iff max_t |Psi_1(r(t)) - Psihat_1(t)| <= tol for every
// initial condition. Both connections must be torsion-free at the samples.
EquivalenceReport same_geodesics_check(const ChristoffelField& gamma_a,
                                       const ChristoffelField& gamma_b,
                                       std::span<const TangentVector> inits, double t_end,
                                       const IntegratorOptions& opt, double tol,
                                       std::span<const SuperPoint> samples);

} // namespace supergeo
