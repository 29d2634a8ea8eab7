#pragma once

#include <span>
#include <vector>

#include "supergeo/geometry.hpp"

namespace supergeo {

// Rank-3 field of expressions T^i_{jk} over a coordinate system.
class ExprTensor3 {
public:
    explicit ExprTensor3(CoordinateSystemPtr coords);

    const CoordinateSystem& coords() const { return *coords_; }
    const CoordinateSystemPtr& coords_ptr() const { return coords_; }
    int dim() const { return coords_->size(); }

    const SuperExpr& entry(int i, int j, int k) const;
    void set_entry(int i, int j, int k, SuperExpr e);

    std::vector<GrassmannNumber> eval_at(const SuperPoint& p, EvalCache* cache = nullptr) const;

protected:
    CoordinateSystemPtr coords_;
    std::vector<SuperExpr> comp_; // (i*n + j)*n + k
};

using TorsionTensor = ExprTensor3;
using DifferenceTensor = ExprTensor3;

// Connection on the tangent bundle given by Christoffel symbols
// Gamma^i_{jk}(x); entry parity must equal eps_i + eps_j + eps_k.
class ChristoffelField : public ExprTensor3 {
public:
    explicit ChristoffelField(CoordinateSystemPtr coords) : ExprTensor3(std::move(coords)) {}

    // throws if some nonzero entry has the wrong parity
    void validate_parities() const;
};

// Components of nabla_X Y for expression vector fields X, Y. X must be
// parity-homogeneous; returns the parity bit of X via x_parity if nonnull.
std::vector<SuperExpr> covariant_derivative(const ChristoffelField& gamma,
                                            std::span<const SuperExpr> X,
                                            std::span<const SuperExpr> Y,
                                            int* x_parity = nullptr);

// Parity bit of a homogeneous vector field (component i has parity
// eps(X) + eps_i); throws on inhomogeneous fields.
int vector_field_parity(const CoordinateSystem& coords, std::span<const SuperExpr> X);

// Splits an arbitrary vector field into its even and odd parts, so that
// sign-sensitive operations can be extended by bilinearity.
std::pair<std::vector<SuperExpr>, std::vector<SuperExpr>>
split_vector_field(const CoordinateSystem& coords, std::span<const SuperExpr> X);

TorsionTensor torsion(const ChristoffelField& gamma);

struct ResidualReport {
    bool ok;
    double max_residual;
};

ResidualReport is_torsion_free(const ChristoffelField& gamma,
                               std::span<const SuperPoint> samples, double tol = 1e-10);

// S = A - B componentwise; both fields over the same coordinate system.
DifferenceTensor difference_tensor(const ChristoffelField& a, const ChristoffelField& b);

// Max residual of the Christoffel transformation law under `change`, with
// `transformed` the candidate symbols over the target system, evaluated at
// the sample points (in source coordinates).
double transform_christoffel_residual(const ChristoffelField& gamma,
                                      const CoordinateChange& change,
                                      const ChristoffelField& transformed,
                                      std::span<const SuperPoint> samples);

// Solves the transformation law for the target symbols at one point; the
// change must have an invertible body Jacobian there.
std::vector<GrassmannNumber> solve_transformed_christoffel_at(const ChristoffelField& gamma,
                                                              const CoordinateChange& change,
                                                              const SuperPoint& p);

// Target symbols of a connection under an affine change (constant Jacobian):
// built symbolically through the inverse change.
ChristoffelField transform_christoffel_linear(const ChristoffelField& gamma,
                                              const CoordinateChange& change);

} // namespace supergeo
