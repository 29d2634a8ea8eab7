#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "supergeo/superexpr.hpp"

namespace supergeo {

// Point of a coordinate superdomain: one Grassmann value per coordinate,
// with the slot parity of the coordinate (zero passes any slot).
class SuperPoint {
public:
    SuperPoint(CoordinateSystemPtr coords, std::vector<GrassmannNumber> values);

    const CoordinateSystem& coords() const { return *coords_; }
    const CoordinateSystemPtr& coords_ptr() const { return coords_; }
    const std::vector<GrassmannNumber>& values() const { return values_; }
    const GrassmannNumber& value(int i) const { return values_.at(i); }
    int generators() const { return generators_; }

    EvalEnv env() const { return EvalEnv{coords_.get(), values_, generators_}; }

private:
    CoordinateSystemPtr coords_;
    std::vector<GrassmannNumber> values_;
    int generators_;
};

GrassmannNumber evaluate_at(const SuperExpr& e, const SuperPoint& p, EvalCache* cache = nullptr);

// Tangent vector at a base point. The same storage serves the even tangent
// bundle (component parities match the coordinate parities) and the odd one
// (component parities reversed); operations state which form they expect.
struct TangentVector {
    SuperPoint base;
    std::vector<GrassmannNumber> components;

    bool matches_even_bundle() const;
    bool matches_odd_bundle() const;
};

void require_even_bundle(const TangentVector& t);
void require_odd_bundle(const TangentVector& t);

// Even 1-form with expression components; contraction uses the left
// convention <v|alpha> = sum_i v^i * alpha_i.
class OneForm {
public:
    OneForm(CoordinateSystemPtr coords, std::vector<SuperExpr> components);

    const CoordinateSystem& coords() const { return *coords_; }
    const CoordinateSystemPtr& coords_ptr() const { return coords_; }
    const std::vector<SuperExpr>& components() const { return components_; }
    const SuperExpr& component(int i) const { return components_.at(i); }

    // throws unless every component i has parity eps_i (or is zero)
    void require_even() const;

    std::vector<GrassmannNumber> eval_components(const SuperPoint& p) const;
    GrassmannNumber contract(std::span<const GrassmannNumber> v, const SuperPoint& p) const;

    OneForm scaled(double factor) const;

private:
    CoordinateSystemPtr coords_;
    std::vector<SuperExpr> components_;
};

// Parity-preserving coordinate change y^p = f^p(x); caches the Jacobian and
// second derivative expressions.
class CoordinateChange {
public:
    CoordinateChange(CoordinateSystemPtr source, CoordinateSystemPtr target,
                     std::vector<SuperExpr> formulas);

    const CoordinateSystem& source() const { return *source_; }
    const CoordinateSystem& target() const { return *target_; }
    const CoordinateSystemPtr& target_ptr() const { return target_; }

    const SuperExpr& formula(int p) const { return formulas_.at(p); }
    // J(p, i) = d(y^p)/d(x^i), left derivative
    const SuperExpr& jacobian(int p, int i) const;
    // H(r, j, k) = d_j d_k y^r
    const SuperExpr& second_derivative(int r, int j, int k) const;

    SuperPoint map_point(const SuperPoint& p) const;

    // w^p = sum_i v^i * J(p, i)(x); throws if the body Jacobian is singular
    // at the base point.
    TangentVector pushforward(const TangentVector& t) const;

    // composition: (other after this)(x) = other(this(x))
    CoordinateChange compose_with(const CoordinateChange& outer) const;

private:
    CoordinateSystemPtr source_, target_;
    std::vector<SuperExpr> formulas_;
    std::vector<SuperExpr> jacobian_;     // n*n
    std::vector<SuperExpr> second_;       // n*n*n, built lazily? kept eager
    void check_body_jacobian(const SuperPoint& p) const;
};

// Coefficient functions of the expansion e = sum_I xi^I * f_I over the given
// odd coordinates, the xi^I factored to the left in increasing declaration
// order. Keys are bitmasks over positions in `odd_names`.
std::map<std::uint32_t, SuperExpr> expand_coefficients(const SuperExpr& e,
                                                       const CoordinateSystem& coords,
                                                       std::span<const std::string> odd_names);

// Rebuilds sum_I xi^I * f_I from expansion coefficients.
SuperExpr reassemble_coefficients(const std::map<std::uint32_t, SuperExpr>& parts,
                                  const CoordinateSystem& coords,
                                  std::span<const std::string> odd_names);

} // namespace supergeo
