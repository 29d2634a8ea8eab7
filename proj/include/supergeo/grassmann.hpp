#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "supergeo/error.hpp"

namespace supergeo {

enum class Parity { Even, Odd, Inhomogeneous };

// Parity of a product of two homogeneous factors.
Parity parity_product(Parity a, Parity b);

// Element of the exterior algebra on `generators` anticommuting symbols
// t1..tL with real coefficients. Stored sparsely as (bitmask, coefficient)
// pairs sorted by mask; exact zeros are never stored. Every element splits
// into a real body (empty-mask coefficient) and a nilpotent soul.
//
// Values are immutable after construction; all operations return fresh
// values and are safe to share across threads.
class GrassmannNumber {
public:
    using Term = std::pair<std::uint32_t, double>;

    GrassmannNumber() = default; // zero with 0 generators

    static GrassmannNumber zero(int generators);
    static GrassmannNumber scalar(int generators, double value);
    // 1-based generator index k in [1, generators].
    static GrassmannNumber generator(int generators, int k);
    static GrassmannNumber monomial(int generators, std::uint32_t mask, double value);
    static GrassmannNumber from_terms(int generators, std::vector<Term> terms);

    int generators() const { return generators_; }
    const std::vector<Term>& terms() const { return terms_; }

    double coefficient(std::uint32_t mask) const;
    double body() const { return coefficient(0); }
    bool is_zero() const { return terms_.empty(); }

    Parity parity() const;
    bool is_even() const { return parity() == Parity::Even; }
    bool is_odd() const { return parity() == Parity::Odd; }

    // Negates every coefficient sitting on an odd-cardinality mask.
    GrassmannNumber conjugate() const;

    // Exact multiplicative inverse via the terminating geometric series in
    // the soul. Requires a nonzero body.
    GrassmannNumber inverse() const;

    // Largest absolute coefficient.
    double norm_max() const;

    GrassmannNumber soul() const; // value minus its body

    GrassmannNumber operator-() const;
    GrassmannNumber& operator+=(const GrassmannNumber& rhs);
    GrassmannNumber& operator-=(const GrassmannNumber& rhs);

    friend GrassmannNumber operator+(const GrassmannNumber& a, const GrassmannNumber& b);
    friend GrassmannNumber operator-(const GrassmannNumber& a, const GrassmannNumber& b);
    friend GrassmannNumber operator*(const GrassmannNumber& a, const GrassmannNumber& b);
    friend GrassmannNumber operator*(double c, const GrassmannNumber& a);
    friend GrassmannNumber operator*(const GrassmannNumber& a, double c);
    friend bool operator==(const GrassmannNumber& a, const GrassmannNumber& b);

    // Coefficients with |c| <= threshold are dropped during normalization.
    // The default keeps everything except exact zeros.
    static void set_cleanup_threshold(double t);
    static double cleanup_threshold();

private:
    int generators_ = 0;
    std::vector<Term> terms_; // sorted by mask, no dropped coefficients

    void normalize();
    static void require_same_generators(const GrassmannNumber& a, const GrassmannNumber& b);
};

// Sign of merging two disjoint ascending generator sets I and J into I|J,
// i.e. the permutation sign sorting the concatenation.
int merge_sign(std::uint32_t I, std::uint32_t J);

// Taylor evaluation f(body + soul) = sum_k derivs[k] * soul^k / k!,
// exact because the soul is nilpotent. `derivs[k]` is f^(k)(body).
GrassmannNumber apply_taylor(std::span<const double> derivs, const GrassmannNumber& a);

// Extension of a smooth real function to an even argument; derivs[k] is the
// k-th derivative function. Requires an even argument and enough derivatives
// to exhaust the soul's nilpotency order.
GrassmannNumber apply_smooth(std::span<const std::function<double(double)>> derivs,
                             const GrassmannNumber& a);

// Rendering "c0 + c1*t1 + c12*t1^t2" with terms in increasing mask order;
// parses back bit-exactly.
std::string to_string(const GrassmannNumber& a);
GrassmannNumber parse_grassmann(const std::string& text, int generators);

// Mask rendering used by CSV headers and reports: "body" or generator
// indices joined by '_' ("1_2").
std::string mask_label(std::uint32_t mask);

// Shortest decimal rendering that parses back to the identical double;
// the formatting convention for all text output.
std::string format_double(double v);

// Solves A z = b over the Grassmann algebra, with matrix entries acting on
// the unknowns from the left. Gaussian elimination with body-magnitude
// pivoting; throws DomainError if no pivot with nonzero body exists.
std::vector<GrassmannNumber> solve_linear(std::vector<std::vector<GrassmannNumber>> A,
                                          std::vector<GrassmannNumber> b);

} // namespace supergeo
