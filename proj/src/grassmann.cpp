#include "supergeo/grassmann.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace supergeo {

namespace {
double g_cleanup_threshold = 0.0;
} // namespace

Parity parity_product(Parity a, Parity b) {
    if (a == Parity::Inhomogeneous || b == Parity::Inhomogeneous)
        return Parity::Inhomogeneous;
    return (a == b) ? Parity::Even : Parity::Odd;
}

void GrassmannNumber::set_cleanup_threshold(double t) { g_cleanup_threshold = t; }
double GrassmannNumber::cleanup_threshold() { return g_cleanup_threshold; }

GrassmannNumber GrassmannNumber::zero(int generators) {
    GrassmannNumber g;
    g.generators_ = generators;
    return g;
}

GrassmannNumber GrassmannNumber::scalar(int generators, double value) {
    return monomial(generators, 0, value);
}

GrassmannNumber GrassmannNumber::generator(int generators, int k) {
    if (k < 1 || k > generators)
        throw DomainError("generator index " + std::to_string(k) + " outside 1.." +
                          std::to_string(generators));
    return monomial(generators, std::uint32_t{1} << (k - 1), 1.0);
}

GrassmannNumber GrassmannNumber::monomial(int generators, std::uint32_t mask, double value) {
    GrassmannNumber g;
    g.generators_ = generators;
    if (generators < 0 || generators > 31)
        throw DomainError("generator count must be in 0..31");
    if (mask >> generators)
        throw DomainError("monomial mask uses generators beyond " + std::to_string(generators));
    g.terms_.emplace_back(mask, value);
    g.normalize();
    return g;
}

GrassmannNumber GrassmannNumber::from_terms(int generators, std::vector<Term> terms) {
    GrassmannNumber g;
    g.generators_ = generators;
    for (const auto& [mask, c] : terms) {
        (void)c;
        if (mask >> generators)
            throw DomainError("term mask uses generators beyond " + std::to_string(generators));
    }
    g.terms_ = std::move(terms);
    g.normalize();
    return g;
}

void GrassmannNumber::normalize() {
    std::sort(terms_.begin(), terms_.end(),
              [](const Term& a, const Term& b) { return a.first < b.first; });
    std::vector<Term> out;
    out.reserve(terms_.size());
    for (const auto& [mask, c] : terms_) {
        if (!out.empty() && out.back().first == mask)
            out.back().second += c;
        else
            out.emplace_back(mask, c);
    }
    std::erase_if(out, [](const Term& t) {
        return std::abs(t.second) <= g_cleanup_threshold || t.second == 0.0;
    });
    terms_ = std::move(out);
}

void GrassmannNumber::require_same_generators(const GrassmannNumber& a, const GrassmannNumber& b) {
    if (a.generators_ != b.generators_)
        throw DomainError("generator count mismatch: " + std::to_string(a.generators_) + " vs " +
                          std::to_string(b.generators_));
}

double GrassmannNumber::coefficient(std::uint32_t mask) const {
    auto it = std::lower_bound(terms_.begin(), terms_.end(), mask,
                               [](const Term& t, std::uint32_t m) { return t.first < m; });
    if (it != terms_.end() && it->first == mask)
        return it->second;
    return 0.0;
}

Parity GrassmannNumber::parity() const {
    bool any_even = false, any_odd = false;
    for (const auto& [mask, c] : terms_) {
        (void)c;
        if (std::popcount(mask) % 2 == 0)
            any_even = true;
        else
            any_odd = true;
    }
    if (any_even && any_odd)
        return Parity::Inhomogeneous;
    return any_odd ? Parity::Odd : Parity::Even;
}

GrassmannNumber GrassmannNumber::conjugate() const {
    GrassmannNumber out = *this;
    for (auto& [mask, c] : out.terms_)
        if (std::popcount(mask) % 2 == 1)
            c = -c;
    return out;
}

GrassmannNumber GrassmannNumber::soul() const {
    GrassmannNumber out = *this;
    std::erase_if(out.terms_, [](const Term& t) { return t.first == 0; });
    return out;
}

double GrassmannNumber::norm_max() const {
    double m = 0.0;
    for (const auto& [mask, c] : terms_) {
        (void)mask;
        m = std::max(m, std::abs(c));
    }
    return m;
}

GrassmannNumber GrassmannNumber::operator-() const {
    GrassmannNumber out = *this;
    for (auto& t : out.terms_)
        t.second = -t.second;
    return out;
}

GrassmannNumber& GrassmannNumber::operator+=(const GrassmannNumber& rhs) {
    *this = *this + rhs;
    return *this;
}

GrassmannNumber& GrassmannNumber::operator-=(const GrassmannNumber& rhs) {
    *this = *this - rhs;
    return *this;
}

GrassmannNumber operator+(const GrassmannNumber& a, const GrassmannNumber& b) {
    GrassmannNumber::require_same_generators(a, b);
    GrassmannNumber out;
    out.generators_ = a.generators_;
    out.terms_.reserve(a.terms_.size() + b.terms_.size());
    out.terms_ = a.terms_;
    out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
    out.normalize();
    return out;
}

GrassmannNumber operator-(const GrassmannNumber& a, const GrassmannNumber& b) {
    return a + (-b);
}

int merge_sign(std::uint32_t I, std::uint32_t J) {
    int inversions = 0;
    for (std::uint32_t rest = I; rest;) {
        std::uint32_t low = rest & (~rest + 1);
        inversions += std::popcount(J & (low - 1));
        rest &= rest - 1;
    }
    return (inversions % 2 == 0) ? 1 : -1;
}

GrassmannNumber operator*(const GrassmannNumber& a, const GrassmannNumber& b) {
    GrassmannNumber::require_same_generators(a, b);
    GrassmannNumber out;
    out.generators_ = a.generators_;
    out.terms_.reserve(a.terms_.size() * b.terms_.size());
    for (const auto& [ma, ca] : a.terms_) {
        for (const auto& [mb, cb] : b.terms_) {
            if (ma & mb)
                continue;
            out.terms_.emplace_back(ma | mb, merge_sign(ma, mb) * ca * cb);
        }
    }
    out.normalize();
    return out;
}

GrassmannNumber operator*(double c, const GrassmannNumber& a) {
    GrassmannNumber out = a;
    for (auto& t : out.terms_)
        t.second *= c;
    out.normalize();
    return out;
}

GrassmannNumber operator*(const GrassmannNumber& a, double c) { return c * a; }

bool operator==(const GrassmannNumber& a, const GrassmannNumber& b) {
    return a.generators_ == b.generators_ && a.terms_ == b.terms_;
}

GrassmannNumber GrassmannNumber::inverse() const {
    double b = body();
    if (b == 0.0)
        throw DomainError("non-invertible Grassmann element: zero body");
    GrassmannNumber ratio = (-1.0 / b) * soul(); // -n/b
    GrassmannNumber acc = scalar(generators_, 1.0);
    GrassmannNumber power = scalar(generators_, 1.0);
    for (int k = 1; k <= generators_; ++k) {
        power = power * ratio;
        if (power.is_zero())
            break;
        acc += power;
    }
    return (1.0 / b) * acc;
}

GrassmannNumber apply_taylor(std::span<const double> derivs, const GrassmannNumber& a) {
    if (a.parity() != Parity::Even)
        throw DomainError("smooth-function extension requires an even argument");
    GrassmannNumber n = a.soul();
    if (derivs.empty())
        throw DomainError("empty derivative sequence");
    GrassmannNumber result = GrassmannNumber::scalar(a.generators(), derivs[0]);
    GrassmannNumber power = GrassmannNumber::scalar(a.generators(), 1.0);
    double factorial = 1.0;
    for (int k = 1;; ++k) {
        power = power * n;
        if (power.is_zero())
            break;
        factorial *= k;
        if (k >= static_cast<int>(derivs.size()))
            throw DomainError("derivative sequence too short for soul of order " +
                              std::to_string(k));
        result += (derivs[k] / factorial) * power;
    }
    return result;
}

GrassmannNumber apply_smooth(std::span<const std::function<double(double)>> derivs,
                             const GrassmannNumber& a) {
    if (a.parity() != Parity::Even)
        throw DomainError("smooth-function extension requires an even argument");
    double b = a.body();
    std::vector<double> values;
    values.reserve(derivs.size());
    for (const auto& f : derivs)
        values.push_back(f(b));
    return apply_taylor(values, a);
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v)
            return buf;
    }
    return buf;
}

namespace {

std::string mask_monomial(std::uint32_t mask) {
    std::string s;
    bool first = true;
    for (int k = 0; k < 32; ++k) {
        if (mask & (std::uint32_t{1} << k)) {
            if (!first)
                s += '^';
            s += 't' + std::to_string(k + 1);
            first = false;
        }
    }
    return s;
}

} // namespace

std::string mask_label(std::uint32_t mask) {
    if (mask == 0)
        return "body";
    std::string s;
    bool first = true;
    for (int k = 0; k < 32; ++k) {
        if (mask & (std::uint32_t{1} << k)) {
            if (!first)
                s += '_';
            s += std::to_string(k + 1);
            first = false;
        }
    }
    return s;
}

std::string to_string(const GrassmannNumber& a) {
    if (a.terms().empty())
        return "0";
    std::string out;
    bool first = true;
    for (const auto& [mask, c] : a.terms()) {
        double value = c;
        if (first) {
            if (value < 0) {
                out += '-';
                value = -value;
            }
        } else {
            out += (value < 0) ? " - " : " + ";
            if (value < 0)
                value = -value;
        }
        out += format_double(value);
        if (mask != 0) {
            out += '*';
            out += mask_monomial(mask);
        }
        first = false;
    }
    return out;
}

GrassmannNumber parse_grassmann(const std::string& text, int generators) {
    // term := number ['*' 't'k ('^' 't'k)*] ; terms joined by '+'/'-'
    std::vector<GrassmannNumber::Term> terms;
    const char* p = text.c_str();
    auto skip_ws = [&] {
        while (*p == ' ' || *p == '\t')
            ++p;
    };
    auto where = [&] {
        return "column " + std::to_string(p - text.c_str() + 1);
    };
    skip_ws();
    bool first = true;
    while (true) {
        skip_ws();
        if (*p == '\0') {
            if (first)
                throw ParseError("empty Grassmann literal", where());
            break;
        }
        double sign = 1.0;
        if (*p == '+' || *p == '-') {
            if (first && *p == '+')
                throw ParseError("unexpected leading '+'", where());
            sign = (*p == '-') ? -1.0 : 1.0;
            ++p;
            skip_ws();
        } else if (!first) {
            throw ParseError("expected '+' or '-' between terms", where());
        }
        char* end = nullptr;
        double c = std::strtod(p, &end);
        if (end == p)
            throw ParseError("expected a coefficient", where());
        p = end;
        std::uint32_t mask = 0;
        skip_ws();
        if (*p == '*') {
            ++p;
            while (true) {
                skip_ws();
                if (*p != 't')
                    throw ParseError("expected generator 'tK'", where());
                ++p;
                char* gend = nullptr;
                long k = std::strtol(p, &gend, 10);
                if (gend == p || k < 1 || k > generators)
                    throw ParseError("bad generator index", where());
                std::uint32_t bit = std::uint32_t{1} << (k - 1);
                if (mask & bit)
                    throw ParseError("repeated generator in monomial", where());
                mask |= bit;
                p = gend;
                skip_ws();
                if (*p == '^') {
                    ++p;
                    continue;
                }
                break;
            }
        }
        terms.emplace_back(mask, sign * c);
        first = false;
    }
    return GrassmannNumber::from_terms(generators, std::move(terms));
}

std::vector<GrassmannNumber> solve_linear(std::vector<std::vector<GrassmannNumber>> A,
                                          std::vector<GrassmannNumber> b) {
    const int n = static_cast<int>(A.size());
    if (n == 0)
        return {};
    if (static_cast<int>(b.size()) != n)
        throw DomainError("linear system shape mismatch");
    for (const auto& row : A)
        if (static_cast<int>(row.size()) != n)
            throw DomainError("linear system must be square");

    for (int col = 0; col < n; ++col) {
        int pivot = -1;
        double best = 0.0;
        for (int r = col; r < n; ++r) {
            double m = std::abs(A[r][col].body());
            if (m > best) {
                best = m;
                pivot = r;
            }
        }
        if (pivot < 0 || best < 1e-13)
            throw DomainError("singular linear system: no pivot with nonzero body");
        std::swap(A[col], A[pivot]);
        std::swap(b[col], b[pivot]);
        GrassmannNumber inv_pivot = A[col][col].inverse();
        for (int r = col + 1; r < n; ++r) {
            if (A[r][col].is_zero())
                continue;
            GrassmannNumber factor = A[r][col] * inv_pivot;
            for (int c = col; c < n; ++c)
                A[r][c] -= factor * A[col][c];
            b[r] -= factor * b[col];
        }
    }
    std::vector<GrassmannNumber> z(n);
    for (int r = n - 1; r >= 0; --r) {
        GrassmannNumber rhs = b[r];
        for (int c = r + 1; c < n; ++c)
            rhs -= A[r][c] * z[c];
        z[r] = A[r][r].inverse() * rhs;
    }
    return z;
}

} // namespace supergeo
