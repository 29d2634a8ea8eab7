#include "supergeo/connection.hpp"

#include <cmath>

namespace supergeo {

ExprTensor3::ExprTensor3(CoordinateSystemPtr coords) : coords_(std::move(coords)) {
    if (!coords_)
        throw DomainError("null coordinate system");
    const std::size_t n = static_cast<std::size_t>(coords_->size());
    comp_.assign(n * n * n, SuperExpr(0.0));
}

const SuperExpr& ExprTensor3::entry(int i, int j, int k) const {
    const int n = dim();
    return comp_.at((static_cast<std::size_t>(i) * n + j) * n + k);
}

void ExprTensor3::set_entry(int i, int j, int k, SuperExpr e) {
    const int n = dim();
    comp_.at((static_cast<std::size_t>(i) * n + j) * n + k) = std::move(e);
}

std::vector<GrassmannNumber> ExprTensor3::eval_at(const SuperPoint& p, EvalCache* cache) const {
    EvalCache local;
    EvalCache* use = cache ? cache : &local;
    std::vector<GrassmannNumber> out;
    out.reserve(comp_.size());
    for (const auto& e : comp_)
        out.push_back(evaluate_at(e, p, use));
    return out;
}

void ChristoffelField::validate_parities() const {
    const int n = dim();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                const SuperExpr& e = entry(i, j, k);
                if (e.is_zero_constant())
                    continue;
                int want = (coords_->parity_bit(i) + coords_->parity_bit(j) +
                            coords_->parity_bit(k)) % 2;
                Parity p = infer_parity(e);
                if (p == Parity::Inhomogeneous ||
                    (p == Parity::Odd ? 1 : 0) != want)
                    throw DomainError("Christoffel entry (" + std::to_string(i + 1) + "," +
                                      std::to_string(j + 1) + "," + std::to_string(k + 1) +
                                      ") has the wrong parity");
            }
}

int vector_field_parity(const CoordinateSystem& coords, std::span<const SuperExpr> X) {
    if (static_cast<int>(X.size()) != coords.size())
        throw DomainError("vector field component count mismatch");
    int parity = -1;
    for (int j = 0; j < coords.size(); ++j) {
        if (X[j].is_zero_constant())
            continue;
        Parity p = infer_parity(X[j]);
        if (p == Parity::Inhomogeneous)
            throw DomainError("vector field component " + std::to_string(j + 1) +
                              " is inhomogeneous");
        int field_bit = ((p == Parity::Odd ? 1 : 0) + coords.parity_bit(j)) % 2;
        if (parity == -1)
            parity = field_bit;
        else if (parity != field_bit)
            throw DomainError("vector field is not parity-homogeneous");
    }
    return parity == -1 ? 0 : parity;
}

std::pair<std::vector<SuperExpr>, std::vector<SuperExpr>>
split_vector_field(const CoordinateSystem& coords, std::span<const SuperExpr> X) {
    if (static_cast<int>(X.size()) != coords.size())
        throw DomainError("vector field component count mismatch");
    std::vector<SuperExpr> even_part, odd_part;
    for (int j = 0; j < coords.size(); ++j) {
        // the even field carries the eps_j-parity part of component j
        SuperExpr matching = parity_part(X[j], coords.parity(j));
        SuperExpr reversed = parity_part(
            X[j], coords.parity_bit(j) ? Parity::Even : Parity::Odd);
        even_part.push_back(std::move(matching));
        odd_part.push_back(std::move(reversed));
    }
    return {std::move(even_part), std::move(odd_part)};
}

std::vector<SuperExpr> covariant_derivative(const ChristoffelField& gamma,
                                            std::span<const SuperExpr> X,
                                            std::span<const SuperExpr> Y,
                                            int* x_parity) {
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    int xp = vector_field_parity(cs, X);
    if (x_parity)
        *x_parity = xp;
    if (static_cast<int>(Y.size()) != n)
        throw DomainError("vector field component count mismatch");

    std::vector<SuperExpr> out(n, SuperExpr(0.0));
    for (int i = 0; i < n; ++i) {
        SuperExpr acc(0.0);
        for (int j = 0; j < n; ++j)
            acc = acc + X[j] * differentiate(Y[i], cs, cs.name(j));
        for (int j = 0; j < n; ++j) {
            if (X[j].is_zero_constant())
                continue;
            for (int k = 0; k < n; ++k) {
                const SuperExpr& g = gamma.entry(i, j, k);
                if (g.is_zero_constant() || Y[k].is_zero_constant())
                    continue;
                acc = acc + X[j] * conjugate_power(Y[k], cs.parity_bit(j)) * g;
            }
        }
        out[i] = acc;
    }
    return out;
}

TorsionTensor torsion(const ChristoffelField& gamma) {
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    TorsionTensor t(gamma.coords_ptr());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                double sign = (cs.parity_bit(j) && cs.parity_bit(k)) ? -1.0 : 1.0;
                t.set_entry(i, j, k,
                            gamma.entry(i, j, k) - SuperExpr(sign) * gamma.entry(i, k, j));
            }
    return t;
}

ResidualReport is_torsion_free(const ChristoffelField& gamma,
                               std::span<const SuperPoint> samples, double tol) {
    TorsionTensor t = torsion(gamma);
    double worst = 0.0;
    for (const auto& p : samples) {
        EvalCache cache;
        for (const auto& v : t.eval_at(p, &cache))
            worst = std::max(worst, v.norm_max());
    }
    return ResidualReport{worst <= tol, worst};
}

DifferenceTensor difference_tensor(const ChristoffelField& a, const ChristoffelField& b) {
    if (!a.coords().same_as(b.coords()))
        throw DomainError("difference tensor requires matching coordinate systems");
    const int n = a.dim();
    DifferenceTensor s(a.coords_ptr());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                s.set_entry(i, j, k, a.entry(i, j, k) - b.entry(i, j, k));
    return s;
}

namespace {

struct TransformData {
    std::vector<GrassmannNumber> J;     // n*n, J[p*n+i] = d(y^p)/d(x^i) at x
    std::vector<GrassmannNumber> H;     // n*n*n, H[(r*n+j)*n+k] = d_j d_k y^r
    std::vector<GrassmannNumber> gamma; // source symbols at x
    std::vector<GrassmannNumber> lhs;   // (r*n+j)*n+k: sum_i Gamma^i_jk J^r_i
    SuperPoint target_point;
};

TransformData eval_transform_parts(const ChristoffelField& gamma, const CoordinateChange& change,
                                   const SuperPoint& p) {
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    const int L = p.generators();
    EvalCache cache;
    TransformData d{.J = {}, .H = {}, .gamma = {}, .lhs = {}, .target_point = change.map_point(p)};
    d.J.resize(static_cast<std::size_t>(n) * n);
    d.H.resize(static_cast<std::size_t>(n) * n * n);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < n; ++i)
            d.J[r * n + i] = evaluate_at(change.jacobian(r, i), p, &cache);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                d.H[(r * n + j) * n + k] = evaluate_at(change.second_derivative(r, j, k), p, &cache);
    d.gamma = gamma.eval_at(p, &cache);
    d.lhs.assign(static_cast<std::size_t>(n) * n * n, GrassmannNumber::zero(L));
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                GrassmannNumber acc = GrassmannNumber::zero(L);
                for (int i = 0; i < n; ++i)
                    acc += d.gamma[(i * n + j) * n + k] * d.J[r * n + i];
                d.lhs[(r * n + j) * n + k] = acc;
            }
    return d;
}

double law_sign(const CoordinateSystem& cs, int j, int t, int k) {
    return (cs.parity_bit(j) && ((cs.parity_bit(t) + cs.parity_bit(k)) % 2 == 1)) ? -1.0 : 1.0;
}

} // namespace

double transform_christoffel_residual(const ChristoffelField& gamma,
                                      const CoordinateChange& change,
                                      const ChristoffelField& transformed,
                                      std::span<const SuperPoint> samples) {
    const CoordinateSystem& cs = gamma.coords();
    if (!cs.same_as(change.source()))
        throw DomainError("connection and change live on different systems");
    if (!transformed.coords().same_as(change.target()))
        throw DomainError("transformed symbols must live on the target system");
    const int n = cs.size();
    double worst = 0.0;
    for (const auto& p : samples) {
        TransformData d = eval_transform_parts(gamma, change, p);
        EvalCache tcache;
        std::vector<GrassmannNumber> tg = transformed.eval_at(d.target_point, &tcache);
        for (int r = 0; r < n; ++r)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    GrassmannNumber rhs = d.H[(r * n + j) * n + k];
                    for (int s = 0; s < n; ++s)
                        for (int t = 0; t < n; ++t) {
                            const GrassmannNumber& g = tg[(r * n + s) * n + t];
                            if (g.is_zero())
                                continue;
                            rhs += law_sign(cs, j, t, k) * (d.J[t * n + k] * d.J[s * n + j] * g);
                        }
                    worst = std::max(worst, (d.lhs[(r * n + j) * n + k] - rhs).norm_max());
                }
    }
    return worst;
}

std::vector<GrassmannNumber> solve_transformed_christoffel_at(const ChristoffelField& gamma,
                                                              const CoordinateChange& change,
                                                              const SuperPoint& p) {
    const CoordinateSystem& cs = gamma.coords();
    const int n = cs.size();
    const int L = p.generators();
    TransformData d = eval_transform_parts(gamma, change, p);

    // per upper index r: linear system over the n^2 unknowns tg^r_{st}
    std::vector<std::vector<GrassmannNumber>> M(
        static_cast<std::size_t>(n) * n,
        std::vector<GrassmannNumber>(static_cast<std::size_t>(n) * n,
                                     GrassmannNumber::zero(L)));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
            for (int s = 0; s < n; ++s)
                for (int t = 0; t < n; ++t)
                    M[j * n + k][s * n + t] =
                        law_sign(cs, j, t, k) * (d.J[t * n + k] * d.J[s * n + j]);

    std::vector<GrassmannNumber> out(static_cast<std::size_t>(n) * n * n);
    for (int r = 0; r < n; ++r) {
        std::vector<GrassmannNumber> b(static_cast<std::size_t>(n) * n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                b[j * n + k] =
                    d.lhs[(r * n + j) * n + k] - d.H[(r * n + j) * n + k];
        std::vector<GrassmannNumber> z = solve_linear(M, b);
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t)
                out[(r * n + s) * n + t] = z[s * n + t];
    }
    return out;
}

ChristoffelField transform_christoffel_linear(const ChristoffelField& gamma,
                                              const CoordinateChange& change) {
    const CoordinateSystem& src = gamma.coords();
    const CoordinateSystem& dst = change.target();
    const int n = src.size();

    // constant Jacobian; parity preservation makes it block-diagonal and real
    std::vector<double> J(static_cast<std::size_t>(n) * n);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i) {
            const SuperExpr& e = change.jacobian(p, i);
            if (!e.is_constant())
                throw DomainError("change is not affine: Jacobian entry depends on coordinates");
            J[p * n + i] = e.node().value;
        }
    std::vector<double> offset(n);
    for (int p = 0; p < n; ++p) {
        SuperExpr c = change.formula(p);
        for (int i = 0; i < n; ++i)
            c = substitute(c, src.name(i), SuperExpr(0.0));
        if (!c.is_constant())
            throw DomainError("change is not affine");
        offset[p] = c.node().value;
    }

    // real inverse K of J
    std::vector<double> K(static_cast<std::size_t>(n) * n, 0.0);
    {
        std::vector<double> a = J;
        for (int i = 0; i < n; ++i)
            K[i * n + i] = 1.0;
        for (int c = 0; c < n; ++c) {
            int pivot = -1;
            double best = 0.0;
            for (int r = c; r < n; ++r)
                if (std::abs(a[r * n + c]) > best) {
                    best = std::abs(a[r * n + c]);
                    pivot = r;
                }
            if (pivot < 0 || best < 1e-12)
                throw DomainError("affine change is singular");
            for (int k = 0; k < n; ++k) {
                std::swap(a[pivot * n + k], a[c * n + k]);
                std::swap(K[pivot * n + k], K[c * n + k]);
            }
            double inv = 1.0 / a[c * n + c];
            for (int k = 0; k < n; ++k) {
                a[c * n + k] *= inv;
                K[c * n + k] *= inv;
            }
            for (int r = 0; r < n; ++r) {
                if (r == c)
                    continue;
                double f = a[r * n + c];
                if (f == 0.0)
                    continue;
                for (int k = 0; k < n; ++k) {
                    a[r * n + k] -= f * a[c * n + k];
                    K[r * n + k] -= f * K[c * n + k];
                }
            }
        }
    }

    // x^i(y) = sum_p K^i_p (y^p - offset_p)
    std::vector<SuperExpr> x_of_y(n, SuperExpr(0.0));
    for (int i = 0; i < n; ++i) {
        SuperExpr acc(0.0);
        for (int p = 0; p < n; ++p)
            acc = acc + SuperExpr(K[i * n + p]) *
                            (SuperExpr::coordinate(dst.name(p), dst.parity(p)) -
                             SuperExpr(offset[p]));
        x_of_y[i] = acc;
    }

    auto pull_back = [&](const SuperExpr& e) {
        SuperExpr s = e;
        for (int i = 0; i < n; ++i)
            s = substitute(s, src.name(i), x_of_y[i]);
        return s;
    };

    ChristoffelField out(change.target_ptr());
    for (int r = 0; r < n; ++r)
        for (int s = 0; s < n; ++s)
            for (int t = 0; t < n; ++t) {
                SuperExpr acc(0.0);
                for (int j = 0; j < n; ++j) {
                    if (K[j * n + s] == 0.0)
                        continue;
                    for (int k = 0; k < n; ++k) {
                        if (K[k * n + t] == 0.0)
                            continue;
                        for (int i = 0; i < n; ++i) {
                            if (J[r * n + i] == 0.0 ||
                                gamma.entry(i, j, k).is_zero_constant())
                                continue;
                            acc = acc + SuperExpr(K[j * n + s] * K[k * n + t] * J[r * n + i]) *
                                            pull_back(gamma.entry(i, j, k));
                        }
                    }
                }
                out.set_entry(r, s, t, acc);
            }
    return out;
}

} // namespace supergeo
