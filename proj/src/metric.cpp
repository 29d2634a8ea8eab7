#include "supergeo/metric.hpp"

#include <cmath>

namespace supergeo {

namespace {

// Row-ordered determinant of the submatrix given by `rows` (in order) and
// the columns set in `colmask`; entry products keep the row order, which is
// the convention matching the graded symmetry of the metric blocks.
SuperExpr det_recursive(const std::vector<SuperExpr>& m, int n, std::span<const int> rows,
                        std::uint32_t colmask) {
    if (rows.empty())
        return SuperExpr(1.0);
    int row = rows.front();
    auto rest = rows.subspan(1);
    SuperExpr acc(0.0);
    int position = 0;
    for (int c = 0; c < n; ++c) {
        if (!(colmask & (std::uint32_t{1} << c)))
            continue;
        const SuperExpr& entry = m[static_cast<std::size_t>(row) * n + c];
        if (!entry.is_zero_constant()) {
            SuperExpr minor = det_recursive(m, n, rest, colmask & ~(std::uint32_t{1} << c));
            SuperExpr term = entry * minor;
            acc = (position % 2 == 0) ? acc + term : acc - term;
        }
        ++position;
    }
    return acc;
}

} // namespace

SuperMetric::Builder::Builder(CoordinateSystemPtr coords) : coords_(std::move(coords)) {
    if (!coords_)
        throw DomainError("null coordinate system");
    upper_.assign(static_cast<std::size_t>(coords_->size()) * coords_->size(), SuperExpr(0.0));
}

SuperMetric::Builder& SuperMetric::Builder::set_entry(int i, int j, SuperExpr e) {
    const int n = coords_->size();
    if (i < 0 || j < 0 || i >= n || j >= n)
        throw DomainError("metric index out of range");
    if (j < i)
        throw DomainError("metric entries are given for j >= i; the lower triangle follows "
                          "from graded symmetry");
    upper_[static_cast<std::size_t>(i) * n + j] = std::move(e);
    return *this;
}

SuperMetric SuperMetric::Builder::build() const {
    const int n = coords_->size();
    std::vector<SuperExpr> g(static_cast<std::size_t>(n) * n, SuperExpr(0.0));
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            const SuperExpr& e = upper_[static_cast<std::size_t>(i) * n + j];
            if (e.is_zero_constant())
                continue;
            int want = (coords_->parity_bit(i) + coords_->parity_bit(j)) % 2;
            Parity p = infer_parity(e);
            if (p == Parity::Inhomogeneous || (p == Parity::Odd ? 1 : 0) != want)
                throw DomainError("metric entry (" + std::to_string(i + 1) + "," +
                                  std::to_string(j + 1) + ") has the wrong parity");
            if (i == j && coords_->parity_bit(i))
                throw DomainError("odd diagonal metric entries vanish by graded symmetry");
            g[static_cast<std::size_t>(i) * n + j] = e;
            if (i != j) {
                double sign = (coords_->parity_bit(i) && coords_->parity_bit(j)) ? -1.0 : 1.0;
                g[static_cast<std::size_t>(j) * n + i] = SuperExpr(sign) * e;
            }
        }
    return SuperMetric(coords_, std::move(g));
}

SuperMetric::SuperMetric(CoordinateSystemPtr coords, std::vector<SuperExpr> entries)
    : coords_(std::move(coords)), g_(std::move(entries)) {
    const int n = coords_->size();
    std::vector<int> all_rows(n);
    for (int i = 0; i < n; ++i)
        all_rows[i] = i;
    const std::uint32_t full = (n == 32) ? ~std::uint32_t{0} : ((std::uint32_t{1} << n) - 1);
    det_ = det_recursive(g_, n, all_rows, full);

    ginv_.assign(static_cast<std::size_t>(n) * n, SuperExpr(0.0));
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            // g^{jk} = (-1)^{j+k} det(minor without row k, col j) / det
            std::vector<int> rows;
            rows.reserve(n - 1);
            for (int r = 0; r < n; ++r)
                if (r != k)
                    rows.push_back(r);
            SuperExpr cof = det_recursive(g_, n, rows, full & ~(std::uint32_t{1} << j));
            double sign = ((j + k) % 2 == 0) ? 1.0 : -1.0;
            ginv_[static_cast<std::size_t>(j) * n + k] = (SuperExpr(sign) * cof) / det_;
        }
}

const SuperExpr& SuperMetric::entry(int i, int j) const {
    return g_.at(static_cast<std::size_t>(i) * dim() + j);
}

const SuperExpr& SuperMetric::inverse_entry(int i, int j) const {
    return ginv_.at(static_cast<std::size_t>(i) * dim() + j);
}

std::vector<GrassmannNumber> SuperMetric::eval_matrix(const SuperPoint& p,
                                                      EvalCache* cache) const {
    EvalCache local;
    EvalCache* use = cache ? cache : &local;
    std::vector<GrassmannNumber> out;
    out.reserve(g_.size());
    for (const auto& e : g_)
        out.push_back(evaluate_at(e, p, use));
    return out;
}

std::vector<GrassmannNumber> SuperMetric::eval_inverse(const SuperPoint& p,
                                                       EvalCache* cache) const {
    EvalCache local;
    EvalCache* use = cache ? cache : &local;
    std::vector<GrassmannNumber> out;
    out.reserve(ginv_.size());
    for (const auto& e : ginv_)
        out.push_back(evaluate_at(e, p, use));
    return out;
}

GrassmannNumber SuperMetric::pair(const SuperPoint& p, std::span<const GrassmannNumber> v,
                                  std::span<const GrassmannNumber> w) const {
    const int n = dim();
    if (static_cast<int>(v.size()) != n || static_cast<int>(w.size()) != n)
        throw DomainError("metric pairing component count mismatch");
    EvalCache cache;
    auto gv = eval_matrix(p, &cache);
    GrassmannNumber acc = GrassmannNumber::zero(p.generators());
    for (int i = 0; i < n; ++i) {
        if (v[i].is_zero())
            continue;
        for (int j = 0; j < n; ++j) {
            const GrassmannNumber& gij = gv[static_cast<std::size_t>(i) * n + j];
            if (gij.is_zero() || w[j].is_zero())
                continue;
            GrassmannNumber wj = coords_->parity_bit(i) ? w[j].conjugate() : w[j];
            acc += v[i] * wj * gij;
        }
    }
    return acc;
}

std::vector<GrassmannNumber> SuperMetric::flat(const SuperPoint& p,
                                               std::span<const GrassmannNumber> v) const {
    const int n = dim();
    if (static_cast<int>(v.size()) != n)
        throw DomainError("component count mismatch");
    EvalCache cache;
    auto gv = eval_matrix(p, &cache);
    std::vector<GrassmannNumber> beta(n, GrassmannNumber::zero(p.generators()));
    for (int i = 0; i < n; ++i) {
        GrassmannNumber acc = GrassmannNumber::zero(p.generators());
        for (int j = 0; j < n; ++j)
            acc += v[j] * gv[static_cast<std::size_t>(j) * n + i];
        beta[i] = coords_->parity_bit(i) ? -acc : acc;
    }
    return beta;
}

std::vector<GrassmannNumber> SuperMetric::sharp(const SuperPoint& p,
                                                std::span<const GrassmannNumber> alpha) const {
    const int n = dim();
    if (static_cast<int>(alpha.size()) != n)
        throw DomainError("component count mismatch");
    EvalCache cache;
    auto gi = eval_inverse(p, &cache);
    std::vector<GrassmannNumber> v(n, GrassmannNumber::zero(p.generators()));
    for (int j = 0; j < n; ++j) {
        GrassmannNumber acc = GrassmannNumber::zero(p.generators());
        for (int i = 0; i < n; ++i) {
            GrassmannNumber term = alpha[i] * gi[static_cast<std::size_t>(i) * n + j];
            acc += coords_->parity_bit(i) ? -term : term;
        }
        v[j] = acc;
    }
    return v;
}

GrassmannNumber SuperMetric::energy(const SuperPoint& p,
                                    std::span<const GrassmannNumber> v) const {
    return 0.5 * pair(p, v, v);
}

double SuperMetric::inverse_residual(std::span<const SuperPoint> samples) const {
    const int n = dim();
    double worst = 0.0;
    for (const auto& p : samples) {
        EvalCache cache;
        auto gv = eval_matrix(p, &cache);
        auto gi = eval_inverse(p, &cache);
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                GrassmannNumber left = GrassmannNumber::zero(p.generators());
                GrassmannNumber right = GrassmannNumber::zero(p.generators());
                for (int j = 0; j < n; ++j) {
                    left += gv[static_cast<std::size_t>(i) * n + j] *
                            gi[static_cast<std::size_t>(j) * n + k];
                    right += gi[static_cast<std::size_t>(k) * n + j] *
                             gv[static_cast<std::size_t>(j) * n + i];
                }
                GrassmannNumber delta =
                    GrassmannNumber::scalar(p.generators(), i == k ? 1.0 : 0.0);
                worst = std::max(worst, (left - delta).norm_max());
                worst = std::max(worst, (right - delta).norm_max());
            }
    }
    return worst;
}

std::vector<GrassmannNumber> SuperMetric::eval_inverse_numeric(const SuperPoint& p) const {
    const int n = dim();
    const int L = p.generators();
    EvalCache cache;
    auto gv = eval_matrix(p, &cache);
    std::vector<std::vector<GrassmannNumber>> A(n, std::vector<GrassmannNumber>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            A[i][j] = gv[static_cast<std::size_t>(i) * n + j];
    // solve g X = I columnwise; X^{jk} fills the inverse by rows
    std::vector<GrassmannNumber> out(static_cast<std::size_t>(n) * n,
                                     GrassmannNumber::zero(L));
    for (int k = 0; k < n; ++k) {
        std::vector<GrassmannNumber> e(n, GrassmannNumber::zero(L));
        e[k] = GrassmannNumber::scalar(L, 1.0);
        auto col = solve_linear(A, e);
        for (int j = 0; j < n; ++j)
            out[static_cast<std::size_t>(j) * n + k] = col[j];
    }
    return out;
}

ChristoffelField levi_civita(const SuperMetric& g) {
    const CoordinateSystem& cs = g.coords();
    const int n = cs.size();

    // left partials of every entry
    std::vector<SuperExpr> dg(static_cast<std::size_t>(n) * n * n);
    for (int a = 0; a < n; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                dg[(static_cast<std::size_t>(a) * n + i) * n + j] =
                    differentiate(g.entry(i, j), cs, cs.name(a));
    auto d = [&](int a, int i, int j) -> const SuperExpr& {
        return dg[(static_cast<std::size_t>(a) * n + i) * n + j];
    };

    ChristoffelField gamma(g.coords_ptr());
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                SuperExpr acc(0.0);
                for (int l = 0; l < n; ++l) {
                    double s1 = (cs.parity_bit(j) && cs.parity_bit(k)) ? -1.0 : 1.0;
                    double s2 =
                        (cs.parity_bit(l) && ((cs.parity_bit(j) + cs.parity_bit(k)) % 2 == 1))
                            ? -1.0
                            : 1.0;
                    SuperExpr bracket = d(j, k, l) + SuperExpr(s1) * d(k, j, l) -
                                        SuperExpr(s2) * d(l, j, k);
                    if (bracket.is_zero_constant())
                        continue;
                    acc = acc + bracket * g.inverse_entry(l, i);
                }
                gamma.set_entry(i, j, k, SuperExpr(0.5) * acc);
            }
    return gamma;
}

double compatibility_check(const SuperMetric& g, const ChristoffelField& gamma,
                           std::span<const SuperPoint> samples) {
    const CoordinateSystem& cs = g.coords();
    if (!cs.same_as(gamma.coords()))
        throw DomainError("metric and connection live on different systems");
    const int n = cs.size();

    // residual expressions for all coordinate-field triples (p, j, k)
    std::vector<SuperExpr> residuals;
    residuals.reserve(static_cast<std::size_t>(n) * n * n);
    for (int p = 0; p < n; ++p)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                SuperExpr lhs = differentiate(g.entry(j, k), cs, cs.name(p));
                SuperExpr term1(0.0);
                for (int a = 0; a < n; ++a)
                    term1 = term1 + gamma.entry(a, p, j) * g.entry(a, k);
                SuperExpr term2(0.0);
                for (int b = 0; b < n; ++b)
                    term2 = term2 +
                            conjugate_power(gamma.entry(b, p, k), cs.parity_bit(j)) *
                                g.entry(j, b);
                double sign = (cs.parity_bit(p) && cs.parity_bit(j)) ? -1.0 : 1.0;
                residuals.push_back(lhs - term1 - SuperExpr(sign) * term2);
            }

    double worst = 0.0;
    for (const auto& pt : samples) {
        EvalCache cache;
        for (const auto& r : residuals)
            worst = std::max(worst, evaluate_at(r, pt, &cache).norm_max());
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Hamiltonian system

void require_even_cotangent(const CotangentPoint& pt) {
    const CoordinateSystem& cs = pt.x.coords();
    if (static_cast<int>(pt.momenta.size()) != cs.size())
        throw DomainError("momentum component count mismatch");
    for (int i = 0; i < cs.size(); ++i)
        if (!pt.momenta[i].is_zero() && pt.momenta[i].parity() != cs.parity(i))
            throw DomainError("momentum " + std::to_string(i + 1) +
                              " has the wrong parity for the even cotangent bundle");
}

namespace {

CoordinateSystemPtr cotangent_phase_system(const CoordinateSystem& base) {
    std::vector<std::string> evens, odds;
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Even)
            evens.push_back(base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Even)
            evens.push_back("p_" + base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Odd)
            odds.push_back(base.name(i));
    for (int i = 0; i < base.size(); ++i)
        if (base.parity(i) == Parity::Odd)
            odds.push_back("p_" + base.name(i));
    return std::make_shared<CoordinateSystem>(std::move(evens), std::move(odds));
}

} // namespace

HamiltonianSystem::HamiltonianSystem(const SuperMetric& g) : base_(g.coords_ptr()) {
    const CoordinateSystem& cs = *base_;
    const int n = cs.size();
    phase_ = cotangent_phase_system(cs);

    auto momentum = [&](int i) {
        return SuperExpr::coordinate("p_" + cs.name(i), cs.parity(i));
    };

    // H = 1/2 sum_{jk} (-1)^{eps_k} g^{jk} p_k p_j
    SuperExpr h(0.0);
    for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
            const SuperExpr& gjk = g.inverse_entry(j, k);
            if (gjk.is_zero_constant())
                continue;
            SuperExpr term = gjk * momentum(k) * momentum(j);
            h = h + (cs.parity_bit(k) ? -term : term);
        }
    h_ = SuperExpr(0.5) * h;

    // sharp map v^j = sum_i (-1)^{eps_i} p_i g^{ij}
    sharp_.assign(n, SuperExpr(0.0));
    for (int j = 0; j < n; ++j) {
        SuperExpr acc(0.0);
        for (int i = 0; i < n; ++i) {
            const SuperExpr& gij = g.inverse_entry(i, j);
            if (gij.is_zero_constant())
                continue;
            SuperExpr term = momentum(i) * gij;
            acc = acc + (cs.parity_bit(i) ? -term : term);
        }
        sharp_[j] = acc;
    }

    // X_H = sum_{ik} (-1)^{eps_k} p_k g^{ki} d_{x^i}
    //       - 1/2 sum_{ijk} (-1)^{eps_i + eps_k} d(g^{jk})/d(x^i) p_k p_j d_{p_i}
    field_.phase = phase_;
    field_.components.assign(static_cast<std::size_t>(2 * n), SuperExpr(0.0));
    for (int i = 0; i < n; ++i) {
        SuperExpr xdot(0.0);
        for (int k = 0; k < n; ++k) {
            const SuperExpr& gki = g.inverse_entry(k, i);
            if (gki.is_zero_constant())
                continue;
            SuperExpr term = momentum(k) * gki;
            xdot = xdot + (cs.parity_bit(k) ? -term : term);
        }
        field_.components[phase_index_of_coordinate(i)] = xdot;

        SuperExpr pdot(0.0);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                SuperExpr dgi = differentiate(g.inverse_entry(j, k), cs, cs.name(i));
                if (dgi.is_zero_constant())
                    continue;
                SuperExpr term = dgi * momentum(k) * momentum(j);
                double sign =
                    ((cs.parity_bit(i) + cs.parity_bit(k)) % 2 == 1) ? -1.0 : 1.0;
                pdot = pdot + SuperExpr(sign) * term;
            }
        field_.components[phase_index_of_momentum(i)] = SuperExpr(-0.5) * pdot;
    }
}

int HamiltonianSystem::phase_index_of_coordinate(int i) const {
    const int p = base_->even_count();
    return (i < p) ? i : p + i;
}

int HamiltonianSystem::phase_index_of_momentum(int i) const {
    const int p = base_->even_count();
    const int q = base_->odd_count();
    return (i < p) ? p + i : 2 * p + q + (i - p);
}

std::vector<GrassmannNumber> HamiltonianSystem::pack_state(const CotangentPoint& pt) const {
    require_even_cotangent(pt);
    if (!pt.x.coords().same_as(*base_))
        throw DomainError("cotangent point lives in a different coordinate system");
    std::vector<GrassmannNumber> state(static_cast<std::size_t>(2 * base_->size()),
                                       GrassmannNumber::zero(pt.x.generators()));
    for (int i = 0; i < base_->size(); ++i) {
        state[phase_index_of_coordinate(i)] = pt.x.value(i);
        state[phase_index_of_momentum(i)] = pt.momenta[i];
    }
    return state;
}

GrassmannNumber HamiltonianSystem::eval_hamiltonian(const CotangentPoint& pt) const {
    auto state = pack_state(pt);
    EvalEnv env{phase_.get(), state, pt.x.generators()};
    EvalCache cache;
    return evaluate(h_, env, &cache);
}

std::pair<std::vector<GrassmannNumber>, std::vector<GrassmannNumber>>
HamiltonianSystem::eval_field(const CotangentPoint& pt) const {
    auto state = pack_state(pt);
    auto values = field_.eval(state, pt.x.generators());
    std::vector<GrassmannNumber> xdot, pdot;
    for (int i = 0; i < base_->size(); ++i) {
        xdot.push_back(values[phase_index_of_coordinate(i)]);
        pdot.push_back(values[phase_index_of_momentum(i)]);
    }
    return {std::move(xdot), std::move(pdot)};
}

std::vector<GrassmannNumber> HamiltonianSystem::sharp_velocity(const CotangentPoint& pt) const {
    auto state = pack_state(pt);
    EvalEnv env{phase_.get(), state, pt.x.generators()};
    EvalCache cache;
    std::vector<GrassmannNumber> out;
    out.reserve(sharp_.size());
    for (const auto& e : sharp_)
        out.push_back(evaluate(e, env, &cache));
    return out;
}

double hamiltonian_field_residual(const HamiltonianSystem& hs,
                                  std::span<const CotangentPoint> samples) {
    const CoordinateSystem& phase = hs.phase_coords();
    const CoordinateSystem* base = nullptr;

    // components of X_H from the general Hamiltonian-field formula
    std::vector<SuperExpr> general(phase.size(), SuperExpr(0.0));
    // recover base names/parities from the phase system layout
    std::vector<std::pair<std::string, Parity>> base_coords;
    for (int c = 0; c < phase.size(); ++c) {
        const std::string& name = phase.name(c);
        if (name.rfind("p_", 0) == 0)
            continue;
        base_coords.emplace_back(name, phase.parity(c));
    }
    (void)base;
    for (std::size_t b = 0; b < base_coords.size(); ++b) {
        const auto& [name, parity] = base_coords[b];
        int bit = parity == Parity::Odd ? 1 : 0;
        SuperExpr ddp = differentiate(hs.hamiltonian(), phase, "p_" + name);
        SuperExpr ddx = differentiate(hs.hamiltonian(), phase, name);
        SuperExpr xcomp = conjugate_power(ddp, bit);
        if (bit)
            xcomp = -xcomp; // (-1)^{eps_i}
        SuperExpr pcomp = -conjugate_power(ddx, bit);
        general[*phase.index_of(name)] = xcomp;
        general[*phase.index_of("p_" + name)] = pcomp;
    }

    double worst = 0.0;
    for (const auto& pt : samples) {
        auto state = hs.pack_state(pt);
        EvalEnv env{&phase, state, pt.x.generators()};
        EvalCache cache;
        for (int c = 0; c < phase.size(); ++c) {
            GrassmannNumber a = evaluate(hs.field().components[c], env, &cache);
            GrassmannNumber b = evaluate(general[c], env, &cache);
            worst = std::max(worst, (a - b).norm_max());
        }
    }
    return worst;
}

double intertwine_check(const SuperMetric& g, std::span<const CotangentPoint> samples) {
    const CoordinateSystem& cs = g.coords();
    const int n = cs.size();
    HamiltonianSystem hs(g);
    ChristoffelField gamma = levi_civita(g);
    GeodesicField geo(gamma);
    const CoordinateSystem& phase = hs.phase_coords();

    // Jacobian expressions of the fiber map v^j(x, p)
    std::vector<SuperExpr> dv(static_cast<std::size_t>(n) * phase.size());
    for (int j = 0; j < n; ++j)
        for (int c = 0; c < phase.size(); ++c)
            dv[static_cast<std::size_t>(j) * phase.size() + c] =
                differentiate(hs.sharp_component(j), phase, phase.name(c));

    double worst = 0.0;
    for (const auto& pt : samples) {
        const int L = pt.x.generators();
        auto state = hs.pack_state(pt);
        EvalEnv env{&phase, state, L};
        EvalCache cache;

        std::vector<GrassmannNumber> xh(phase.size());
        for (int c = 0; c < phase.size(); ++c)
            xh[c] = evaluate(hs.field().components[c], env, &cache);

        std::vector<GrassmannNumber> vstar(n);
        for (int j = 0; j < n; ++j)
            vstar[j] = evaluate(hs.sharp_component(j), env, &cache);

        // pushforward of X_H through (x, p) -> (x, v(x, p))
        std::vector<GrassmannNumber> pushed_v(n, GrassmannNumber::zero(L));
        for (int j = 0; j < n; ++j) {
            GrassmannNumber acc = GrassmannNumber::zero(L);
            for (int c = 0; c < phase.size(); ++c) {
                const SuperExpr& e = dv[static_cast<std::size_t>(j) * phase.size() + c];
                if (e.is_zero_constant())
                    continue;
                acc += xh[c] * evaluate(e, env, &cache);
            }
            pushed_v[j] = acc;
        }

        auto [gx, gv] = geo.eval(pt.x, vstar);
        for (int i = 0; i < n; ++i) {
            GrassmannNumber xdot = xh[hs.phase_index_of_coordinate(i)];
            worst = std::max(worst, (xdot - gx[i]).norm_max());
            worst = std::max(worst, (pushed_v[i] - gv[i]).norm_max());
        }
    }
    return worst;
}

} // namespace supergeo
