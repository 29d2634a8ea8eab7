#include "supergeo/geometry.hpp"

#include <cmath>

namespace supergeo {

namespace {

bool slot_parity_ok(const GrassmannNumber& v, Parity slot) {
    return v.is_zero() || v.parity() == slot;
}

int common_generators(const std::vector<GrassmannNumber>& values) {
    int g = values.empty() ? 0 : values.front().generators();
    for (const auto& v : values)
        if (v.generators() != g)
            throw DomainError("mixed generator counts in value list");
    return g;
}

} // namespace

SuperPoint::SuperPoint(CoordinateSystemPtr coords, std::vector<GrassmannNumber> values)
    : coords_(std::move(coords)), values_(std::move(values)) {
    if (!coords_)
        throw DomainError("null coordinate system");
    if (static_cast<int>(values_.size()) != coords_->size())
        throw DomainError("point has " + std::to_string(values_.size()) + " values for " +
                          std::to_string(coords_->size()) + " coordinates");
    generators_ = common_generators(values_);
    for (int i = 0; i < coords_->size(); ++i)
        if (!slot_parity_ok(values_[i], coords_->parity(i)))
            throw DomainError("value for coordinate '" + coords_->name(i) +
                              "' has the wrong parity");
}

GrassmannNumber evaluate_at(const SuperExpr& e, const SuperPoint& p, EvalCache* cache) {
    return evaluate(e, p.env(), cache);
}

bool TangentVector::matches_even_bundle() const {
    for (int i = 0; i < base.coords().size(); ++i)
        if (!slot_parity_ok(components.at(i), base.coords().parity(i)))
            return false;
    return true;
}

bool TangentVector::matches_odd_bundle() const {
    for (int i = 0; i < base.coords().size(); ++i) {
        Parity reversed =
            base.coords().parity(i) == Parity::Even ? Parity::Odd : Parity::Even;
        if (!slot_parity_ok(components.at(i), reversed))
            return false;
    }
    return true;
}

void require_even_bundle(const TangentVector& t) {
    if (static_cast<int>(t.components.size()) != t.base.coords().size())
        throw DomainError("tangent vector component count mismatch");
    if (!t.matches_even_bundle())
        throw DomainError("tangent vector does not lie in the even bundle");
}

void require_odd_bundle(const TangentVector& t) {
    if (static_cast<int>(t.components.size()) != t.base.coords().size())
        throw DomainError("tangent vector component count mismatch");
    if (!t.matches_odd_bundle())
        throw DomainError("tangent vector does not lie in the odd bundle");
}

OneForm::OneForm(CoordinateSystemPtr coords, std::vector<SuperExpr> components)
    : coords_(std::move(coords)), components_(std::move(components)) {
    if (!coords_)
        throw DomainError("null coordinate system");
    if (static_cast<int>(components_.size()) != coords_->size())
        throw DomainError("one-form component count mismatch");
}

void OneForm::require_even() const {
    for (int i = 0; i < coords_->size(); ++i) {
        if (components_[i].is_zero_constant())
            continue;
        if (infer_parity(components_[i]) != coords_->parity(i))
            throw DomainError("one-form is not even: component for '" + coords_->name(i) +
                              "' has the wrong parity");
    }
}

std::vector<GrassmannNumber> OneForm::eval_components(const SuperPoint& p) const {
    EvalCache cache;
    std::vector<GrassmannNumber> out;
    out.reserve(components_.size());
    for (const auto& c : components_)
        out.push_back(evaluate_at(c, p, &cache));
    return out;
}

GrassmannNumber OneForm::contract(std::span<const GrassmannNumber> v, const SuperPoint& p) const {
    if (static_cast<int>(v.size()) != coords_->size())
        throw DomainError("contraction component count mismatch");
    auto alpha = eval_components(p);
    GrassmannNumber acc = GrassmannNumber::zero(p.generators());
    for (int i = 0; i < coords_->size(); ++i)
        acc += v[i] * alpha[i];
    return acc;
}

OneForm OneForm::scaled(double factor) const {
    std::vector<SuperExpr> comps;
    comps.reserve(components_.size());
    for (const auto& c : components_)
        comps.push_back(SuperExpr(factor) * c);
    return OneForm(coords_, std::move(comps));
}

CoordinateChange::CoordinateChange(CoordinateSystemPtr source, CoordinateSystemPtr target,
                                   std::vector<SuperExpr> formulas)
    : source_(std::move(source)), target_(std::move(target)), formulas_(std::move(formulas)) {
    if (!source_ || !target_)
        throw DomainError("null coordinate system");
    const int n = source_->size();
    if (target_->size() != n)
        throw DomainError("coordinate change must preserve dimension");
    if (target_->even_count() != source_->even_count())
        throw DomainError("coordinate change must preserve the even/odd split");
    if (static_cast<int>(formulas_.size()) != n)
        throw DomainError("coordinate change needs one formula per target coordinate");
    for (int p = 0; p < n; ++p) {
        if (formulas_[p].is_zero_constant())
            continue;
        if (infer_parity(formulas_[p]) != target_->parity(p))
            throw DomainError("formula for '" + target_->name(p) + "' has the wrong parity");
    }
    jacobian_.resize(static_cast<std::size_t>(n) * n);
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            jacobian_[p * n + i] = differentiate(formulas_[p], *source_, source_->name(i));
    second_.resize(static_cast<std::size_t>(n) * n * n);
    for (int r = 0; r < n; ++r)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                second_[(r * n + j) * n + k] =
                    differentiate(jacobian_[r * n + k], *source_, source_->name(j));
}

const SuperExpr& CoordinateChange::jacobian(int p, int i) const {
    return jacobian_.at(static_cast<std::size_t>(p) * source_->size() + i);
}

const SuperExpr& CoordinateChange::second_derivative(int r, int j, int k) const {
    const int n = source_->size();
    return second_.at((static_cast<std::size_t>(r) * n + j) * n + k);
}

SuperPoint CoordinateChange::map_point(const SuperPoint& p) const {
    EvalCache cache;
    std::vector<GrassmannNumber> values;
    values.reserve(formulas_.size());
    for (const auto& f : formulas_)
        values.push_back(evaluate_at(f, p, &cache));
    return SuperPoint(target_, std::move(values));
}

void CoordinateChange::check_body_jacobian(const SuperPoint& p) const {
    const int n = source_->size();
    EvalCache cache;
    std::vector<double> body(static_cast<std::size_t>(n) * n);
    for (int r = 0; r < n; ++r)
        for (int i = 0; i < n; ++i)
            body[r * n + i] = evaluate_at(jacobian(r, i), p, &cache).body();
    // naive LU determinant of the body matrix (mixed blocks have zero body)
    double det = 1.0;
    std::vector<double> m = body;
    for (int c = 0; c < n; ++c) {
        int pivot = -1;
        double best = 0.0;
        for (int r = c; r < n; ++r)
            if (std::abs(m[r * n + c]) > best) {
                best = std::abs(m[r * n + c]);
                pivot = r;
            }
        if (pivot < 0 || best < 1e-12)
            throw DomainError("Jacobian body singular at the given point");
        if (pivot != c) {
            for (int k = 0; k < n; ++k)
                std::swap(m[pivot * n + k], m[c * n + k]);
            det = -det;
        }
        det *= m[c * n + c];
        for (int r = c + 1; r < n; ++r) {
            double f = m[r * n + c] / m[c * n + c];
            for (int k = c; k < n; ++k)
                m[r * n + k] -= f * m[c * n + k];
        }
    }
    (void)det;
}

TangentVector CoordinateChange::pushforward(const TangentVector& t) const {
    if (!t.base.coords().same_as(*source_))
        throw DomainError("tangent vector lives in a different coordinate system");
    check_body_jacobian(t.base);
    const int n = source_->size();
    EvalCache cache;
    std::vector<GrassmannNumber> w(n, GrassmannNumber::zero(t.base.generators()));
    for (int p = 0; p < n; ++p)
        for (int i = 0; i < n; ++i)
            w[p] += t.components.at(i) * evaluate_at(jacobian(p, i), t.base, &cache);
    return TangentVector{map_point(t.base), std::move(w)};
}

CoordinateChange CoordinateChange::compose_with(const CoordinateChange& outer) const {
    if (!outer.source().same_as(*target_))
        throw DomainError("coordinate changes do not compose");
    const int n = source_->size();
    std::vector<SuperExpr> composed;
    composed.reserve(n);
    for (int p = 0; p < n; ++p) {
        SuperExpr f = outer.formula(p);
        for (int i = 0; i < n; ++i)
            f = substitute(f, target_->name(i), formulas_[i]);
        composed.push_back(f);
    }
    return CoordinateChange(source_, outer.target_ptr(), std::move(composed));
}

std::map<std::uint32_t, SuperExpr> expand_coefficients(const SuperExpr& e,
                                                       const CoordinateSystem& coords,
                                                       std::span<const std::string> odd_names) {
    for (const auto& name : odd_names) {
        auto idx = coords.index_of(name);
        if (!idx)
            throw DomainError("unknown coordinate '" + name + "'");
        if (coords.parity(*idx) != Parity::Odd)
            throw DomainError("expansion coordinate '" + name + "' is not odd");
    }
    if (odd_names.empty())
        return {{0u, e}};
    // e = e0 + xi * e1 with e1 the left derivative; recurse over the rest
    const std::string& head = odd_names.front();
    SuperExpr e0 = substitute(e, head, SuperExpr(0.0));
    SuperExpr e1 = differentiate(e, coords, head);
    auto rest = odd_names.subspan(1);
    std::map<std::uint32_t, SuperExpr> out;
    for (auto& [mask, part] : expand_coefficients(e0, coords, rest)) {
        if (!part.is_zero_constant())
            out.emplace(mask << 1, part);
    }
    for (auto& [mask, part] : expand_coefficients(e1, coords, rest)) {
        if (!part.is_zero_constant())
            out.emplace((mask << 1) | 1u, part);
    }
    return out;
}

SuperExpr reassemble_coefficients(const std::map<std::uint32_t, SuperExpr>& parts,
                                  const CoordinateSystem& coords,
                                  std::span<const std::string> odd_names) {
    SuperExpr acc(0.0);
    for (const auto& [mask, part] : parts) {
        SuperExpr term = part;
        // multiply xi factors from the right inward, highest index first,
        // so the monomial ends up in increasing order on the left
        for (int pos = static_cast<int>(odd_names.size()) - 1; pos >= 0; --pos) {
            if (mask & (std::uint32_t{1} << pos)) {
                auto idx = coords.index_of(odd_names[pos]);
                if (!idx)
                    throw DomainError("unknown coordinate '" + odd_names[pos] + "'");
                term = SuperExpr::coordinate(odd_names[pos], Parity::Odd) * term;
            }
        }
        acc = acc + term;
    }
    return acc;
}

} // namespace supergeo
