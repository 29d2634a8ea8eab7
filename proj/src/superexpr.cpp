#include "supergeo/superexpr.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

namespace supergeo {

namespace {

bool is_reserved(std::string_view s) {
    return s == "sin" || s == "cos" || s == "exp" || s == "log";
}

bool is_identifier(std::string_view s) {
    if (s.empty())
        return false;
    if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
        return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
            return false;
    return true;
}

} // namespace

CoordinateSystem::CoordinateSystem(std::vector<std::string> even_names,
                                   std::vector<std::string> odd_names)
    : even_count_(static_cast<int>(even_names.size())) {
    names_ = std::move(even_names);
    names_.insert(names_.end(), odd_names.begin(), odd_names.end());
    for (int i = 0; i < static_cast<int>(names_.size()); ++i) {
        const std::string& n = names_[i];
        if (!is_identifier(n))
            throw DomainError("coordinate name '" + n + "' is not an identifier");
        if (is_reserved(n))
            throw DomainError("coordinate name '" + n + "' is reserved");
        if (!index_.emplace(n, i).second)
            throw DomainError("duplicate coordinate name '" + n + "'");
    }
}

std::optional<int> CoordinateSystem::index_of(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if (it == index_.end())
        return std::nullopt;
    return it->second;
}

bool CoordinateSystem::same_as(const CoordinateSystem& other) const {
    return even_count_ == other.even_count_ && names_ == other.names_;
}

SuperExpr make_node(SuperExpr::Node&& n) {
    return SuperExpr(std::make_shared<const SuperExpr::Node>(std::move(n)));
}

SuperExpr::SuperExpr() {
    static const std::shared_ptr<const Node> zero = [] {
        Node n;
        n.kind = Kind::Constant;
        n.value = 0.0;
        return std::make_shared<const Node>(std::move(n));
    }();
    node_ = zero;
}

SuperExpr::SuperExpr(double constant) {
    Node n;
    n.kind = Kind::Constant;
    n.value = constant;
    node_ = std::make_shared<const Node>(std::move(n));
}

SuperExpr SuperExpr::constant(double c) { return SuperExpr(c); }

SuperExpr SuperExpr::coordinate(std::string name, Parity parity) {
    Node n;
    n.kind = Kind::Coord;
    n.name = std::move(name);
    n.coord_parity = parity;
    return make_node(std::move(n));
}

namespace {

SuperExpr binary(SuperExpr::Kind kind, const SuperExpr& a, const SuperExpr& b) {
    SuperExpr::Node n;
    n.kind = kind;
    n.a = a;
    n.b = b;
    return make_node(std::move(n));
}

SuperExpr unary(SuperExpr::Kind kind, const SuperExpr& a) {
    SuperExpr::Node n;
    n.kind = kind;
    n.a = a;
    return make_node(std::move(n));
}

} // namespace

SuperExpr operator+(const SuperExpr& a, const SuperExpr& b) {
    if (a.is_zero_constant())
        return b;
    if (b.is_zero_constant())
        return a;
    if (a.is_constant() && b.is_constant())
        return SuperExpr(a.node().value + b.node().value);
    return binary(SuperExpr::Kind::Add, a, b);
}

SuperExpr operator-(const SuperExpr& a, const SuperExpr& b) {
    if (b.is_zero_constant())
        return a;
    if (a.is_constant() && b.is_constant())
        return SuperExpr(a.node().value - b.node().value);
    if (a.is_zero_constant())
        return -b;
    return binary(SuperExpr::Kind::Sub, a, b);
}

SuperExpr operator*(const SuperExpr& a, const SuperExpr& b) {
    if (a.is_zero_constant() || b.is_zero_constant())
        return SuperExpr(0.0);
    if (a.is_constant() && a.node().value == 1.0)
        return b;
    if (b.is_constant() && b.node().value == 1.0)
        return a;
    if (a.is_constant() && b.is_constant())
        return SuperExpr(a.node().value * b.node().value);
    return binary(SuperExpr::Kind::Mul, a, b);
}

SuperExpr operator/(const SuperExpr& a, const SuperExpr& b) {
    if (a.is_zero_constant())
        return a;
    if (b.is_constant() && b.node().value == 1.0)
        return a;
    if (a.is_constant() && b.is_constant() && b.node().value != 0.0)
        return SuperExpr(a.node().value / b.node().value);
    return binary(SuperExpr::Kind::Div, a, b);
}

SuperExpr operator-(const SuperExpr& a) {
    if (a.is_constant())
        return SuperExpr(-a.node().value);
    if (a.kind() == SuperExpr::Kind::Neg)
        return a.node().a;
    return unary(SuperExpr::Kind::Neg, a);
}

SuperExpr pow_expr(const SuperExpr& base, int exponent) {
    if (exponent < 1)
        throw DomainError("power exponent must be a positive integer");
    if (exponent == 1)
        return base;
    if (base.is_constant())
        return SuperExpr(std::pow(base.node().value, exponent));
    SuperExpr::Node n;
    n.kind = SuperExpr::Kind::Pow;
    n.a = base;
    n.exponent = exponent;
    return make_node(std::move(n));
}

SuperExpr sin_expr(const SuperExpr& a) {
    if (a.is_constant())
        return SuperExpr(std::sin(a.node().value));
    return unary(SuperExpr::Kind::Sin, a);
}

SuperExpr cos_expr(const SuperExpr& a) {
    if (a.is_constant())
        return SuperExpr(std::cos(a.node().value));
    return unary(SuperExpr::Kind::Cos, a);
}

SuperExpr exp_expr(const SuperExpr& a) {
    if (a.is_constant())
        return SuperExpr(std::exp(a.node().value));
    return unary(SuperExpr::Kind::Exp, a);
}

SuperExpr log_expr(const SuperExpr& a) {
    if (a.is_constant() && a.node().value > 0.0)
        return SuperExpr(std::log(a.node().value));
    return unary(SuperExpr::Kind::Log, a);
}

Parity infer_parity(const SuperExpr& e) {
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    switch (n.kind) {
    case K::Constant:
        return Parity::Even;
    case K::Coord:
        return n.coord_parity;
    case K::Neg:
        return infer_parity(n.a);
    case K::Sin:
    case K::Cos:
    case K::Exp:
    case K::Log:
        return Parity::Even;
    case K::Add:
    case K::Sub: {
        Parity pa = infer_parity(n.a);
        Parity pb = infer_parity(n.b);
        if (pa == pb)
            return pa;
        return Parity::Inhomogeneous;
    }
    case K::Mul:
        return parity_product(infer_parity(n.a), infer_parity(n.b));
    case K::Div:
        return parity_product(infer_parity(n.a), infer_parity(n.b));
    case K::Pow: {
        Parity p = infer_parity(n.a);
        if (p == Parity::Even)
            return Parity::Even;
        if (p == Parity::Odd)
            return (n.exponent % 2 == 0) ? Parity::Even : Parity::Odd;
        return Parity::Inhomogeneous;
    }
    }
    return Parity::Inhomogeneous;
}

SuperExpr conjugate_expr(const SuperExpr& e) {
    Parity p = infer_parity(e);
    if (p == Parity::Even)
        return e;
    if (p == Parity::Odd)
        return -e;
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    switch (n.kind) {
    case K::Add:
        return conjugate_expr(n.a) + conjugate_expr(n.b);
    case K::Sub:
        return conjugate_expr(n.a) - conjugate_expr(n.b);
    case K::Mul:
        return conjugate_expr(n.a) * conjugate_expr(n.b);
    case K::Div:
        return conjugate_expr(n.a) / conjugate_expr(n.b);
    case K::Neg:
        return -conjugate_expr(n.a);
    case K::Pow:
        return pow_expr(conjugate_expr(n.a), n.exponent);
    default:
        // constants, coordinates and transcendentals are homogeneous
        return e;
    }
}

SuperExpr conjugate_power(const SuperExpr& e, int parity_bit) {
    return parity_bit ? conjugate_expr(e) : e;
}

SuperExpr parity_part(const SuperExpr& e, Parity part) {
    if (part == Parity::Inhomogeneous)
        throw DomainError("parity_part expects even or odd");
    Parity p = infer_parity(e);
    if (p != Parity::Inhomogeneous)
        return p == part ? e : SuperExpr(0.0);
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    const Parity other = (part == Parity::Even) ? Parity::Odd : Parity::Even;
    switch (n.kind) {
    case K::Add:
        return parity_part(n.a, part) + parity_part(n.b, part);
    case K::Sub:
        return parity_part(n.a, part) - parity_part(n.b, part);
    case K::Neg:
        return -parity_part(n.a, part);
    case K::Mul:
        if (part == Parity::Even)
            return parity_part(n.a, Parity::Even) * parity_part(n.b, Parity::Even) +
                   parity_part(n.a, Parity::Odd) * parity_part(n.b, Parity::Odd);
        return parity_part(n.a, Parity::Even) * parity_part(n.b, Parity::Odd) +
               parity_part(n.a, Parity::Odd) * parity_part(n.b, Parity::Even);
    case K::Div:
        // denominators are even, so the split passes through the numerator
        return parity_part(n.a, part) / n.b;
    case K::Pow:
        return parity_part(n.a * pow_expr(n.a, n.exponent - 1), part);
    default:
        (void)other;
        return e; // leaves and transcendentals are homogeneous
    }
}

// ---------------------------------------------------------------------------
// parser

namespace {

struct Token {
    enum Type { Num, Name, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };
    Type type;
    double number = 0.0;
    std::string text;
    int pos = 0;
};

class Lexer {
public:
    Lexer(std::string_view src) : src_(src) { advance(); }

    const Token& peek() const { return tok_; }

    Token take() {
        Token t = tok_;
        advance();
        return t;
    }

    [[noreturn]] void fail(const std::string& message, int pos) const {
        throw ParseError(message, "column " + std::to_string(pos + 1));
    }

private:
    void advance() {
        while (p_ < src_.size() && (src_[p_] == ' ' || src_[p_] == '\t'))
            ++p_;
        tok_.pos = static_cast<int>(p_);
        if (p_ >= src_.size()) {
            tok_.type = Token::End;
            return;
        }
        char c = src_[p_];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            const char* start = src_.data() + p_;
            char* end = nullptr;
            tok_.number = std::strtod(start, &end);
            p_ += static_cast<std::size_t>(end - start);
            tok_.type = Token::Num;
            return;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = p_;
            while (p_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[p_])) || src_[p_] == '_'))
                ++p_;
            tok_.type = Token::Name;
            tok_.text = std::string(src_.substr(start, p_ - start));
            return;
        }
        ++p_;
        switch (c) {
        case '+': tok_.type = Token::Plus; return;
        case '-': tok_.type = Token::Minus; return;
        case '*': tok_.type = Token::Star; return;
        case '/': tok_.type = Token::Slash; return;
        case '^': tok_.type = Token::Caret; return;
        case '(': tok_.type = Token::LParen; return;
        case ')': tok_.type = Token::RParen; return;
        default:
            fail(std::string("unexpected character '") + c + "'", static_cast<int>(p_ - 1));
        }
    }

    std::string_view src_;
    std::size_t p_ = 0;
    Token tok_;
};

class Parser {
public:
    Parser(std::string_view src, const CoordinateSystem& coords) : lex_(src), coords_(coords) {}

    SuperExpr run() {
        SuperExpr e = expr();
        if (lex_.peek().type != Token::End)
            lex_.fail("unexpected trailing input", lex_.peek().pos);
        return e;
    }

private:
    SuperExpr expr() {
        SuperExpr acc = term();
        while (lex_.peek().type == Token::Plus || lex_.peek().type == Token::Minus) {
            Token op = lex_.take();
            SuperExpr rhs = term();
            acc = (op.type == Token::Plus) ? acc + rhs : acc - rhs;
        }
        return acc;
    }

    SuperExpr term() {
        SuperExpr acc = factor();
        while (lex_.peek().type == Token::Star || lex_.peek().type == Token::Slash) {
            Token op = lex_.take();
            SuperExpr rhs = factor();
            if (op.type == Token::Slash) {
                Parity dp = infer_parity(rhs);
                if (dp != Parity::Even)
                    lex_.fail(dp == Parity::Odd ? "denominator must be even"
                                                : "denominator must be homogeneous even",
                              op.pos);
                acc = acc / rhs;
            } else {
                acc = acc * rhs;
            }
        }
        return acc;
    }

    SuperExpr factor() {
        // '^' binds tighter than unary minus: -x^2 is -(x^2)
        if (lex_.peek().type == Token::Minus) {
            lex_.take();
            return -factor();
        }
        SuperExpr base = atom();
        if (lex_.peek().type == Token::Caret) {
            Token caret = lex_.take();
            if (lex_.peek().type != Token::Num)
                lex_.fail("expected a positive integer exponent", lex_.peek().pos);
            Token e = lex_.take();
            double v = e.number;
            if (v < 1.0 || v != std::floor(v) || v > 64.0)
                lex_.fail("exponent must be a positive integer", e.pos);
            (void)caret;
            return pow_expr(base, static_cast<int>(v));
        }
        return base;
    }

    SuperExpr atom() {
        Token t = lex_.take();
        switch (t.type) {
        case Token::Num:
            return SuperExpr(t.number);
        case Token::Minus:
            return -atom();
        case Token::LParen: {
            SuperExpr inner = expr();
            if (lex_.peek().type != Token::RParen)
                lex_.fail("expected ')'", lex_.peek().pos);
            lex_.take();
            return inner;
        }
        case Token::Name: {
            if (is_reserved(t.text)) {
                if (lex_.peek().type != Token::LParen)
                    lex_.fail("expected '(' after " + t.text, lex_.peek().pos);
                lex_.take();
                SuperExpr arg = expr();
                if (lex_.peek().type != Token::RParen)
                    lex_.fail("expected ')'", lex_.peek().pos);
                lex_.take();
                Parity ap = infer_parity(arg);
                if (ap != Parity::Even)
                    lex_.fail((ap == Parity::Odd ? std::string("odd") : std::string("inhomogeneous")) +
                                  " argument to " + t.text,
                              t.pos);
                if (t.text == "sin")
                    return sin_expr(arg);
                if (t.text == "cos")
                    return cos_expr(arg);
                if (t.text == "exp")
                    return exp_expr(arg);
                return log_expr(arg);
            }
            auto idx = coords_.index_of(t.text);
            if (!idx)
                lex_.fail("unknown identifier '" + t.text + "'", t.pos);
            return SuperExpr::coordinate(t.text, coords_.parity(*idx));
        }
        default:
            lex_.fail("unexpected token", t.pos);
        }
        return SuperExpr(0.0); // unreachable
    }

    Lexer lex_;
    const CoordinateSystem& coords_;
};

} // namespace

SuperExpr parse_expr(std::string_view src, const CoordinateSystem& coords) {
    return Parser(src, coords).run();
}

// ---------------------------------------------------------------------------
// printing

namespace {

std::string print_atomized(const SuperExpr& e);

std::string print_impl(const SuperExpr& e) {
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    switch (n.kind) {
    case K::Constant:
        return format_double(n.value);
    case K::Coord:
        return n.name;
    case K::Neg:
        return "-" + print_atomized(n.a);
    case K::Sin:
        return "sin(" + print_impl(n.a) + ")";
    case K::Cos:
        return "cos(" + print_impl(n.a) + ")";
    case K::Exp:
        return "exp(" + print_impl(n.a) + ")";
    case K::Log:
        return "log(" + print_impl(n.a) + ")";
    case K::Add:
        return "(" + print_impl(n.a) + " + " + print_impl(n.b) + ")";
    case K::Sub:
        return "(" + print_impl(n.a) + " - " + print_impl(n.b) + ")";
    case K::Mul:
        return "(" + print_impl(n.a) + " * " + print_impl(n.b) + ")";
    case K::Div:
        return "(" + print_impl(n.a) + " / " + print_impl(n.b) + ")";
    case K::Pow:
        return print_atomized(n.a) + "^" + std::to_string(n.exponent);
    }
    return {};
}

std::string print_atomized(const SuperExpr& e) {
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    bool atomic = n.kind == K::Coord || n.kind == K::Sin || n.kind == K::Cos ||
                  n.kind == K::Exp || n.kind == K::Log ||
                  (n.kind == K::Constant && n.value >= 0.0);
    // Add/Sub/Mul/Div print with their own parentheses
    atomic = atomic || n.kind == K::Add || n.kind == K::Sub || n.kind == K::Mul ||
             n.kind == K::Div;
    std::string s = print_impl(e);
    return atomic ? s : "(" + s + ")";
}

} // namespace

std::string print_expr(const SuperExpr& e) { return print_impl(e); }

bool structurally_equal(const SuperExpr& a, const SuperExpr& b) {
    if (a.raw() == b.raw())
        return true;
    const auto& na = a.node();
    const auto& nb = b.node();
    if (na.kind != nb.kind || na.value != nb.value || na.name != nb.name ||
        na.coord_parity != nb.coord_parity || na.exponent != nb.exponent)
        return false;
    using K = SuperExpr::Kind;
    switch (na.kind) {
    case K::Constant:
    case K::Coord:
        return true;
    case K::Neg:
    case K::Sin:
    case K::Cos:
    case K::Exp:
    case K::Log:
    case K::Pow:
        return structurally_equal(na.a, nb.a);
    default:
        return structurally_equal(na.a, nb.a) && structurally_equal(na.b, nb.b);
    }
}

// ---------------------------------------------------------------------------
// differentiation and substitution

SuperExpr differentiate(const SuperExpr& e, const CoordinateSystem& coords,
                        std::string_view coordinate) {
    auto idx = coords.index_of(coordinate);
    if (!idx)
        throw DomainError("unknown coordinate '" + std::string(coordinate) + "'");
    const int dir_bit = coords.parity_bit(*idx);

    using K = SuperExpr::Kind;
    const auto& n = e.node();
    auto d = [&](const SuperExpr& x) { return differentiate(x, coords, coordinate); };

    switch (n.kind) {
    case K::Constant:
        return SuperExpr(0.0);
    case K::Coord:
        return SuperExpr(n.name == coordinate ? 1.0 : 0.0);
    case K::Neg:
        return -d(n.a);
    case K::Sin:
        return d(n.a) * cos_expr(n.a);
    case K::Cos:
        return -(d(n.a) * sin_expr(n.a));
    case K::Exp:
        return d(n.a) * exp_expr(n.a);
    case K::Log:
        return d(n.a) / n.a;
    case K::Add:
        return d(n.a) + d(n.b);
    case K::Sub:
        return d(n.a) - d(n.b);
    case K::Mul:
        return d(n.a) * n.b + conjugate_power(n.a, dir_bit) * d(n.b);
    case K::Div: {
        SuperExpr du = d(n.a);
        SuperExpr dv = d(n.b);
        return (du * n.b - conjugate_power(n.a, dir_bit) * dv) / pow_expr(n.b, 2);
    }
    case K::Pow: {
        Parity p = infer_parity(n.a);
        if (p == Parity::Even) {
            SuperExpr inner = d(n.a);
            if (n.exponent == 2)
                return SuperExpr(2.0) * n.a * inner;
            return SuperExpr(static_cast<double>(n.exponent)) *
                   pow_expr(n.a, n.exponent - 1) * inner;
        }
        if (p == Parity::Odd)
            return SuperExpr(0.0); // odd^k with k >= 2 vanishes identically
        // inhomogeneous base: expand one factor and recurse
        SuperExpr expanded = n.a * pow_expr(n.a, n.exponent - 1);
        return d(expanded);
    }
    }
    return SuperExpr(0.0);
}

SuperExpr substitute(const SuperExpr& e, std::string_view name, const SuperExpr& replacement) {
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    auto s = [&](const SuperExpr& x) { return substitute(x, name, replacement); };
    switch (n.kind) {
    case K::Constant:
        return e;
    case K::Coord:
        return n.name == name ? replacement : e;
    case K::Neg:
        return -s(n.a);
    case K::Sin:
        return sin_expr(s(n.a));
    case K::Cos:
        return cos_expr(s(n.a));
    case K::Exp:
        return exp_expr(s(n.a));
    case K::Log:
        return log_expr(s(n.a));
    case K::Add:
        return s(n.a) + s(n.b);
    case K::Sub:
        return s(n.a) - s(n.b);
    case K::Mul:
        return s(n.a) * s(n.b);
    case K::Div:
        return s(n.a) / s(n.b);
    case K::Pow:
        return pow_expr(s(n.a), n.exponent);
    }
    return e;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

GrassmannNumber eval_transcendental(SuperExpr::Kind kind, const GrassmannNumber& arg, int L) {
    if (arg.parity() != Parity::Even)
        throw DomainError("transcendental function of a non-even value");
    double b = arg.body();
    std::vector<double> derivs(static_cast<std::size_t>(L) + 1);
    using K = SuperExpr::Kind;
    switch (kind) {
    case K::Sin:
        for (int k = 0; k <= L; ++k) {
            switch (k % 4) {
            case 0: derivs[k] = std::sin(b); break;
            case 1: derivs[k] = std::cos(b); break;
            case 2: derivs[k] = -std::sin(b); break;
            default: derivs[k] = -std::cos(b); break;
            }
        }
        break;
    case K::Cos:
        for (int k = 0; k <= L; ++k) {
            switch (k % 4) {
            case 0: derivs[k] = std::cos(b); break;
            case 1: derivs[k] = -std::sin(b); break;
            case 2: derivs[k] = -std::cos(b); break;
            default: derivs[k] = std::sin(b); break;
            }
        }
        break;
    case K::Exp: {
        double e = std::exp(b);
        for (int k = 0; k <= L; ++k)
            derivs[k] = e;
        break;
    }
    case K::Log: {
        if (b <= 0.0)
            throw DomainError("log of non-positive body");
        derivs[0] = std::log(b);
        double bk = b;
        double fact = 1.0;
        for (int k = 1; k <= L; ++k) {
            derivs[k] = ((k % 2 == 1) ? 1.0 : -1.0) * fact / bk;
            bk *= b;
            fact *= k;
        }
        break;
    }
    default:
        throw DomainError("not a transcendental node");
    }
    return apply_taylor(derivs, arg);
}

} // namespace

GrassmannNumber evaluate(const SuperExpr& e, const EvalEnv& env, EvalCache* cache) {
    if (cache) {
        auto it = cache->find(e.raw());
        if (it != cache->end())
            return it->second;
    }
    using K = SuperExpr::Kind;
    const auto& n = e.node();
    GrassmannNumber result;
    switch (n.kind) {
    case K::Constant:
        result = GrassmannNumber::scalar(env.generators, n.value);
        break;
    case K::Coord: {
        auto idx = env.coords->index_of(n.name);
        if (!idx)
            throw DomainError("unbound coordinate '" + n.name + "'");
        const GrassmannNumber& v = env.values[*idx];
        if (!v.is_zero() && v.parity() != env.coords->parity(*idx))
            throw DomainError("parity mismatch binding coordinate '" + n.name + "'");
        result = v;
        break;
    }
    case K::Neg:
        result = -evaluate(n.a, env, cache);
        break;
    case K::Sin:
    case K::Cos:
    case K::Exp:
    case K::Log:
        result = eval_transcendental(n.kind, evaluate(n.a, env, cache), env.generators);
        break;
    case K::Add:
        result = evaluate(n.a, env, cache) + evaluate(n.b, env, cache);
        break;
    case K::Sub:
        result = evaluate(n.a, env, cache) - evaluate(n.b, env, cache);
        break;
    case K::Mul:
        result = evaluate(n.a, env, cache) * evaluate(n.b, env, cache);
        break;
    case K::Div: {
        GrassmannNumber num = evaluate(n.a, env, cache);
        GrassmannNumber den = evaluate(n.b, env, cache);
        if (den.parity() != Parity::Even)
            throw DomainError("division by a non-even value");
        result = num * den.inverse();
        break;
    }
    case K::Pow: {
        GrassmannNumber base = evaluate(n.a, env, cache);
        GrassmannNumber acc = base;
        for (int k = 1; k < n.exponent; ++k)
            acc = acc * base;
        result = acc;
        break;
    }
    }
    if (cache)
        cache->emplace(e.raw(), result);
    return result;
}

} // namespace supergeo
