#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "supergeo/grassmann.hpp"

namespace supergeo {

// Named coordinates with fixed parities. User-facing systems list all even
// coordinates before all odd ones; derived phase-space systems (tangent,
// cotangent) are built the same way.
class CoordinateSystem {
public:
    CoordinateSystem(std::vector<std::string> even_names, std::vector<std::string> odd_names);

    int size() const { return static_cast<int>(names_.size()); }
    int even_count() const { return even_count_; }
    int odd_count() const { return size() - even_count_; }

    const std::string& name(int i) const { return names_.at(i); }
    Parity parity(int i) const {
        return i < even_count_ ? Parity::Even : Parity::Odd;
    }
    int parity_bit(int i) const { return i < even_count_ ? 0 : 1; }

    std::optional<int> index_of(std::string_view name) const;
    bool same_as(const CoordinateSystem& other) const;

    const std::vector<std::string>& names() const { return names_; }

private:
    std::vector<std::string> names_; // evens first
    int even_count_;
    std::unordered_map<std::string, int> index_;
};

using CoordinateSystemPtr = std::shared_ptr<const CoordinateSystem>;

// Immutable AST over named even/odd coordinates. Constructed by the parser
// or by the lightly folding builders below; never mutated in place.
class SuperExpr {
public:
    enum class Kind { Constant, Coord, Neg, Sin, Cos, Exp, Log, Add, Sub, Mul, Div, Pow };

    struct Node; // defined below; children are SuperExpr values

    SuperExpr(); // constant 0
    SuperExpr(double constant);

    static SuperExpr constant(double c);
    static SuperExpr coordinate(std::string name, Parity parity);

    const Node& node() const { return *node_; }
    const Node* raw() const { return node_.get(); }
    Kind kind() const;

    bool is_constant() const;
    bool is_zero_constant() const;

private:
    explicit SuperExpr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    std::shared_ptr<const Node> node_;

    friend SuperExpr make_node(Node&&);
};

struct SuperExpr::Node {
    Kind kind = Kind::Constant;
    double value = 0.0;        // Constant
    std::string name;          // Coord
    Parity coord_parity = Parity::Even;
    int exponent = 0;          // Pow
    // children; unary nodes use a, leaves use neither
    SuperExpr a{std::shared_ptr<const Node>{}};
    SuperExpr b{std::shared_ptr<const Node>{}};
};

inline SuperExpr::Kind SuperExpr::kind() const { return node_->kind; }
inline bool SuperExpr::is_constant() const { return node_->kind == Kind::Constant; }
inline bool SuperExpr::is_zero_constant() const { return is_constant() && node_->value == 0.0; }

// Folding builders (0/1 identities, constant arithmetic).
SuperExpr operator+(const SuperExpr& a, const SuperExpr& b);
SuperExpr operator-(const SuperExpr& a, const SuperExpr& b);
SuperExpr operator*(const SuperExpr& a, const SuperExpr& b);
SuperExpr operator/(const SuperExpr& a, const SuperExpr& b);
SuperExpr operator-(const SuperExpr& a);
SuperExpr pow_expr(const SuperExpr& base, int exponent);
SuperExpr sin_expr(const SuperExpr& a);
SuperExpr cos_expr(const SuperExpr& a);
SuperExpr exp_expr(const SuperExpr& a);
SuperExpr log_expr(const SuperExpr& a);

// Parity of the whole expression by structural inference; zero constants
// count as even.
Parity infer_parity(const SuperExpr& e);

// Conjugation (negation of the odd part) pushed through the AST; exact for
// any expression, including inhomogeneous ones.
SuperExpr conjugate_expr(const SuperExpr& e);

// nth application of conjugate_expr (n = 0 or 1 in practice).
SuperExpr conjugate_power(const SuperExpr& e, int parity_bit);

// Structural even or odd part of an expression; the result passes parity
// inference with the requested parity (or is the zero constant).
SuperExpr parity_part(const SuperExpr& e, Parity part);

// expr := term (('+'|'-') term)* ; term := factor (('*'|'/') factor)* ;
// factor := atom ('^' posint)? ;
// atom := number | name | func '(' expr ')' | '(' expr ')' | '-' atom.
// Rejects coordinates not declared in `coords`, odd or inhomogeneous
// arguments to sin/cos/exp/log, and non-even denominators.
SuperExpr parse_expr(std::string_view src, const CoordinateSystem& coords);

// Parseable rendering; parse(print(e)) is structurally stable.
std::string print_expr(const SuperExpr& e);

bool structurally_equal(const SuperExpr& a, const SuperExpr& b);

// Left partial derivative with respect to the named coordinate; Koszul signs
// for odd directions follow the left-derivative convention.
SuperExpr differentiate(const SuperExpr& e, const CoordinateSystem& coords,
                        std::string_view coordinate);

SuperExpr substitute(const SuperExpr& e, std::string_view name, const SuperExpr& replacement);

// Evaluation environment: coordinate values listed in `coords` order.
struct EvalEnv {
    const CoordinateSystem* coords;
    std::span<const GrassmannNumber> values;
    int generators;
};

// Optional per-call memo for DAG-shaped expressions (shared subtrees are
// evaluated once per cache).
using EvalCache = std::unordered_map<const SuperExpr::Node*, GrassmannNumber>;

GrassmannNumber evaluate(const SuperExpr& e, const EvalEnv& env, EvalCache* cache = nullptr);

} // namespace supergeo
