#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "estalg/errors.hpp"
#include "estalg/number.hpp"

namespace estalg {

enum class NodeKind : std::uint8_t {
    Constant,
    Coordinate,
    Add,
    Mul,
    IntPow,
    Div,
    Sin,
    Cos,
    Exp,
    Log,
};

/// Immutable symbolic scalar expression over chart coordinates.
///
/// Every public construction path (operators, named functions, simplify)
/// returns a normal form: Add/Mul flattened and sorted, constants folded,
/// like terms merged, Div rewritten as a negative integer power.  Values are
/// cheap to copy and safe to share across threads.
class Expr {
  public:
    Expr() : node_(zero_node()) {}
    Expr(int v) : Expr(Number(v)) {}
    Expr(double v) : Expr(Number::from_double(v)) {}
    Expr(const Number& v) : node_(std::make_shared<const Node>(make_const_node(v))) {}

    static Expr constant(const Number& v) { return Expr(v); }
    static Expr rational(std::int64_t n, std::int64_t d) { return Expr(Number::rational(n, d)); }
    static Expr coord(int index) {
        Node n;
        n.kind = NodeKind::Coordinate;
        n.index = index;
        return Expr(std::make_shared<const Node>(std::move(n)));
    }

    NodeKind kind() const { return node_->kind; }
    const Number& value() const { return node_->value; }
    int index() const { return node_->index; }
    int exponent() const { return node_->exponent; }
    std::size_t n_args() const { return node_->kids.size(); }
    const Expr& arg(std::size_t i) const { return node_->kids[i]; }
    const std::vector<Expr>& args() const { return node_->kids; }

    bool is_constant() const { return kind() == NodeKind::Constant; }
    bool is_zero_constant() const { return is_constant() && value().is_zero(); }
    bool is_one_constant() const { return is_constant() && value().is_one(); }

    /// Builds a node verbatim, without normalization.  Used to construct
    /// denormalized trees (parser internals, simplify tests).
    static Expr raw(NodeKind kind, std::vector<Expr> kids, Number value = Number(0),
                    int index = 0, int exponent = 0) {
        Node n;
        n.kind = kind;
        n.kids = std::move(kids);
        n.value = value;
        n.index = index;
        n.exponent = exponent;
        return Expr(std::make_shared<const Node>(std::move(n)));
    }

  private:
    struct Node {
        NodeKind kind = NodeKind::Constant;
        Number value;       // Constant
        int index = 0;      // Coordinate
        int exponent = 0;   // IntPow
        std::vector<Expr> kids;
    };

    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

    static Node make_const_node(const Number& v) {
        Node n;
        n.kind = NodeKind::Constant;
        n.value = v;
        return n;
    }

    static const std::shared_ptr<const Node>& zero_node() {
        static const std::shared_ptr<const Node> z =
            std::make_shared<const Node>(make_const_node(Number(0)));
        return z;
    }

    std::shared_ptr<const Node> node_;

    friend int compare(const Expr& a, const Expr& b);
};

/// Total structural order; defines the canonical sort inside Add/Mul.
inline int compare(const Expr& a, const Expr& b) {
    if (a.node_ == b.node_) return 0;
    if (a.kind() != b.kind()) return int(a.kind()) < int(b.kind()) ? -1 : 1;
    switch (a.kind()) {
        case NodeKind::Constant:
            return compare(a.value(), b.value());
        case NodeKind::Coordinate:
            return a.index() < b.index() ? -1 : (a.index() > b.index() ? 1 : 0);
        case NodeKind::IntPow: {
            const int c = compare(a.arg(0), b.arg(0));
            if (c != 0) return c;
            return a.exponent() < b.exponent() ? -1 : (a.exponent() > b.exponent() ? 1 : 0);
        }
        default: {
            const std::size_t na = a.n_args(), nb = b.n_args();
            const std::size_t m = std::min(na, nb);
            for (std::size_t i = 0; i < m; ++i) {
                const int c = compare(a.arg(i), b.arg(i));
                if (c != 0) return c;
            }
            if (na != nb) return na < nb ? -1 : 1;
            return 0;
        }
    }
}

inline bool structurally_equal(const Expr& a, const Expr& b) { return compare(a, b) == 0; }

// ---------------------------------------------------------------------------
// Smart constructors.  Each assumes normalized inputs and returns a
// normalized result, so expressions stay in normal form by construction.

Expr make_add(std::vector<Expr> kids);
Expr make_mul(std::vector<Expr> kids);
Expr make_pow(const Expr& base, int e);
Expr make_sin(const Expr& u);
Expr make_cos(const Expr& u);
Expr make_exp(const Expr& u);
Expr make_log(const Expr& u);

namespace detail {

/// Splits a normalized term into (constant coefficient, non-constant core).
inline std::pair<Number, Expr> split_coeff(const Expr& t) {
    if (t.kind() == NodeKind::Constant) return {t.value(), Expr(1)};
    if (t.kind() == NodeKind::Mul && t.arg(0).kind() == NodeKind::Constant) {
        std::vector<Expr> rest(t.args().begin() + 1, t.args().end());
        if (rest.size() == 1) return {t.arg(0).value(), rest[0]};
        return {t.arg(0).value(), Expr::raw(NodeKind::Mul, std::move(rest))};
    }
    return {Number(1), t};
}

/// Rebuilds coeff * core where core is a normalized non-constant expression.
inline Expr with_coeff(const Number& c, const Expr& core) {
    if (c.is_zero()) return Expr(0);
    if (c.is_one()) return core;
    std::vector<Expr> kids;
    kids.push_back(Expr::constant(c));
    if (core.kind() == NodeKind::Mul) {
        for (const auto& k : core.args()) kids.push_back(k);
    } else {
        kids.push_back(core);
    }
    return Expr::raw(NodeKind::Mul, std::move(kids));
}

}  // namespace detail

inline Expr make_add(std::vector<Expr> kids) {
    Number const_acc(0);
    std::vector<std::pair<Expr, Number>> terms;  // core -> coefficient
    const auto absorb = [&](const Expr& t) {
        if (t.kind() == NodeKind::Constant) {
            const_acc = const_acc + t.value();
            return;
        }
        auto [c, core] = detail::split_coeff(t);
        for (auto& entry : terms) {
            if (structurally_equal(entry.first, core)) {
                entry.second = entry.second + c;
                return;
            }
        }
        terms.emplace_back(core, c);
    };
    for (const auto& k : kids) {
        if (k.kind() == NodeKind::Add) {
            for (const auto& kk : k.args()) absorb(kk);
        } else {
            absorb(k);
        }
    }
    std::vector<Expr> out;
    for (const auto& [core, c] : terms) {
        if (c.is_zero()) continue;
        out.push_back(detail::with_coeff(c, core));
    }
    if (!const_acc.is_zero() || out.empty()) out.push_back(Expr::constant(const_acc));
    if (out.size() == 1) return out[0];
    std::sort(out.begin(), out.end(), [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    return Expr::raw(NodeKind::Add, std::move(out));
}

inline Expr make_mul(std::vector<Expr> kids) {
    Number coeff(1);
    std::vector<std::pair<Expr, int>> bases;  // base -> integer exponent
    std::vector<Expr> exp_args;
    const auto add_base = [&](const Expr& b, int e) {
        for (auto& entry : bases) {
            if (structurally_equal(entry.first, b)) {
                entry.second += e;
                return;
            }
        }
        bases.emplace_back(b, e);
    };
    const auto absorb = [&](const Expr& f) {
        switch (f.kind()) {
            case NodeKind::Constant:
                coeff = coeff * f.value();
                break;
            case NodeKind::IntPow:
                add_base(f.arg(0), f.exponent());
                break;
            case NodeKind::Exp:
                exp_args.push_back(f.arg(0));
                break;
            default:
                add_base(f, 1);
        }
    };
    for (const auto& k : kids) {
        if (k.kind() == NodeKind::Mul) {
            for (const auto& kk : k.args()) absorb(kk);
        } else {
            absorb(k);
        }
    }
    if (coeff.is_zero()) return Expr(0);
    if (!exp_args.empty()) {
        // exp_args has been consumed here, so the merged factor must go through
        // add_base directly; routing it back through absorb would drop it
        const Expr e = make_exp(make_add(std::move(exp_args)));
        switch (e.kind()) {
            case NodeKind::Constant:
                coeff = coeff * e.value();
                break;
            case NodeKind::IntPow:
                add_base(e.arg(0), e.exponent());
                break;
            case NodeKind::Mul:  // possible via exp(log(y)) = y
                for (const auto& k : e.args()) {
                    if (k.kind() == NodeKind::Constant)
                        coeff = coeff * k.value();
                    else if (k.kind() == NodeKind::IntPow)
                        add_base(k.arg(0), k.exponent());
                    else
                        add_base(k, 1);
                }
                break;
            default:
                add_base(e, 1);
        }
    }
    std::vector<Expr> factors;
    for (const auto& [b, e] : bases) {
        if (e == 0) continue;
        factors.push_back(e == 1 ? b : Expr::raw(NodeKind::IntPow, {b}, Number(0), 0, e));
    }
    std::sort(factors.begin(), factors.end(),
              [](const Expr& a, const Expr& b) { return compare(a, b) < 0; });
    if (factors.empty()) return Expr::constant(coeff);
    if (coeff.is_one() && factors.size() == 1) return factors[0];
    std::vector<Expr> out;
    if (!coeff.is_one()) out.push_back(Expr::constant(coeff));
    for (auto& f : factors) out.push_back(std::move(f));
    if (out.size() == 1) return out[0];
    return Expr::raw(NodeKind::Mul, std::move(out));
}

inline Expr make_pow(const Expr& base, int e) {
    if (e == 0) return Expr(1);
    if (e == 1) return base;
    switch (base.kind()) {
        case NodeKind::Constant:
            return Expr::constant(base.value().pow_int(e));
        case NodeKind::IntPow:
            return make_pow(base.arg(0), base.exponent() * e);
        case NodeKind::Mul: {
            std::vector<Expr> kids;
            for (const auto& k : base.args()) kids.push_back(make_pow(k, e));
            return make_mul(std::move(kids));
        }
        case NodeKind::Exp:
            return make_exp(make_mul({Expr(e), base.arg(0)}));
        default:
            return Expr::raw(NodeKind::IntPow, {base}, Number(0), 0, e);
    }
}

namespace detail {

/// Detects a canonically negative argument (constant < 0 or product with a
/// negative leading constant); used for sin/cos parity.
inline bool leading_negative(const Expr& u) {
    if (u.kind() == NodeKind::Constant) return u.value().negative();
    if (u.kind() == NodeKind::Mul && u.arg(0).kind() == NodeKind::Constant)
        return u.arg(0).value().negative();
    return false;
}

}  // namespace detail

inline Expr make_sin(const Expr& u) {
    if (u.kind() == NodeKind::Constant) {
        if (u.value().is_zero()) return Expr(0);
        return Expr(Number::from_double(std::sin(u.value().value())));
    }
    if (detail::leading_negative(u)) return make_mul({Expr(-1), make_sin(make_mul({Expr(-1), u}))});
    return Expr::raw(NodeKind::Sin, {u});
}

inline Expr make_cos(const Expr& u) {
    if (u.kind() == NodeKind::Constant) {
        if (u.value().is_zero()) return Expr(1);
        return Expr(Number::from_double(std::cos(u.value().value())));
    }
    if (detail::leading_negative(u)) return make_cos(make_mul({Expr(-1), u}));
    return Expr::raw(NodeKind::Cos, {u});
}

inline Expr make_exp(const Expr& u) {
    if (u.kind() == NodeKind::Constant) {
        if (u.value().is_zero()) return Expr(1);
        return Expr(Number::from_double(std::exp(u.value().value())));
    }
    if (u.kind() == NodeKind::Log) return u.arg(0);  // exp(log x) = x where defined
    return Expr::raw(NodeKind::Exp, {u});
}

inline Expr make_log(const Expr& u) {
    if (u.kind() == NodeKind::Constant) {
        if (u.value().is_one()) return Expr(0);
        return Expr(Number::from_double(std::log(u.value().value())));
    }
    if (u.kind() == NodeKind::Exp) return u.arg(0);
    return Expr::raw(NodeKind::Log, {u});
}

inline Expr make_div(const Expr& num, const Expr& den) {
    if (den.kind() == NodeKind::Constant) return make_mul({num, Expr::constant(den.value().reciprocal())});
    return make_mul({num, make_pow(den, -1)});
}

// Operator sugar.

inline Expr operator+(const Expr& a, const Expr& b) { return make_add({a, b}); }
inline Expr operator-(const Expr& a) { return make_mul({Expr(-1), a}); }
inline Expr operator-(const Expr& a, const Expr& b) { return make_add({a, -b}); }
inline Expr operator*(const Expr& a, const Expr& b) { return make_mul({a, b}); }
inline Expr operator/(const Expr& a, const Expr& b) { return make_div(a, b); }
inline Expr& operator+=(Expr& a, const Expr& b) { return a = a + b; }
inline Expr& operator-=(Expr& a, const Expr& b) { return a = a - b; }
inline Expr& operator*=(Expr& a, const Expr& b) { return a = a * b; }

inline Expr sin(const Expr& u) { return make_sin(u); }
inline Expr cos(const Expr& u) { return make_cos(u); }
inline Expr exp(const Expr& u) { return make_exp(u); }
inline Expr log(const Expr& u) { return make_log(u); }
inline Expr pow(const Expr& b, int e) { return make_pow(b, e); }

/// Full recursive normalization.  Identity on expressions produced by the
/// smart constructors; needed for trees assembled with Expr::raw.
inline Expr simplify(const Expr& e) {
    switch (e.kind()) {
        case NodeKind::Constant:
        case NodeKind::Coordinate:
            return e;
        case NodeKind::Add: {
            std::vector<Expr> kids;
            for (const auto& k : e.args()) kids.push_back(simplify(k));
            return make_add(std::move(kids));
        }
        case NodeKind::Mul: {
            std::vector<Expr> kids;
            for (const auto& k : e.args()) kids.push_back(simplify(k));
            return make_mul(std::move(kids));
        }
        case NodeKind::IntPow:
            return make_pow(simplify(e.arg(0)), e.exponent());
        case NodeKind::Div:
            return make_div(simplify(e.arg(0)), simplify(e.arg(1)));
        case NodeKind::Sin:
            return make_sin(simplify(e.arg(0)));
        case NodeKind::Cos:
            return make_cos(simplify(e.arg(0)));
        case NodeKind::Exp:
            return make_exp(simplify(e.arg(0)));
        case NodeKind::Log:
            return make_log(simplify(e.arg(0)));
    }
    return e;
}

/// Exact partial derivative with respect to coordinate `i`, simplified.
inline Expr diff(const Expr& e, int i) {
    switch (e.kind()) {
        case NodeKind::Constant:
            return Expr(0);
        case NodeKind::Coordinate:
            return Expr(e.index() == i ? 1 : 0);
        case NodeKind::Add: {
            std::vector<Expr> kids;
            for (const auto& k : e.args()) kids.push_back(diff(k, i));
            return make_add(std::move(kids));
        }
        case NodeKind::Mul: {
            std::vector<Expr> terms;
            for (std::size_t j = 0; j < e.n_args(); ++j) {
                std::vector<Expr> factors;
                for (std::size_t k = 0; k < e.n_args(); ++k)
                    factors.push_back(k == j ? diff(e.arg(k), i) : e.arg(k));
                terms.push_back(make_mul(std::move(factors)));
            }
            return make_add(std::move(terms));
        }
        case NodeKind::IntPow:
            return make_mul({Expr(e.exponent()), make_pow(e.arg(0), e.exponent() - 1),
                             diff(e.arg(0), i)});
        case NodeKind::Div: {
            const Expr& a = e.arg(0);
            const Expr& b = e.arg(1);
            return make_div(make_add({make_mul({diff(a, i), b}), -make_mul({a, diff(b, i)})}),
                            make_pow(b, 2));
        }
        case NodeKind::Sin:
            return make_mul({make_cos(e.arg(0)), diff(e.arg(0), i)});
        case NodeKind::Cos:
            return make_mul({Expr(-1), make_sin(e.arg(0)), diff(e.arg(0), i)});
        case NodeKind::Exp:
            return make_mul({e, diff(e.arg(0), i)});
        case NodeKind::Log:
            return make_div(diff(e.arg(0), i), e.arg(0));
    }
    return Expr(0);
}

namespace detail {

inline double pow_int_double(double v, int e) {
    if (e < 0) {
        if (v == 0.0) throw DomainError("division by zero in integer power");
        return 1.0 / pow_int_double(v, -e);
    }
    double acc = 1.0, base = v;
    int k = e;
    while (k > 0) {
        if (k & 1) acc *= base;
        base *= base;
        k >>= 1;
    }
    return acc;
}

}  // namespace detail

/// IEEE double evaluation at a coordinate point.  Throws DomainError on
/// division by zero, log of a non-positive value, or a non-finite result.
inline double eval(const Expr& e, std::span<const double> p) {
    double r = 0.0;
    switch (e.kind()) {
        case NodeKind::Constant:
            r = e.value().value();
            break;
        case NodeKind::Coordinate:
            r = p[std::size_t(e.index())];
            break;
        case NodeKind::Add: {
            for (const auto& k : e.args()) r += eval(k, p);
            break;
        }
        case NodeKind::Mul: {
            r = 1.0;
            for (const auto& k : e.args()) r *= eval(k, p);
            break;
        }
        case NodeKind::IntPow:
            r = detail::pow_int_double(eval(e.arg(0), p), e.exponent());
            break;
        case NodeKind::Div: {
            const double den = eval(e.arg(1), p);
            if (den == 0.0) throw DomainError("division by zero");
            r = eval(e.arg(0), p) / den;
            break;
        }
        case NodeKind::Sin:
            r = std::sin(eval(e.arg(0), p));
            break;
        case NodeKind::Cos:
            r = std::cos(eval(e.arg(0), p));
            break;
        case NodeKind::Exp:
            r = std::exp(eval(e.arg(0), p));
            break;
        case NodeKind::Log: {
            const double v = eval(e.arg(0), p);
            if (v <= 0.0) throw DomainError("log of non-positive value");
            r = std::log(v);
            break;
        }
    }
    if (!std::isfinite(r)) throw DomainError("non-finite value in evaluation");
    return r;
}

inline double eval(const Expr& e, const std::vector<double>& p) {
    return eval(e, std::span<const double>(p));
}

/// True if coordinate `i` occurs anywhere in the tree.
inline bool depends_on(const Expr& e, int i) {
    if (e.kind() == NodeKind::Coordinate) return e.index() == i;
    for (const auto& k : e.args())
        if (depends_on(k, i)) return true;
    return false;
}

// ---------------------------------------------------------------------------
// Printing.  Deterministic; round-trips through the infix parser.

namespace detail {

std::string print_expr(const Expr& e, std::span<const std::string> names, int parent_prec);

inline std::string coord_name(int i, std::span<const std::string> names) {
    if (i >= 0 && std::size_t(i) < names.size()) return names[std::size_t(i)];
    return "x" + std::to_string(i);
}

inline std::string print_const(const Number& v, bool need_parens) {
    std::string s = v.str();
    const bool composite = s.find('/') != std::string::npos || (!s.empty() && s[0] == '-');
    if (need_parens && composite) return "(" + s + ")";
    return s;
}

inline std::string print_mul(const Expr& e, std::span<const std::string> names) {
    // Factors with negative exponents print as a trailing division chain.
    std::string num, den;
    std::string coeff;
    const auto push = [&](std::string& dst, const std::string& s) {
        if (!dst.empty()) dst += "*";
        dst += s;
    };
    for (const auto& k : e.args()) {
        if (k.kind() == NodeKind::Constant) {
            coeff = print_const(k.value(), true);
            if (coeff == "-1") coeff = "-";
        } else if (k.kind() == NodeKind::IntPow && k.exponent() < 0) {
            const Expr inv = make_pow(k.arg(0), -k.exponent());
            push(den, print_expr(inv, names, 3));
        } else {
            push(num, print_expr(k, names, 2));
        }
    }
    std::string out;
    if (coeff == "-") {
        out = num.empty() ? "-1" : "-" + num;
    } else if (!coeff.empty()) {
        out = num.empty() ? coeff : coeff + "*" + num;
    } else {
        out = num.empty() ? "1" : num;
    }
    if (!den.empty()) {
        const bool multi = den.find('*') != std::string::npos;
        out += "/" + (multi ? "(" + den + ")" : den);
    }
    return out;
}

inline std::string print_expr(const Expr& e, std::span<const std::string> names, int parent_prec) {
    // Precedence levels: Add = 1, Mul/Div = 2, IntPow = 3, atoms = 4.
    std::string s;
    int prec = 4;
    switch (e.kind()) {
        case NodeKind::Constant:
            s = print_const(e.value(), parent_prec >= 2);
            break;
        case NodeKind::Coordinate:
            s = coord_name(e.index(), names);
            break;
        case NodeKind::Add: {
            prec = 1;
            for (std::size_t i = 0; i < e.n_args(); ++i) {
                std::string t = print_expr(e.arg(i), names, 1);
                if (i == 0) {
                    s = t;
                } else if (!t.empty() && t[0] == '-') {
                    s += " - " + t.substr(1);
                } else {
                    s += " + " + t;
                }
            }
            break;
        }
        case NodeKind::Mul:
            prec = 2;
            s = print_mul(e, names);
            break;
        case NodeKind::IntPow: {
            prec = 3;
            if (e.exponent() < 0) {
                s = print_mul(Expr::raw(NodeKind::Mul, {Expr(1), e}), names);
                prec = 2;
            } else {
                s = print_expr(e.arg(0), names, 4) + "^" + std::to_string(e.exponent());
            }
            break;
        }
        case NodeKind::Div:
            prec = 2;
            s = print_expr(e.arg(0), names, 3) + "/" + print_expr(e.arg(1), names, 3);
            break;
        case NodeKind::Sin:
            s = "sin(" + print_expr(e.arg(0), names, 0) + ")";
            break;
        case NodeKind::Cos:
            s = "cos(" + print_expr(e.arg(0), names, 0) + ")";
            break;
        case NodeKind::Exp:
            s = "exp(" + print_expr(e.arg(0), names, 0) + ")";
            break;
        case NodeKind::Log:
            s = "log(" + print_expr(e.arg(0), names, 0) + ")";
            break;
    }
    if (prec < parent_prec || (prec <= parent_prec && !s.empty() && s[0] == '-'))
        return "(" + s + ")";
    return s;
}

}  // namespace detail

inline std::string to_string(const Expr& e, std::span<const std::string> coord_names = {}) {
    return detail::print_expr(e, coord_names, 0);
}

/// Square root of an expression known to be positive on the chart.  Perfect
/// squares (even powers, squared factors, constants) are taken exactly; the
/// general case goes through exp(log(e)/2).
inline Expr sqrt_positive(const Expr& e) {
    switch (e.kind()) {
        case NodeKind::Constant: {
            const Number& v = e.value();
            if (v.exact() && v.num() >= 0) {
                const auto isq = [](std::int64_t x) -> std::int64_t {
                    std::int64_t r = std::int64_t(std::llround(std::sqrt(double(x))));
                    while (r * r > x) --r;
                    while ((r + 1) * (r + 1) <= x) ++r;
                    return r;
                };
                const std::int64_t rn = isq(v.num()), rd = isq(v.den());
                if (rn * rn == v.num() && rd * rd == v.den())
                    return Expr::constant(Number::rational(rn, rd));
            }
            return Expr(Number::from_double(std::sqrt(v.value())));
        }
        case NodeKind::IntPow:
            if (e.exponent() % 2 == 0) return make_pow(e.arg(0), e.exponent() / 2);
            break;
        case NodeKind::Exp:
            return make_exp(make_mul({Expr::rational(1, 2), e.arg(0)}));
        case NodeKind::Mul: {
            std::vector<Expr> roots;
            bool all_square = true;
            for (const auto& k : e.args()) {
                if (k.kind() == NodeKind::IntPow && k.exponent() % 2 == 0) {
                    roots.push_back(make_pow(k.arg(0), k.exponent() / 2));
                } else if (k.kind() == NodeKind::Constant && k.value().exact()) {
                    Expr r = sqrt_positive(k);
                    if (r.kind() != NodeKind::Constant || !r.value().exact()) {
                        all_square = false;
                        break;
                    }
                    roots.push_back(r);
                } else {
                    all_square = false;
                    break;
                }
            }
            if (all_square) return make_mul(std::move(roots));
            break;
        }
        default:
            break;
    }
    return make_exp(make_mul({Expr::rational(1, 2), make_log(e)}));
}

}  // namespace estalg
