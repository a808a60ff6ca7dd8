#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/errors.hpp"
#include "estalg/expr.hpp"
#include "estalg/metric.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

// Multi-index of partial-derivative orders, one entry per coordinate.
using MultiIndex = std::vector<int>;

inline int multi_degree(const MultiIndex& a) {
    return std::accumulate(a.begin(), a.end(), 0);
}

// Graded-lex: first by total degree, then lexicographically.
struct GradedLexLess {
    bool operator()(const MultiIndex& a, const MultiIndex& b) const {
        const int da = multi_degree(a);
        const int db = multi_degree(b);
        if (da != db) return da < db;
        return a < b;
    }
};

inline Expr diff_multi(Expr f, const MultiIndex& alpha) {
    for (std::size_t i = 0; i < alpha.size(); ++i)
        for (int k = 0; k < alpha[i]; ++k) f = diff(f, int(i));
    return f;
}

namespace detail {

inline std::int64_t binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    std::int64_t r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

// Product of per-axis binomial coefficients C(alpha_i, gamma_i).
inline std::int64_t multi_binomial(const MultiIndex& alpha, const MultiIndex& gamma) {
    std::int64_t r = 1;
    for (std::size_t i = 0; i < alpha.size(); ++i) r *= binomial(alpha[i], gamma[i]);
    return r;
}

// Advance gamma through the box 0 <= gamma <= alpha; returns false after the last one.
inline bool next_sub_index(MultiIndex& gamma, const MultiIndex& alpha) {
    for (std::size_t i = 0; i < gamma.size(); ++i) {
        if (gamma[i] < alpha[i]) {
            ++gamma[i];
            for (std::size_t j = 0; j < i; ++j) gamma[j] = 0;
            return true;
        }
    }
    return false;
}

}  // namespace detail

// A differential operator in normal form: sum over multi-indices of c_alpha * d^alpha,
// coefficients on the left. Coefficients that fail to be provably nonzero under the
// probabilistic zero test are pruned, so the empty map is the zero operator.
class DiffOp {
  public:
    using TermMap = std::map<MultiIndex, Expr, GradedLexLess>;

    // order() of the zero operator; stands in for "minus infinity".
    static constexpr int kZeroOrder = -1;

    explicit DiffOp(ChartPtr chart) : chart_(std::move(chart)) {
        if (!chart_) throw ConfigError("DiffOp requires a chart");
    }

    static DiffOp zero(ChartPtr chart) { return DiffOp(std::move(chart)); }

    static DiffOp multiplication(Expr f, ChartPtr chart, const Tolerances& tol = {}) {
        DiffOp d(std::move(chart));
        d.terms_[MultiIndex(std::size_t(d.chart_->dim), 0)] = simplify(std::move(f));
        d.prune(tol);
        return d;
    }

    static DiffOp derivative(ChartPtr chart, int axis) {
        DiffOp d(std::move(chart));
        if (axis < 0 || axis >= d.chart_->dim)
            throw ConfigError("derivative axis out of range");
        MultiIndex a(std::size_t(d.chart_->dim), 0);
        a[std::size_t(axis)] = 1;
        d.terms_[a] = Expr(1);
        return d;
    }

    static DiffOp pure_derivative(ChartPtr chart, MultiIndex alpha) {
        DiffOp d(std::move(chart));
        if (int(alpha.size()) != d.chart_->dim)
            throw ConfigError("multi-index length does not match chart dimension");
        d.terms_[std::move(alpha)] = Expr(1);
        return d;
    }

    static DiffOp from_terms(ChartPtr chart, TermMap terms, const Tolerances& tol = {}) {
        DiffOp d(std::move(chart));
        d.terms_ = std::move(terms);
        for (auto& [a, c] : d.terms_) {
            if (int(a.size()) != d.chart_->dim)
                throw ConfigError("multi-index length does not match chart dimension");
            c = simplify(c);
        }
        d.prune(tol);
        return d;
    }

    const ChartPtr& chart() const { return chart_; }
    const TermMap& terms() const { return terms_; }

    bool is_zero_op() const { return terms_.empty(); }

    int order() const {
        if (terms_.empty()) return kZeroOrder;
        return multi_degree(terms_.rbegin()->first);  // graded order: last key has max degree
    }

    Expr coefficient(const MultiIndex& alpha) const {
        const auto it = terms_.find(alpha);
        return it == terms_.end() ? Expr(0) : it->second;
    }

    Expr apply(const Expr& f) const {
        Expr out(0);
        for (const auto& [alpha, c] : terms_) out = out + c * diff_multi(f, alpha);
        return simplify(out);
    }

    DiffOp& add_term(const MultiIndex& alpha, const Expr& c) {
        auto it = terms_.find(alpha);
        if (it == terms_.end())
            terms_.emplace(alpha, c);
        else
            it->second = it->second + c;
        return *this;
    }

    void prune(const Tolerances& tol = {}) {
        for (auto it = terms_.begin(); it != terms_.end();) {
            if (is_zero(it->second, *chart_, tol))
                it = terms_.erase(it);
            else
                ++it;
        }
    }

    std::string str() const {
        if (terms_.empty()) return "0";
        std::string out;
        for (const auto& [alpha, c] : terms_) {
            std::string dstr;
            for (std::size_t i = 0; i < alpha.size(); ++i) {
                if (alpha[i] == 0) continue;
                if (!dstr.empty()) dstr += " ";
                dstr += "d" + chart_->coord_names[i];
                if (alpha[i] > 1) dstr += "^" + std::to_string(alpha[i]);
            }
            std::string cs = to_string(c, chart_->coord_names);
            std::string term;
            if (dstr.empty()) {
                term = cs;
            } else if (c.is_one_constant()) {
                term = dstr;
            } else if (c.is_constant() && (c + Expr(1)).is_zero_constant()) {
                term = "-" + dstr;
            } else {
                if (c.kind() == NodeKind::Add) cs = "(" + cs + ")";
                term = cs + " " + dstr;
            }
            if (out.empty()) {
                out = term;
            } else if (!term.empty() && term[0] == '-') {
                out += " - " + term.substr(1);
            } else {
                out += " + " + term;
            }
        }
        return out;
    }

  private:
    ChartPtr chart_;
    TermMap terms_;
};

inline bool same_chart(const DiffOp& a, const DiffOp& b) {
    return a.chart() == b.chart() ||
           (a.chart()->name == b.chart()->name && a.chart()->dim == b.chart()->dim);
}

inline DiffOp operator+(const DiffOp& a, const DiffOp& b) {
    if (!same_chart(a, b)) throw ConfigError("operator chart mismatch");
    DiffOp out = a;
    for (const auto& [alpha, c] : b.terms()) out.add_term(alpha, c);
    out.prune();
    return out;
}

inline DiffOp operator*(const Expr& s, const DiffOp& d) {
    DiffOp::TermMap terms;
    for (const auto& [alpha, c] : d.terms()) terms[alpha] = s * c;
    return DiffOp::from_terms(d.chart(), std::move(terms));
}

inline DiffOp operator*(double s, const DiffOp& d) { return Expr(s) * d; }

inline DiffOp operator-(const DiffOp& d) { return Expr(-1) * d; }

inline DiffOp operator-(const DiffOp& a, const DiffOp& b) { return a + (-b); }

// Leibniz expansion of a . b: for each pair of terms c d^alpha and e d^beta,
// d^alpha (e u) = sum over gamma <= alpha of C(alpha,gamma) d^(alpha-gamma)(e) d^gamma(u).
inline DiffOp compose(const DiffOp& a, const DiffOp& b, const Tolerances& tol = {}) {
    if (!same_chart(a, b)) throw ConfigError("operator chart mismatch");
    const std::size_t n = std::size_t(a.chart()->dim);
    DiffOp out = DiffOp::zero(a.chart());
    for (const auto& [alpha, c] : a.terms()) {
        for (const auto& [beta, e] : b.terms()) {
            MultiIndex gamma(n, 0);
            do {
                const Expr de = diff_multi(e, [&] {
                    MultiIndex rest(n, 0);
                    for (std::size_t i = 0; i < n; ++i) rest[i] = alpha[i] - gamma[i];
                    return rest;
                }());
                if (de.is_zero_constant()) continue;
                MultiIndex idx(n, 0);
                for (std::size_t i = 0; i < n; ++i) idx[i] = gamma[i] + beta[i];
                const auto binc = detail::multi_binomial(alpha, gamma);
                out.add_term(idx, Expr(Number(binc)) * c * de);
            } while (detail::next_sub_index(gamma, alpha));
        }
    }
    out.prune(tol);
    return out;
}

inline DiffOp commutator(const DiffOp& a, const DiffOp& b, const Tolerances& tol = {}) {
    return compose(a, b, tol) - compose(b, a, tol);
}

inline bool op_equal(const DiffOp& a, const DiffOp& b, const Tolerances& tol = {}) {
    DiffOp d = a - b;
    d.prune(tol);
    return d.is_zero_op();
}

// Formal adjoint with respect to the canonical measure sqrt|g| dx:
// each term c d^alpha contributes u -> (-1)^|alpha| (1/sqrt|g|) d^alpha (sqrt|g| c u).
inline DiffOp adjoint(const DiffOp& d, const Metric& g, const Tolerances& tol = {}) {
    const Expr sg = sqrt_det(g);
    const Expr inv_sg = simplify(Expr(1) / sg);
    const DiffOp left = DiffOp::multiplication(inv_sg, d.chart(), tol);
    DiffOp out = DiffOp::zero(d.chart());
    for (const auto& [alpha, c] : d.terms()) {
        const DiffOp mid = DiffOp::pure_derivative(d.chart(), alpha);
        const DiffOp right = DiffOp::multiplication(simplify(sg * c), d.chart(), tol);
        DiffOp term = compose(compose(left, mid, tol), right, tol);
        if (multi_degree(alpha) % 2 != 0) term = -term;
        out = out + term;
    }
    out.prune(tol);
    return out;
}

}  // namespace estalg
