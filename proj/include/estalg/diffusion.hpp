#pragma once

#include <utility>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/diffop.hpp"
#include "estalg/errors.hpp"
#include "estalg/expr.hpp"
#include "estalg/metric.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

// Second- and first-order coefficients of a generator written in coordinates:
// L = 1/2 sum a_ij d_i d_j + sum b_i d_i. The zeroth-order part is always absent.
struct DiffusionSpec {
    ChartPtr chart;
    ExprMatrix a;
    VectorField b;

    static DiffusionSpec flat(ChartPtr chart, VectorField drift = {}) {
        DiffusionSpec s;
        s.chart = std::move(chart);
        const std::size_t n = std::size_t(s.chart->dim);
        s.a.assign(n, std::vector<Expr>(n, Expr(0)));
        for (std::size_t i = 0; i < n; ++i) s.a[i][i] = Expr(1);
        s.b = drift.empty() ? VectorField(n, Expr(0)) : std::move(drift);
        return s;
    }

    void validate(const Tolerances& tol = {}) const {
        const std::size_t n = std::size_t(chart->dim);
        if (a.size() != n || b.size() != n)
            throw ConfigError("diffusion coefficient dimensions do not match chart");
        for (std::size_t i = 0; i < n; ++i) {
            if (a[i].size() != n)
                throw ConfigError("diffusion coefficient matrix is not square");
            for (std::size_t j = i + 1; j < n; ++j)
                if (!is_zero(a[i][j] - a[j][i], *chart, tol))
                    throw NonDegeneracyViolation("diffusion matrix is not symmetric");
        }
        if (!positive_definite_at_samples(a, *chart, tol))
            throw NonDegeneracyViolation("diffusion matrix is not positive definite at sample points");
    }
};

// Laplace-Beltrami operator as a differential operator:
// Delta = sum_ij ginv_ij d_i d_j + sum_j (1/sqrt|g|) d_i(sqrt|g| ginv_ij) d_j.
inline DiffOp laplace_beltrami_op(const Metric& g, const Tolerances& tol = {}) {
    const Metric gi = inverse_metric(g, tol);
    const Expr sg = sqrt_det(g);
    const Expr inv_sg = simplify(Expr(1) / sg);
    const std::size_t n = std::size_t(g.chart->dim);
    DiffOp out = DiffOp::zero(g.chart);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            MultiIndex second(n, 0);
            ++second[i];
            ++second[j];
            out.add_term(second, gi.at(int(i), int(j)));
            MultiIndex first(n, 0);
            ++first[j];
            out.add_term(first, simplify(inv_sg * diff(simplify(sg * gi.at(int(i), int(j))), int(i))));
        }
    }
    out.prune(tol);
    return out;
}

// Assemble the generator of a DiffusionSpec as a differential operator.
inline DiffOp generator_op(const DiffusionSpec& spec, const Tolerances& tol = {}) {
    const std::size_t n = std::size_t(spec.chart->dim);
    DiffOp out = DiffOp::zero(spec.chart);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            MultiIndex second(n, 0);
            ++second[i];
            ++second[j];
            out.add_term(second, Expr::rational(1, 2) * spec.a[i][j]);
        }
        MultiIndex first(n, 0);
        ++first[i];
        out.add_term(first, spec.b[i]);
    }
    out.prune(tol);
    return out;
}

// Metric whose half-Laplacian matches the degree-2 part of the generator, plus the
// first-order remainder field F with L = 1/2 Delta + F. The remainder comes from
// symbolic subtraction, so the degree-2 cancellation is checked rather than assumed.
inline std::pair<Metric, VectorField> metric_from_diffusion(const DiffusionSpec& spec,
                                                            const Tolerances& tol = {}) {
    spec.validate(tol);
    Metric gt;
    gt.chart = spec.chart;
    gt.g = detail::matrix_inverse(spec.a);
    for (auto& row : gt.g)
        for (auto& e : row) e = simplify(e);
    // residual check on the symbolic inverse
    const std::size_t n = std::size_t(spec.chart->dim);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            Expr r(i == j ? -1 : 0);
            for (std::size_t k = 0; k < n; ++k) r = r + spec.a[i][k] * gt.g[k][j];
            if (!is_zero(r, *spec.chart, tol))
                throw SingularMetric("diffusion matrix could not be inverted symbolically");
        }

    DiffOp rem = generator_op(spec, tol) - Expr::rational(1, 2) * laplace_beltrami_op(gt, tol);
    rem.prune(tol);
    if (rem.order() > 1)
        throw IdentityViolation("degree-2 part failed to cancel in metric_from_diffusion");
    VectorField f(n, Expr(0));
    for (const auto& [alpha, c] : rem.terms()) {
        if (multi_degree(alpha) == 0)
            throw IdentityViolation("unexpected zeroth-order remainder in metric_from_diffusion");
        for (std::size_t i = 0; i < n; ++i)
            if (alpha[i] == 1) f[i] = c;
    }
    return {std::move(gt), std::move(f)};
}

}  // namespace estalg
