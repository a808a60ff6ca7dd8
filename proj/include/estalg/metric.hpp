#pragma once

#include <Eigen/Dense>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/errors.hpp"
#include "estalg/expr.hpp"

namespace estalg {

using ScalarField = Expr;
using VectorField = std::vector<Expr>;

using ExprMatrix = std::vector<std::vector<Expr>>;

/// Riemannian metric on a chart: symmetric matrix of coefficient expressions,
/// positive definite at the zero-test sample points.
struct Metric {
    ChartPtr chart;
    ExprMatrix g;

    int dim() const { return chart->dim; }

    static Metric identity(ChartPtr c) {
        Metric m;
        m.chart = std::move(c);
        const int n = m.chart->dim;
        m.g.assign(std::size_t(n), std::vector<Expr>(std::size_t(n), Expr(0)));
        for (int i = 0; i < n; ++i) m.g[std::size_t(i)][std::size_t(i)] = Expr(1);
        return m;
    }

    static Metric diagonal(ChartPtr c, std::vector<Expr> entries) {
        Metric m = identity(c);
        for (int i = 0; i < m.dim(); ++i) m.g[std::size_t(i)][std::size_t(i)] = entries[std::size_t(i)];
        return m;
    }

    /// Round metric diag(1, sin^2 theta) on the spherical chart.
    static Metric sphere_round(ChartPtr c) {
        return diagonal(std::move(c), {Expr(1), pow(sin(Expr::coord(0)), 2)});
    }

    const Expr& at(int i, int j) const { return g[std::size_t(i)][std::size_t(j)]; }
};

/// Christoffel symbols Gamma^i_{jk}, symmetric in (j,k).
struct Christoffel {
    ChartPtr chart;
    std::vector<std::vector<std::vector<Expr>>> gamma;

    const Expr& at(int i, int j, int k) const {
        return gamma[std::size_t(i)][std::size_t(j)][std::size_t(k)];
    }
};

namespace detail {

inline Expr matrix_det(const ExprMatrix& a) {
    const std::size_t n = a.size();
    if (n == 1) return a[0][0];
    if (n == 2) return a[0][0] * a[1][1] - a[0][1] * a[1][0];
    Expr det(0);
    for (std::size_t j = 0; j < n; ++j) {
        ExprMatrix minor;
        for (std::size_t r = 1; r < n; ++r) {
            std::vector<Expr> row;
            for (std::size_t c = 0; c < n; ++c)
                if (c != j) row.push_back(a[r][c]);
            minor.push_back(std::move(row));
        }
        Expr term = a[0][j] * matrix_det(minor);
        det = (j % 2 == 0) ? det + term : det - term;
    }
    return det;
}

/// Adjugate-over-determinant inverse; entries come out as products with
/// det^{-1}, simplified.
inline ExprMatrix matrix_inverse(const ExprMatrix& a) {
    const std::size_t n = a.size();
    const Expr det = matrix_det(a);
    ExprMatrix inv(n, std::vector<Expr>(n, Expr(0)));
    if (n == 1) {
        inv[0][0] = Expr(1) / det;
        return inv;
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            ExprMatrix minor;
            for (std::size_t r = 0; r < n; ++r) {
                if (r == i) continue;
                std::vector<Expr> row;
                for (std::size_t c = 0; c < n; ++c)
                    if (c != j) row.push_back(a[r][c]);
                minor.push_back(std::move(row));
            }
            Expr cof = matrix_det(minor);
            if ((i + j) % 2 == 1) cof = -cof;
            inv[j][i] = cof / det;  // transpose of cofactors
        }
    }
    return inv;
}

}  // namespace detail

/// Samples the matrix at interior points and checks the smallest eigenvalue
/// stays positive.  Returns false on evaluation failure.
inline bool positive_definite_at_samples(const ExprMatrix& a, const Chart& chart,
                                         const Tolerances& tol = {}) {
    const int n = int(a.size());
    RandomStream rng(tol.zero_test_seed, 17);
    for (int k = 0; k < tol.n_zero; ++k) {
        const Point p = chart.sample_interior(rng);
        Eigen::MatrixXd m(n, n);
        try {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    m(i, j) = eval(a[std::size_t(i)][std::size_t(j)], p);
        } catch (const DomainError&) {
            return false;
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
        if (es.eigenvalues().minCoeff() <= 0.0) return false;
    }
    return true;
}

/// Symbolic inverse with a numeric residual check of g * g^{-1} - I.
inline Metric inverse_metric(const Metric& g, const Tolerances& tol = {}) {
    Metric inv;
    inv.chart = g.chart;
    inv.g = detail::matrix_inverse(g.g);
    const int n = g.dim();
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            Expr r(0);
            for (int k = 0; k < n; ++k) r = r + g.at(i, k) * inv.at(k, j);
            r = r - Expr(i == j ? 1 : 0);
            if (!is_zero(r, *g.chart, tol))
                throw SingularMetric("metric inversion failed residual test at entry (" +
                                     std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
    return inv;
}

inline Expr metric_det(const Metric& g) { return simplify(detail::matrix_det(g.g)); }

/// Density factor sqrt|g| of the canonical measure.
inline Expr sqrt_det(const Metric& g) { return sqrt_positive(metric_det(g)); }

/// Gamma^i_{jk} = 1/2 g^{il} (d_j g_lk + d_k g_jl - d_l g_jk).
inline Christoffel christoffel(const Metric& g, const Tolerances& tol = {}) {
    const int n = g.dim();
    const Metric ginv = inverse_metric(g, tol);
    Christoffel c;
    c.chart = g.chart;
    c.gamma.assign(std::size_t(n),
                   std::vector<std::vector<Expr>>(std::size_t(n), std::vector<Expr>(std::size_t(n), Expr(0))));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            for (int k = j; k < n; ++k) {
                Expr sum(0);
                for (int l = 0; l < n; ++l) {
                    Expr t = diff(g.at(l, k), j) + diff(g.at(j, l), k) - diff(g.at(j, k), l);
                    sum = sum + ginv.at(i, l) * t;
                }
                Expr v = Expr::rational(1, 2) * sum;
                c.gamma[std::size_t(i)][std::size_t(j)][std::size_t(k)] = v;
                c.gamma[std::size_t(i)][std::size_t(k)][std::size_t(j)] = v;
            }
        }
    }
    return c;
}

/// Gradient components g^{ij} d_j f.
inline VectorField grad(const ScalarField& f, const Metric& g, const Tolerances& tol = {}) {
    const int n = g.dim();
    const Metric ginv = inverse_metric(g, tol);
    VectorField out(std::size_t(n), Expr(0));
    for (int i = 0; i < n; ++i) {
        Expr c(0);
        for (int j = 0; j < n; ++j) c = c + ginv.at(i, j) * diff(f, j);
        out[std::size_t(i)] = c;
    }
    return out;
}

/// Divergence (1/sqrt|g|) d_i (sqrt|g| X^i).
inline ScalarField div(const VectorField& x, const Metric& g) {
    const Expr s = sqrt_det(g);
    const Expr sinv = Expr(1) / s;
    Expr out(0);
    for (int i = 0; i < g.dim(); ++i) out = out + sinv * diff(s * x[std::size_t(i)], i);
    return out;
}

/// Pairing g_ij X^i Y^j.
inline ScalarField inner(const VectorField& x, const VectorField& y, const Metric& g) {
    Expr out(0);
    for (int i = 0; i < g.dim(); ++i)
        for (int j = 0; j < g.dim(); ++j)
            out = out + g.at(i, j) * x[std::size_t(i)] * y[std::size_t(j)];
    return out;
}

/// Laplace-Beltrami div(grad f).
inline ScalarField laplacian(const ScalarField& f, const Metric& g, const Tolerances& tol = {}) {
    return div(grad(f, g, tol), g);
}

}  // namespace estalg
