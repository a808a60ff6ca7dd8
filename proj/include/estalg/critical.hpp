#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "estalg/errors.hpp"
#include "estalg/estimation.hpp"
#include "estalg/expr.hpp"
#include "estalg/metric.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

struct CriticalPoint {
    Point x;
    double value = 0.0;  // f at x
};

struct CriticalPointResult {
    std::vector<CriticalPoint> points;
    std::vector<std::string> warnings;
};

namespace detail {

inline int default_seeds_per_axis(const Chart& chart) {
    if (chart.name == "sphere2") return 256;
    return chart.dim == 1 ? 512 : (chart.dim == 2 ? 512 : 48);
}

inline std::vector<double> axis_seeds(const Chart& chart, int axis, int count) {
    std::vector<double> s;
    s.reserve(std::size_t(count));
    const std::size_t i = std::size_t(axis);
    if (chart.periodic[i]) {
        const double step = (chart.hi[i] - chart.lo[i]) / count;
        for (int k = 0; k < count; ++k) s.push_back(chart.lo[i] + k * step);
    } else {
        const double a = chart.inner_lo(axis);
        const double b = chart.inner_hi(axis);
        for (int k = 0; k < count; ++k)
            s.push_back(count == 1 ? 0.5 * (a + b) : a + (b - a) * k / (count - 1));
    }
    return s;
}

}  // namespace detail

// Critical points of f: Newton refinement of the gradient map from a dense grid of
// seeds, filtered to grid-local minima of |df|^2, deduplicated, sorted lexicographically.
inline CriticalPointResult critical_points(const ScalarField& f, const Metric& g,
                                           const Tolerances& tol = {},
                                           int seeds_per_axis = 0) {
    const Chart& chart = *g.chart;
    const int n = chart.dim;
    if (is_zero(q_op(f, g, tol), chart, tol))
        throw DegenerateField("cannot search critical points of a constant field");

    std::vector<Expr> df, hess;
    for (int i = 0; i < n; ++i) df.push_back(diff(f, i));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) hess.push_back(diff(df[std::size_t(i)], j));
    Expr s2(0);  // coordinate gradient norm squared, cheap seed filter
    for (const auto& d : df) s2 = s2 + d * d;
    s2 = simplify(s2);
    const Expr q = q_op(f, g, tol);  // metric gradient norm squared, acceptance test

    if (seeds_per_axis <= 0) seeds_per_axis = detail::default_seeds_per_axis(chart);
    std::vector<std::vector<double>> axes;
    for (int i = 0; i < n; ++i) axes.push_back(detail::axis_seeds(chart, i, seeds_per_axis));

    // evaluate |df|^2 over the full grid
    std::vector<int> shape(std::size_t(n), seeds_per_axis);
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= std::size_t(seeds_per_axis);
    std::vector<double> grid(total, 0.0);
    {
        std::vector<int> idx(std::size_t(n), 0);
        Point p(std::size_t(n), 0.0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            for (int i = 0; i < n; ++i) p[std::size_t(i)] = axes[std::size_t(i)][std::size_t(idx[std::size_t(i)])];
            double v;
            try {
                v = eval(s2, p);
            } catch (const DomainError&) {
                v = std::numeric_limits<double>::infinity();
            }
            grid[flat] = v;
            for (int i = n - 1; i >= 0; --i) {
                if (++idx[std::size_t(i)] < seeds_per_axis) break;
                idx[std::size_t(i)] = 0;
            }
        }
    }

    const auto flat_of = [&](const std::vector<int>& idx) {
        std::size_t flat = 0;
        for (int i = 0; i < n; ++i) flat = flat * std::size_t(seeds_per_axis) + std::size_t(idx[std::size_t(i)]);
        return flat;
    };

    // seeds: grid nodes not larger than any axis neighbor
    std::vector<Point> seeds;
    {
        std::vector<int> idx(std::size_t(n), 0);
        for (std::size_t flat = 0; flat < total; ++flat) {
            const double v = grid[flat];
            bool local_min = std::isfinite(v);
            for (int i = 0; local_min && i < n; ++i) {
                for (int d : {-1, 1}) {
                    std::vector<int> nb = idx;
                    int& c = nb[std::size_t(i)];
                    c += d;
                    if (chart.periodic[std::size_t(i)])
                        c = (c + seeds_per_axis) % seeds_per_axis;
                    else if (c < 0 || c >= seeds_per_axis)
                        continue;
                    if (grid[flat_of(nb)] < v) {
                        local_min = false;
                        break;
                    }
                }
            }
            if (local_min) {
                Point p(std::size_t(n), 0.0);
                for (int i = 0; i < n; ++i)
                    p[std::size_t(i)] = axes[std::size_t(i)][std::size_t(idx[std::size_t(i)])];
                seeds.push_back(p);
            }
            for (int i = n - 1; i >= 0; --i) {
                if (++idx[std::size_t(i)] < seeds_per_axis) break;
                idx[std::size_t(i)] = 0;
            }
        }
    }

    CriticalPointResult out;
    const double max_step = [&] {
        double m = 0.0;
        for (int i = 0; i < n; ++i)
            m = std::max(m, (chart.hi[std::size_t(i)] - chart.lo[std::size_t(i)]) / seeds_per_axis);
        return 4.0 * m;
    }();

    for (const Point& seed : seeds) {
        Point p = seed;
        bool ok = false;
        for (int it = 0; it < 80; ++it) {
            Eigen::VectorXd gvec(n);
            Eigen::MatrixXd hmat(n, n);
            bool eval_ok = true;
            try {
                for (int i = 0; i < n; ++i) gvec(i) = eval(df[std::size_t(i)], p);
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        hmat(i, j) = eval(hess[std::size_t(i * n + j)], p);
            } catch (const DomainError&) {
                eval_ok = false;
            }
            if (!eval_ok) break;
            if (gvec.norm() < 1e-13) {
                ok = true;
                break;
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(hmat);
            Eigen::VectorXd step;
            if (lu.isInvertible()) {
                step = lu.solve(-gvec);
            } else {
                // damped gradient step when the Hessian is singular at the seed
                step = -gvec / std::max(1.0, hmat.norm());
            }
            if (step.norm() > max_step) step *= max_step / step.norm();
            for (int i = 0; i < n; ++i) p[std::size_t(i)] += step(i);
            chart.wrap_point(p);
            // stagnation at machine precision: large-amplitude fields bottom out
            // with |df| proportional to their scale, not to an absolute threshold
            double pnorm = 0.0;
            for (int i = 0; i < n; ++i) pnorm += p[std::size_t(i)] * p[std::size_t(i)];
            if (step.norm() < 1e-15 * (1.0 + std::sqrt(pnorm))) {
                ok = true;
                break;
            }
            bool inside = true;
            for (int i = 0; i < n; ++i) {
                if (chart.periodic[std::size_t(i)]) continue;
                const double a = chart.inner_lo(i);
                const double b = chart.inner_hi(i);
                if (p[std::size_t(i)] < a - 1e-9 || p[std::size_t(i)] > b + 1e-9) inside = false;
            }
            if (!inside) break;  // wandered out of the search box
        }
        if (!ok) continue;

        double qv;
        try {
            qv = eval(q, p);
        } catch (const DomainError&) {
            continue;
        }
        if (!(std::sqrt(std::max(0.0, qv)) < tol.tau_crit)) continue;

        bool margin_reject = false;
        for (int i = 0; i < n; ++i) {
            if (chart.periodic[std::size_t(i)]) continue;
            if (p[std::size_t(i)] < chart.inner_lo(i) - 1e-12 ||
                p[std::size_t(i)] > chart.inner_hi(i) + 1e-12)
                margin_reject = true;
        }
        if (margin_reject) {
            out.warnings.push_back("critical point rejected inside chart margin");
            continue;
        }

        // canonical representative: snap wrap-boundary points to the low edge
        for (int i = 0; i < n; ++i)
            if (chart.periodic[std::size_t(i)] &&
                chart.hi[std::size_t(i)] - p[std::size_t(i)] < 1e-9)
                p[std::size_t(i)] = chart.lo[std::size_t(i)];

        bool dup = false;
        for (const auto& cp : out.points)
            if (chart.distance(cp.x, p) < tol.delta_dedup) {
                dup = true;
                break;
            }
        if (!dup) out.points.push_back({p, eval(f, p)});
    }

    std::sort(out.points.begin(), out.points.end(),
              [](const CriticalPoint& a, const CriticalPoint& b) { return a.x < b.x; });
    if (out.points.empty() && !chart.compact)
        out.warnings.push_back("no critical point found in the search box");
    return out;
}

}  // namespace estalg
