#pragma once

#include <stdexcept>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/metric.hpp"

namespace estalg {

namespace detail {

struct AxisRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Midpoint rule on a periodic axis (spectrally accurate for smooth periodic
/// integrands), composite Simpson on a margin-shrunk non-periodic axis.
inline AxisRule axis_rule(const Chart& chart, int axis, int resolution) {
    AxisRule r;
    if (chart.periodic[std::size_t(axis)]) {
        const double h = chart.width(axis) / resolution;
        for (int k = 0; k < resolution; ++k) {
            r.nodes.push_back(chart.lo[std::size_t(axis)] + (k + 0.5) * h);
            r.weights.push_back(h);
        }
    } else {
        int n = resolution;
        if (n % 2 == 1) ++n;  // Simpson needs an even interval count
        const double a = chart.inner_lo(axis), b = chart.inner_hi(axis);
        const double h = (b - a) / n;
        for (int k = 0; k <= n; ++k) {
            r.nodes.push_back(a + k * h);
            double w = (k == 0 || k == n) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
            r.weights.push_back(w * h / 3.0);
        }
    }
    return r;
}

}  // namespace detail

/// Integral of f against the canonical measure sqrt|g| dx by tensor-product
/// quadrature.  Deterministic for fixed resolution (fixed summation order).
inline double integrate(const ScalarField& f, const Metric& g, const Chart& chart,
                        int resolution = 256) {
    if (resolution < 8) throw std::invalid_argument("quadrature resolution must be >= 8 per axis");
    const int n = chart.dim;
    std::vector<detail::AxisRule> rules;
    for (int i = 0; i < n; ++i) rules.push_back(detail::axis_rule(chart, i, resolution));

    const Expr integrand = simplify(f * sqrt_det(g));

    Point p(std::size_t(n), 0.0);
    std::vector<std::size_t> idx(std::size_t(n), 0);
    double total = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < n; ++i) {
            p[std::size_t(i)] = rules[std::size_t(i)].nodes[idx[std::size_t(i)]];
            w *= rules[std::size_t(i)].weights[idx[std::size_t(i)]];
        }
        total += w * eval(integrand, p);
        int axis = n - 1;
        while (axis >= 0) {
            if (++idx[std::size_t(axis)] < rules[std::size_t(axis)].nodes.size()) break;
            idx[std::size_t(axis)] = 0;
            --axis;
        }
        if (axis < 0) break;
    }
    return total;
}

/// L2 inner product of two scalar fields against the canonical measure.
inline double l2_inner(const ScalarField& a, const ScalarField& b, const Metric& g,
                       const Chart& chart, int resolution = 256) {
    return integrate(simplify(a * b), g, chart, resolution);
}

}  // namespace estalg
