#pragma once

// Test-only oracles, independent of the implementation paths they check:
// finite differences for symbolic derivatives, random expression generators
// for property tests.

#include <cmath>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/expr.hpp"
#include "estalg/rng.hpp"

namespace oracles {

using estalg::Chart;
using estalg::Expr;
using estalg::Point;
using estalg::RandomStream;

/// Central finite difference of `e` along coordinate `i` at `p`.
inline double central_diff(const Expr& e, int i, Point p, double h = 5e-6) {
    Point hi = p, lo = p;
    hi[std::size_t(i)] += h;
    lo[std::size_t(i)] -= h;
    return (estalg::eval(e, hi) - estalg::eval(e, lo)) / (2.0 * h);
}

/// Fourth-order central difference, for tighter oracle tolerances.
inline double central_diff4(const Expr& e, int i, Point p, double h = 1e-3) {
    const auto at = [&](double off) {
        Point q = p;
        q[std::size_t(i)] += off;
        return estalg::eval(e, q);
    };
    return (-at(2 * h) + 8 * at(h) - 8 * at(-h) + at(-2 * h)) / (12.0 * h);
}

/// Random smooth expression whose coordinates appear only inside sin/cos,
/// bounded on periodic charts.
inline Expr random_trig_expr(RandomStream& rng, const Chart& chart, int depth = 3) {
    if (depth == 0) {
        const int which = int(rng.next_u64() % 3);
        if (which == 0) return Expr(int(rng.next_u64() % 7) - 3);
        const int axis = int(rng.next_u64() % std::uint64_t(chart.dim));
        const int freq = 1 + int(rng.next_u64() % 2);
        const Expr arg = Expr(freq) * Expr::coord(axis);
        return which == 1 ? sin(arg) : cos(arg);
    }
    switch (rng.next_u64() % 4) {
        case 0:
            return random_trig_expr(rng, chart, depth - 1) + random_trig_expr(rng, chart, depth - 1);
        case 1:
            return random_trig_expr(rng, chart, depth - 1) * random_trig_expr(rng, chart, depth - 1);
        case 2:
            return pow(random_trig_expr(rng, chart, depth - 1), 1 + int(rng.next_u64() % 2));
        default: {
            // denominator bounded away from zero
            Expr d = Expr(3 + int(rng.next_u64() % 3));
            const int axis = int(rng.next_u64() % std::uint64_t(chart.dim));
            d = d + sin(Expr::coord(axis));
            return random_trig_expr(rng, chart, depth - 1) / d;
        }
    }
}

/// Random low-degree polynomial with small integer coefficients.
inline Expr random_poly_expr(RandomStream& rng, const Chart& chart, int terms = 4) {
    Expr acc(0);
    for (int t = 0; t < terms; ++t) {
        Expr m(int(rng.next_u64() % 5) - 2);
        for (int i = 0; i < chart.dim; ++i) {
            const int deg = int(rng.next_u64() % 3);
            if (deg > 0) m = m * pow(Expr::coord(i), deg);
        }
        acc = acc + m;
    }
    return acc;
}

}  // namespace oracles
