#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "estalg/errors.hpp"
#include "estalg/expr.hpp"
#include "estalg/rng.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

/// Coordinate point inside a chart.
using Point = std::vector<double>;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

/// A single coordinate chart with a domain box, per-axis periodicity and an
/// excluded-boundary margin for singular coordinates (sphere poles).  Every
/// computation in the workbench runs in one chart.
struct Chart {
    std::string name;
    int dim = 1;
    std::vector<std::string> coord_names;
    std::vector<double> lo, hi;
    std::vector<bool> periodic;
    double margin = 0.0;
    bool compact = false;  ///< chart of a closed manifold

    static Chart circle() {
        Chart c;
        c.name = "circle";
        c.dim = 1;
        c.coord_names = {"theta"};
        c.lo = {0.0};
        c.hi = {kTwoPi};
        c.periodic = {true};
        c.compact = true;
        return c;
    }

    static Chart torus2() {
        Chart c;
        c.name = "torus2";
        c.dim = 2;
        c.coord_names = {"x", "y"};
        c.lo = {0.0, 0.0};
        c.hi = {kTwoPi, kTwoPi};
        c.periodic = {true, true};
        c.compact = true;
        return c;
    }

    /// Spherical chart (polar angle, azimuth) with a pole margin.
    static Chart sphere2(double pole_margin = 1e-3) {
        Chart c;
        c.name = "sphere2";
        c.dim = 2;
        c.coord_names = {"theta", "phi"};
        c.lo = {0.0, 0.0};
        c.hi = {kPi, kTwoPi};
        c.periodic = {false, true};
        c.margin = pole_margin;
        c.compact = true;
        return c;
    }

    /// Truncated box chart for R^n.
    static Chart euclidean(int n, double half_width = 10.0) {
        Chart c;
        c.name = n == 1 ? "euclidean:1" : "euclidean:" + std::to_string(n);
        c.dim = n;
        for (int i = 0; i < n; ++i) {
            c.coord_names.push_back(n == 1 ? "x" : "x" + std::to_string(i + 1));
            c.lo.push_back(-half_width);
            c.hi.push_back(half_width);
            c.periodic.push_back(false);
        }
        return c;
    }

    /// Margin-shrunk interval on a non-periodic axis.
    double inner_lo(int axis) const { return periodic[axis] ? lo[axis] : lo[axis] + margin; }
    double inner_hi(int axis) const { return periodic[axis] ? hi[axis] : hi[axis] - margin; }

    double width(int axis) const { return hi[axis] - lo[axis]; }

    double wrap(int axis, double v) const {
        if (!periodic[std::size_t(axis)]) return v;
        const double w = width(axis);
        double r = std::fmod(v - lo[std::size_t(axis)], w);
        if (r < 0) r += w;
        return lo[std::size_t(axis)] + r;
    }

    void wrap_point(Point& p) const {
        for (int i = 0; i < dim; ++i) p[std::size_t(i)] = wrap(i, p[std::size_t(i)]);
    }

    /// True if p lies in the margin-shrunk domain (periodic axes always pass).
    bool contains(const Point& p) const {
        for (int i = 0; i < dim; ++i) {
            if (periodic[std::size_t(i)]) continue;
            const double v = p[std::size_t(i)];
            if (v < inner_lo(i) || v > inner_hi(i)) return false;
        }
        return true;
    }

    /// Shortest displacement from a to b, accounting for periodic wrapping.
    double distance(const Point& a, const Point& b) const {
        double s = 0.0;
        for (int i = 0; i < dim; ++i) {
            double d = b[std::size_t(i)] - a[std::size_t(i)];
            if (periodic[std::size_t(i)]) {
                const double w = width(i);
                d = std::fmod(d, w);
                if (d > 0.5 * w) d -= w;
                if (d < -0.5 * w) d += w;
            }
            s += d * d;
        }
        return std::sqrt(s);
    }

    Point sample_interior(RandomStream& rng) const {
        Point p(std::size_t(dim), 0.0);
        for (int i = 0; i < dim; ++i)
            p[std::size_t(i)] = rng.next_uniform(inner_lo(i), inner_hi(i));
        return p;
    }

    std::vector<Point> sample_interior(int count, RandomStream& rng) const {
        std::vector<Point> out;
        out.reserve(std::size_t(count));
        for (int k = 0; k < count; ++k) out.push_back(sample_interior(rng));
        return out;
    }

    /// Coordinate expression by name; throws ConfigError on unknown names.
    Expr coord_expr(const std::string& cname) const {
        for (int i = 0; i < dim; ++i)
            if (coord_names[std::size_t(i)] == cname) return Expr::coord(i);
        throw ConfigError("unknown coordinate name: " + cname);
    }

    static Chart builtin(const std::string& name) {
        if (name == "circle") return circle();
        if (name == "torus2") return torus2();
        if (name == "sphere2") return sphere2();
        if (name.rfind("euclidean:", 0) == 0) {
            const int n = std::stoi(name.substr(10));
            if (n < 1) throw ConfigError("euclidean dimension must be >= 1");
            return euclidean(n);
        }
        throw ConfigError("unknown manifold name: " + name);
    }
};

using ChartPtr = std::shared_ptr<const Chart>;

inline ChartPtr make_chart(Chart c) { return std::make_shared<const Chart>(std::move(c)); }

/// Probabilistic zero test: true iff |eval| < tau_zero at n_zero points drawn
/// from a fixed stream over the chart interior.  One-sided: a `true` answer
/// can be wrong for expressions vanishing on the sample set only.
inline bool is_zero(const Expr& e, const Chart& chart, const Tolerances& tol = {}) {
    if (e.kind() == NodeKind::Constant) return e.value().is_zero();
    RandomStream rng(tol.zero_test_seed);
    for (int k = 0; k < tol.n_zero; ++k) {
        const Point p = chart.sample_interior(rng);
        double v;
        try {
            v = eval(e, p);
        } catch (const DomainError&) {
            return false;  // failure to evaluate counts as evidence of non-zero
        }
        if (std::abs(v) >= tol.tau_zero) return false;
    }
    return true;
}

}  // namespace estalg
