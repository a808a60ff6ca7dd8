#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "estalg/diffop.hpp"
#include "estalg/metric.hpp"

namespace estalg {

/// Regular tensor grid over the chart box.  Periodic axes place N nodes at
/// lo + k*dx with dx = width/N (no duplicated seam node); non-periodic axes
/// include both endpoints with dx = width/(N-1) and carry Dirichlet-zero
/// boundary conditions.
struct Grid {
    ChartPtr chart;
    std::vector<int> shape;
    std::vector<double> dx;
    std::vector<std::size_t> stride;

    static Grid regular(ChartPtr chart, std::vector<int> shape) {
        if (int(shape.size()) != chart->dim) throw ConfigError("grid shape dimension mismatch");
        Grid g;
        g.chart = std::move(chart);
        g.shape = std::move(shape);
        const int n = g.chart->dim;
        g.dx.resize(std::size_t(n));
        for (int i = 0; i < n; ++i) {
            const int ni = g.shape[std::size_t(i)];
            if (ni < 4) throw ConfigError("grid needs at least 4 nodes per axis");
            const bool per = g.chart->periodic[std::size_t(i)];
            g.dx[std::size_t(i)] = g.chart->width(i) / (per ? ni : ni - 1);
        }
        g.stride.assign(std::size_t(n), 1);
        for (int i = n - 2; i >= 0; --i)
            g.stride[std::size_t(i)] =
                g.stride[std::size_t(i) + 1] * std::size_t(g.shape[std::size_t(i) + 1]);
        return g;
    }

    std::size_t size() const {
        std::size_t s = 1;
        for (int ni : shape) s *= std::size_t(ni);
        return s;
    }

    int axis_index(std::size_t flat, int axis) const {
        return int((flat / stride[std::size_t(axis)]) % std::size_t(shape[std::size_t(axis)]));
    }

    Point node(std::size_t flat) const {
        const int n = chart->dim;
        Point p(std::size_t(n), 0.0);
        for (int i = 0; i < n; ++i)
            p[std::size_t(i)] = chart->lo[std::size_t(i)] + axis_index(flat, i) * dx[std::size_t(i)];
        return p;
    }

    double cell_volume() const {
        double v = 1.0;
        for (double d : dx) v *= d;
        return v;
    }

    bool boundary(std::size_t flat) const {
        for (int i = 0; i < chart->dim; ++i) {
            if (chart->periodic[std::size_t(i)]) continue;
            const int k = axis_index(flat, i);
            if (k == 0 || k == shape[std::size_t(i)] - 1) return true;
        }
        return false;
    }

    /// Flat index of the neighbor `offset` nodes along `axis`, wrapping on
    /// periodic axes.  Returns npos when a non-periodic axis runs out.
    static constexpr std::size_t npos = std::size_t(-1);
    std::size_t neighbor(std::size_t flat, int axis, int offset) const {
        const int ni = shape[std::size_t(axis)];
        int k = axis_index(flat, axis) + offset;
        if (chart->periodic[std::size_t(axis)]) {
            k %= ni;
            if (k < 0) k += ni;
        } else if (k < 0 || k >= ni) {
            return npos;
        }
        return flat + std::size_t(k - axis_index(flat, axis)) * stride[std::size_t(axis)];
    }
};

/// Density samples (sigma or u) on a grid with the metric volume weights
/// sqrt|g| cached per node.
struct DensityField {
    Grid grid;
    std::vector<double> values;
    std::vector<double> weights;
    double time = 0.0;

    double mass() const {
        double m = 0.0;
        for (std::size_t k = 0; k < values.size(); ++k) m += values[k] * weights[k];
        return m * grid.cell_volume();
    }
};

/// Builds a field from a node-wise initializer, zeroing Dirichlet boundaries.
inline DensityField make_density(const Grid& grid, const Metric& g,
                                 const std::function<double(const Point&)>& init,
                                 double time = 0.0) {
    DensityField f;
    f.grid = grid;
    f.time = time;
    const Expr w = sqrt_det(g);
    const std::size_t n = grid.size();
    f.values.resize(n);
    f.weights.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const Point p = grid.node(k);
        f.weights[k] = eval(w, p);
        f.values[k] = grid.boundary(k) ? 0.0 : init(p);
    }
    return f;
}

inline DensityField make_density(const Grid& grid, const Metric& g, const Expr& init,
                                 double time = 0.0) {
    return make_density(
        grid, g, [&](const Point& p) { return eval(init, p); }, time);
}

/// Second-order central-difference discretization of a DiffOp: one coefficient
/// array per term, derivative stencils applied axis by axis.  Periodic axes
/// wrap; Dirichlet axes read missing neighbors as zero and pin boundary rows
/// to zero.
class GridOperator {
  public:
    GridOperator(const DiffOp& op, const Grid& grid) : grid_(grid) {
        const std::size_t n = grid.size();
        for (const auto& [alpha, coeff] : op.terms()) {
            Term t;
            t.alpha = alpha;
            t.coeff.resize(n);
            for (std::size_t k = 0; k < n; ++k) t.coeff[k] = eval(coeff, grid.node(k));
            terms_.push_back(std::move(t));
        }
        scratch_a_.resize(n);
        scratch_b_.resize(n);
    }

    /// out += scale * (op in).  Boundary rows of non-periodic axes stay zero.
    void accumulate(const std::vector<double>& in, double scale, std::vector<double>& out) const {
        const std::size_t n = grid_.size();
        for (const auto& t : terms_) {
            const std::vector<double>* cur = &in;
            std::vector<double>* next = &scratch_a_;
            for (int axis = 0; axis < grid_.chart->dim; ++axis) {
                int order = t.alpha[std::size_t(axis)];
                while (order >= 2) {
                    central2(*cur, axis, *next);
                    cur = next;
                    next = (next == &scratch_a_) ? &scratch_b_ : &scratch_a_;
                    order -= 2;
                }
                if (order == 1) {
                    central1(*cur, axis, *next);
                    cur = next;
                    next = (next == &scratch_a_) ? &scratch_b_ : &scratch_a_;
                }
            }
            for (std::size_t k = 0; k < n; ++k) out[k] += scale * t.coeff[k] * (*cur)[k];
        }
        for (std::size_t k = 0; k < n; ++k)
            if (grid_.boundary(k)) out[k] = 0.0;
    }

    std::vector<double> apply(const std::vector<double>& in) const {
        std::vector<double> out(grid_.size(), 0.0);
        accumulate(in, 1.0, out);
        return out;
    }

  private:
    struct Term {
        MultiIndex alpha;
        std::vector<double> coeff;
    };

    void central1(const std::vector<double>& in, int axis, std::vector<double>& out) const {
        const double inv = 1.0 / (2.0 * grid_.dx[std::size_t(axis)]);
        for (std::size_t k = 0; k < in.size(); ++k) {
            const std::size_t up = grid_.neighbor(k, axis, +1);
            const std::size_t dn = grid_.neighbor(k, axis, -1);
            const double a = up == Grid::npos ? 0.0 : in[up];
            const double b = dn == Grid::npos ? 0.0 : in[dn];
            out[k] = (a - b) * inv;
        }
    }

    void central2(const std::vector<double>& in, int axis, std::vector<double>& out) const {
        const double inv = 1.0 / (grid_.dx[std::size_t(axis)] * grid_.dx[std::size_t(axis)]);
        for (std::size_t k = 0; k < in.size(); ++k) {
            const std::size_t up = grid_.neighbor(k, axis, +1);
            const std::size_t dn = grid_.neighbor(k, axis, -1);
            const double a = up == Grid::npos ? 0.0 : in[up];
            const double b = dn == Grid::npos ? 0.0 : in[dn];
            out[k] = (a - 2.0 * in[k] + b) * inv;
        }
    }

    Grid grid_;
    std::vector<Term> terms_;
    mutable std::vector<double> scratch_a_, scratch_b_;
};

}  // namespace estalg
