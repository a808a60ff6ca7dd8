#pragma once

#include <utility>
#include <vector>

#include "estalg/chart.hpp"
#include "estalg/diffop.hpp"
#include "estalg/diffusion.hpp"
#include "estalg/errors.hpp"
#include "estalg/expr.hpp"
#include "estalg/metric.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

// Signal model on a chart: dX = drift + unit-diffusion noise for the metric g,
// observations dY^i = h^i(X) dt + dV^i. Carries the generator L = 1/2 Delta + F,
// its formal adjoint, and L0 = L* - 1/2 sum (h^i)^2.
class FilteringSystem {
  public:
    static FilteringSystem make(Metric g, VectorField drift, std::vector<ScalarField> obs,
                                const Tolerances& tol = {}) {
        const ChartPtr chart = g.chart;
        const std::size_t n = std::size_t(chart->dim);
        if (drift.empty()) drift.assign(n, Expr(0));
        if (drift.size() != n) throw ConfigError("drift dimension does not match chart");

        // smoothness guard: observations and drift must evaluate on the shrunk chart
        RandomStream rng(0x5eedu);
        for (int k = 0; k < 16; ++k) {
            const Point p = chart->sample_interior(rng);
            for (const auto& h : obs) (void)eval(h, p);
            for (const auto& f : drift) (void)eval(f, p);
        }

        DiffOp l = Expr::rational(1, 2) * laplace_beltrami_op(g, tol);
        for (std::size_t i = 0; i < n; ++i) {
            MultiIndex a(n, 0);
            ++a[i];
            l.add_term(a, drift[i]);
        }
        l.prune(tol);
        DiffOp lstar = adjoint(l, g, tol);
        Expr hh(0);
        for (const auto& h : obs) hh = hh + h * h;
        DiffOp l0 = lstar - DiffOp::multiplication(Expr::rational(1, 2) * hh, chart, tol);
        return FilteringSystem(std::move(g), std::move(drift), std::move(obs), std::move(l),
                               std::move(lstar), std::move(l0));
    }

    // Normalize a raw generator: extract the metric from the second-order part and
    // fold the first-order correction into the drift.
    static FilteringSystem from_diffusion(const DiffusionSpec& spec, std::vector<ScalarField> obs,
                                          const Tolerances& tol = {}) {
        auto [g, rem] = metric_from_diffusion(spec, tol);
        return make(std::move(g), std::move(rem), std::move(obs), tol);
    }

    const ChartPtr& chart() const { return g_.chart; }
    const Metric& metric() const { return g_; }
    const VectorField& drift() const { return drift_; }
    const std::vector<ScalarField>& observations() const { return obs_; }
    int obs_count() const { return int(obs_.size()); }

    const DiffOp& generator() const { return l_; }
    const DiffOp& generator_adjoint() const { return lstar_; }
    const DiffOp& l0() const { return l0_; }

    DiffOp observation_op(int i) const {
        return DiffOp::multiplication(obs_.at(std::size_t(i)), g_.chart);
    }

  private:
    FilteringSystem(Metric g, VectorField drift, std::vector<ScalarField> obs, DiffOp l,
                    DiffOp lstar, DiffOp l0)
        : g_(std::move(g)),
          drift_(std::move(drift)),
          obs_(std::move(obs)),
          l_(std::move(l)),
          lstar_(std::move(lstar)),
          l0_(std::move(l0)) {}

    Metric g_;
    VectorField drift_;
    std::vector<ScalarField> obs_;
    DiffOp l_;
    DiffOp lstar_;
    DiffOp l0_;
};

inline DiffOp build_L0(const FilteringSystem& sys) { return sys.l0(); }

/// Diffusion matrix a^{ij} read off the second-order coefficients of L
/// (L = 1/2 a^{ij} d_i d_j + ...), symmetric by construction.
inline ExprMatrix diffusion_matrix(const FilteringSystem& sys) {
    const int n = sys.chart()->dim;
    const DiffOp& l = sys.generator();
    ExprMatrix a(std::size_t(n), std::vector<Expr>(std::size_t(n), Expr(0)));
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            MultiIndex e(std::size_t(n), 0);
            ++e[std::size_t(i)];
            ++e[std::size_t(j)];
            const Expr c = l.coefficient(e);
            const Expr v = (i == j) ? simplify(Expr(2) * c) : c;
            a[std::size_t(i)][std::size_t(j)] = v;
            a[std::size_t(j)][std::size_t(i)] = v;
        }
    }
    return a;
}

}  // namespace estalg
