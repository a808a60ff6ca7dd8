#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "estalg/estimation.hpp"
#include "estalg/grid.hpp"
#include "estalg/sde.hpp"
#include "estalg/stats.hpp"

namespace estalg {

/// Operators of the gauge-transformed density equation
/// du/dt = L0 u + sum_i Y^i B_i u + 1/2 sum_ij Y^i Y^j C_ij u.
struct DavisCoefficients {
    DiffOp l0;
    std::vector<DiffOp> b;                // B_i = [L0, h^i], order <= 1
    std::vector<std::vector<DiffOp>> c;   // C_ij = [[L0, h^i], h^j], multiplication

    explicit DavisCoefficients(DiffOp l) : l0(std::move(l)) {}
};

/// Assembles and cross-checks the Davis expansion operators.  The checks are
/// bug sentinels: B_i must drop to order <= 1 and C_ij must be multiplication
/// by the gradient pairing <grad h^i, grad h^j>.
inline DavisCoefficients davis_coefficients(const FilteringSystem& sys,
                                            const Tolerances& tol = {}) {
    DavisCoefficients out(sys.l0());
    const int m = sys.obs_count();
    const Metric& g = sys.metric();
    std::vector<VectorField> grads;
    grads.reserve(std::size_t(m));
    for (int i = 0; i < m; ++i) grads.push_back(grad(sys.observations()[std::size_t(i)], g, tol));

    for (int i = 0; i < m; ++i) {
        DiffOp bi = commutator(out.l0, sys.observation_op(i));
        bi.prune(tol);
        if (bi.order() > 1)
            throw IdentityViolation("Davis coefficient B_" + std::to_string(i) +
                                    " has order above one");
        out.b.push_back(std::move(bi));
    }
    for (int i = 0; i < m; ++i) {
        std::vector<DiffOp> row;
        for (int j = 0; j < m; ++j) {
            DiffOp cij = commutator(out.b[std::size_t(i)], sys.observation_op(j));
            cij.prune(tol);
            if (cij.order() > 0)
                throw IdentityViolation("Davis coefficient C_" + std::to_string(i) + "," +
                                        std::to_string(j) + " is not a multiplication operator");
            const Expr want =
                simplify(inner(grads[std::size_t(i)], grads[std::size_t(j)], g));
            const Expr got = cij.coefficient(MultiIndex(std::size_t(sys.chart()->dim), 0));
            if (!is_zero(simplify(got - want), *sys.chart(), tol))
                throw IdentityViolation("Davis coefficient C_" + std::to_string(i) + "," +
                                        std::to_string(j) +
                                        " fails the gradient-pairing identity");
            row.push_back(std::move(cij));
        }
        out.c.push_back(std::move(row));
    }
    return out;
}

/// Grid densities produced by a Zakai solver at the observation times.  The
/// robust solver fills both gauges; the direct solver only sigma.
struct ZakaiSolution {
    std::vector<DensityField> u;
    std::vector<DensityField> sigma;
    std::vector<double> mass;  ///< sigma mass per output time
};

namespace detail {

inline void check_grid_and_step(const FilteringSystem& sys, const Grid& grid, double dt_pde) {
    for (int ni : grid.shape)
        if (ni < 32) throw ConfigError("solver grids need at least 32 nodes per axis");
    if (!(dt_pde > 0.0)) throw ConfigError("dt_pde must be positive");

    const ExprMatrix a = diffusion_matrix(sys);
    double amax = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const Point p = grid.node(k);
        for (const auto& row : a)
            for (const auto& e : row) amax = std::max(amax, std::abs(eval(e, p)));
    }
    double dx2 = grid.dx[0] * grid.dx[0];
    for (double d : grid.dx) dx2 = std::min(dx2, d * d);
    const double bound = 0.2 * dx2 / std::max(amax, 1e-300);
    if (dt_pde > bound)
        throw StabilityViolation("dt_pde " + std::to_string(dt_pde) +
                                 " violates the stability bound " + std::to_string(bound));
}

inline void check_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) throw NonFiniteDensity("grid density left the finite range");
}

/// Observation values at the grid nodes, one array per channel.
inline std::vector<std::vector<double>> obs_node_values(const FilteringSystem& sys,
                                                        const Grid& grid) {
    std::vector<std::vector<double>> h(std::size_t(sys.obs_count()));
    for (int i = 0; i < sys.obs_count(); ++i) {
        h[std::size_t(i)].resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k)
            h[std::size_t(i)][k] = eval(sys.observations()[std::size_t(i)], grid.node(k));
    }
    return h;
}

/// Right-hand side of the robust equation with frozen Y values.
class DavisRhs {
  public:
    DavisRhs(const DavisCoefficients& ops, const Grid& grid) : gl0_(ops.l0, grid) {
        for (const auto& bi : ops.b) gb_.emplace_back(bi, grid);
        for (const auto& row : ops.c) {
            std::vector<GridOperator> r;
            for (const auto& cij : row) r.emplace_back(cij, grid);
            gc_.push_back(std::move(r));
        }
    }

    void operator()(const std::vector<double>& in, const std::vector<double>& yvals,
                    std::vector<double>& out) const {
        std::fill(out.begin(), out.end(), 0.0);
        gl0_.accumulate(in, 1.0, out);
        const std::size_t m = gb_.size();
        for (std::size_t i = 0; i < m; ++i) gb_[i].accumulate(in, yvals[i], out);
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j)
                gc_[i][j].accumulate(in, 0.5 * yvals[i] * yvals[j], out);
    }

  private:
    GridOperator gl0_;
    std::vector<GridOperator> gb_;
    std::vector<std::vector<GridOperator>> gc_;
};

/// One classical RK4 step of v' = rhs(v, Y(t)) over [t, t+h] with Y linear on
/// the surrounding observation interval.
template <class Rhs>
inline void rk4_step(const Rhs& rhs, std::vector<double>& v, double h,
                     const std::vector<double>& y_at_t, const std::vector<double>& dy_per_time,
                     std::vector<double>& k1, std::vector<double>& k2, std::vector<double>& k3,
                     std::vector<double>& k4, std::vector<double>& tmp) {
    const std::size_t n = v.size();
    const std::size_t m = y_at_t.size();
    std::vector<double> ymid(m), yend(m);
    for (std::size_t i = 0; i < m; ++i) {
        ymid[i] = y_at_t[i] + 0.5 * h * dy_per_time[i];
        yend[i] = y_at_t[i] + h * dy_per_time[i];
    }
    rhs(v, y_at_t, k1);
    for (std::size_t k = 0; k < n; ++k) tmp[k] = v[k] + 0.5 * h * k1[k];
    rhs(tmp, ymid, k2);
    for (std::size_t k = 0; k < n; ++k) tmp[k] = v[k] + 0.5 * h * k2[k];
    rhs(tmp, ymid, k3);
    for (std::size_t k = 0; k < n; ++k) tmp[k] = v[k] + h * k3[k];
    rhs(tmp, yend, k4);
    for (std::size_t k = 0; k < n; ++k)
        v[k] += h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
}

inline DensityField field_from(const Grid& grid, const std::vector<double>& weights,
                               std::vector<double> values, double time) {
    DensityField f;
    f.grid = grid;
    f.weights = weights;
    f.values = std::move(values);
    f.time = time;
    return f;
}

}  // namespace detail

/// Method-of-lines solver for the robust (Davis) equation: RK4 in time,
/// second-order central differences in space, Y piecewise linear between
/// observation nodes.  Emits u and the recovered sigma = exp(sum h^i Y^i) u at
/// every observation time.
inline ZakaiSolution solve_robust_dmz(const FilteringSystem& sys, const ObservationPath& yp,
                                      const Grid& grid, double dt_pde,
                                      const std::vector<double>& sigma0,
                                      const Tolerances& tol = {}) {
    detail::check_grid_and_step(sys, grid, dt_pde);
    if (sigma0.size() != grid.size()) throw ConfigError("sigma0 size does not match grid");
    if (yp.channels() != sys.obs_count())
        throw ConfigError("observation path channel count does not match system");

    const DavisCoefficients ops = davis_coefficients(sys, tol);
    const detail::DavisRhs rhs(ops, grid);
    const auto h_nodes = detail::obs_node_values(sys, grid);
    const Expr wexpr = sqrt_det(sys.metric());
    std::vector<double> weights(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) weights[k] = eval(wexpr, grid.node(k));

    std::vector<double> u = sigma0;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (grid.boundary(k)) u[k] = 0.0;

    const std::size_t n = grid.size();
    const std::size_t m = std::size_t(yp.channels());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);

    ZakaiSolution out;
    const auto emit = [&](int step_idx) {
        detail::check_finite(u);
        std::vector<double> sig(n);
        for (std::size_t k = 0; k < n; ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < m; ++i)
                s += h_nodes[i][k] * yp.y[std::size_t(step_idx)][i];
            sig[k] = std::exp(s) * u[k];
        }
        const double t = yp.times[std::size_t(step_idx)];
        out.u.push_back(detail::field_from(grid, weights, u, t));
        out.sigma.push_back(detail::field_from(grid, weights, std::move(sig), t));
        out.mass.push_back(out.sigma.back().mass());
    };

    emit(0);
    for (int k = 0; k < yp.steps(); ++k) {
        const double dt_obs = yp.times[std::size_t(k) + 1] - yp.times[std::size_t(k)];
        const int n_sub = std::max(1, int(std::ceil(dt_obs / dt_pde - 1e-12)));
        const double h = dt_obs / n_sub;
        std::vector<double> dy_per_time(m), yv(m);
        for (std::size_t i = 0; i < m; ++i)
            dy_per_time[i] = yp.increments[std::size_t(k)][i] / dt_obs;
        for (int s = 0; s < n_sub; ++s) {
            for (std::size_t i = 0; i < m; ++i)
                yv[i] = yp.y[std::size_t(k)][i] + s * h * dy_per_time[i];
            detail::rk4_step(rhs, u, h, yv, dy_per_time, k1, k2, k3, k4, tmp);
        }
        emit(k + 1);
    }
    return out;
}

/// Direct Stratonovich Zakai solver by operator splitting: the deterministic
/// L0 substep reuses the robust solver's RK4 update and the observation term
/// applies the Heun factor 1 + s + s^2/2, s = sum h^i dY^i, the quadratic
/// approximant of the exact per-substep factor exp(s).  With h = 0 both
/// solvers take literally the same arithmetic path.
inline ZakaiSolution solve_zakai_direct(const FilteringSystem& sys, const ObservationPath& yp,
                                        const Grid& grid, double dt_pde,
                                        const std::vector<double>& sigma0,
                                        const Tolerances& = {}) {
    detail::check_grid_and_step(sys, grid, dt_pde);
    if (sigma0.size() != grid.size()) throw ConfigError("sigma0 size does not match grid");
    if (yp.channels() != sys.obs_count())
        throw ConfigError("observation path channel count does not match system");

    const DavisCoefficients l0_only(sys.l0());
    const detail::DavisRhs rhs(l0_only, grid);
    const auto h_nodes = detail::obs_node_values(sys, grid);
    const Expr wexpr = sqrt_det(sys.metric());
    std::vector<double> weights(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) weights[k] = eval(wexpr, grid.node(k));

    std::vector<double> sig = sigma0;
    for (std::size_t k = 0; k < sig.size(); ++k)
        if (grid.boundary(k)) sig[k] = 0.0;

    const std::size_t n = grid.size();
    const std::size_t m = std::size_t(yp.channels());
    std::vector<double> k1(n), k2(n), k3(n), k4(n), tmp(n);
    const std::vector<double> no_y(m, 0.0);

    ZakaiSolution out;
    const auto emit = [&](int step_idx) {
        detail::check_finite(sig);
        const double t = yp.times[std::size_t(step_idx)];
        out.sigma.push_back(detail::field_from(grid, weights, sig, t));
        out.mass.push_back(out.sigma.back().mass());
    };

    emit(0);
    for (int k = 0; k < yp.steps(); ++k) {
        const double dt_obs = yp.times[std::size_t(k) + 1] - yp.times[std::size_t(k)];
        const int n_sub = std::max(1, int(std::ceil(dt_obs / dt_pde - 1e-12)));
        const double h = dt_obs / n_sub;
        for (int s = 0; s < n_sub; ++s) {
            detail::rk4_step(rhs, sig, h, no_y, no_y, k1, k2, k3, k4, tmp);
            for (std::size_t node = 0; node < n; ++node) {
                double sv = 0.0;
                for (std::size_t i = 0; i < m; ++i)
                    sv += h_nodes[i][node] * yp.increments[std::size_t(k)][i] * (h / dt_obs);
                sig[node] *= 1.0 + sv + 0.5 * sv * sv;
            }
        }
        emit(k + 1);
    }
    return out;
}

}  // namespace estalg
