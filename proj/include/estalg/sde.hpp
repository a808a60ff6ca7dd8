#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "estalg/system.hpp"

namespace estalg {

/// Signal trajectory on a uniform time grid.
struct SamplePath {
    std::vector<double> times;
    std::vector<Point> states;
    std::uint64_t seed = 0;
    std::string scheme = "euler-maruyama";

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    int steps() const { return int(times.size()) - 1; }
};

/// Observation record Y_t in R^m on the same grid as the driving path.
/// y[0] = 0 and y[k+1] = y[k] + increments[k], with the increments stored
/// exactly as generated.
struct ObservationPath {
    std::vector<double> times;
    std::vector<std::vector<double>> y;
    std::vector<std::vector<double>> increments;

    double dt() const { return times.size() > 1 ? times[1] - times[0] : 0.0; }
    int steps() const { return int(times.size()) - 1; }
    int channels() const { return y.empty() ? 0 : int(y[0].size()); }
};

namespace detail {

/// One-step Euler-Maruyama integrator in chart coordinates.  The drift is the
/// vector of first-order coefficients of the generator L and the noise factor
/// is the Cholesky factor of the diffusion matrix A read off the second-order
/// coefficients.  A constant A is factored once.
class EmStepper {
  public:
    explicit EmStepper(const FilteringSystem& sys) : chart_(sys.chart()) {
        const int n = chart_->dim;
        const DiffOp& l = sys.generator();
        drift_.reserve(std::size_t(n));
        for (int i = 0; i < n; ++i) {
            MultiIndex e(std::size_t(n), 0);
            e[std::size_t(i)] = 1;
            drift_.push_back(l.coefficient(e));
        }
        a_ = diffusion_matrix(sys);
        a_constant_ = true;
        for (int i = 0; i < n && a_constant_; ++i)
            for (int j = 0; j < n; ++j)
                if (!a_[std::size_t(i)][std::size_t(j)].is_constant()) {
                    a_constant_ = false;
                    break;
                }
        if (a_constant_) chol_const_ = factor_at(Point(std::size_t(n), 0.0));
    }

    /// Advances x in place; throws StepOutOfDomain when a non-periodic axis
    /// leaves the chart box.
    void step(Point& x, double dt, RandomStream& rng, bool zero_noise) const {
        const int n = chart_->dim;
        Eigen::VectorXd move = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) move(i) = eval(drift_[std::size_t(i)], x) * dt;
        if (!zero_noise) {
            Eigen::VectorXd xi(n);
            for (int i = 0; i < n; ++i) xi(i) = rng.next_gaussian();
            const Eigen::MatrixXd l = a_constant_ ? chol_const_ : factor_at(x);
            move += std::sqrt(dt) * (l * xi);
        }
        for (int i = 0; i < n; ++i) x[std::size_t(i)] += move(i);
        chart_->wrap_point(x);
        if (!chart_->contains(x)) throw StepOutOfDomain("state left the chart box");
    }

  private:
    Eigen::MatrixXd factor_at(const Point& x) const {
        const int n = chart_->dim;
        Eigen::MatrixXd m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = eval(a_[std::size_t(i)][std::size_t(j)], x);
        Eigen::LLT<Eigen::MatrixXd> llt(m);
        if (llt.info() != Eigen::Success)
            throw NonDegeneracyViolation("diffusion matrix is not positive definite along the path");
        return llt.matrixL();
    }

    ChartPtr chart_;
    VectorField drift_;
    ExprMatrix a_;
    bool a_constant_ = false;
    Eigen::MatrixXd chol_const_;
};

}  // namespace detail

/// Euler-Maruyama sample path of the signal SDE from x0 over [0, T] with step
/// dt.  Deterministic per seed via the counter-based Gaussian stream; passing
/// zero_noise freezes the Brownian term.
inline SamplePath simulate_state(const FilteringSystem& sys, const Point& x0, double T, double dt,
                                 std::uint64_t seed, bool zero_noise = false) {
    if (!(dt > 0.0)) throw ConfigError("simulate_state: dt must be positive");
    if (int(x0.size()) != sys.chart()->dim)
        throw ConfigError("simulate_state: x0 dimension mismatch");
    const int steps = int(std::llround(T / dt));
    if (steps < 1) throw ConfigError("simulate_state: T must cover at least one step");

    const detail::EmStepper stepper(sys);
    RandomStream rng(seed);

    SamplePath path;
    path.seed = seed;
    path.times.reserve(std::size_t(steps) + 1);
    path.states.reserve(std::size_t(steps) + 1);
    Point x = x0;
    sys.chart()->wrap_point(x);
    path.times.push_back(0.0);
    path.states.push_back(x);
    for (int k = 0; k < steps; ++k) {
        stepper.step(x, dt, rng, zero_noise);
        path.times.push_back(double(k + 1) * dt);
        path.states.push_back(x);
    }
    return path;
}

/// Observation increments dY_k = h(X_{t_k}) dt + sqrt(dt) xi_k accumulated
/// from Y_0 = 0; zero_noise drops the xi term, leaving a left Riemann sum.
inline ObservationPath simulate_observation(const SamplePath& path,
                                            const std::vector<ScalarField>& h, std::uint64_t seed,
                                            bool zero_noise = false) {
    if (path.times.size() < 2) throw ConfigError("simulate_observation: empty path");
    const int m = int(h.size());
    const double dt = path.dt();
    const double root_dt = std::sqrt(dt);
    RandomStream rng(seed, 1);

    ObservationPath out;
    out.times = path.times;
    out.y.assign(path.times.size(), std::vector<double>(std::size_t(m), 0.0));
    out.increments.assign(std::size_t(path.steps()), std::vector<double>(std::size_t(m), 0.0));
    for (int k = 0; k < path.steps(); ++k) {
        for (int i = 0; i < m; ++i) {
            double dy = eval(h[std::size_t(i)], path.states[std::size_t(k)]) * dt;
            if (!zero_noise) dy += root_dt * rng.next_gaussian();
            out.increments[std::size_t(k)][std::size_t(i)] = dy;
            out.y[std::size_t(k) + 1][std::size_t(i)] = out.y[std::size_t(k)][std::size_t(i)] + dy;
        }
    }
    return out;
}

}  // namespace estalg
