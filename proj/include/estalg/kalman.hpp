#pragma once

#include <cmath>
#include <cstdint>

#include "estalg/errors.hpp"
#include "estalg/sde.hpp"
#include "estalg/stats.hpp"

namespace estalg {

/// Kalman-Bucy filter for the scalar linear system
///   dX = a X dt + dW,   dY = c X dt + dV
/// integrated with RK4 on each observation interval, holding the observation
/// rate dY/dt fixed at its increment average.  Serves as the closed-form
/// reference for linear problems.
inline FilterReport kalman_bucy(double a, double c, double m0, double p0,
                                const ObservationPath& yp) {
    if (yp.channels() != 1) throw ConfigError("kalman_bucy expects a single observation channel");
    if (!(p0 >= 0.0)) throw ConfigError("initial variance must be nonnegative");

    FilterReport rep;
    rep.method = "kalman";
    rep.seed = 0;
    rep.settings["a"] = a;
    rep.settings["c"] = c;

    double m = m0, p = p0;
    const auto record = [&](double t) {
        rep.times.push_back(t);
        rep.means.push_back({m});
        rep.variances.push_back(p);
        rep.mass.push_back(1.0);
    };
    record(yp.times[0]);

    for (int k = 0; k < yp.steps(); ++k) {
        const double dt = yp.times[std::size_t(k) + 1] - yp.times[std::size_t(k)];
        const double ydot = yp.increments[std::size_t(k)][0] / dt;
        const auto fm = [&](double mm, double pp) { return a * mm + pp * c * (ydot - c * mm); };
        const auto fp = [&](double pp) { return 2.0 * a * pp + 1.0 - c * c * pp * pp; };
        const double km1 = fm(m, p), kp1 = fp(p);
        const double km2 = fm(m + 0.5 * dt * km1, p + 0.5 * dt * kp1), kp2 = fp(p + 0.5 * dt * kp1);
        const double km3 = fm(m + 0.5 * dt * km2, p + 0.5 * dt * kp2), kp3 = fp(p + 0.5 * dt * kp2);
        const double km4 = fm(m + dt * km3, p + dt * kp3), kp4 = fp(p + dt * kp3);
        m += dt / 6.0 * (km1 + 2.0 * km2 + 2.0 * km3 + km4);
        p += dt / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
        if (!std::isfinite(m) || !std::isfinite(p)) throw NonFiniteDensity("kalman state diverged");
        record(yp.times[std::size_t(k) + 1]);
    }
    return rep;
}

}  // namespace estalg
