#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "estalg/grid.hpp"

namespace estalg {

/// Per-time filtering summary shared by the PDE, particle and Kalman-Bucy
/// paths.  Means hold one entry per coordinate (circular on periodic axes);
/// variances are filled only by scalar methods.
struct FilterReport {
    std::string method;
    std::uint64_t seed = 0;
    std::vector<double> times;
    std::vector<std::vector<double>> means;
    std::vector<double> variances;
    std::vector<double> mass;
    std::map<std::string, double> settings;
    std::map<std::string, double> distances;
};

/// pi(phi) = integral of phi against the normalized density.
inline double conditional_expectation(const DensityField& f, const Expr& phi) {
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        const double w = f.values[k] * f.weights[k];
        num += eval(phi, f.grid.node(k)) * w;
        den += w;
    }
    if (!(den > 0.0)) throw ZeroMass("density has non-positive mass");
    return num / den;
}

/// Circular mean along a periodic axis via atan2(pi(sin), pi(cos)) of the
/// rescaled angle, mapped back into [lo, hi).
inline double circular_mean(const DensityField& f, int axis) {
    const Chart& chart = *f.grid.chart;
    if (!chart.periodic[std::size_t(axis)])
        throw ConfigError("circular_mean requires a periodic axis");
    const double lo = chart.lo[std::size_t(axis)];
    const double scale = kTwoPi / chart.width(axis);
    double s = 0.0, c = 0.0, den = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        const double w = f.values[k] * f.weights[k];
        const double a = (f.grid.node(k)[std::size_t(axis)] - lo) * scale;
        s += std::sin(a) * w;
        c += std::cos(a) * w;
        den += w;
    }
    if (!(den > 0.0)) throw ZeroMass("density has non-positive mass");
    double a = std::atan2(s, c) / scale + lo;
    return chart.wrap(axis, a);
}

/// Matrix of pi_t(phi) values: one row per field, one column per test
/// function.
inline std::vector<std::vector<double>> conditional_stats(const std::vector<DensityField>& fields,
                                                          const std::vector<Expr>& phis) {
    std::vector<std::vector<double>> out;
    out.reserve(fields.size());
    for (const auto& f : fields) {
        std::vector<double> row;
        row.reserve(phis.size());
        for (const auto& phi : phis) row.push_back(conditional_expectation(f, phi));
        out.push_back(std::move(row));
    }
    return out;
}

/// Coordinate-wise conditional means of a density trajectory; scalar
/// non-periodic charts also get variances.
inline FilterReport density_report(const std::vector<DensityField>& sigma,
                                   const std::string& method) {
    FilterReport rep;
    rep.method = method;
    if (sigma.empty()) return rep;
    const Chart& chart = *sigma.front().grid.chart;
    for (const auto& f : sigma) {
        rep.times.push_back(f.time);
        rep.mass.push_back(f.mass());
        std::vector<double> mean(std::size_t(chart.dim), 0.0);
        for (int i = 0; i < chart.dim; ++i)
            mean[std::size_t(i)] = chart.periodic[std::size_t(i)]
                                       ? circular_mean(f, i)
                                       : conditional_expectation(f, Expr::coord(i));
        if (chart.dim == 1 && !chart.periodic[0]) {
            const double m2 = conditional_expectation(f, pow(Expr::coord(0), 2));
            rep.variances.push_back(m2 - mean[0] * mean[0]);
        }
        rep.means.push_back(std::move(mean));
    }
    return rep;
}

}  // namespace estalg
