#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "estalg/sde.hpp"
#include "estalg/stats.hpp"

namespace estalg {

namespace detail {

/// Draws from an unnormalized density by rejection over the chart interior;
/// the envelope constant comes from a deterministic grid scan.
class DensitySampler {
  public:
    DensitySampler(const Expr& density, ChartPtr chart) : density_(density), chart_(std::move(chart)) {
        const int per_axis = chart_->dim == 1 ? 4096 : 128;
        std::vector<int> idx(std::size_t(chart_->dim), 0);
        double sup = 0.0;
        for (;;) {
            Point p(std::size_t(chart_->dim), 0.0);
            for (int i = 0; i < chart_->dim; ++i) {
                const double a = chart_->inner_lo(i), b = chart_->inner_hi(i);
                p[std::size_t(i)] = a + (b - a) * (idx[std::size_t(i)] + 0.5) / per_axis;
            }
            sup = std::max(sup, eval(density_, p));
            int i = chart_->dim - 1;
            for (; i >= 0; --i) {
                if (++idx[std::size_t(i)] < per_axis) break;
                idx[std::size_t(i)] = 0;
            }
            if (i < 0) break;
        }
        if (!(sup > 0.0)) throw ZeroMass("initial density has no positive values");
        bound_ = 1.2 * sup;
    }

    Point draw(RandomStream& rng) const {
        for (int tries = 0; tries < 100000; ++tries) {
            const Point p = chart_->sample_interior(rng);
            if (rng.next_uniform() * bound_ <= eval(density_, p)) return p;
        }
        throw ZeroMass("rejection sampling failed to accept a point");
    }

  private:
    Expr density_;
    ChartPtr chart_;
    double bound_ = 0.0;
};

}  // namespace detail

/// Bootstrap particle filter: signal dynamics as proposal, log-weight
/// increments h(x) dY - 1/2 h(x)^2 dt, systematic resampling when the
/// effective sample size drops under N/2.  Initial particles are drawn from
/// sigma0 by rejection; everything is deterministic per seed.
inline FilterReport particle_filter(const FilteringSystem& sys, const ObservationPath& yp,
                                    const Expr& sigma0, int n_particles, std::uint64_t seed) {
    if (n_particles < 1000) throw ConfigError("particle filter needs at least 1000 particles");
    if (yp.channels() != sys.obs_count())
        throw ConfigError("observation path channel count does not match system");
    const ChartPtr chart = sys.chart();
    const int dim = chart->dim;
    const int m = sys.obs_count();
    const std::size_t n = std::size_t(n_particles);

    const detail::EmStepper stepper(sys);
    const detail::DensitySampler sampler(sigma0, chart);
    RandomStream rng(seed, 2);

    std::vector<Point> parts;
    parts.reserve(n);
    for (std::size_t j = 0; j < n; ++j) parts.push_back(sampler.draw(rng));
    std::vector<double> logw(n, 0.0);
    double log_mass = 0.0;
    int resamples = 0;

    FilterReport rep;
    rep.method = "particle";
    rep.seed = seed;
    rep.settings["n_particles"] = double(n_particles);

    const auto record = [&](double t) {
        const double wmax = *std::max_element(logw.begin(), logw.end());
        std::vector<double> w(n);
        double wsum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w[j] = std::exp(logw[j] - wmax);
            wsum += w[j];
        }
        rep.times.push_back(t);
        rep.mass.push_back(std::exp(log_mass + wmax + std::log(wsum / double(n))));
        std::vector<double> mean(std::size_t(dim), 0.0);
        for (int i = 0; i < dim; ++i) {
            if (chart->periodic[std::size_t(i)]) {
                const double lo = chart->lo[std::size_t(i)];
                const double scale = kTwoPi / chart->width(i);
                double s = 0.0, c = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    const double a = (parts[j][std::size_t(i)] - lo) * scale;
                    s += std::sin(a) * w[j];
                    c += std::cos(a) * w[j];
                }
                mean[std::size_t(i)] = chart->wrap(i, std::atan2(s, c) / scale + lo);
            } else {
                double s = 0.0;
                for (std::size_t j = 0; j < n; ++j) s += parts[j][std::size_t(i)] * w[j];
                mean[std::size_t(i)] = s / wsum;
            }
        }
        if (dim == 1 && !chart->periodic[0]) {
            double s2 = 0.0;
            for (std::size_t j = 0; j < n; ++j) s2 += parts[j][0] * parts[j][0] * w[j];
            rep.variances.push_back(s2 / wsum - mean[0] * mean[0]);
        }
        rep.means.push_back(std::move(mean));
    };

    record(yp.times[0]);
    for (int k = 0; k < yp.steps(); ++k) {
        const double dt = yp.times[std::size_t(k) + 1] - yp.times[std::size_t(k)];
        // weight with the left-endpoint state, matching the observation model
        for (std::size_t j = 0; j < n; ++j) {
            double inc = 0.0;
            for (int i = 0; i < m; ++i) {
                const double hv = eval(sys.observations()[std::size_t(i)], parts[j]);
                inc += hv * yp.increments[std::size_t(k)][std::size_t(i)] - 0.5 * hv * hv * dt;
            }
            logw[j] += inc;
        }
        const auto [lo_it, hi_it] = std::minmax_element(logw.begin(), logw.end());
        if (*hi_it - *lo_it > 700.0)
            throw WeightCollapse("log-weight spread exceeded 700");

        // effective sample size on normalized weights
        const double wmax = *hi_it;
        std::vector<double> w(n);
        double wsum = 0.0, wsq = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            w[j] = std::exp(logw[j] - wmax);
            wsum += w[j];
        }
        for (std::size_t j = 0; j < n; ++j) {
            const double p = w[j] / wsum;
            wsq += p * p;
        }
        if (1.0 / wsq < 0.5 * double(n_particles)) {
            // fold the mean weight into the mass estimate, then resample
            log_mass += wmax + std::log(wsum / double(n));
            std::vector<Point> fresh;
            fresh.reserve(n);
            const double u0 = rng.next_uniform() / double(n_particles);
            double cum = 0.0;
            std::size_t src = 0;
            for (std::size_t j = 0; j < n; ++j) {
                const double target = u0 + double(j) / double(n_particles);
                while (cum + w[src] / wsum < target && src + 1 < n) cum += w[src++] / wsum;
                fresh.push_back(parts[src]);
            }
            parts = std::move(fresh);
            std::fill(logw.begin(), logw.end(), 0.0);
            ++resamples;
        }

        for (std::size_t j = 0; j < n; ++j) stepper.step(parts[j], dt, rng, false);
        record(yp.times[std::size_t(k) + 1]);
    }
    rep.settings["resamples"] = double(resamples);
    return rep;
}

}  // namespace estalg
