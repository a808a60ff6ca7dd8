#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "estalg/critical.hpp"
#include "estalg/errors.hpp"
#include "estalg/estimation.hpp"
#include "estalg/system.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

enum class Verdict { InfiniteDimensional, RankDeficient };

inline const char* to_cstring(Verdict v) {
    return v == Verdict::InfiniteDimensional ? "InfiniteDimensional" : "RankDeficient";
}

// Critical-point certificate data: A[i][k] = H_i(x_k) on the selected points.
struct Certificate {
    int j = 0;
    int n = 0;
    std::vector<Point> points;
    std::vector<std::vector<double>> a;
    double min_diag = 0.0;
    double max_below = 0.0;
    double det_estimate = 0.0;
    Verdict verdict = Verdict::InfiniteDimensional;
};

// Selects, for each field of the Q-sequence, the critical point maximizing |H_i|
// (lexicographic tie-break via the sorted scan order), then checks that the value
// matrix is upper triangular with a solid diagonal.
inline Certificate certificate_compact(const FilteringSystem& sys, int j, int n,
                                       const Tolerances& tol = {}) {
    if (!sys.chart()->compact)
        throw ConfigError("compact certificate requires a compact chart");
    if (n < 1) throw ConfigError("certificate depth must be at least 1");
    const auto fields = q_sequence(sys, j, n - 1, tol);

    Certificate cert;
    cert.j = j;
    cert.n = n;
    for (int i = 0; i < n; ++i) {
        const auto found = critical_points(fields[std::size_t(i)], sys.metric(), tol);
        const CriticalPoint* best = nullptr;
        for (const auto& cp : found.points) {
            if (std::abs(cp.value) <= tol.tau_diag) continue;
            // points arrive lexicographically sorted, so requiring a strictly
            // larger |value| beyond rounding noise keeps the first of any tie
            if (!best || std::abs(cp.value) > std::abs(best->value) * (1.0 + 1e-10)) best = &cp;
        }
        if (!best)
            throw CertificateFailure("no critical point of the step-" + std::to_string(i) +
                                     " field has |value| above tau_diag");
        cert.points.push_back(best->x);
    }

    cert.a.assign(std::size_t(n), std::vector<double>(std::size_t(n), 0.0));
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            cert.a[std::size_t(i)][std::size_t(k)] =
                eval(fields[std::size_t(i)], cert.points[std::size_t(k)]);

    cert.min_diag = std::abs(cert.a[0][0]);
    cert.max_below = 0.0;
    for (int i = 0; i < n; ++i) {
        cert.min_diag = std::min(cert.min_diag, std::abs(cert.a[std::size_t(i)][std::size_t(i)]));
        for (int k = 0; k < i; ++k)
            cert.max_below = std::max(cert.max_below, std::abs(cert.a[std::size_t(i)][std::size_t(k)]));
    }

    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) m(i, k) = cert.a[std::size_t(i)][std::size_t(k)];
    cert.det_estimate = m.determinant();

    if (cert.max_below >= tol.tau_tri) {
        std::ostringstream os;
        os << "below-diagonal entry magnitude " << cert.max_below << " breaks triangularity (tau_tri "
           << tol.tau_tri << ")";
        throw CertificateFailure(os.str());
    }
    if (cert.min_diag <= tol.tau_diag) {
        std::ostringstream os;
        os << "diagonal entry magnitude " << cert.min_diag << " below tau_diag " << tol.tau_diag;
        throw CertificateFailure(os.str());
    }
    cert.verdict = Verdict::InfiniteDimensional;
    return cert;
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Point> states;
};

namespace detail {

// One RK4 step of x' = V(x); V evaluated componentwise from compiled fields.
inline Point rk4_step(const VectorField& v, const Chart& chart, const Point& x, double dt) {
    const int n = chart.dim;
    const auto field = [&](const Point& p) {
        Point out(std::size_t(n), 0.0);
        for (int i = 0; i < n; ++i) out[std::size_t(i)] = eval(v[std::size_t(i)], p);
        return out;
    };
    const auto shift = [&](const Point& p, const Point& k, double c) {
        Point out = p;
        for (int i = 0; i < n; ++i) out[std::size_t(i)] += c * k[std::size_t(i)];
        chart.wrap_point(out);
        return out;
    };
    try {
        const Point k1 = field(x);
        const Point k2 = field(shift(x, k1, dt / 2));
        const Point k3 = field(shift(x, k2, dt / 2));
        const Point k4 = field(shift(x, k3, dt));
        Point out = x;
        for (int i = 0; i < n; ++i)
            out[std::size_t(i)] += dt / 6 *
                                   (k1[std::size_t(i)] + 2 * k2[std::size_t(i)] +
                                    2 * k3[std::size_t(i)] + k4[std::size_t(i)]);
        chart.wrap_point(out);
        for (int i = 0; i < n; ++i) {
            if (chart.periodic[std::size_t(i)]) continue;
            if (out[std::size_t(i)] < chart.inner_lo(i) || out[std::size_t(i)] > chart.inner_hi(i))
                throw StepOutOfDomain("trajectory left the chart box on axis " + std::to_string(i));
        }
        return out;
    } catch (const DomainError&) {
        throw StepOutOfDomain("field evaluation left the chart domain mid-step");
    }
}

}  // namespace detail

// RK4 integration of the ascending flow x' = grad h. A critical start point yields
// the constant trajectory.
inline Trajectory gradient_flow(const ScalarField& h, const Metric& g, Point x0, double t_end,
                                double dt, const Tolerances& tol = {}) {
    if (!(dt > 0) || t_end < 0) throw ConfigError("gradient_flow needs dt > 0 and t_end >= 0");
    const Chart& chart = *g.chart;
    chart.wrap_point(x0);
    const VectorField v = grad(h, g, tol);
    const Expr q = q_op(h, g, tol);

    Trajectory tr;
    tr.times.push_back(0.0);
    tr.states.push_back(x0);
    const bool frozen = std::sqrt(std::max(0.0, eval(q, x0))) < tol.tau_crit;

    const int steps = int(std::floor(t_end / dt + 1e-12));
    double t = 0.0;
    Point x = x0;
    for (int k = 0; k < steps; ++k) {
        if (!frozen) x = detail::rk4_step(v, chart, x, dt);
        t = (k + 1) * dt;
        tr.times.push_back(t);
        tr.states.push_back(x);
    }
    if (t_end - t > 1e-12) {
        if (!frozen) x = detail::rk4_step(v, chart, x, t_end - t);
        tr.times.push_back(t_end);
        tr.states.push_back(x);
    }
    return tr;
}

// Gradient-flow certificate data: M[n-1][k] = A_h^n h(gamma(t_k)), n = 1..N.
struct FlowCertificate {
    int j = 0;
    int n_fields = 0;  // N
    int n_times = 0;   // K
    Point from;        // critical point the flow leaves
    Point to;          // critical point the flow approaches
    std::vector<double> sample_times;
    std::vector<std::vector<double>> m;
    double sigma_min = 0.0;
    double sigma_max = 0.0;
    double derivative_residual = 0.0;
    Verdict verdict = Verdict::RankDeficient;
};

inline FlowCertificate certificate_flow(const FilteringSystem& sys, int j, int n_fields,
                                        int n_times, const Tolerances& tol = {}) {
    if (j < 0 || j >= sys.obs_count()) throw ConfigError("observation index out of range");
    if (n_fields < 1) throw ConfigError("flow certificate needs N >= 1");
    if (n_times < 2 * n_fields)
        throw ConfigError("flow certificate needs K >= 2N sample times");
    const Chart& chart = *sys.chart();
    const Metric& g = sys.metric();
    const ScalarField& h = sys.observations()[std::size_t(j)];

    const auto crit = critical_points(h, g, tol);
    if (crit.points.size() < 2)
        throw FlowNotFound("need at least two critical points of the observation");

    // locate a connecting flow by launching from perturbed critical points
    const double eps = 1e-3;
    const double t_max = 40.0;
    const double dt = 1e-2;
    const Expr q = q_op(h, g, tol);

    Trajectory flow;
    Point from, to;
    bool located = false;
    for (const auto& c : crit.points) {
        for (int axis = 0; axis < chart.dim && !located; ++axis) {
            for (int sgn : {+1, -1}) {
                Point x0 = c.x;
                x0[std::size_t(axis)] += sgn * eps;
                chart.wrap_point(x0);
                if (!chart.contains(x0)) continue;
                if (std::sqrt(std::max(0.0, eval(q, x0))) < tol.tau_crit) continue;
                Trajectory tr;
                try {
                    tr = gradient_flow(h, g, x0, t_max, dt, tol);
                } catch (const StepOutOfDomain&) {
                    continue;
                }
                const Point& end = tr.states.back();
                for (const auto& c2 : crit.points) {
                    if (chart.distance(c2.x, c.x) < tol.delta_dedup) continue;
                    if (chart.distance(c2.x, end) < 1e-4) {
                        flow = std::move(tr);
                        from = c.x;
                        to = c2.x;
                        located = true;
                        break;
                    }
                }
                if (located) break;
            }
        }
        if (located) break;
    }
    if (!located) throw FlowNotFound("no flow connecting two critical points was located");

    // the iterated fields A_h^n h
    std::vector<ScalarField> fields;
    fields.push_back(q);  // A_h^1 h = <grad h, grad h>
    for (int n = 1; n < n_fields; ++n) fields.push_back(a_h(h, fields.back(), g, tol));
    const ScalarField next = a_h(h, fields.back(), g, tol);  // A_h^{N+1} h for the identity check

    // effective support of the leading field along the flow
    double vmax = 0.0;
    std::vector<double> lead(flow.states.size(), 0.0);
    for (std::size_t k = 0; k < flow.states.size(); ++k) {
        lead[k] = std::abs(eval(fields[0], flow.states[k]));
        vmax = std::max(vmax, lead[k]);
    }
    double t_lo = flow.times.front(), t_hi = flow.times.back();
    for (std::size_t k = 0; k < lead.size(); ++k)
        if (lead[k] >= 1e-8 * vmax) {
            t_lo = flow.times[k];
            break;
        }
    for (std::size_t k = lead.size(); k-- > 0;)
        if (lead[k] >= 1e-8 * vmax) {
            t_hi = flow.times[k];
            break;
        }

    FlowCertificate cert;
    cert.j = j;
    cert.n_fields = n_fields;
    cert.n_times = n_times;
    cert.from = from;
    cert.to = to;

    // Chebyshev nodes over the effective support, ascending
    for (int k = 0; k < n_times; ++k) {
        const double c = std::cos(kPi * (2.0 * k + 1.0) / (2.0 * n_times));
        cert.sample_times.push_back(0.5 * (t_lo + t_hi) - 0.5 * (t_hi - t_lo) * c);
    }

    // trajectory states at the sample times: advance from the stored start
    const VectorField v = grad(h, g, tol);
    std::vector<Point> sample_states;
    {
        Point x = flow.states.front();
        double t = 0.0;
        for (double tk : cert.sample_times) {
            while (tk - t > dt + 1e-12) {
                x = detail::rk4_step(v, chart, x, dt);
                t += dt;
            }
            if (tk - t > 1e-12) {
                x = detail::rk4_step(v, chart, x, tk - t);
                t = tk;
            }
            sample_states.push_back(x);
        }
    }

    cert.m.assign(std::size_t(n_fields), std::vector<double>(std::size_t(n_times), 0.0));
    for (int n = 0; n < n_fields; ++n)
        for (int k = 0; k < n_times; ++k)
            cert.m[std::size_t(n)][std::size_t(k)] =
                eval(fields[std::size_t(n)], sample_states[std::size_t(k)]);

    // derivative identity: d/dt A^n h(gamma) = A^{n+1} h(gamma), via small symmetric steps;
    // the step keeps the fd truncation (~ fd^2 * |d^3 A^n h|) below the deep rows' growth
    const double fd = 2e-4;
    double max_res = 0.0;
    for (int k = 0; k < n_times; ++k) {
        const Point& x = sample_states[std::size_t(k)];
        const Point xp = detail::rk4_step(v, chart, x, fd);
        const Point xm = detail::rk4_step(v, chart, x, -fd);
        for (int n = 0; n < n_fields; ++n) {
            const double deriv =
                (eval(fields[std::size_t(n)], xp) - eval(fields[std::size_t(n)], xm)) / (2 * fd);
            const double target = n + 1 < n_fields
                                      ? cert.m[std::size_t(n + 1)][std::size_t(k)]
                                      : eval(next, x);
            max_res = std::max(max_res, std::abs(deriv - target));
        }
    }
    cert.derivative_residual = max_res;

    Eigen::MatrixXd mat(n_fields, n_times);
    for (int n = 0; n < n_fields; ++n)
        for (int k = 0; k < n_times; ++k) mat(n, k) = cert.m[std::size_t(n)][std::size_t(k)];
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(mat);
    cert.sigma_min = svd.singularValues().minCoeff();
    cert.sigma_max = svd.singularValues().maxCoeff();
    cert.verdict = (cert.sigma_max > 0 && cert.sigma_min / cert.sigma_max > tol.tau_rank)
                       ? Verdict::InfiniteDimensional
                       : Verdict::RankDeficient;
    return cert;
}

}  // namespace estalg
