#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "estalg/certificate.hpp"
#include "estalg/critical.hpp"
#include "estalg/estimation.hpp"
#include "estalg/probe.hpp"
#include "estalg/system.hpp"
#include "support/oracles.hpp"

using namespace estalg;

namespace {
const ChartPtr circle = make_chart(Chart::circle());
const ChartPtr torus = make_chart(Chart::torus2());
const ChartPtr sphere = make_chart(Chart::sphere2());
const ChartPtr line = make_chart(Chart::euclidean(1));
const Expr th = Expr::coord(0);
const Expr x = Expr::coord(0);

FilteringSystem circle_cos_system() {
    return FilteringSystem::make(Metric::identity(circle), {}, {cos(th)});
}

FilteringSystem oscillator_system() {
    return FilteringSystem::make(Metric::identity(line), {}, {x});
}

Expr tanh_expr(const Expr& e) { return Expr(1) - Expr(2) / (exp(2 * e) + Expr(1)); }

FilteringSystem benes_system() {
    return FilteringSystem::make(Metric::identity(line), {tanh_expr(x)}, {x});
}

bool near_point(const Chart& chart, const Point& p, std::initializer_list<double> want,
                double tol = 1e-8) {
    return chart.distance(p, Point(want)) < tol;
}
}  // namespace

TEST_CASE("L0 assembly") {
    SECTION("harmonic oscillator") {
        const FilteringSystem sys = oscillator_system();
        const DiffOp dx = DiffOp::derivative(line, 0);
        const DiffOp want = Expr::rational(1, 2) * compose(dx, dx) -
                            DiffOp::multiplication(Expr::rational(1, 2) * x * x, line);
        REQUIRE(op_equal(build_L0(sys), want));
    }
    SECTION("cosine observation on the circle") {
        const FilteringSystem sys = circle_cos_system();
        const DiffOp dth = DiffOp::derivative(circle, 0);
        const DiffOp want = Expr::rational(1, 2) * compose(dth, dth) -
                            DiffOp::multiplication(Expr::rational(1, 2) * pow(cos(th), 2), circle);
        REQUIRE(op_equal(build_L0(sys), want));
    }
    SECTION("no observation leaves the adjoint alone") {
        const FilteringSystem sys = FilteringSystem::make(Metric::identity(circle), {sin(th)}, {});
        REQUIRE(op_equal(sys.l0(), sys.generator_adjoint()));
    }
}

TEST_CASE("q_op") {
    const Metric gc = Metric::identity(circle);
    REQUIRE(is_zero(q_op(Expr(3), gc), *circle));
    REQUIRE(is_zero(q_op(cos(th), gc) - pow(sin(th), 2), *circle));
    REQUIRE(is_zero(q_op(pow(sin(th), 2), gc) - pow(sin(2 * th), 2), *circle));

    SECTION("non-negative and zero only for constants") {
        RandomStream rng(5);
        const Expr f = oracles::random_trig_expr(rng, *circle, 2);
        const Expr q = q_op(f, gc);
        bool constant = is_zero(q, *circle);
        for (int k = 0; k < 32; ++k) {
            const Point p = circle->sample_interior(rng);
            REQUIRE(eval(q, p) >= -1e-12);
        }
        if (!constant) REQUIRE_FALSE(is_zero(q, *circle));
    }
    SECTION("finite-difference oracle on the sphere") {
        RandomStream rng(6);
        const Metric gs = Metric::sphere_round(sphere);
        const Expr f = oracles::random_trig_expr(rng, *sphere, 2);
        const Expr q = q_op(f, gs);
        for (int k = 0; k < 6; ++k) {
            const Point p = sphere->sample_interior(rng);
            const double ft = oracles::central_diff4(f, 0, p);
            const double fp = oracles::central_diff4(f, 1, p);
            const double want = ft * ft + fp * fp / std::pow(std::sin(p[0]), 2);
            REQUIRE(eval(q, p) == Catch::Approx(want).margin(1e-6 * std::max(1.0, std::abs(want))));
        }
    }
}

TEST_CASE("bracket identity") {
    SECTION("constant field gives the zero operator") {
        const auto rep = bracket_identity_check(circle_cos_system(), Expr(2));
        REQUIRE(rep.bracket.is_zero_op());
        REQUIRE(rep.max_residual == 0.0);
    }
    SECTION("cosine on the circle") {
        const auto rep = bracket_identity_check(circle_cos_system(), cos(th));
        REQUIRE(rep.bracket.order() == 0);
        REQUIRE(is_zero(rep.coefficient - pow(sin(th), 2), *circle));
        REQUIRE(rep.max_residual < 1e-9);
    }
    SECTION("flat torus field") {
        const FilteringSystem sys =
            FilteringSystem::make(Metric::identity(torus), {}, {cos(Expr::coord(0))});
        const Expr f = cos(Expr::coord(0)) + sin(Expr::coord(1));
        const auto rep = bracket_identity_check(sys, f);
        const Expr want = pow(sin(Expr::coord(0)), 2) + pow(cos(Expr::coord(1)), 2);
        REQUIRE(is_zero(rep.coefficient - want, *torus));
    }
    SECTION("random fields on the sphere") {
        RandomStream rng(8);
        const FilteringSystem sys =
            FilteringSystem::make(Metric::sphere_round(sphere), {}, {cos(th)});
        for (int k = 0; k < 2; ++k) {
            const Expr f = oracles::random_trig_expr(rng, *sphere, 2);
            REQUIRE(bracket_identity_check(sys, f).max_residual < 1e-9);
        }
    }
}

TEST_CASE("q_sequence") {
    const FilteringSystem sys = circle_cos_system();
    SECTION("closed-form chain on the circle") {
        const auto fields = q_sequence(sys, 0, 4);
        REQUIRE(fields.size() == 5);
        REQUIRE(is_zero(fields[0] - cos(th), *circle));
        REQUIRE(is_zero(fields[1] - pow(sin(th), 2), *circle));
        REQUIRE(is_zero(fields[2] - pow(sin(2 * th), 2), *circle));
        REQUIRE(is_zero(fields[3] - 4 * pow(sin(4 * th), 2), *circle));
        REQUIRE(is_zero(fields[4] - 256 * pow(sin(8 * th), 2), *circle));
    }
    SECTION("constant observation refused") {
        const FilteringSystem flat = FilteringSystem::make(Metric::identity(circle), {}, {Expr(1)});
        REQUIRE_THROWS_AS(q_sequence(flat, 0, 2), ConstantObservation);
        REQUIRE_THROWS_AS(q_sequence(flat, 0, 0), ConstantObservation);
    }
    SECTION("torus component") {
        const FilteringSystem t =
            FilteringSystem::make(Metric::identity(torus), {}, {cos(Expr::coord(0))});
        const auto fields = q_sequence(t, 0, 1);
        REQUIRE(is_zero(fields[1] - pow(sin(Expr::coord(0)), 2), *torus));
    }
}

TEST_CASE("critical points on the circle") {
    const Metric gc = Metric::identity(circle);
    SECTION("cosine") {
        const auto res = critical_points(cos(th), gc);
        REQUIRE(res.points.size() == 2);
        REQUIRE(near_point(*circle, res.points[0].x, {0.0}));
        REQUIRE(near_point(*circle, res.points[1].x, {kPi}));
        REQUIRE(res.points[0].value == Catch::Approx(1.0));
        REQUIRE(res.points[1].value == Catch::Approx(-1.0));
    }
    SECTION("sin squared") {
        const auto res = critical_points(pow(sin(th), 2), gc);
        REQUIRE(res.points.size() == 4);
        for (std::size_t k = 0; k < 4; ++k)
            REQUIRE(near_point(*circle, res.points[k].x, {double(k) * kPi / 2}));
    }
    SECTION("sin squared of 2 theta") {
        const auto res = critical_points(pow(sin(2 * th), 2), gc);
        REQUIRE(res.points.size() == 8);
        for (std::size_t k = 0; k < 8; ++k)
            REQUIRE(near_point(*circle, res.points[k].x, {double(k) * kPi / 4}));
    }
    SECTION("constant field refused") {
        REQUIRE_THROWS_AS(critical_points(Expr(1), gc), DegenerateField);
    }
    SECTION("criticality is inherited down the Q-chain") {
        const auto fields = q_sequence(circle_cos_system(), 0, 3);
        for (std::size_t i = 0; i < fields.size(); ++i) {
            const auto res = critical_points(fields[i], gc);
            for (const auto& cp : res.points) {
                for (std::size_t k = i + 1; k < fields.size(); ++k) {
                    const Expr qk = q_op(fields[k], gc);
                    REQUIRE(std::sqrt(std::max(0.0, eval(qk, cp.x))) < 1e-6);
                    REQUIRE(std::abs(eval(fields[k], cp.x)) < 1e-6);
                }
            }
        }
    }
}

TEST_CASE("compact certificate") {
    const FilteringSystem sys = circle_cos_system();
    SECTION("depth 3 closed form") {
        const Certificate cert = certificate_compact(sys, 0, 3);
        REQUIRE(cert.verdict == Verdict::InfiniteDimensional);
        REQUIRE(near_point(*circle, cert.points[0], {0.0}, 1e-7));
        REQUIRE(near_point(*circle, cert.points[1], {kPi / 2}, 1e-7));
        REQUIRE(near_point(*circle, cert.points[2], {kPi / 4}, 1e-7));
        const double s2 = std::sqrt(2.0) / 2.0;
        const double want[3][3] = {{1.0, 0.0, s2}, {0.0, 1.0, 0.5}, {0.0, 0.0, 1.0}};
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                REQUIRE(cert.a[std::size_t(i)][std::size_t(k)] ==
                        Catch::Approx(want[i][k]).margin(1e-9));
        REQUIRE(cert.det_estimate == Catch::Approx(1.0).margin(1e-6));
    }
    SECTION("depth 1 trivial") {
        const Certificate cert = certificate_compact(sys, 0, 1);
        REQUIRE(cert.a[0][0] == Catch::Approx(1.0).margin(1e-9));
        REQUIRE(cert.verdict == Verdict::InfiniteDimensional);
    }
    SECTION("depth 5 stays triangular") {
        const Certificate cert = certificate_compact(sys, 0, 5);
        REQUIRE(cert.max_below < 1e-8);
        REQUIRE(cert.min_diag > 0.1);
    }
    SECTION("constant observation") {
        const FilteringSystem flat = FilteringSystem::make(Metric::identity(circle), {}, {Expr(1)});
        REQUIRE_THROWS_AS(certificate_compact(flat, 0, 2), ConstantObservation);
    }
    SECTION("non-compact chart refused") {
        REQUIRE_THROWS_AS(certificate_compact(oscillator_system(), 0, 2), ConfigError);
    }
}

TEST_CASE("dimension probe") {
    SECTION("harmonic oscillator closes at four") {
        const FilteringSystem sys = oscillator_system();
        const ProbeResult res = dimension_probe(sys, 10, 6);
        REQUIRE(res.status == ProbeStatus::Closed);
        REQUIRE(res.dimension == 4);

        // span check against the reference basis both ways
        const DiffOp dx = DiffOp::derivative(line, 0);
        const std::vector<DiffOp> ref = {DiffOp::multiplication(Expr(1), line),
                                         DiffOp::multiplication(x, line), dx, sys.l0()};
        for (const auto& b : res.basis) REQUIRE(span_residual(ref, b, *line) < 1e-8);
        for (const auto& r : ref) REQUIRE(span_residual(res.basis, r, *line) < 1e-8);

        // soundness: every pairwise bracket stays inside the span
        for (std::size_t i = 0; i < res.basis.size(); ++i)
            for (std::size_t j = i + 1; j < res.basis.size(); ++j)
                REQUIRE(span_residual(res.basis, commutator(res.basis[i], res.basis[j]), *line) <
                        1e-8);
    }
    SECTION("benes drift closes at four") {
        const ProbeResult res = dimension_probe(benes_system(), 10, 6);
        REQUIRE(res.status == ProbeStatus::Closed);
        REQUIRE(res.dimension == 4);
    }
    SECTION("circle cosine exceeds the bound") {
        const ProbeResult res = dimension_probe(circle_cos_system(), 10, 6);
        REQUIRE(res.status == ProbeStatus::ExceededBound);
        REQUIRE(res.dimension >= 10);
        REQUIRE(res.bound == 10);
    }
    SECTION("closed dimension is seed-invariant") {
        for (std::uint64_t seed : {2ull, 77ull}) {
            REQUIRE(dimension_probe(oscillator_system(), 10, 6, {}, seed).dimension == 4);
            REQUIRE(dimension_probe(benes_system(), 10, 6, {}, seed).dimension == 4);
        }
    }
}

TEST_CASE("a_h pairing") {
    const Metric gc = Metric::identity(circle);
    REQUIRE(is_zero(a_h(cos(th), Expr(5), gc), *circle));
    REQUIRE(is_zero(a_h(cos(th), cos(th), gc) - q_op(cos(th), gc), *circle));
    REQUIRE(is_zero(a_h(cos(th), sin(th), gc) + sin(th) * cos(th), *circle));

    SECTION("bilinear in the second slot") {
        RandomStream rng(9);
        const Expr h = oracles::random_trig_expr(rng, *circle, 2);
        const Expr f = oracles::random_trig_expr(rng, *circle, 2);
        const Expr k = oracles::random_trig_expr(rng, *circle, 2);
        const Expr lhs = a_h(h, 2 * f + 3 * k, gc);
        const Expr rhs = 2 * a_h(h, f, gc) + 3 * a_h(h, k, gc);
        REQUIRE(is_zero(lhs - rhs, *circle));
    }
}

TEST_CASE("gradient flow") {
    const Metric gc = Metric::identity(circle);
    SECTION("critical start stays put") {
        const Trajectory tr = gradient_flow(cos(th), gc, {0.0}, 1.0, 0.01);
        for (const auto& p : tr.states) REQUIRE(p[0] == 0.0);
    }
    SECTION("closed form on the circle") {
        const double th0 = 3 * kPi / 4;
        const Trajectory tr = gradient_flow(cos(th), gc, {th0}, 10.0, 1e-3);
        const double c = std::tan(th0 / 2);
        for (std::size_t k = 0; k < tr.times.size(); k += 500) {
            const double want = 2 * std::atan(c * std::exp(-tr.times[k]));
            REQUIRE(std::abs(tr.states[k][0] - want) < 1e-6);
        }
        REQUIRE(std::abs(tr.states.back()[0] - 2 * std::atan(c * std::exp(-10.0))) < 1e-6);
    }
    SECTION("product structure on the torus") {
        const Metric gt = Metric::identity(torus);
        const Trajectory tr = gradient_flow(cos(Expr::coord(0)), gt, {3 * kPi / 4, 1.0}, 5.0, 1e-3);
        const double c = std::tan(3 * kPi / 8);
        for (std::size_t k = 0; k < tr.times.size(); k += 1000) {
            REQUIRE(tr.states[k][1] == Catch::Approx(1.0).margin(1e-12));
            const double want = 2 * std::atan(c * std::exp(-tr.times[k]));
            REQUIRE(std::abs(tr.states[k][0] - want) < 1e-6);
        }
    }
    SECTION("leaving the box throws") {
        const Metric gl = Metric::identity(line);
        REQUIRE_THROWS_AS(gradient_flow(x, gl, {9.9}, 1.0, 0.01), StepOutOfDomain);
    }
}

TEST_CASE("flow certificate") {
    SECTION("circle cosine, three fields") {
        const FlowCertificate cert = certificate_flow(circle_cos_system(), 0, 3, 12);
        REQUIRE(cert.verdict == Verdict::InfiniteDimensional);
        REQUIRE(cert.sigma_min / cert.sigma_max > 1e-8);
        REQUIRE(cert.derivative_residual < 1e-4);
        // leading row is positive and decays toward both ends of the window
        double mx = 0.0;
        for (double vv : cert.m[0]) {
            REQUIRE(vv > 0.0);
            mx = std::max(mx, vv);
        }
        REQUIRE(cert.m[0].front() < 0.5 * mx);
        REQUIRE(cert.m[0].back() < 0.5 * mx);
    }
    SECTION("single field has rank one") {
        const FlowCertificate cert = certificate_flow(circle_cos_system(), 0, 1, 2);
        REQUIRE(cert.verdict == Verdict::InfiniteDimensional);
        REQUIRE(cert.sigma_min > 0.0);
    }
    SECTION("torus reduces to the circle") {
        const FilteringSystem sys =
            FilteringSystem::make(Metric::identity(torus), {}, {cos(Expr::coord(0))});
        const FlowCertificate cert = certificate_flow(sys, 0, 3, 12);
        REQUIRE(cert.verdict == Verdict::InfiniteDimensional);
        REQUIRE(cert.derivative_residual < 1e-4);
    }
    SECTION("no critical pair on the line") {
        REQUIRE_THROWS_AS(certificate_flow(oscillator_system(), 0, 2, 4), FlowNotFound);
    }
    SECTION("K below 2N refused") {
        REQUIRE_THROWS_AS(certificate_flow(circle_cos_system(), 0, 3, 5), ConfigError);
    }
}
