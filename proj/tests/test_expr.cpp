#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "estalg/chart.hpp"
#include "estalg/expr.hpp"
#include "estalg/parse.hpp"
#include "support/oracles.hpp"

using namespace estalg;

namespace {
const Expr th = Expr::coord(0);
}

TEST_CASE("exact constants fold rationally") {
    Expr e = Expr::rational(1, 3) + Expr::rational(1, 6);
    REQUIRE(e.is_constant());
    REQUIRE(e.value().exact());
    REQUIRE(e.value().num() == 1);
    REQUIRE(e.value().den() == 2);

    // transcendental contact drops exactness
    Expr f = sin(Expr(1)) + Expr::rational(1, 2);
    REQUIRE(f.is_constant());
    REQUIRE_FALSE(f.value().exact());
}

TEST_CASE("simplify normal form") {
    REQUIRE(structurally_equal(Expr(0) * th, Expr(0)));
    REQUIRE(structurally_equal(th + Expr(0), th));
    REQUIRE(structurally_equal(Expr(2) * th + Expr(3) * th, Expr(5) * th));
    REQUIRE(structurally_equal(th * th, pow(th, 2)));
    REQUIRE(structurally_equal(th / th, Expr(1)));
    REQUIRE(structurally_equal(pow(pow(th, 2), 3), pow(th, 6)));
    REQUIRE(structurally_equal(exp(th) * exp(-th), Expr(1)));
    REQUIRE(structurally_equal(log(exp(th)), th));
    REQUIRE(structurally_equal(sin(-th), -sin(th)));
    REQUIRE(structurally_equal(cos(Expr(-2) * th), cos(Expr(2) * th)));
}

TEST_CASE("derivatives, closed forms") {
    REQUIRE(structurally_equal(diff(cos(th), 0), -sin(th)));
    REQUIRE(structurally_equal(diff(th * th, 0), Expr(2) * th));
    REQUIRE(structurally_equal(diff(pow(sin(th), 2), 0), Expr(2) * sin(th) * cos(th)));
    REQUIRE(structurally_equal(diff(exp(Expr(3) * th), 0), Expr(3) * exp(Expr(3) * th)));
    // quotient rule through the Div node
    Expr q = Expr::raw(NodeKind::Div, {sin(th), cos(th)});
    Expr dq = diff(q, 0);
    const double v = eval(dq, std::vector<double>{0.3});
    REQUIRE(v == Catch::Approx(1.0 / (std::cos(0.3) * std::cos(0.3))).epsilon(1e-12));
}

TEST_CASE("exponential factors survive products") {
    // oracle is std::exp so a smart-constructor bug cannot cancel out
    const std::vector<double> p{0.7};
    const double v = 0.7;
    REQUIRE(eval(exp(th) * exp(th), p) == Catch::Approx(std::exp(2 * v)).epsilon(1e-14));
    REQUIRE(eval(Expr(3) * exp(Expr(2) * th), p) ==
            Catch::Approx(3 * std::exp(2 * v)).epsilon(1e-14));
    REQUIRE(eval(th * exp(th), p) == Catch::Approx(v * std::exp(v)).epsilon(1e-14));
    REQUIRE(eval(exp(th) * pow(exp(th), -2), p) == Catch::Approx(std::exp(-v)).epsilon(1e-14));
    REQUIRE(eval(diff(exp(Expr(2) * th), 0), p) ==
            Catch::Approx(2 * std::exp(2 * v)).epsilon(1e-14));

    // tanh' = sech^2 with tanh written through exp
    const Expr tanhx = Expr(1) - Expr(2) / (exp(Expr(2) * th) + Expr(1));
    const double sech2 = 1.0 / (std::cosh(v) * std::cosh(v));
    REQUIRE(eval(diff(tanhx, 0), p) == Catch::Approx(sech2).epsilon(1e-12));

    REQUIRE(structurally_equal(exp(th) * exp(th), exp(Expr(2) * th)));
}

TEST_CASE("derivative matches finite differences at random points") {
    const Chart chart = Chart::circle();
    RandomStream rng(2024);
    const Expr e = pow(sin(th), 2);
    const Expr de = diff(e, 0);
    for (int k = 0; k < 10; ++k) {
        const Point p = chart.sample_interior(rng);
        const double fd = oracles::central_diff4(e, 0, p);
        const double sym = eval(de, p);
        REQUIRE(std::abs(fd - sym) <= 1e-8 * std::max(1.0, std::abs(sym)));
    }
}

TEST_CASE("eval closed values") {
    REQUIRE(eval(cos(th), std::vector<double>{0.0}) == 1.0);
    REQUIRE(eval(pow(sin(th), 2), std::vector<double>{kPi / 2}) == Catch::Approx(1.0));
    REQUIRE(eval(pow(sin(Expr(2) * th), 2), std::vector<double>{kPi / 4}) == Catch::Approx(1.0));
}

TEST_CASE("eval domain errors") {
    REQUIRE_THROWS_AS(eval(log(th), std::vector<double>{-1.0}), DomainError);
    REQUIRE_THROWS_AS(eval(Expr(1) / th, std::vector<double>{0.0}), DomainError);
    REQUIRE_THROWS_AS(eval(Expr::raw(NodeKind::Div, {Expr(1), th}), std::vector<double>{0.0}),
                      DomainError);
}

TEST_CASE("probabilistic zero test") {
    const Chart chart = Chart::circle();
    REQUIRE(is_zero(pow(sin(th), 2) + pow(cos(th), 2) - Expr(1), chart));
    REQUIRE_FALSE(is_zero(cos(th), chart));
    REQUIRE(is_zero(Expr(0), chart));
}

TEST_CASE("derivative linearity and product rule (random)") {
    const Chart chart = Chart::torus2();
    RandomStream rng(7);
    for (int k = 0; k < 30; ++k) {
        const Expr e1 = oracles::random_trig_expr(rng, chart, 2);
        const Expr e2 = oracles::random_trig_expr(rng, chart, 2);
        const Expr a(int(rng.next_u64() % 5) - 2), b(int(rng.next_u64() % 5) - 2);
        const int i = int(rng.next_u64() % 2);
        REQUIRE(is_zero(diff(a * e1 + b * e2, i) - (a * diff(e1, i) + b * diff(e2, i)), chart));
        REQUIRE(is_zero(diff(e1 * e2, i) - (diff(e1, i) * e2 + e1 * diff(e2, i)), chart));
    }
}

TEST_CASE("simplify idempotence and eval commutation (random)") {
    const Chart chart = Chart::torus2();
    RandomStream rng(11);
    for (int k = 0; k < 100; ++k) {
        const Expr e = oracles::random_trig_expr(rng, chart, 3);
        const Expr s = simplify(e);
        REQUIRE(structurally_equal(simplify(s), s));
        const Point p = chart.sample_interior(rng);
        REQUIRE(std::abs(eval(e, p) - eval(s, p)) < 1e-12 * std::max(1.0, std::abs(eval(e, p))));
    }
}

TEST_CASE("sqrt of positive expressions") {
    REQUIRE(structurally_equal(sqrt_positive(pow(sin(th), 2)), sin(th)));
    REQUIRE(structurally_equal(sqrt_positive(Expr(4)), Expr(2)));
    REQUIRE(structurally_equal(sqrt_positive(Expr::rational(9, 4)), Expr::rational(3, 2)));
    // general fallback evaluates to the square root
    const Expr g = Expr(2) + sin(th);
    const Expr r = sqrt_positive(g);
    const std::vector<double> p{0.7};
    REQUIRE(eval(r, p) == Catch::Approx(std::sqrt(eval(g, p))).epsilon(1e-14));
}

TEST_CASE("infix parser") {
    const Chart chart = Chart::circle();
    REQUIRE(structurally_equal(parse_expr("sin(theta)^2", chart), pow(sin(th), 2)));
    REQUIRE(structurally_equal(parse_expr("2*theta + 3*theta", chart), Expr(5) * th));
    REQUIRE(structurally_equal(parse_expr("-theta", chart), -th));
    REQUIRE(structurally_equal(parse_expr("0.25", chart), Expr::rational(1, 4)));
    REQUIRE(structurally_equal(parse_expr("1/sin(theta)", chart), pow(sin(th), -1)));
    REQUIRE(eval(parse_expr("cos(pi)", chart), std::vector<double>{0.0}) == Catch::Approx(-1.0));

    const Chart line = Chart::euclidean(1);
    const Expr t = parse_expr("tanh(x)", line);
    REQUIRE(eval(t, std::vector<double>{0.8}) == Catch::Approx(std::tanh(0.8)).epsilon(1e-14));

    REQUIRE_THROWS_AS(parse_expr("sin(q)", chart), ConfigError);
    REQUIRE_THROWS_AS(parse_expr("theta +", chart), ConfigError);
    REQUIRE_THROWS_AS(parse_expr("theta^theta", chart), ConfigError);
}

TEST_CASE("printer round-trips through the parser") {
    const Chart chart = Chart::torus2();
    RandomStream rng(13);
    const std::vector<std::string> names = chart.coord_names;
    for (int k = 0; k < 40; ++k) {
        const Expr e = oracles::random_trig_expr(rng, chart, 3);
        const Expr back = parse_expr(to_string(e, names), chart);
        REQUIRE(is_zero(e - back, chart));
    }
}
