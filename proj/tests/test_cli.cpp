#include <catch2/catch_amalgamated.hpp>

#include <cctype>
#include <string>

#include "estalg/config.hpp"
#include "estalg/diffop.hpp"
#include "estalg/report.hpp"

using namespace estalg;

namespace {

std::string violations_of(const std::string& text) {
    try {
        parse_config(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

int count_lines(const std::string& msg) {
    int n = 0;
    for (std::size_t p = msg.find("\n  - "); p != std::string::npos; p = msg.find("\n  - ", p + 1))
        ++n;
    return n;
}

const char* kMinimalCircle = R"json({
    "manifold": "circle",
    "metric": [["1"]],
    "observations": ["cos(theta)"]
})json";

}  // namespace

TEST_CASE("config parsing applies defaults") {
    const RunConfig cfg = parse_config(kMinimalCircle);

    CHECK(cfg.chart->name == "circle");
    CHECK(cfg.chart->dim == 1);
    REQUIRE(cfg.metric.has_value());
    CHECK_FALSE(cfg.diffusion.has_value());
    CHECK(cfg.drift.empty());
    REQUIRE(cfg.observations.size() == 1);

    CHECK(cfg.seeds.state == 1);
    CHECK(cfg.seeds.observation == 2);
    CHECK(cfg.seeds.filter == 3);
    CHECK(cfg.probe.max_dim == 16);
    CHECK(cfg.probe.max_rounds == 6);
    CHECK(cfg.certificate.n == 3);
    CHECK(cfg.flow.n_fields == 5);
    CHECK(cfg.flow.n_times == 16);

    // unset points fall back to the chart center, unset grids to 64 nodes per axis
    REQUIRE(cfg.simulate.x0.size() == 1);
    CHECK(cfg.simulate.x0[0] == Catch::Approx(M_PI));
    REQUIRE(cfg.filter.x0.size() == 1);
    CHECK(cfg.filter.x0[0] == Catch::Approx(M_PI));
    REQUIRE(cfg.filter.grid.size() == 1);
    CHECK(cfg.filter.grid[0] == 64);
    CHECK(cfg.filter.method == "robust");
    CHECK(eval(cfg.filter.sigma0, {1.7}) == 1.0);
}

TEST_CASE("config parsing honors explicit blocks") {
    const RunConfig cfg = parse_config(R"json({
        "manifold": "euclidean:1",
        "metric": [["1"]],
        "drift": ["tanh(x)"],
        "observations": ["x", "x^2"],
        "seeds": {"state": 17, "filter": 19},
        "tolerances": {"tau_zero": 1e-6, "n_zero": 32},
        "probe": {"max_dim": 8, "max_rounds": 3},
        "certificate": {"channel": 1, "n": 4},
        "flow": {"channel": 1, "n_fields": 3, "n_times": 8},
        "simulate": {"x0": [0.25], "t": 2.0, "dt": 0.01},
        "filter": {"method": "particle", "particles": 5000, "x0": [-1.0],
                   "sigma0": "exp(-x^2)", "grid": [128], "dt_pde": 0.001}
    })json");

    CHECK(cfg.seeds.state == 17);
    CHECK(cfg.seeds.observation == 2);  // untouched default
    CHECK(cfg.seeds.filter == 19);
    CHECK(cfg.tol.as_map().at("tau_zero") == 1e-6);
    CHECK(cfg.tol.as_map().at("n_zero") == 32);
    CHECK(cfg.probe.max_dim == 8);
    CHECK(cfg.probe.max_rounds == 3);
    CHECK(cfg.certificate.channel == 1);
    CHECK(cfg.certificate.n == 4);
    CHECK(cfg.flow.channel == 1);
    CHECK(cfg.flow.n_fields == 3);
    CHECK(cfg.simulate.t == 2.0);
    CHECK(cfg.simulate.x0[0] == 0.25);
    CHECK(cfg.filter.method == "particle");
    CHECK(cfg.filter.particles == 5000);
    CHECK(cfg.filter.x0[0] == -1.0);
    CHECK(cfg.filter.grid[0] == 128);
    CHECK(eval(cfg.filter.sigma0, {0.0}) == 1.0);
    CHECK(eval(cfg.filter.sigma0, {1.0}) == Catch::Approx(std::exp(-1.0)));
    CHECK(cfg.drift.size() == 1);
    CHECK(cfg.observations.size() == 2);
}

TEST_CASE("custom chart block") {
    const RunConfig cfg = parse_config(R"json({
        "chart": {"name": "segment", "coords": ["u"], "lo": [0.0], "hi": [1.0],
                  "periodic": [false], "margin": 0.05},
        "metric": [["1"]],
        "observations": ["u"]
    })json");
    CHECK(cfg.chart->name == "segment");
    CHECK(cfg.chart->dim == 1);
    CHECK(cfg.chart->margin == 0.05);
    CHECK_FALSE(cfg.chart->compact);
    CHECK_FALSE(cfg.chart->periodic[0]);

    SECTION("chart and manifold are mutually exclusive") {
        const auto msg = violations_of(R"json({
            "manifold": "circle",
            "chart": {"coords": ["u"], "lo": [0], "hi": [1], "periodic": [false]},
            "metric": [["1"]],
            "observations": ["u"]
        })json");
        CHECK(msg.find("exactly one of 'manifold' or 'chart'") != std::string::npos);
    }

    SECTION("unknown manifold name") {
        const auto msg = violations_of(R"json({
            "manifold": "mystery",
            "metric": [["1"]],
            "observations": ["1"]
        })json");
        CHECK(msg.find("unknown manifold") != std::string::npos);
    }
}

TEST_CASE("config violations are reported together") {
    // four independent problems: unknown key, missing observations, bad metric
    // shape, negative time step
    const auto msg = violations_of(R"json({
        "manifold": "circle",
        "metric": [["1"], ["1"]],
        "typo_block": {},
        "simulate": {"dt": -0.5}
    })json");
    CHECK(count_lines(msg) >= 4);
    CHECK(msg.find("unknown field 'typo_block'") != std::string::npos);
    CHECK(msg.find("missing required field 'observations'") != std::string::npos);
    CHECK(msg.find("'metric'") != std::string::npos);
    CHECK(msg.find("'simulate.dt'") != std::string::npos);

    SECTION("expression errors cite the field") {
        const auto bad = violations_of(R"json({
            "manifold": "circle",
            "metric": [["1"]],
            "observations": ["cos(phi)"]
        })json");
        CHECK(bad.find("'observations'[0]") != std::string::npos);
    }

    SECTION("channel bounds are checked against the observation list") {
        const auto bad = violations_of(R"json({
            "manifold": "circle",
            "metric": [["1"]],
            "observations": ["cos(theta)"],
            "certificate": {"channel": 2}
        })json");
        CHECK(bad.find("'certificate.channel'") != std::string::npos);
    }

    SECTION("filter method names are closed") {
        const auto bad = violations_of(R"json({
            "manifold": "circle",
            "metric": [["1"]],
            "observations": ["cos(theta)"],
            "filter": {"method": "magic"}
        })json");
        CHECK(bad.find("'filter.method'") != std::string::npos);
    }

    SECTION("not JSON at all") {
        CHECK(violations_of("not json").find("not valid JSON") != std::string::npos);
    }
}

TEST_CASE("degenerate inputs fail the mathematical checks") {
    SECTION("indefinite metric") {
        const auto msg = violations_of(R"json({
            "manifold": "circle",
            "metric": [["-1"]],
            "observations": ["cos(theta)"]
        })json");
        CHECK(msg.find("positive definite") != std::string::npos);
    }

    SECTION("degenerate diffusion matrix") {
        const auto msg = violations_of(R"json({
            "manifold": "torus2",
            "diffusion": [["1", "0"], ["0", "0"]],
            "observations": ["cos(x)"]
        })json");
        CHECK(msg.find("non-degeneracy requirement") != std::string::npos);
    }

    SECTION("metric and diffusion are mutually exclusive") {
        const auto msg = violations_of(R"json({
            "manifold": "circle",
            "metric": [["1"]],
            "diffusion": [["1"]],
            "observations": ["cos(theta)"]
        })json");
        CHECK(msg.find("exactly one of 'metric' or 'diffusion'") != std::string::npos);
    }
}

TEST_CASE("build_system covers both generator routes") {
    // unit diffusion with no drift and the flat unit metric describe the same
    // process, so the assembled operators must agree
    const RunConfig via_metric = parse_config(R"json({
        "manifold": "euclidean:1",
        "metric": [["1"]],
        "observations": ["x"]
    })json");
    const RunConfig via_diffusion = parse_config(R"json({
        "manifold": "euclidean:1",
        "diffusion": [["1"]],
        "observations": ["x"]
    })json");

    const FilteringSystem a = build_system(via_metric);
    const FilteringSystem b = build_system(via_diffusion);
    CHECK(a.obs_count() == 1);
    CHECK(b.obs_count() == 1);
    CHECK(op_equal(a.l0(), b.l0(), Tolerances{}));
    CHECK(op_equal(a.generator(), b.generator(), Tolerances{}));
}

TEST_CASE("manifest round-trips through validation") {
    const std::string text = kMinimalCircle;
    const RunConfig cfg = parse_config(text);
    const nlohmann::json m = make_manifest("probe", config_hash(text), cfg);

    CHECK(m["schema"] == kReportSchema);
    CHECK(m["manifold"] == "circle");
    CHECK(m["seeds"]["state"] == 1);
    CHECK(m["tolerances"].contains("tau_zero"));

    const nlohmann::json back = nlohmann::json::parse(m.dump(2));
    CHECK_NOTHROW(validate_report(back));

    SECTION("each required key is enforced") {
        for (const char* key :
             {"schema", "command", "config_hash", "outputs", "results", "seeds", "tolerances"}) {
            nlohmann::json broken = back;
            broken.erase(key);
            CHECK_THROWS_AS(validate_report(broken), ConfigError);
        }
    }

    SECTION("schema version mismatch is rejected") {
        nlohmann::json broken = back;
        broken["schema"] = "estalg-report/999";
        CHECK_THROWS_AS(validate_report(broken), ConfigError);
    }

    SECTION("config_hash length is enforced") {
        nlohmann::json broken = back;
        broken["config_hash"] = "abc";
        CHECK_THROWS_AS(validate_report(broken), ConfigError);
    }
}

TEST_CASE("csv output is byte-deterministic") {
    FilterReport rep;
    rep.times = {0.0, 0.5};
    rep.means = {{1.0}, {2.0}};
    rep.variances = {0.25, 0.5};
    rep.mass = {1.0, 1.0};

    const std::string csv = csv_from_report(rep);
    CHECK(csv == "t,mean0,variance,mass\n0,1,0.25,1\n0.5,2,0.5,1\n");
    CHECK(csv == csv_from_report(rep));

    SECTION("variance column appears only when present") {
        rep.variances.clear();
        CHECK(csv_from_report(rep) == "t,mean0,mass\n0,1,1\n0.5,2,1\n");
    }

    SECTION("doubles survive a parse round trip") {
        const double v = 0.1 + 0.2;  // not exactly 0.3
        CHECK(std::stod(format_double(v)) == v);
        CHECK(std::stod(format_double(M_PI)) == M_PI);
    }
}

TEST_CASE("config hashes are stable and collision-averse") {
    const std::string a = config_hash(kMinimalCircle);
    CHECK(a.size() == 16);
    for (char c : a) CHECK(std::isxdigit(static_cast<unsigned char>(c)));
    CHECK(a == config_hash(kMinimalCircle));
    CHECK(a != config_hash(std::string(kMinimalCircle) + " "));

    // FNV-1a offset basis: the hash of the empty string by construction
    CHECK(config_hash("") == "cbf29ce484222325");
}
