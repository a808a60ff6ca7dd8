#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "estalg/diffusion.hpp"
#include "estalg/metric.hpp"
#include "estalg/parse.hpp"
#include "estalg/system.hpp"

namespace estalg {

struct RunSeeds {
    std::uint64_t state = 1;
    std::uint64_t observation = 2;
    std::uint64_t filter = 3;
};

struct ProbeBlock {
    int max_dim = 16;
    int max_rounds = 6;
};

struct CertificateBlock {
    int channel = 0;
    int n = 3;
};

struct FlowBlock {
    int channel = 0;
    int n_fields = 5;
    int n_times = 16;
};

struct SimulateBlock {
    Point x0;  ///< empty = chart center
    double t = 1.0;
    double dt = 1e-3;
};

struct FilterBlock {
    std::string method = "robust";
    std::vector<int> grid;  ///< empty = 64 per axis
    double dt_pde = 1e-4;
    double t = 1.0;
    double dt_obs = 1e-2;
    int particles = 10000;
    Point x0;               ///< empty = chart center
    Expr sigma0 = Expr(1);  ///< unnormalized initial density
};

/// Declarative run description: one chart, one generator (via metric+drift or
/// a diffusion matrix), observations, and per-subcommand settings.
struct RunConfig {
    ChartPtr chart;
    std::optional<Metric> metric;
    std::optional<ExprMatrix> diffusion;
    VectorField drift;
    std::vector<Expr> observations;
    Tolerances tol;
    RunSeeds seeds;
    ProbeBlock probe;
    CertificateBlock certificate;
    FlowBlock flow;
    SimulateBlock simulate;
    FilterBlock filter;

    Point center() const {
        Point p(std::size_t(chart->dim), 0.0);
        for (int i = 0; i < chart->dim; ++i)
            p[std::size_t(i)] = 0.5 * (chart->inner_lo(i) + chart->inner_hi(i));
        return p;
    }
};

namespace detail {

/// Accumulates human-readable violations so a bad config reports every
/// problem at once instead of the first.
class ConfigChecker {
  public:
    void fail(std::string msg) { problems_.push_back(std::move(msg)); }

    bool ok() const { return problems_.empty(); }

    [[noreturn]] void raise() const {
        std::string msg = "invalid config:";
        for (const auto& p : problems_) msg += "\n  - " + p;
        throw ConfigError(msg);
    }

    void finish() const {
        if (!problems_.empty()) raise();
    }

  private:
    std::vector<std::string> problems_;
};

inline bool expect_keys(const nlohmann::json& obj, const std::vector<std::string>& known,
                        const std::string& where, ConfigChecker& check) {
    bool clean = true;
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            check.fail(where + ": unknown field '" + key + "'");
            clean = false;
        }
    }
    return clean;
}

inline std::optional<Expr> parse_field(const nlohmann::json& node, const Chart& chart,
                                       const std::string& where, ConfigChecker& check) {
    if (!node.is_string()) {
        check.fail(where + ": expected an expression string");
        return std::nullopt;
    }
    try {
        return parse_expr(node.get<std::string>(), chart);
    } catch (const Error& e) {
        check.fail(where + ": " + e.what());
        return std::nullopt;
    }
}

inline ChartPtr parse_chart(const nlohmann::json& root, ConfigChecker& check) {
    const bool has_name = root.contains("manifold");
    const bool has_block = root.contains("chart");
    if (has_name == has_block) {
        check.fail("exactly one of 'manifold' or 'chart' must be given");
        return nullptr;
    }
    if (has_name) {
        if (!root["manifold"].is_string()) {
            check.fail("'manifold' must be a string");
            return nullptr;
        }
        try {
            return make_chart(Chart::builtin(root["manifold"].get<std::string>()));
        } catch (const std::exception& e) {  // Error, or std::stoi on a bad euclidean:N
            check.fail(std::string("'manifold': ") + e.what());
            return nullptr;
        }
    }
    const auto& blk = root["chart"];
    if (!blk.is_object() ||
        !expect_keys(blk, {"name", "coords", "lo", "hi", "periodic", "margin"}, "'chart'", check)) {
        if (!blk.is_object()) check.fail("'chart' must be an object");
        return nullptr;
    }
    for (const char* key : {"coords", "lo", "hi", "periodic"})
        if (!blk.contains(key) || !blk[key].is_array()) {
            check.fail(std::string("'chart' needs the array field '") + key + "'");
            return nullptr;
        }
    Chart c;
    c.name = blk.value("name", std::string("custom"));
    c.dim = int(blk["coords"].size());
    if (c.dim < 1 || int(blk["lo"].size()) != c.dim || int(blk["hi"].size()) != c.dim ||
        int(blk["periodic"].size()) != c.dim) {
        check.fail("'chart': coords, lo, hi and periodic must have equal nonzero length");
        return nullptr;
    }
    for (int i = 0; i < c.dim; ++i) {
        c.coord_names.push_back(blk["coords"][std::size_t(i)].get<std::string>());
        c.lo.push_back(blk["lo"][std::size_t(i)].get<double>());
        c.hi.push_back(blk["hi"][std::size_t(i)].get<double>());
        c.periodic.push_back(blk["periodic"][std::size_t(i)].get<bool>());
        if (!(c.lo.back() < c.hi.back()))
            check.fail("'chart': lo must be strictly below hi on axis " + std::to_string(i));
    }
    c.margin = blk.value("margin", 0.0);
    c.compact = true;
    for (bool p : c.periodic) c.compact = c.compact && p;
    return make_chart(std::move(c));
}

}  // namespace detail

/// Parses and fully validates a JSON run description.  On any violation the
/// thrown ConfigError lists every problem found.
inline RunConfig parse_config(const std::string& text) {
    detail::ConfigChecker check;
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        check.fail(std::string("not valid JSON: ") + e.what());
        check.raise();
    }
    if (!root.is_object()) {
        check.fail("top level must be an object");
        check.raise();
    }
    detail::expect_keys(root,
                        {"manifold", "chart", "metric", "diffusion", "drift", "observations",
                         "tolerances", "seeds", "probe", "certificate", "flow", "simulate",
                         "filter"},
                        "config", check);

    RunConfig cfg;
    cfg.chart = detail::parse_chart(root, check);
    if (!cfg.chart) check.raise();  // nothing else can be validated without a chart
    const Chart& chart = *cfg.chart;
    const std::size_t dim = std::size_t(chart.dim);

    // tolerances first so the mathematical checks below honor overrides
    if (root.contains("tolerances")) {
        if (!root["tolerances"].is_object()) {
            check.fail("'tolerances' must be an object of name: value pairs");
        } else {
            for (const auto& [name, value] : root["tolerances"].items()) {
                if (!value.is_number()) {
                    check.fail("'tolerances." + name + "' must be a number");
                    continue;
                }
                try {
                    cfg.tol.set(name, value.get<double>());
                } catch (const std::invalid_argument& e) {
                    check.fail(std::string("'tolerances': ") + e.what());
                }
            }
        }
    }

    const bool has_metric = root.contains("metric");
    const bool has_diffusion = root.contains("diffusion");
    if (has_metric == has_diffusion)
        check.fail("exactly one of 'metric' or 'diffusion' must be given");

    const auto parse_matrix = [&](const nlohmann::json& node,
                                  const std::string& where) -> std::optional<ExprMatrix> {
        if (!node.is_array() || node.size() != dim) {
            check.fail(where + " must be a " + std::to_string(dim) + "x" + std::to_string(dim) +
                       " matrix of expression strings");
            return std::nullopt;
        }
        ExprMatrix m;
        bool good = true;
        for (std::size_t i = 0; i < dim; ++i) {
            const auto& row = node[i];
            if (!row.is_array() || row.size() != dim) {
                check.fail(where + " row " + std::to_string(i) + " must have " +
                           std::to_string(dim) + " entries");
                good = false;
                continue;
            }
            std::vector<Expr> out_row;
            for (std::size_t j = 0; j < dim; ++j) {
                auto e = detail::parse_field(
                    row[j], chart, where + "[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                    check);
                if (!e) good = false;
                out_row.push_back(e.value_or(Expr(0)));
            }
            m.push_back(std::move(out_row));
        }
        if (!good) return std::nullopt;
        return m;
    };

    if (has_metric) {
        if (auto m = parse_matrix(root["metric"], "'metric'")) {
            Metric g;
            g.chart = cfg.chart;
            g.g = std::move(*m);
            if (!positive_definite_at_samples(g.g, chart, cfg.tol))
                check.fail("'metric' is not positive definite at sample points");
            else
                cfg.metric = std::move(g);
        }
    }

    if (root.contains("drift")) {
        const auto& node = root["drift"];
        if (!node.is_array() || node.size() != dim) {
            check.fail("'drift' must list one expression per coordinate");
        } else {
            for (std::size_t i = 0; i < dim; ++i) {
                auto e = detail::parse_field(node[i], chart,
                                             "'drift'[" + std::to_string(i) + "]", check);
                cfg.drift.push_back(e.value_or(Expr(0)));
            }
        }
    }

    if (has_diffusion) {
        if (auto a = parse_matrix(root["diffusion"], "'diffusion'")) {
            DiffusionSpec spec;
            spec.chart = cfg.chart;
            spec.a = std::move(*a);
            spec.b = cfg.drift.empty() ? VectorField(dim, Expr(0)) : cfg.drift;
            try {
                spec.validate(cfg.tol);
                cfg.diffusion = std::move(spec.a);
            } catch (const Error& e) {
                check.fail(std::string("'diffusion': ") + e.what() +
                           " (non-degeneracy requirement)");
            }
        }
    }

    if (!root.contains("observations")) {
        check.fail("missing required field 'observations'");
    } else if (!root["observations"].is_array()) {
        check.fail("'observations' must be an array of expression strings");
    } else {
        std::size_t i = 0;
        for (const auto& node : root["observations"]) {
            auto e = detail::parse_field(node, chart,
                                         "'observations'[" + std::to_string(i) + "]", check);
            cfg.observations.push_back(e.value_or(Expr(0)));
            ++i;
        }
    }

    if (root.contains("seeds")) {
        const auto& node = root["seeds"];
        if (!node.is_object() ||
            !detail::expect_keys(node, {"state", "observation", "filter"}, "'seeds'", check)) {
            if (!node.is_object()) check.fail("'seeds' must be an object");
        } else {
            for (const auto& [name, value] : node.items()) {
                if (!value.is_number_unsigned()) {
                    check.fail("'seeds." + name + "' must be a nonnegative integer");
                    continue;
                }
                const auto v = value.get<std::uint64_t>();
                if (name == "state") cfg.seeds.state = v;
                else if (name == "observation") cfg.seeds.observation = v;
                else cfg.seeds.filter = v;
            }
        }
    }

    const auto get_int = [&](const nlohmann::json& node, const std::string& where, int lo_bound,
                             int fallback) {
        if (!node.is_number_integer() || node.get<int>() < lo_bound) {
            check.fail(where + " must be an integer >= " + std::to_string(lo_bound));
            return fallback;
        }
        return node.get<int>();
    };
    const auto get_pos = [&](const nlohmann::json& node, const std::string& where,
                             double fallback) {
        if (!node.is_number() || !(node.get<double>() > 0.0)) {
            check.fail(where + " must be a positive number");
            return fallback;
        }
        return node.get<double>();
    };
    const auto get_point = [&](const nlohmann::json& node, const std::string& where) -> Point {
        if (!node.is_array() || node.size() != dim) {
            check.fail(where + " must list one coordinate per axis");
            return {};
        }
        Point p;
        for (const auto& v : node) {
            if (!v.is_number()) {
                check.fail(where + " entries must be numbers");
                return {};
            }
            p.push_back(v.get<double>());
        }
        return p;
    };

    if (root.contains("probe")) {
        const auto& node = root["probe"];
        if (node.is_object() &&
            detail::expect_keys(node, {"max_dim", "max_rounds"}, "'probe'", check)) {
            if (node.contains("max_dim"))
                cfg.probe.max_dim = get_int(node["max_dim"], "'probe.max_dim'", 1, 16);
            if (node.contains("max_rounds"))
                cfg.probe.max_rounds = get_int(node["max_rounds"], "'probe.max_rounds'", 1, 32);
        } else if (!node.is_object()) {
            check.fail("'probe' must be an object");
        }
    }
    if (root.contains("certificate")) {
        const auto& node = root["certificate"];
        if (node.is_object() && detail::expect_keys(node, {"channel", "n"}, "'certificate'", check)) {
            if (node.contains("channel"))
                cfg.certificate.channel = get_int(node["channel"], "'certificate.channel'", 0, 0);
            if (node.contains("n")) cfg.certificate.n = get_int(node["n"], "'certificate.n'", 1, 3);
        } else if (!node.is_object()) {
            check.fail("'certificate' must be an object");
        }
    }
    if (root.contains("flow")) {
        const auto& node = root["flow"];
        if (node.is_object() &&
            detail::expect_keys(node, {"channel", "n_fields", "n_times"}, "'flow'", check)) {
            if (node.contains("channel"))
                cfg.flow.channel = get_int(node["channel"], "'flow.channel'", 0, 0);
            if (node.contains("n_fields"))
                cfg.flow.n_fields = get_int(node["n_fields"], "'flow.n_fields'", 1, 5);
            if (node.contains("n_times"))
                cfg.flow.n_times = get_int(node["n_times"], "'flow.n_times'", 2, 16);
        } else if (!node.is_object()) {
            check.fail("'flow' must be an object");
        }
    }
    if (root.contains("simulate")) {
        const auto& node = root["simulate"];
        if (node.is_object() && detail::expect_keys(node, {"x0", "t", "dt"}, "'simulate'", check)) {
            if (node.contains("x0")) cfg.simulate.x0 = get_point(node["x0"], "'simulate.x0'");
            if (node.contains("t")) cfg.simulate.t = get_pos(node["t"], "'simulate.t'", 1.0);
            if (node.contains("dt")) cfg.simulate.dt = get_pos(node["dt"], "'simulate.dt'", 1e-3);
        } else if (!node.is_object()) {
            check.fail("'simulate' must be an object");
        }
    }
    if (root.contains("filter")) {
        const auto& node = root["filter"];
        if (node.is_object() &&
            detail::expect_keys(
                node, {"method", "grid", "dt_pde", "t", "dt_obs", "particles", "x0", "sigma0"},
                "'filter'", check)) {
            if (node.contains("method")) {
                const std::string m = node["method"].is_string() ? node["method"].get<std::string>()
                                                                 : std::string();
                if (m != "robust" && m != "direct" && m != "particle")
                    check.fail("'filter.method' must be robust, direct or particle");
                else
                    cfg.filter.method = m;
            }
            if (node.contains("grid")) {
                const auto& gnode = node["grid"];
                if (!gnode.is_array() || gnode.size() != dim) {
                    check.fail("'filter.grid' must list one node count per axis");
                } else {
                    for (std::size_t i = 0; i < dim; ++i)
                        cfg.filter.grid.push_back(
                            get_int(gnode[i], "'filter.grid'[" + std::to_string(i) + "]", 4, 64));
                }
            }
            if (node.contains("dt_pde"))
                cfg.filter.dt_pde = get_pos(node["dt_pde"], "'filter.dt_pde'", 1e-4);
            if (node.contains("t")) cfg.filter.t = get_pos(node["t"], "'filter.t'", 1.0);
            if (node.contains("dt_obs"))
                cfg.filter.dt_obs = get_pos(node["dt_obs"], "'filter.dt_obs'", 1e-2);
            if (node.contains("particles"))
                cfg.filter.particles = get_int(node["particles"], "'filter.particles'", 1, 10000);
            if (node.contains("x0")) cfg.filter.x0 = get_point(node["x0"], "'filter.x0'");
            if (node.contains("sigma0")) {
                auto e = detail::parse_field(node["sigma0"], chart, "'filter.sigma0'", check);
                if (e) cfg.filter.sigma0 = *e;
            }
        } else if (!node.is_object()) {
            check.fail("'filter' must be an object");
        }
    }

    if (check.ok()) {
        const int m = int(cfg.observations.size());
        if (m > 0 && cfg.certificate.channel >= m)
            check.fail("'certificate.channel' is out of range for the observation list");
        if (m > 0 && cfg.flow.channel >= m)
            check.fail("'flow.channel' is out of range for the observation list");
    }

    check.finish();
    if (cfg.simulate.x0.empty()) cfg.simulate.x0 = cfg.center();
    if (cfg.filter.x0.empty()) cfg.filter.x0 = cfg.center();
    if (cfg.filter.grid.empty()) cfg.filter.grid.assign(dim, 64);
    return cfg;
}

/// Assembles the filtering system a validated config describes.
inline FilteringSystem build_system(const RunConfig& cfg) {
    if (cfg.metric)
        return FilteringSystem::make(*cfg.metric, cfg.drift, cfg.observations, cfg.tol);
    DiffusionSpec spec;
    spec.chart = cfg.chart;
    spec.a = *cfg.diffusion;
    spec.b = cfg.drift.empty() ? VectorField(std::size_t(cfg.chart->dim), Expr(0)) : cfg.drift;
    return FilteringSystem::from_diffusion(spec, cfg.observations, cfg.tol);
}

}  // namespace estalg
