#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "estalg/certificate.hpp"
#include "estalg/config.hpp"
#include "estalg/estimation.hpp"
#include "estalg/kalman.hpp"
#include "estalg/particle.hpp"
#include "estalg/probe.hpp"
#include "estalg/report.hpp"
#include "estalg/zakai.hpp"

namespace {

using namespace estalg;
namespace fs = std::filesystem;

struct Invocation {
    std::string config_path;
    std::string out_root = "runs";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> tol_overrides;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Loads and validates the config, then applies command-line overrides.  The
/// run hash covers both the file text and the overrides, so runs that differ
/// in any input land in distinct directories.
struct LoadedRun {
    RunConfig cfg;
    std::string hash;
};

LoadedRun load_run(const Invocation& inv) {
    const std::string text = read_file(inv.config_path);
    std::string salted = text;
    RunConfig cfg = parse_config(text);
    if (inv.seed) {
        cfg.seeds.state = *inv.seed;
        cfg.seeds.observation = *inv.seed + 1;
        cfg.seeds.filter = *inv.seed + 2;
        salted += "\n#seed=" + std::to_string(*inv.seed);
    }
    for (const auto& ov : inv.tol_overrides) {
        const auto eq = ov.find('=');
        if (eq == std::string::npos || eq == 0)
            throw ConfigError("--tol expects NAME=VALUE, got '" + ov + "'");
        double value = 0.0;
        try {
            value = std::stod(ov.substr(eq + 1));
        } catch (const std::exception&) {
            throw ConfigError("--tol value is not a number in '" + ov + "'");
        }
        try {
            cfg.tol.set(ov.substr(0, eq), value);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("--tol: ") + e.what());
        }
        salted += "\n#tol=" + ov;
    }
    return {std::move(cfg), config_hash(salted)};
}

fs::path make_run_dir(const Invocation& inv, const std::string& command,
                      const std::string& hash) {
    fs::path dir = fs::path(inv.out_root) / (command + "-" + hash);
    fs::create_directories(dir);
    return dir;
}

void finish_run(const fs::path& dir, nlohmann::json manifest) {
    validate_report(manifest);  // never emit a manifest the report command would reject
    write_file((dir / "manifest.json").string(), manifest.dump(2) + "\n");
    std::cout << "run directory: " << dir.string() << "\n";
}

int run_probe(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const ProbeResult res = dimension_probe(sys, cfg.probe.max_dim, cfg.probe.max_rounds, cfg.tol);
    const fs::path dir = make_run_dir(inv, "probe", hash);

    std::vector<std::vector<double>> rows;
    for (const auto& e : res.log)
        rows.push_back({double(e.left), double(e.right), e.residual, e.added ? 1.0 : 0.0});
    write_file((dir / "probe.csv").string(),
               csv_table({"left", "right", "residual", "added"}, rows));

    const std::string status = res.status == ProbeStatus::Closed ? "Closed" : "ExceededBound";
    nlohmann::json m = make_manifest("probe", hash, cfg);
    m["outputs"].push_back("probe.csv");
    auto& r = m["results"];
    r["status"] = status;
    r["dimension"] = res.dimension;
    r["bound"] = res.bound;
    r["rounds"] = res.rounds;
    r["basis"] = nlohmann::json::array();
    for (const auto& op : res.basis) r["basis"].push_back(op.str());
    finish_run(dir, std::move(m));

    std::cout << "probe: " << status << " dimension " << res.dimension << " after " << res.rounds
              << " rounds\n";
    return 0;
}

int run_certificate(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const Certificate cert =
        certificate_compact(sys, cfg.certificate.channel, cfg.certificate.n, cfg.tol);
    const fs::path dir = make_run_dir(inv, "certificate", hash);

    write_file((dir / "matrix.csv").string(), [&] {
        std::vector<std::string> header;
        for (int k = 0; k < cert.n; ++k) header.push_back("h" + std::to_string(2 * k));
        return csv_table(header, cert.a);
    }());
    write_file((dir / "points.csv").string(), [&] {
        std::vector<std::string> header;
        for (const auto& name : sys.chart()->coord_names) header.push_back(name);
        std::vector<std::vector<double>> rows;
        for (const auto& p : cert.points) rows.push_back(p);
        return csv_table(header, rows);
    }());

    nlohmann::json m = make_manifest("certificate", hash, cfg);
    m["outputs"].push_back("matrix.csv");
    m["outputs"].push_back("points.csv");
    auto& r = m["results"];
    r["verdict"] = to_cstring(cert.verdict);
    r["n"] = cert.n;
    r["channel"] = cert.j;
    r["min_diag"] = cert.min_diag;
    r["max_below"] = cert.max_below;
    r["det_estimate"] = cert.det_estimate;
    finish_run(dir, std::move(m));

    std::cout << "certificate: " << to_cstring(cert.verdict) << " (min diag " << cert.min_diag
              << ", max below " << cert.max_below << ")\n";
    return cert.verdict == Verdict::InfiniteDimensional ? 0 : 3;
}

int run_flow_cert(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const FlowCertificate cert =
        certificate_flow(sys, cfg.flow.channel, cfg.flow.n_fields, cfg.flow.n_times, cfg.tol);
    const fs::path dir = make_run_dir(inv, "flow-cert", hash);

    std::vector<std::string> header = {"t"};
    for (int n = 0; n < cert.n_fields; ++n) header.push_back("a" + std::to_string(n + 1));
    std::vector<std::vector<double>> rows;
    for (int k = 0; k < cert.n_times; ++k) {
        std::vector<double> row = {cert.sample_times[std::size_t(k)]};
        for (int n = 0; n < cert.n_fields; ++n) row.push_back(cert.m[std::size_t(n)][std::size_t(k)]);
        rows.push_back(std::move(row));
    }
    write_file((dir / "flow.csv").string(), csv_table(header, rows));

    nlohmann::json m = make_manifest("flow-cert", hash, cfg);
    m["outputs"].push_back("flow.csv");
    auto& r = m["results"];
    r["verdict"] = to_cstring(cert.verdict);
    r["n_fields"] = cert.n_fields;
    r["n_times"] = cert.n_times;
    r["sigma_min"] = cert.sigma_min;
    r["sigma_max"] = cert.sigma_max;
    r["derivative_residual"] = cert.derivative_residual;
    r["from"] = cert.from;
    r["to"] = cert.to;
    finish_run(dir, std::move(m));

    std::cout << "flow-cert: " << to_cstring(cert.verdict) << " (sigma ratio "
              << (cert.sigma_max > 0 ? cert.sigma_min / cert.sigma_max : 0.0) << ")\n";
    return cert.verdict == Verdict::InfiniteDimensional ? 0 : 3;
}

int run_brackets(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const DavisCoefficients ops = davis_coefficients(sys, cfg.tol);
    const fs::path dir = make_run_dir(inv, "brackets", hash);

    std::ostringstream text;
    text << "L0 = " << ops.l0.str() << "\n";
    for (std::size_t i = 0; i < ops.b.size(); ++i)
        text << "B_" << i << " = " << ops.b[i].str() << "\n";
    for (std::size_t i = 0; i < ops.c.size(); ++i)
        for (std::size_t j = 0; j < ops.c[i].size(); ++j)
            text << "C_" << i << j << " = " << ops.c[i][j].str() << "\n";
    write_file((dir / "brackets.txt").string(), text.str());
    std::cout << text.str();

    nlohmann::json m = make_manifest("brackets", hash, cfg);
    m["outputs"].push_back("brackets.txt");
    auto& r = m["results"];
    r["l0"] = ops.l0.str();
    r["b"] = nlohmann::json::array();
    for (const auto& op : ops.b) r["b"].push_back(op.str());
    r["c"] = nlohmann::json::array();
    for (const auto& row : ops.c) {
        nlohmann::json jr = nlohmann::json::array();
        for (const auto& op : row) jr.push_back(op.str());
        r["c"].push_back(jr);
    }
    finish_run(dir, std::move(m));
    return 0;
}

int run_simulate(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const SamplePath path = simulate_state(sys, cfg.simulate.x0, cfg.simulate.t, cfg.simulate.dt,
                                           cfg.seeds.state);
    const ObservationPath yp =
        simulate_observation(path, sys.observations(), cfg.seeds.observation);
    const fs::path dir = make_run_dir(inv, "simulate", hash);

    std::vector<std::string> header = {"t"};
    for (const auto& name : sys.chart()->coord_names) header.push_back(name);
    for (int i = 0; i < sys.obs_count(); ++i) header.push_back("y" + std::to_string(i));
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        std::vector<double> row = {path.times[k]};
        for (double v : path.states[k]) row.push_back(v);
        for (double v : yp.y[k]) row.push_back(v);
        rows.push_back(std::move(row));
    }
    write_file((dir / "path.csv").string(), csv_table(header, rows));

    nlohmann::json m = make_manifest("simulate", hash, cfg);
    m["outputs"].push_back("path.csv");
    auto& r = m["results"];
    r["steps"] = path.steps();
    r["scheme"] = path.scheme;
    r["final_state"] = path.states.back();
    finish_run(dir, std::move(m));

    std::cout << "simulate: " << path.steps() << " steps\n";
    return 0;
}

int run_filter(const Invocation& inv) {
    const auto [cfg, hash] = load_run(inv);
    const FilteringSystem sys = build_system(cfg);
    const FilterBlock& fb = cfg.filter;
    const SamplePath path =
        simulate_state(sys, fb.x0, fb.t, fb.dt_obs, cfg.seeds.state);
    const ObservationPath yp =
        simulate_observation(path, sys.observations(), cfg.seeds.observation);

    FilterReport rep;
    if (fb.method == "particle") {
        rep = particle_filter(sys, yp, fb.sigma0, fb.particles, cfg.seeds.filter);
    } else {
        const Grid grid = Grid::regular(cfg.chart, fb.grid);
        const DensityField init = make_density(grid, sys.metric(), fb.sigma0);
        const ZakaiSolution sol =
            fb.method == "robust"
                ? solve_robust_dmz(sys, yp, grid, fb.dt_pde, init.values, cfg.tol)
                : solve_zakai_direct(sys, yp, grid, fb.dt_pde, init.values, cfg.tol);
        rep = density_report(sol.sigma, fb.method);
    }

    const fs::path dir = make_run_dir(inv, "filter", hash);
    write_file((dir / "filter.csv").string(), csv_from_report(rep));

    nlohmann::json m = make_manifest("filter", hash, cfg);
    m["outputs"].push_back("filter.csv");
    auto& r = m["results"];
    r["method"] = fb.method;
    r["times"] = rep.times.size();
    r["final_mean"] = rep.means.back();
    r["final_mass"] = rep.mass.back();
    if (!rep.variances.empty()) r["final_variance"] = rep.variances.back();
    for (const auto& [key, value] : rep.settings) r[key] = value;
    finish_run(dir, std::move(m));

    std::cout << "filter(" << fb.method << "): final mean";
    for (double v : rep.means.back()) std::cout << " " << v;
    std::cout << ", mass " << rep.mass.back() << "\n";
    return 0;
}

int run_report(const Invocation& inv) {
    const std::string text = read_file(inv.config_path);
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
    validate_report(m);
    std::cout << "schema: " << m["schema"].get<std::string>() << "\n"
              << "command: " << m["command"].get<std::string>() << "\n"
              << "config hash: " << m["config_hash"].get<std::string>() << "\n"
              << "outputs:";
    for (const auto& o : m["outputs"]) std::cout << " " << o.get<std::string>();
    std::cout << "\nresults: " << m["results"].dump() << "\n";
    return 0;
}

int guarded(const std::function<int()>& body) {
    try {
        return body();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const CertificateFailure& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return 3;
    } catch (const ConstantObservation& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return 3;
    } catch (const DegenerateField& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return 3;
    } catch (const FlowNotFound& e) {
        std::cerr << "certificate failure: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"estimation-algebra workbench"};
    app.require_subcommand(1);

    Invocation inv;
    const auto add_common = [&](CLI::App* sub, bool manifest_input = false) {
        sub->add_option("--config", inv.config_path,
                        manifest_input ? "manifest.json emitted by a previous run"
                                       : "JSON run description")
            ->required();
        sub->add_option("--out", inv.out_root, "output root directory")
            ->envname("ESTALG_OUT")
            ->capture_default_str();
        sub->add_option("--seed", inv.seed,
                        "master seed override (state, observation, filter = seed, +1, +2)");
        sub->add_option("--tol", inv.tol_overrides, "tolerance override NAME=VALUE")
            ->take_all();
    };

    int (*handler)(const Invocation&) = nullptr;
    const auto wire = [&](const char* name, const char* desc, int (*fn)(const Invocation&),
                          bool manifest_input = false) {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_common(sub, manifest_input);
        sub->callback([&handler, fn] { handler = fn; });
        return sub;
    };

    wire("probe", "bracket-iteration dimension probe", run_probe);
    wire("certificate", "compact critical-point certificate", run_certificate);
    wire("flow-cert", "gradient-flow certificate", run_flow_cert);
    wire("brackets", "print L0 and the Davis expansion operators", run_brackets);
    wire("simulate", "sample a state path and its observations", run_simulate);
    wire("filter", "solve the filtering problem on a grid or with particles", run_filter);
    wire("report", "validate and summarize an emitted manifest", run_report, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        std::cerr << e.what() << "\n";
        return 2;
    }
    return guarded([&] { return handler(inv); });
}
