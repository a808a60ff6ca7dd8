#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "estalg/config.hpp"
#include "estalg/stats.hpp"

namespace estalg {

inline constexpr const char* kReportSchema = "estalg-report/1";

/// FNV-1a hash of the raw config text, printed as 16 hex digits; names the
/// run directory so distinct configs never collide.
inline std::string config_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

/// Shortest round-trip decimal form, identical across runs.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Plot-ready CSV: header row, then one row per record.
inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (i) out += ',';
        out += header[i];
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_double(row[i]);
        }
        out += '\n';
    }
    return out;
}

inline std::string csv_from_report(const FilterReport& rep) {
    std::vector<std::string> header = {"t"};
    const std::size_t d = rep.means.empty() ? 0 : rep.means.front().size();
    for (std::size_t i = 0; i < d; ++i) header.push_back("mean" + std::to_string(i));
    if (!rep.variances.empty()) header.push_back("variance");
    header.push_back("mass");
    std::vector<std::vector<double>> rows;
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
        std::vector<double> row = {rep.times[k]};
        for (std::size_t i = 0; i < d; ++i) row.push_back(rep.means[k][i]);
        if (!rep.variances.empty()) row.push_back(rep.variances[k]);
        row.push_back(rep.mass[k]);
        rows.push_back(std::move(row));
    }
    return csv_table(header, rows);
}

/// Versioned manifest skeleton shared by every subcommand.
inline nlohmann::json make_manifest(const std::string& command, const std::string& cfg_hash,
                                    const RunConfig& cfg) {
    nlohmann::json m;
    m["schema"] = kReportSchema;
    m["command"] = command;
    m["config_hash"] = cfg_hash;
    m["manifold"] = cfg.chart->name;
    m["seeds"] = {{"state", cfg.seeds.state},
                  {"observation", cfg.seeds.observation},
                  {"filter", cfg.seeds.filter}};
    m["tolerances"] = cfg.tol.as_map();
    m["outputs"] = nlohmann::json::array();
    m["results"] = nlohmann::json::object();
    return m;
}

/// Re-validates an emitted manifest; throws ConfigError listing every
/// violation.  This is the round-trip half of the report contract.
inline void validate_report(const nlohmann::json& m) {
    detail::ConfigChecker check;
    if (!m.is_object()) {
        check.fail("manifest must be a JSON object");
        check.raise();
    }
    if (!m.contains("schema") || !m["schema"].is_string())
        check.fail("missing schema string");
    else if (m["schema"].get<std::string>() != kReportSchema)
        check.fail("unsupported schema '" + m["schema"].get<std::string>() + "', expected " +
                   kReportSchema);
    if (!m.contains("command") || !m["command"].is_string())
        check.fail("missing command string");
    if (!m.contains("config_hash") || !m["config_hash"].is_string() ||
        m["config_hash"].get<std::string>().size() != 16)
        check.fail("missing 16-digit config_hash");
    if (!m.contains("outputs") || !m["outputs"].is_array())
        check.fail("missing outputs array");
    else
        for (const auto& o : m["outputs"])
            if (!o.is_string()) check.fail("outputs entries must be file names");
    if (!m.contains("results") || !m["results"].is_object())
        check.fail("missing results object");
    if (!m.contains("seeds") || !m["seeds"].is_object())
        check.fail("missing seeds object");
    if (!m.contains("tolerances") || !m["tolerances"].is_object())
        check.fail("missing tolerances object");
    check.finish();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path + " for writing");
    out << content;
    if (!out) throw Error("write failed for " + path);
}

}  // namespace estalg
