#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace estalg {

/// All numeric thresholds in one place, overridable from the CLI.
struct Tolerances {
    double tau_zero = 1e-10;   ///< probabilistic zero test: |value| bound
    int n_zero = 64;           ///< probabilistic zero test: interior sample count
    double tau_rank = 1e-8;    ///< relative rank / span-membership threshold
    double tau_crit = 1e-10;   ///< gradient norm bound for a critical point
    double tau_tri = 1e-8;     ///< certificate below-diagonal bound
    double tau_diag = 1e-6;    ///< certificate minimum |diagonal| bound
    double delta_dedup = 1e-6; ///< critical point deduplication distance
    int n_rank_points = 128;   ///< probe points for span-membership rank tests

    std::uint64_t zero_test_seed = 0x7A3C9B51D4E60F2Bull;  ///< fixed stream for is_zero

    void set(const std::string& name, double value) {
        if (name == "tau_zero") tau_zero = value;
        else if (name == "n_zero") n_zero = int(value);
        else if (name == "tau_rank") tau_rank = value;
        else if (name == "tau_crit") tau_crit = value;
        else if (name == "tau_tri") tau_tri = value;
        else if (name == "tau_diag") tau_diag = value;
        else if (name == "delta_dedup") delta_dedup = value;
        else if (name == "n_rank_points") n_rank_points = int(value);
        else throw std::invalid_argument("unknown tolerance: " + name);
    }

    std::map<std::string, double> as_map() const {
        return {{"tau_zero", tau_zero},   {"n_zero", double(n_zero)},
                {"tau_rank", tau_rank},   {"tau_crit", tau_crit},
                {"tau_tri", tau_tri},     {"tau_diag", tau_diag},
                {"delta_dedup", delta_dedup}, {"n_rank_points", double(n_rank_points)}};
    }
};

}  // namespace estalg
