#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <utility>
#include <vector>

#include "estalg/diffop.hpp"
#include "estalg/rng.hpp"
#include "estalg/system.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

enum class ProbeStatus { Closed, ExceededBound };

struct BracketLogEntry {
    int left = -1;           // basis indices; -1/-1 marks a seed operator
    int right = -1;
    double residual = 0.0;   // relative projection residual onto the span so far
    bool added = false;
};

struct ProbeResult {
    ProbeStatus status = ProbeStatus::Closed;
    int dimension = 0;
    int bound = 0;
    int rounds = 0;
    std::vector<DiffOp> basis;
    std::vector<BracketLogEntry> log;
};

namespace detail {

// Numeric stand-in for operators: coefficients evaluated at fixed probe points,
// one block of 128 values per multi-index seen across the compared operators.
class ProbeSpan {
  public:
    ProbeSpan(const Chart& chart, std::uint64_t seed, int n_points) {
        RandomStream rng(seed);
        for (int k = 0; k < n_points; ++k) points_.push_back(chart.sample_interior(rng));
    }

    void push(const DiffOp& d) {
        cache_.emplace_back();
        ops_.push_back(d);
    }

    // Relative least-squares residual of the candidate against the current span.
    double residual(const DiffOp& cand) {
        std::set<MultiIndex, GradedLexLess> idx;
        for (const auto& op : ops_)
            for (const auto& [a, c] : op.terms()) idx.insert(a);
        for (const auto& [a, c] : cand.terms()) idx.insert(a);

        const std::size_t rows = idx.size() * points_.size();
        Eigen::VectorXd v = Eigen::VectorXd::Zero(Eigen::Index(rows));
        std::size_t at = 0;
        for (const auto& a : idx) {
            const auto col = values(cand, a);
            for (double x : col) v(Eigen::Index(at++)) = x;
        }
        if (v.norm() == 0.0) return 0.0;    // numerically indistinguishable from zero
        if (ops_.empty()) return 1.0;       // first nonzero operator always enters

        Eigen::MatrixXd b = Eigen::MatrixXd::Zero(Eigen::Index(rows), Eigen::Index(ops_.size()));
        for (std::size_t j = 0; j < ops_.size(); ++j) {
            at = 0;
            for (const auto& a : idx) {
                const auto& col = cached_values(j, a);
                for (double x : col) b(Eigen::Index(at++), Eigen::Index(j)) = x;
            }
        }
        const Eigen::VectorXd x = b.colPivHouseholderQr().solve(v);
        return (v - b * x).norm() / v.norm();
    }

  private:
    std::vector<double> values(const DiffOp& d, const MultiIndex& a) const {
        std::vector<double> col(points_.size(), 0.0);
        const auto it = d.terms().find(a);
        if (it == d.terms().end()) return col;
        for (std::size_t k = 0; k < points_.size(); ++k) col[k] = eval(it->second, points_[k]);
        return col;
    }

    const std::vector<double>& cached_values(std::size_t j, const MultiIndex& a) {
        auto& m = cache_[j];
        auto it = m.find(a);
        if (it == m.end()) it = m.emplace(a, values(ops_[j], a)).first;
        return it->second;
    }

    std::vector<Point> points_;
    std::vector<DiffOp> ops_;
    std::vector<std::map<MultiIndex, std::vector<double>, GradedLexLess>> cache_;
};

}  // namespace detail

// Relative residual of cand against span{basis}, with the probe's vectorization.
inline double span_residual(const std::vector<DiffOp>& basis, const DiffOp& cand,
                            const Chart& chart, const Tolerances& tol = {},
                            std::uint64_t probe_seed = 0xA11CE5ull) {
    detail::ProbeSpan span(chart, probe_seed, tol.n_rank_points);
    for (const auto& b : basis) span.push(b);
    return span.residual(cand);
}

// Bracket-closure probe: seed with {L0, h^i.}, repeatedly bracket all pairs, add
// operators that fail the span-membership test, stop on closure or at the bounds.
inline ProbeResult dimension_probe(const FilteringSystem& sys, int max_dim = 16,
                                   int max_rounds = 6, const Tolerances& tol = {},
                                   std::uint64_t probe_seed = 0xA11CE5ull) {
    ProbeResult out;
    out.bound = max_dim;
    detail::ProbeSpan span(*sys.chart(), probe_seed, tol.n_rank_points);

    const auto consider = [&](const DiffOp& d, int li, int ri) -> bool {
        BracketLogEntry e;
        e.left = li;
        e.right = ri;
        if (d.is_zero_op()) {
            out.log.push_back(e);
            return false;
        }
        e.residual = span.residual(d);
        e.added = e.residual > tol.tau_rank;
        out.log.push_back(e);
        if (e.added) {
            span.push(d);
            out.basis.push_back(d);
        }
        return e.added;
    };

    std::vector<DiffOp> seeds;
    seeds.push_back(sys.l0());
    for (int i = 0; i < sys.obs_count(); ++i) seeds.push_back(sys.observation_op(i));
    for (const auto& s : seeds) {
        consider(s, -1, -1);
        if (int(out.basis.size()) > max_dim) {
            out.status = ProbeStatus::ExceededBound;
            out.dimension = int(out.basis.size());
            return out;
        }
    }

    std::set<std::pair<int, int>> done;
    for (int round = 1; round <= max_rounds; ++round) {
        out.rounds = round;
        bool grew = false;
        // snapshot-free scan: indices are append-only, so re-walk until no pair is pending
        for (int j = 1; j < int(out.basis.size()); ++j) {
            for (int i = 0; i < j; ++i) {
                if (done.count({i, j})) continue;
                done.insert({i, j});
                const DiffOp b =
                    commutator(out.basis[std::size_t(i)], out.basis[std::size_t(j)], tol);
                grew |= consider(b, i, j);
                if (int(out.basis.size()) > max_dim) {
                    out.status = ProbeStatus::ExceededBound;
                    out.dimension = int(out.basis.size());
                    return out;
                }
            }
        }
        if (!grew) {
            out.status = ProbeStatus::Closed;
            out.dimension = int(out.basis.size());
            return out;
        }
    }
    out.status = ProbeStatus::ExceededBound;
    out.dimension = int(out.basis.size());
    return out;
}

}  // namespace estalg
