#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "estalg/errors.hpp"
#include "estalg/expr.hpp"
#include "estalg/metric.hpp"
#include "estalg/system.hpp"
#include "estalg/tolerances.hpp"

namespace estalg {

// Qf = <grad f, grad f>; zero exactly when f is constant.
inline ScalarField q_op(const ScalarField& f, const Metric& g, const Tolerances& tol = {}) {
    const VectorField gf = grad(f, g, tol);
    return simplify(inner(gf, gf, g));
}

// A_h(f) = <grad h, grad f>; bilinear, and a_h(h, h) = q_op(h).
inline ScalarField a_h(const ScalarField& h, const ScalarField& f, const Metric& g,
                       const Tolerances& tol = {}) {
    return simplify(inner(grad(h, g, tol), grad(f, g, tol), g));
}

struct BracketIdentityReport {
    DiffOp bracket;       // [[L0, f.], f.], expected to be a multiplication operator
    Expr coefficient;     // its order-0 coefficient
    double max_residual;  // max sampled |coefficient - q_op(f)|
};

// Checks the recursion identity [[L0, f.], f.] = <grad f, grad f> as operators.
// A failure here signals a metric or adjoint implementation bug, so it throws.
inline BracketIdentityReport bracket_identity_check(const FilteringSystem& sys,
                                                    const ScalarField& f,
                                                    const Tolerances& tol = {}) {
    const DiffOp mf = DiffOp::multiplication(f, sys.chart(), tol);
    DiffOp b = commutator(commutator(sys.l0(), mf, tol), mf, tol);
    if (b.order() > 0)
        throw IdentityViolation("[[L0, f.], f.] has order " + std::to_string(b.order()) +
                                ", expected a multiplication operator");
    const std::size_t n = std::size_t(sys.chart()->dim);
    const Expr coeff = b.coefficient(MultiIndex(n, 0));
    const Expr q = q_op(f, sys.metric(), tol);
    const Expr res = simplify(coeff - q);

    RandomStream rng(0x1de11u);
    double max_res = 0.0;
    for (int k = 0; k < 100; ++k) {
        const Point p = sys.chart()->sample_interior(rng);
        max_res = std::max(max_res, std::abs(eval(res, p)));
    }
    if (max_res > 1e-9)
        throw IdentityViolation("bracket identity residual " + std::to_string(max_res) +
                                " exceeds 1e-9");
    return {std::move(b), coeff, max_res};
}

// H_0 = h^j, H_{i+1} = Q(H_i); returns n+1 fields.
inline std::vector<ScalarField> q_sequence(const FilteringSystem& sys, int j, int n,
                                           const Tolerances& tol = {}) {
    if (j < 0 || j >= sys.obs_count()) throw ConfigError("observation index out of range");
    const ScalarField& h = sys.observations()[std::size_t(j)];
    if (is_zero(q_op(h, sys.metric(), tol), *sys.chart(), tol))
        throw ConstantObservation("observation component " + std::to_string(j) +
                                  " is constant on the chart");
    std::vector<ScalarField> out;
    out.push_back(h);
    for (int i = 0; i < n; ++i) {
        const ScalarField q = q_op(out.back(), sys.metric(), tol);
        if (i > 0 && is_zero(q, *sys.chart(), tol))
            throw ConstantObservation("Q-sequence degenerated to a constant at step " +
                                      std::to_string(i + 1));
        out.push_back(q);
    }
    return out;
}

}  // namespace estalg
