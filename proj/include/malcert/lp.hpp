#pragma once

#include <limits>

#include "malcert/linalg.hpp"

namespace malcert {

enum class LpSense { Maximize, Minimize };

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

constexpr double kInf = std::numeric_limits<double>::infinity();

// max/min objective . alpha  subject to  constraints . alpha <= rhs  and
// lower <= alpha <= upper (entries may be +-inf).
struct LinearProgram {
    LpSense sense = LpSense::Maximize;
    Vec objective;
    Mat constraints;  // p x m
    Vec rhs;          // p
    Vec lower;        // m
    Vec upper;        // m

    std::size_t num_vars() const { return objective.size(); }
    void add_row(const Vec& coeffs, double limit);
};

struct LpOutcome {
    LpStatus status = LpStatus::Infeasible;
    double value = 0.0;
    Vec point;  // populated when Optimal
};

struct LpOptions {
    double pivot_tol = 1e-9;
    double feas_tol = 1e-7;
    int max_iters = 50000;
};

// Bounded-variable two-phase primal simplex with Bland's anti-cycling rule.
// Deterministic: repeated solves of the same program agree exactly. Hitting
// the iteration cap is reported as IterationLimit, distinct from
// Infeasible/Unbounded, so callers can fall back to "unknown" verdicts.
LpOutcome lp_solve(const LinearProgram& lp, const LpOptions& opts = {});

}  // namespace malcert
