#pragma once

#include <chrono>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "malcert/linalg.hpp"
#include "malcert/lp.hpp"
#include "malcert/network.hpp"

namespace malcert {

// Star set {c + V*a : C*a <= d, plb <= a <= pub}.
// Immutable by convention: transformers return new sets.
struct StarSet {
    Vec center;   // n
    Mat basis;    // n x m
    Mat pred_C;   // p x m (p may be 0; cols kept consistent with basis)
    Vec pred_d;   // p
    Vec pred_lb;  // m
    Vec pred_ub;  // m

    std::size_t dim() const { return center.size(); }
    std::size_t num_preds() const { return basis.cols; }
};

// {center + G*b : b in [-1,1]^g}
struct Zonotope {
    Vec center;
    Mat gens;  // n x g

    std::size_t dim() const { return center.size(); }
    double radius(std::size_t i) const;
};

enum class NeuronStatus { StablePositive, StableNegative, Unstable };

struct NeuronBounds {
    double lower = 0.0;
    double upper = 0.0;

    NeuronStatus status() const {
        if (lower >= 0.0) return NeuronStatus::StablePositive;
        if (upper <= 0.0) return NeuronStatus::StableNegative;
        return NeuronStatus::Unstable;
    }
};

enum class BoundMode { Estimate, Lp };
enum class ReachMethod { Exact, Approx, Relax };

// Aborts that the verifier turns into an Unknown verdict.
struct ReachError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct BudgetExceeded : ReachError {
    BudgetExceeded() : ReachError("reach: exact star budget exceeded") {}
};
struct TimedOut : ReachError {
    TimedOut() : ReachError("reach: deadline exceeded") {}
};
struct LpLimit : ReachError {
    LpLimit() : ReachError("lp: iteration limit reached") {}
};

struct ReachOptions {
    ReachMethod method = ReachMethod::Approx;
    double relax_factor = 0.0;     // Relax only: fraction of unstable neurons NOT LP-refined
    std::size_t star_budget = 10000;  // Exact only
    std::chrono::steady_clock::time_point deadline =
        std::chrono::steady_clock::time_point::max();
    LpOptions lp;
};

StarSet star_from_box(const Vec& lb, const Vec& ub);
StarSet affine_map(const StarSet& s, const Mat& w, const Vec& b);

// Estimate mode: interval arithmetic over the predicate box (ignores C rows).
// Lp mode: tight min/max via two LP solves (falls back to the interval when
// there are no C rows, where the box answer is already exact).
NeuronBounds dim_bounds(const StarSet& s, std::size_t i, BoundMode mode,
                        const LpOptions& opts = {});

bool star_is_empty(const StarSet& s, const LpOptions& opts = {});
bool star_contains(const StarSet& s, const Vec& x, const LpOptions& opts = {});

// Exact ReLU on one dimension: <= 2 stars, empty branches dropped.
std::vector<StarSet> relu_exact_step(const StarSet& s, std::size_t neuron,
                                     const LpOptions& opts = {});

// Triangle relaxation on one dimension; nb must be sound for that neuron.
StarSet relu_approx_step(const StarSet& s, std::size_t neuron, const NeuronBounds& nb);

// Layer-by-layer reachability. Exact returns the full union; Approx/Relax a
// single overapproximating star. Conv layers must be lowered first.
std::vector<StarSet> reach(const Network& net, const StarSet& input,
                           const ReachOptions& opts = {});

// DeepZ-style zonotope sweep: sound per-neuron bounds after every layer.
std::vector<std::vector<NeuronBounds>> zono_bounds(const Network& net, const Vec& lb,
                                                   const Vec& ub);

}  // namespace malcert
