#include "malcert/star.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <variant>

namespace malcert {

namespace {

void append_row(Mat& a, const Vec& row) {
    if (row.size() != a.cols) throw std::invalid_argument("append_row: width mismatch");
    a.data.insert(a.data.end(), row.begin(), row.end());
    ++a.rows;
}

Mat with_extra_col(const Mat& a) {
    Mat out(a.rows, a.cols + 1);
    for (std::size_t r = 0; r < a.rows; ++r)
        for (std::size_t c = 0; c < a.cols; ++c) out(r, c) = a(r, c);
    return out;
}

// Feasibility/optimization skeleton over the predicate polytope.
LinearProgram pred_lp(const StarSet& s) {
    LinearProgram lp;
    lp.sense = LpSense::Minimize;
    lp.objective.assign(s.num_preds(), 0.0);
    lp.constraints = s.pred_C;
    lp.rhs = s.pred_d;
    lp.lower = s.pred_lb;
    lp.upper = s.pred_ub;
    return lp;
}

void zero_dim(StarSet& s, std::size_t i) {
    for (std::size_t j = 0; j < s.basis.cols; ++j) s.basis(i, j) = 0.0;
    s.center[i] = 0.0;
}

void check_deadline(const ReachOptions& opts) {
    if (std::chrono::steady_clock::now() > opts.deadline) throw TimedOut();
}

double triangle_area(const NeuronBounds& nb) { return nb.upper * (-nb.lower) / 2.0; }

}  // namespace

double Zonotope::radius(std::size_t i) const {
    double r = 0.0;
    for (std::size_t j = 0; j < gens.cols; ++j) r += std::fabs(gens(i, j));
    return r;
}

StarSet star_from_box(const Vec& lb, const Vec& ub) {
    if (lb.size() != ub.size()) throw std::invalid_argument("star_from_box: size mismatch");
    const std::size_t n = lb.size();
    StarSet s;
    s.center.resize(n);
    s.basis = Mat(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (lb[i] > ub[i]) throw std::invalid_argument("star_from_box: lb > ub");
        s.center[i] = (lb[i] + ub[i]) / 2.0;
        s.basis(i, i) = (ub[i] - lb[i]) / 2.0;
    }
    s.pred_C = Mat(0, n);
    s.pred_lb.assign(n, -1.0);
    s.pred_ub.assign(n, 1.0);
    return s;
}

StarSet affine_map(const StarSet& s, const Mat& w, const Vec& b) {
    if (w.cols != s.dim() || b.size() != w.rows)
        throw std::invalid_argument("affine_map: dimension mismatch");
    StarSet out;
    out.center = add(matvec(w, s.center), b);
    out.basis = matmul(w, s.basis);
    out.pred_C = s.pred_C;
    out.pred_d = s.pred_d;
    out.pred_lb = s.pred_lb;
    out.pred_ub = s.pred_ub;
    return out;
}

NeuronBounds dim_bounds(const StarSet& s, std::size_t i, BoundMode mode,
                        const LpOptions& opts) {
    if (i >= s.dim()) throw std::out_of_range("dim_bounds: dimension out of range");
    double lo = s.center[i];
    double hi = s.center[i];
    for (std::size_t j = 0; j < s.num_preds(); ++j) {
        const double a = s.basis(i, j) * s.pred_lb[j];
        const double b = s.basis(i, j) * s.pred_ub[j];
        lo += std::min(a, b);
        hi += std::max(a, b);
    }
    if (mode == BoundMode::Estimate || s.pred_C.rows == 0) return {lo, hi};

    LinearProgram lp = pred_lp(s);
    lp.objective = s.basis.row_copy(i);
    double vals[2];
    const LpSense senses[2] = {LpSense::Minimize, LpSense::Maximize};
    for (int k = 0; k < 2; ++k) {
        lp.sense = senses[k];
        LpOutcome r = lp_solve(lp, opts);
        if (r.status == LpStatus::Infeasible)
            throw std::runtime_error("dim_bounds: empty star");
        if (r.status == LpStatus::IterationLimit) throw LpLimit();
        if (r.status == LpStatus::Unbounded)
            throw std::runtime_error("dim_bounds: unbounded predicate");
        vals[k] = s.center[i] + r.value;
    }
    // intersect with the interval estimate: both are sound, keep the tighter
    return {std::max(vals[0], lo), std::min(vals[1], hi)};
}

bool star_is_empty(const StarSet& s, const LpOptions& opts) {
    if (s.pred_C.rows == 0) {
        for (std::size_t j = 0; j < s.num_preds(); ++j)
            if (s.pred_lb[j] > s.pred_ub[j]) return true;
        return false;
    }
    LpOutcome r = lp_solve(pred_lp(s), opts);
    if (r.status == LpStatus::IterationLimit) throw LpLimit();
    return r.status == LpStatus::Infeasible;
}

bool star_contains(const StarSet& s, const Vec& x, const LpOptions& opts) {
    if (x.size() != s.dim()) throw std::invalid_argument("star_contains: size mismatch");
    LinearProgram lp = pred_lp(s);
    for (std::size_t r = 0; r < s.dim(); ++r) {
        Vec row = s.basis.row_copy(r);
        const double rhs = x[r] - s.center[r];
        lp.add_row(row, rhs);
        for (double& v : row) v = -v;
        lp.add_row(row, -rhs);
    }
    LpOutcome r = lp_solve(lp, opts);
    if (r.status == LpStatus::IterationLimit) throw LpLimit();
    return r.status != LpStatus::Infeasible;
}

std::vector<StarSet> relu_exact_step(const StarSet& s, std::size_t neuron,
                                     const LpOptions& opts) {
    if (neuron >= s.dim()) throw std::out_of_range("relu_exact_step: dimension out of range");
    const NeuronBounds est = dim_bounds(s, neuron, BoundMode::Estimate);
    if (est.status() == NeuronStatus::StablePositive) return {s};
    if (est.status() == NeuronStatus::StableNegative) {
        StarSet z = s;
        zero_dim(z, neuron);
        return {z};
    }

    const Vec row = s.basis.row_copy(neuron);
    std::vector<StarSet> out;

    StarSet pos = s;  // intersect with {x_i >= 0}: -V_i a <= c_i
    Vec neg_row = row;
    for (double& v : neg_row) v = -v;
    append_row(pos.pred_C, neg_row);
    pos.pred_d.push_back(s.center[neuron]);
    if (!star_is_empty(pos, opts)) out.push_back(std::move(pos));

    StarSet neg = s;  // intersect with {x_i <= 0}: V_i a <= -c_i, then project to 0
    append_row(neg.pred_C, row);
    neg.pred_d.push_back(-s.center[neuron]);
    if (!star_is_empty(neg, opts)) {
        zero_dim(neg, neuron);
        out.push_back(std::move(neg));
    }

    if (out.empty()) throw std::runtime_error("relu_exact_step: empty input star");
    return out;
}

StarSet relu_approx_step(const StarSet& s, std::size_t neuron, const NeuronBounds& nb) {
    if (neuron >= s.dim()) throw std::out_of_range("relu_approx_step: dimension out of range");
    if (nb.lower > nb.upper) throw std::invalid_argument("relu_approx_step: bounds inconsistent");
    if (nb.status() == NeuronStatus::StablePositive) return s;
    if (nb.status() == NeuronStatus::StableNegative) {
        StarSet z = s;
        zero_dim(z, neuron);
        return z;
    }

    // Unstable: fresh predicate variable y in [0,u] carrying the triangle
    // relaxation y >= x_i and y <= lam*(x_i - l) with lam = u/(u-l).
    const double l = nb.lower;
    const double u = nb.upper;
    const double lam = u / (u - l);
    const std::size_t m = s.num_preds();
    const Vec xrow = s.basis.row_copy(neuron);
    const double xc = s.center[neuron];

    StarSet out = s;
    out.basis = with_extra_col(out.basis);
    out.pred_C = with_extra_col(out.pred_C);
    out.pred_lb.push_back(0.0);
    out.pred_ub.push_back(u);

    Vec r1(m + 1, 0.0);  // x - y <= 0
    for (std::size_t j = 0; j < m; ++j) r1[j] = xrow[j];
    r1[m] = -1.0;
    append_row(out.pred_C, r1);
    out.pred_d.push_back(-xc);

    Vec r2(m + 1, 0.0);  // y - lam*x <= -lam*l
    for (std::size_t j = 0; j < m; ++j) r2[j] = -lam * xrow[j];
    r2[m] = 1.0;
    append_row(out.pred_C, r2);
    out.pred_d.push_back(lam * (xc - l));

    for (std::size_t j = 0; j < m; ++j) out.basis(neuron, j) = 0.0;
    out.basis(neuron, m) = 1.0;
    out.center[neuron] = 0.0;
    return out;
}

namespace {

void require_lowered(const Network& net) {
    for (const Layer& layer : net.layers)
        if (std::holds_alternative<Conv2DLayer>(layer))
            throw std::invalid_argument("reach: conv layers must be lowered first");
}

StarSet reach_single(const Network& net, StarSet s, double factor,
                     const ReachOptions& opts) {
    for (const Layer& layer : net.layers) {
        check_deadline(opts);
        if (const auto* aff = std::get_if<AffineLayer>(&layer)) {
            s = affine_map(s, aff->weights, aff->bias);
            continue;
        }
        const std::size_t width = s.dim();
        std::vector<NeuronBounds> nb(width);
        std::vector<std::size_t> unstable;
        for (std::size_t i = 0; i < width; ++i) {
            nb[i] = dim_bounds(s, i, BoundMode::Estimate);
            if (nb[i].status() == NeuronStatus::Unstable) unstable.push_back(i);
        }
        // largest estimated triangle area first; factor = fraction left unrefined
        std::sort(unstable.begin(), unstable.end(), [&](std::size_t a, std::size_t b) {
            const double aa = triangle_area(nb[a]);
            const double ab = triangle_area(nb[b]);
            if (aa != ab) return aa > ab;
            return a < b;
        });
        const std::size_t skip =
            static_cast<std::size_t>(std::floor(factor * static_cast<double>(unstable.size())));
        const std::size_t refine = unstable.size() - std::min(skip, unstable.size());
        for (std::size_t k = 0; k < refine; ++k) {
            check_deadline(opts);
            nb[unstable[k]] = dim_bounds(s, unstable[k], BoundMode::Lp, opts.lp);
        }
        for (std::size_t i = 0; i < width; ++i) s = relu_approx_step(s, i, nb[i]);
    }
    return s;
}

std::vector<StarSet> reach_exact(const Network& net, const StarSet& input,
                                 const ReachOptions& opts) {
    struct Item {
        StarSet s;
        std::size_t layer;
        std::size_t neuron;
    };
    std::vector<Item> stack;
    stack.push_back({input, 0, 0});
    std::vector<StarSet> done;
    std::size_t live = 1;

    while (!stack.empty()) {
        Item it = std::move(stack.back());
        stack.pop_back();
        StarSet s = std::move(it.s);
        std::size_t li = it.layer;
        std::size_t ni = it.neuron;
        while (li < net.layers.size()) {
            check_deadline(opts);
            if (const auto* aff = std::get_if<AffineLayer>(&net.layers[li])) {
                s = affine_map(s, aff->weights, aff->bias);
                ++li;
                ni = 0;
                continue;
            }
            const std::size_t width = s.dim();
            while (ni < width) {
                check_deadline(opts);
                std::vector<StarSet> parts = relu_exact_step(s, ni, opts.lp);
                if (parts.size() == 2) {
                    if (++live > opts.star_budget) throw BudgetExceeded();
                    stack.push_back({std::move(parts[1]), li, ni + 1});
                }
                s = std::move(parts[0]);
                ++ni;
            }
            ++li;
            ni = 0;
        }
        done.push_back(std::move(s));
    }
    return done;
}

}  // namespace

std::vector<StarSet> reach(const Network& net, const StarSet& input,
                           const ReachOptions& opts) {
    require_lowered(net);
    if (input.dim() != static_cast<std::size_t>(net.input_dim))
        throw std::invalid_argument("reach: input star dimension mismatch");
    switch (opts.method) {
        case ReachMethod::Exact:
            return reach_exact(net, input, opts);
        case ReachMethod::Approx:
            return {reach_single(net, input, 0.0, opts)};
        case ReachMethod::Relax:
            if (opts.relax_factor < 0.0 || opts.relax_factor > 1.0)
                throw std::invalid_argument("reach: relax factor outside [0,1]");
            return {reach_single(net, input, opts.relax_factor, opts)};
    }
    throw std::logic_error("reach: bad method");
}

std::vector<std::vector<NeuronBounds>> zono_bounds(const Network& net, const Vec& lb,
                                                   const Vec& ub) {
    require_lowered(net);
    if (lb.size() != ub.size() || lb.size() != static_cast<std::size_t>(net.input_dim))
        throw std::invalid_argument("zono_bounds: dimension mismatch");
    Zonotope z;
    z.center.resize(lb.size());
    z.gens = Mat(lb.size(), lb.size());
    for (std::size_t i = 0; i < lb.size(); ++i) {
        if (lb[i] > ub[i]) throw std::invalid_argument("zono_bounds: lb > ub");
        z.center[i] = (lb[i] + ub[i]) / 2.0;
        z.gens(i, i) = (ub[i] - lb[i]) / 2.0;
    }

    std::vector<std::vector<NeuronBounds>> all;
    for (const Layer& layer : net.layers) {
        if (const auto* aff = std::get_if<AffineLayer>(&layer)) {
            z.center = add(matvec(aff->weights, z.center), aff->bias);
            z.gens = matmul(aff->weights, z.gens);
        } else {
            const std::size_t n = z.dim();
            std::vector<std::pair<std::size_t, double>> fresh;  // (row, mu)
            for (std::size_t i = 0; i < n; ++i) {
                const double r = z.radius(i);
                const double l = z.center[i] - r;
                const double u = z.center[i] + r;
                if (l >= 0.0) continue;
                if (u <= 0.0) {
                    z.center[i] = 0.0;
                    for (std::size_t j = 0; j < z.gens.cols; ++j) z.gens(i, j) = 0.0;
                    continue;
                }
                const double lam = u / (u - l);
                const double mu = -lam * l / 2.0;
                z.center[i] = lam * z.center[i] + mu;
                for (std::size_t j = 0; j < z.gens.cols; ++j) z.gens(i, j) *= lam;
                fresh.emplace_back(i, mu);
            }
            if (!fresh.empty()) {
                Mat g(n, z.gens.cols + fresh.size());
                for (std::size_t r = 0; r < n; ++r)
                    for (std::size_t c = 0; c < z.gens.cols; ++c) g(r, c) = z.gens(r, c);
                for (std::size_t k = 0; k < fresh.size(); ++k)
                    g(fresh[k].first, z.gens.cols + k) = fresh[k].second;
                z.gens = std::move(g);
            }
        }
        std::vector<NeuronBounds> layer_bounds(z.dim());
        for (std::size_t i = 0; i < z.dim(); ++i) {
            const double r = z.radius(i);
            layer_bounds[i] = {z.center[i] - r, z.center[i] + r};
        }
        all.push_back(std::move(layer_bounds));
    }
    return all;
}

}  // namespace malcert
