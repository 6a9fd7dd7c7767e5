#include "malcert/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace malcert {

void LinearProgram::add_row(const Vec& coeffs, double limit) {
    std::size_t want = constraints.cols;
    if (constraints.rows == 0 && want == 0) want = num_vars();
    if (want == 0) want = coeffs.size();
    if (coeffs.size() != want)
        throw std::invalid_argument("lp: constraint row length mismatch");
    if (constraints.rows == 0) constraints = Mat(0, want);
    constraints.data.insert(constraints.data.end(), coeffs.begin(), coeffs.end());
    constraints.rows += 1;
    rhs.push_back(limit);
}

namespace {

enum class VarStatus { Basic, AtLower, AtUpper, FreeZero };

// Dense tableau state for the bounded simplex. Variable layout:
//   [0, m)            structural
//   [m, m+p)          slacks, bounds [0, inf)
//   [m+p, m+p+p)      artificials, bounds [0, inf), phase 1 only
class Tableau {
public:
    Tableau(const LinearProgram& lp, const LpOptions& opts)
        : opts_(opts),
          m_(lp.num_vars()),
          p_(lp.constraints.rows),
          ncols_(lp.num_vars() + 2 * lp.constraints.rows),
          tab_(lp.constraints.rows, lp.num_vars() + 2 * lp.constraints.rows),
          lb_(ncols_, 0.0),
          ub_(ncols_, kInf),
          status_(ncols_, VarStatus::AtLower),
          basis_(p_, 0),
          xb_(p_, 0.0),
          cost_(ncols_, 0.0) {
        for (std::size_t j = 0; j < m_; ++j) {
            lb_[j] = lp.lower[j];
            ub_[j] = lp.upper[j];
            if (std::isfinite(lb_[j]))
                status_[j] = VarStatus::AtLower;
            else if (std::isfinite(ub_[j]))
                status_[j] = VarStatus::AtUpper;
            else
                status_[j] = VarStatus::FreeZero;
        }
        // artificials are materialized lazily per infeasible row
        for (std::size_t i = 0; i < p_; ++i) {
            for (std::size_t j = 0; j < m_; ++j) tab_(i, j) = lp.constraints(i, j);
            tab_(i, m_ + i) = 1.0;  // slack
            double r = lp.rhs[i];
            for (std::size_t j = 0; j < m_; ++j) r -= lp.constraints(i, j) * nonbasic_value(j);
            if (r >= 0.0) {
                basis_[i] = m_ + i;
                xb_[i] = r;
                status_[m_ + i] = VarStatus::Basic;
                ub_[art_index(i)] = 0.0;  // unused artificial pinned at zero
            } else {
                // slack stays nonbasic at 0; artificial enters the basis
                std::size_t a = art_index(i);
                tab_(i, a) = -1.0;
                for (std::size_t j = 0; j < ncols_; ++j) tab_(i, j) = -tab_(i, j);
                basis_[i] = a;
                xb_[i] = -r;
                status_[a] = VarStatus::Basic;
                has_artificials_ = true;
            }
        }
    }

    std::size_t art_index(std::size_t row) const { return m_ + p_ + row; }

    double nonbasic_value(std::size_t j) const {
        switch (status_[j]) {
            case VarStatus::AtLower: return lb_[j];
            case VarStatus::AtUpper: return ub_[j];
            default: return 0.0;
        }
    }

    bool needs_phase1() const { return has_artificials_; }

    void set_phase1_cost() {
        std::fill(cost_.begin(), cost_.end(), 0.0);
        for (std::size_t i = 0; i < p_; ++i) cost_[art_index(i)] = 1.0;
        phase2_ = false;
        reduce_cost_row();
    }

    void set_phase2_cost(const Vec& minimize_obj) {
        std::fill(cost_.begin(), cost_.end(), 0.0);
        for (std::size_t j = 0; j < m_; ++j) cost_[j] = minimize_obj[j];
        phase2_ = true;
        reduce_cost_row();
    }

    // Runs Bland's-rule pivoting until optimal / unbounded / iteration cap.
    LpStatus run(int& iters_left) {
        for (;;) {
            if (iters_left-- <= 0) return LpStatus::IterationLimit;
            int dir = 0;
            std::size_t je = ncols_;
            for (std::size_t j = 0; j < ncols_; ++j) {
                if (status_[j] == VarStatus::Basic) continue;
                if (phase2_ && j >= m_ + p_) continue;  // artificials locked out
                if (lb_[j] == ub_[j]) continue;         // fixed variable
                double z = red_[j];
                if ((status_[j] == VarStatus::AtLower || status_[j] == VarStatus::FreeZero) &&
                    z < -opts_.pivot_tol) {
                    je = j;
                    dir = +1;
                    break;
                }
                if ((status_[j] == VarStatus::AtUpper || status_[j] == VarStatus::FreeZero) &&
                    z > opts_.pivot_tol) {
                    je = j;
                    dir = -1;
                    break;
                }
            }
            if (je == ncols_) return LpStatus::Optimal;

            // ratio test: smallest step at which a basic variable hits a
            // bound; Bland tie-break on the smallest basic index
            double row_t = kInf;
            std::size_t best_row = p_;
            for (std::size_t i = 0; i < p_; ++i) {
                double coef = dir * tab_(i, je);
                double t;
                if (coef > opts_.pivot_tol) {
                    if (!std::isfinite(lb_[basis_[i]])) continue;
                    t = (xb_[i] - lb_[basis_[i]]) / coef;
                } else if (coef < -opts_.pivot_tol) {
                    if (!std::isfinite(ub_[basis_[i]])) continue;
                    t = (ub_[basis_[i]] - xb_[i]) / (-coef);
                } else {
                    continue;
                }
                if (t < 0.0) t = 0.0;  // roundoff guard
                if (t < row_t - 1e-12 ||
                    (t <= row_t + 1e-12 && best_row < p_ && basis_[i] < basis_[best_row])) {
                    if (t < row_t) row_t = t;
                    best_row = i;
                }
            }
            double own_span = kInf;
            if (std::isfinite(lb_[je]) && std::isfinite(ub_[je])) own_span = ub_[je] - lb_[je];

            if (best_row == p_ && !std::isfinite(own_span)) return LpStatus::Unbounded;

            if (best_row != p_ && row_t <= own_span + 1e-12) {
                pivot(best_row, je, dir, row_t);
            } else {
                // bound flip: entering moves to its opposite bound
                for (std::size_t i = 0; i < p_; ++i) xb_[i] -= dir * own_span * tab_(i, je);
                status_[je] = (dir > 0) ? VarStatus::AtUpper : VarStatus::AtLower;
            }
        }
    }

    // Pivot entering variable je (moving t in direction dir) against row r.
    void pivot(std::size_t r, std::size_t je, int dir, double t) {
        double entering_value = nonbasic_value(je) + dir * t;
        std::size_t leaving = basis_[r];
        for (std::size_t i = 0; i < p_; ++i)
            if (i != r) xb_[i] -= dir * t * tab_(i, je);
        double coef = dir * tab_(r, je);
        status_[leaving] = (coef > 0.0) ? VarStatus::AtLower : VarStatus::AtUpper;
        if (!std::isfinite(nonbasic_value(leaving)))
            status_[leaving] = VarStatus::FreeZero;  // cannot happen for blocking rows

        double piv = tab_(r, je);
        double inv = 1.0 / piv;
        for (std::size_t j = 0; j < ncols_; ++j) tab_(r, j) *= inv;
        tab_(r, je) = 1.0;
        for (std::size_t i = 0; i < p_; ++i) {
            if (i == r) continue;
            double f = tab_(i, je);
            if (f == 0.0) continue;
            const double* src = tab_.row(r);
            double* dst = tab_.row(i);
            for (std::size_t j = 0; j < ncols_; ++j) dst[j] -= f * src[j];
            dst[je] = 0.0;
        }
        double zf = red_[je];
        if (zf != 0.0) {
            const double* src = tab_.row(r);
            for (std::size_t j = 0; j < ncols_; ++j) red_[j] -= zf * src[j];
            red_[je] = 0.0;
        }
        basis_[r] = je;
        status_[je] = VarStatus::Basic;
        xb_[r] = entering_value;
    }

    double infeasibility() const {
        double total = 0.0;
        for (std::size_t i = 0; i < p_; ++i)
            if (basis_[i] >= m_ + p_) total += xb_[i];
        return total;
    }

    // After phase 1: pivot remaining zero-valued artificials out of the basis
    // where possible; rows that stay artificial are redundant.
    void expel_artificials() {
        for (std::size_t i = 0; i < p_; ++i) {
            if (basis_[i] < m_ + p_) continue;
            for (std::size_t j = 0; j < m_ + p_; ++j) {
                if (status_[j] == VarStatus::Basic) continue;
                if (std::fabs(tab_(i, j)) > opts_.pivot_tol) {
                    pivot(i, j, +1, 0.0);
                    break;
                }
            }
        }
        for (std::size_t i = 0; i < p_; ++i) {
            std::size_t a = art_index(i);
            if (status_[a] != VarStatus::Basic) {
                lb_[a] = ub_[a] = 0.0;
                status_[a] = VarStatus::AtLower;
            }
        }
    }

    Vec structural_point() const {
        Vec x(m_);
        for (std::size_t j = 0; j < m_; ++j) x[j] = nonbasic_value(j);
        for (std::size_t i = 0; i < p_; ++i)
            if (basis_[i] < m_) x[basis_[i]] = xb_[i];
        return x;
    }

private:
    void reduce_cost_row() {
        red_ = cost_;
        for (std::size_t i = 0; i < p_; ++i) {
            double cb = cost_[basis_[i]];
            if (cb == 0.0) continue;
            const double* row = tab_.row(i);
            for (std::size_t j = 0; j < ncols_; ++j) red_[j] -= cb * row[j];
        }
        for (std::size_t i = 0; i < p_; ++i) red_[basis_[i]] = 0.0;
    }

    LpOptions opts_;
    std::size_t m_, p_, ncols_;
    Mat tab_;
    Vec lb_, ub_;
    std::vector<VarStatus> status_;
    std::vector<std::size_t> basis_;
    Vec xb_;
    Vec cost_;
    Vec red_;
    bool has_artificials_ = false;
    bool phase2_ = false;
};

}  // namespace

LpOutcome lp_solve(const LinearProgram& lp, const LpOptions& opts) {
    const std::size_t m = lp.num_vars();
    const std::size_t p = lp.constraints.rows;
    if (lp.lower.size() != m || lp.upper.size() != m)
        throw std::invalid_argument("lp: bound vectors must match objective length");
    if (p > 0 && lp.constraints.cols != m)
        throw std::invalid_argument("lp: constraint matrix width must match objective length");
    if (lp.rhs.size() != p) throw std::invalid_argument("lp: rhs length must match row count");
    for (std::size_t j = 0; j < m; ++j) {
        if (std::isfinite(lp.lower[j]) && std::isfinite(lp.upper[j]) && lp.lower[j] > lp.upper[j])
            throw std::invalid_argument("lp: lower bound exceeds upper bound");
    }

    if (m == 0) {
        for (std::size_t i = 0; i < p; ++i)
            if (lp.rhs[i] < -opts.feas_tol) return {LpStatus::Infeasible, 0.0, {}};
        return {LpStatus::Optimal, 0.0, {}};
    }

    Vec minimize_obj = lp.objective;
    if (lp.sense == LpSense::Maximize)
        for (double& c : minimize_obj) c = -c;

    Tableau tab(lp, opts);
    int iters_left = opts.max_iters;

    if (tab.needs_phase1()) {
        tab.set_phase1_cost();
        LpStatus st = tab.run(iters_left);
        if (st == LpStatus::IterationLimit) return {st, 0.0, {}};
        if (st == LpStatus::Unbounded)
            throw std::runtime_error("lp: phase 1 reported unbounded");
        if (tab.infeasibility() > opts.feas_tol) return {LpStatus::Infeasible, 0.0, {}};
        tab.expel_artificials();
    }

    tab.set_phase2_cost(minimize_obj);
    LpStatus st = tab.run(iters_left);
    if (st != LpStatus::Optimal) return {st, 0.0, {}};

    LpOutcome out;
    out.status = LpStatus::Optimal;
    out.point = tab.structural_point();
    out.value = dot(lp.objective, out.point);
    return out;
}

}  // namespace malcert
