#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "malcert/lp.hpp"
#include "malcert/rng.hpp"

using namespace malcert;

namespace {

// Independent oracle for 2-variable LPs with finite bounds: enumerate all
// candidate vertices (pairwise intersections of constraint lines and bound
// lines), keep the feasible ones, take the best objective.
struct Line {
    double a0, a1, b;  // a0*x0 + a1*x1 = b
};

bool feasible2(const LinearProgram& lp, double x0, double x1, double tol = 1e-9) {
    if (x0 < lp.lower[0] - tol || x0 > lp.upper[0] + tol) return false;
    if (x1 < lp.lower[1] - tol || x1 > lp.upper[1] + tol) return false;
    for (std::size_t i = 0; i < lp.constraints.rows; ++i)
        if (lp.constraints(i, 0) * x0 + lp.constraints(i, 1) * x1 > lp.rhs[i] + tol)
            return false;
    return true;
}

bool vertex_oracle2(const LinearProgram& lp, double& best) {
    std::vector<Line> lines;
    for (std::size_t i = 0; i < lp.constraints.rows; ++i)
        lines.push_back({lp.constraints(i, 0), lp.constraints(i, 1), lp.rhs[i]});
    lines.push_back({1, 0, lp.lower[0]});
    lines.push_back({1, 0, lp.upper[0]});
    lines.push_back({0, 1, lp.lower[1]});
    lines.push_back({0, 1, lp.upper[1]});

    bool found = false;
    for (std::size_t i = 0; i < lines.size(); ++i)
        for (std::size_t j = i + 1; j < lines.size(); ++j) {
            double det = lines[i].a0 * lines[j].a1 - lines[i].a1 * lines[j].a0;
            if (std::fabs(det) < 1e-12) continue;
            double x0 = (lines[i].b * lines[j].a1 - lines[i].a1 * lines[j].b) / det;
            double x1 = (lines[i].a0 * lines[j].b - lines[i].b * lines[j].a0) / det;
            if (!feasible2(lp, x0, x1)) continue;
            double v = lp.objective[0] * x0 + lp.objective[1] * x1;
            if (!found) {
                best = v;
                found = true;
            } else if (lp.sense == LpSense::Maximize ? v > best : v < best) {
                best = v;
            }
        }
    return found;
}

LinearProgram box_lp(std::size_t n) {
    LinearProgram lp;
    lp.objective.assign(n, 0.0);
    lp.lower.assign(n, 0.0);
    lp.upper.assign(n, 0.0);
    return lp;
}

}  // namespace

TEST_CASE("textbook maximum at an interior vertex") {
    // max x0 + x1  s.t.  x0 + 2 x1 <= 4,  3 x0 + x1 <= 6,  x >= 0
    LinearProgram lp = box_lp(2);
    lp.sense = LpSense::Maximize;
    lp.objective = {1, 1};
    lp.lower = {0, 0};
    lp.upper = {kInf, kInf};
    lp.add_row({1, 2}, 4);
    lp.add_row({3, 1}, 6);
    LpOutcome r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(2.8).epsilon(1e-9));
    CHECK(r.point[0] == doctest::Approx(1.6).epsilon(1e-9));
    CHECK(r.point[1] == doctest::Approx(1.2).epsilon(1e-9));
}

TEST_CASE("minimize over the same region reaches the origin") {
    LinearProgram lp = box_lp(2);
    lp.sense = LpSense::Minimize;
    lp.objective = {1, 1};
    lp.lower = {0, 0};
    lp.upper = {kInf, kInf};
    lp.add_row({1, 2}, 4);
    lp.add_row({3, 1}, 6);
    LpOutcome r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(0.0));
}

TEST_CASE("bounds-only problems pick the right corner") {
    Rng rng(3);
    for (int rep = 0; rep < 30; ++rep) {
        std::size_t n = 1 + rng.index(6);
        LinearProgram lp = box_lp(n);
        lp.sense = rng.coin() ? LpSense::Maximize : LpSense::Minimize;
        double want = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            lp.objective[j] = rng.uniform(-2, 2);
            double a = rng.uniform(-3, 3), b = rng.uniform(-3, 3);
            lp.lower[j] = std::min(a, b);
            lp.upper[j] = std::max(a, b);
            bool take_upper = (lp.sense == LpSense::Maximize) == (lp.objective[j] > 0);
            want += lp.objective[j] * (take_upper ? lp.upper[j] : lp.lower[j]);
        }
        LpOutcome r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.value == doctest::Approx(want).epsilon(1e-9));
    }
}

TEST_CASE("random 2-variable LPs match the vertex enumeration oracle") {
    Rng rng(17);
    int solved = 0;
    for (int rep = 0; rep < 200; ++rep) {
        LinearProgram lp = box_lp(2);
        lp.sense = rng.coin() ? LpSense::Maximize : LpSense::Minimize;
        lp.objective = {rng.uniform(-2, 2), rng.uniform(-2, 2)};
        for (int j = 0; j < 2; ++j) {
            double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
            lp.lower[j] = std::min(a, b);
            lp.upper[j] = std::max(a, b);
        }
        // anchor the polytope at an interior point so it is never empty
        double c0 = rng.uniform(lp.lower[0], lp.upper[0]);
        double c1 = rng.uniform(lp.lower[1], lp.upper[1]);
        std::size_t rows = rng.index(4);
        for (std::size_t i = 0; i < rows; ++i) {
            Vec row{rng.uniform(-1, 1), rng.uniform(-1, 1)};
            lp.add_row(row, row[0] * c0 + row[1] * c1 + rng.uniform(0.0, 1.0));
        }
        double want = 0.0;
        REQUIRE(vertex_oracle2(lp, want));
        LpOutcome r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::Optimal);
        CHECK(r.value == doctest::Approx(want).epsilon(1e-7));
        CHECK(feasible2(lp, r.point[0], r.point[1], 1e-7));
        ++solved;
    }
    CHECK(solved == 200);
}

TEST_CASE("returned points are feasible and consistent in higher dimensions") {
    Rng rng(29);
    for (int rep = 0; rep < 50; ++rep) {
        std::size_t n = 3 + rng.index(4);
        LinearProgram lp = box_lp(n);
        lp.sense = rng.coin() ? LpSense::Maximize : LpSense::Minimize;
        Vec anchor(n);
        for (std::size_t j = 0; j < n; ++j) {
            lp.objective[j] = rng.uniform(-1, 1);
            double a = rng.uniform(-2, 2), b = rng.uniform(-2, 2);
            lp.lower[j] = std::min(a, b);
            lp.upper[j] = std::max(a, b);
            anchor[j] = rng.uniform(lp.lower[j], lp.upper[j]);
        }
        std::size_t rows = 1 + rng.index(5);
        for (std::size_t i = 0; i < rows; ++i) {
            Vec row(n);
            double at_anchor = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                row[j] = rng.uniform(-1, 1);
                at_anchor += row[j] * anchor[j];
            }
            lp.add_row(row, at_anchor + rng.uniform(0.0, 0.5));
        }
        LpOutcome r = lp_solve(lp);
        REQUIRE(r.status == LpStatus::Optimal);
        // point respects every bound and row
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(r.point[j] >= lp.lower[j] - 1e-7);
            CHECK(r.point[j] <= lp.upper[j] + 1e-7);
        }
        for (std::size_t i = 0; i < rows; ++i) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) lhs += lp.constraints(i, j) * r.point[j];
            CHECK(lhs <= lp.rhs[i] + 1e-7);
        }
        CHECK(r.value == doctest::Approx(dot(lp.objective, r.point)).epsilon(1e-9));
        // optimum at least as good as random feasible samples
        for (int k = 0; k < 50; ++k) {
            Vec x(n);
            for (std::size_t j = 0; j < n; ++j) x[j] = rng.uniform(lp.lower[j], lp.upper[j]);
            bool ok = true;
            for (std::size_t i = 0; i < rows && ok; ++i) {
                double lhs = 0.0;
                for (std::size_t j = 0; j < n; ++j) lhs += lp.constraints(i, j) * x[j];
                if (lhs > lp.rhs[i]) ok = false;
            }
            if (!ok) continue;
            double v = dot(lp.objective, x);
            if (lp.sense == LpSense::Maximize)
                CHECK(r.value >= v - 1e-7);
            else
                CHECK(r.value <= v + 1e-7);
        }
    }
}

TEST_CASE("infeasible system is reported") {
    LinearProgram lp = box_lp(1);
    lp.objective = {1};
    lp.lower = {0};
    lp.upper = {kInf};
    lp.add_row({1}, -1);  // x <= -1 contradicts x >= 0
    CHECK(lp_solve(lp).status == LpStatus::Infeasible);
}

TEST_CASE("unbounded rays are reported in both senses") {
    LinearProgram lp = box_lp(1);
    lp.sense = LpSense::Maximize;
    lp.objective = {1};
    lp.lower = {0};
    lp.upper = {kInf};
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);

    lp.sense = LpSense::Minimize;
    lp.lower = {-kInf};
    lp.upper = {0};
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);
}

TEST_CASE("free variable settles on a row limit") {
    // min x  with  -x <= 3  and x free: optimum -3
    LinearProgram lp = box_lp(1);
    lp.sense = LpSense::Minimize;
    lp.objective = {1};
    lp.lower = {-kInf};
    lp.upper = {kInf};
    lp.add_row({-1}, 3);
    LpOutcome r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(-3.0).epsilon(1e-9));
}

TEST_CASE("equality encoded as opposing rows pins the variable") {
    LinearProgram lp = box_lp(2);
    lp.sense = LpSense::Minimize;
    lp.objective = {1, 0};
    lp.lower = {-5, -5};
    lp.upper = {5, 5};
    lp.add_row({1, 0}, 0.5);
    lp.add_row({-1, 0}, -0.5);
    LpOutcome r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("classic cycling example terminates under Bland's rule") {
    // Beale's degenerate LP; the optimum is -1/20
    LinearProgram lp = box_lp(4);
    lp.sense = LpSense::Minimize;
    lp.objective = {-0.75, 150, -0.02, 6};
    lp.lower = {0, 0, 0, 0};
    lp.upper = {kInf, kInf, kInf, kInf};
    lp.add_row({0.25, -60, -0.04, 9}, 0);
    lp.add_row({0.5, -90, -0.02, 3}, 0);
    lp.add_row({0, 0, 1, 0}, 1);
    LpOutcome r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.value == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("iteration cap yields IterationLimit") {
    LinearProgram lp = box_lp(2);
    lp.sense = LpSense::Maximize;
    lp.objective = {1, 1};
    lp.lower = {0, 0};
    lp.upper = {kInf, kInf};
    lp.add_row({1, 2}, 4);
    lp.add_row({3, 1}, 6);
    LpOptions opts;
    opts.max_iters = 1;
    CHECK(lp_solve(lp, opts).status == LpStatus::IterationLimit);
}

TEST_CASE("repeated solves are bit-identical") {
    Rng rng(41);
    LinearProgram lp = box_lp(3);
    lp.sense = LpSense::Maximize;
    for (int j = 0; j < 3; ++j) {
        lp.objective[j] = rng.uniform(-1, 1);
        lp.lower[j] = -1;
        lp.upper[j] = 1;
    }
    lp.add_row({1, 1, 1}, 1.5);
    lp.add_row({1, -1, 0}, 0.25);
    LpOutcome a = lp_solve(lp);
    LpOutcome b = lp_solve(lp);
    REQUIRE(a.status == LpStatus::Optimal);
    CHECK(a.value == b.value);
    CHECK(a.point == b.point);
}

TEST_CASE("input validation") {
    LinearProgram lp = box_lp(2);
    lp.lower = {1, 0};
    lp.upper = {0, 1};  // crossed bounds
    CHECK_THROWS_AS(lp_solve(lp), std::invalid_argument);

    LinearProgram lp2 = box_lp(2);
    lp2.lower = {0, 0};
    lp2.upper = {1, 1};
    CHECK_THROWS_AS(lp2.add_row({1.0}, 0.0), std::invalid_argument);
}

TEST_CASE("no-row LPs with zero variables resolve immediately") {
    LinearProgram lp;
    CHECK(lp_solve(lp).status == LpStatus::Optimal);
}
