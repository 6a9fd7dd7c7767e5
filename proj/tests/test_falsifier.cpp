#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <stdexcept>

#include "malcert/falsifier.hpp"
#include "malcert/rng.hpp"
#include "support.hpp"

using namespace malcert;
using namespace testsup;

namespace {

InputSpec box_spec(Vec base, Vec lo, Vec hi, std::size_t target) {
    InputSpec s;
    s.base = std::move(base);
    s.lower = std::move(lo);
    s.upper = std::move(hi);
    s.target = target;
    return s;
}

InputSpec point_spec(const Vec& x, std::size_t target) { return box_spec(x, x, x, target); }

// 2-in 2-out net with no hidden layer: logits = W x + b.
Network affine_net(const Mat& w, const Vec& b) {
    Network net;
    net.input_dim = w.cols;
    net.num_classes = w.rows;
    net.layers.push_back(AffineLayer{w, b});
    return net;
}

}  // namespace

TEST_CASE("point spec yields identical samples") {
    InputSpec s = point_spec({0.5, -1.0, 3.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 50;
    cfg.seed = 7;
    std::vector<Vec> samples = gen_rand_examples(s, cfg);
    REQUIRE(samples.size() == 50);
    for (const Vec& v : samples) CHECK(v == s.base);
}

TEST_CASE("sample plan is deterministic and starts at the base point") {
    InputSpec s = box_spec({0.0, 0.0}, {-1.0, -2.0}, {1.0, 2.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 200;
    cfg.seed = 99;
    std::vector<Vec> a = gen_rand_examples(s, cfg);
    std::vector<Vec> b = gen_rand_examples(s, cfg);
    CHECK(a == b);
    CHECK(a[0] == s.base);
    cfg.seed = 100;
    std::vector<Vec> c = gen_rand_examples(s, cfg);
    CHECK(a != c);
    CHECK(c[0] == s.base);  // base point is seed independent
}

TEST_CASE("corner samples sit on the box corners") {
    InputSpec s = box_spec({0.0, 0.0, 0.0}, {-1.0, 0.5, -3.0}, {1.0, 2.5, -1.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 100;
    cfg.seed = 3;
    std::vector<Vec> samples = gen_rand_examples(s, cfg);
    for (std::size_t k = 1; k <= 32; ++k) {
        for (std::size_t i = 0; i < 3; ++i) {
            bool at_corner = samples[k][i] == s.lower[i] || samples[k][i] == s.upper[i];
            CHECK(at_corner);
        }
    }
    // With corners disabled, everything after the base point is interior with
    // overwhelming probability.
    cfg.include_corners = false;
    samples = gen_rand_examples(s, cfg);
    int on_boundary = 0;
    for (std::size_t k = 1; k < samples.size(); ++k)
        for (std::size_t i = 0; i < 3; ++i)
            if (samples[k][i] == s.lower[i] || samples[k][i] == s.upper[i]) ++on_boundary;
    CHECK(on_boundary == 0);
}

TEST_CASE("small budgets truncate the plan in order") {
    InputSpec s = box_spec({0.0}, {-1.0}, {1.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 1;
    CHECK(gen_rand_examples(s, cfg).size() == 1);
    CHECK(gen_rand_examples(s, cfg)[0] == s.base);
    cfg.num_samples = 10;
    std::vector<Vec> samples = gen_rand_examples(s, cfg);
    REQUIRE(samples.size() == 10);
    for (std::size_t k = 1; k < 10; ++k)
        CHECK((samples[k][0] == -1.0 || samples[k][0] == 1.0));  // all corners, no uniforms yet
}

TEST_CASE("uniform stage covers the box") {
    InputSpec s = box_spec({0.5, 0.5, 0.5}, {0.0, 0.0, 0.0}, {1.0, 1.0, 1.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 10000;
    cfg.seed = 123;
    cfg.include_corners = false;
    std::vector<Vec> samples = gen_rand_examples(s, cfg);
    Vec lo(3, 1e9), hi(3, -1e9);
    for (const Vec& v : samples) {
        for (std::size_t i = 0; i < 3; ++i) {
            REQUIRE(v[i] >= 0.0);
            REQUIRE(v[i] <= 1.0);
            lo[i] = std::min(lo[i], v[i]);
            hi[i] = std::max(hi[i], v[i]);
        }
    }
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(lo[i] <= 0.01);
        CHECK(hi[i] >= 0.99);
    }
}

TEST_CASE("base point outside the box is clamped in") {
    InputSpec s = box_spec({5.0, -5.0}, {0.0, 0.0}, {1.0, 1.0}, 0);
    FalsifyConfig cfg;
    cfg.num_samples = 3;
    std::vector<Vec> samples = gen_rand_examples(s, cfg);
    CHECK(samples[0] == Vec{1.0, 0.0});
}

TEST_CASE("spec validation") {
    FalsifyConfig cfg;
    CHECK_THROWS_AS(gen_rand_examples(box_spec({0.0}, {1.0}, {-1.0}, 0), cfg),
                    std::invalid_argument);
    CHECK_THROWS_AS(gen_rand_examples(box_spec({}, {}, {}, 0), cfg), std::invalid_argument);
    cfg.num_samples = 0;
    CHECK_THROWS_AS(gen_rand_examples(box_spec({0.0}, {0.0}, {0.0}, 0), cfg),
                    std::invalid_argument);
}

TEST_CASE("epsilon-zero falsification is decided by the base point") {
    // logits = (x0, -x0): positive input -> class 0.
    Mat w(2, 1);
    w(0, 0) = 1.0;
    w(1, 0) = -1.0;
    Network net = affine_net(w, {0.0, 0.0});
    FalsifyConfig cfg;
    cfg.num_samples = 20;

    InputSpec agree = point_spec({0.7}, 0);
    CHECK_FALSE(falsify(net, agree, cfg).has_value());

    InputSpec disagree = point_spec({0.7}, 1);
    auto cex = falsify(net, disagree, cfg);
    REQUIRE(cex.has_value());
    CHECK(cex->x == disagree.base);
    CHECK(cex->predicted == 0);
}

TEST_CASE("constant-output net is decided by the argmax tie-break") {
    // All-zero logits: argmax always class 0.
    Network net = affine_net(Mat(3, 2), {0.0, 0.0, 0.0});
    FalsifyConfig cfg;
    cfg.num_samples = 10;
    InputSpec s = box_spec({0.0, 0.0}, {-1.0, -1.0}, {1.0, 1.0}, 0);
    CHECK_FALSE(falsify(net, s, cfg).has_value());
    for (std::size_t target : {std::size_t{1}, std::size_t{2}}) {
        s.target = target;
        auto cex = falsify(net, s, cfg);
        REQUIRE(cex.has_value());
        CHECK(cex->x == s.base);  // very first sample already misclassifies
        CHECK(cex->predicted == 0);
    }
}

TEST_CASE("returned counterexamples are in-box misclassifications") {
    Rng rng(555);
    int found = 0;
    for (int trial = 0; trial < 40; ++trial) {
        Network net = random_net(rng, {3, 6, 3});
        Vec x0 = random_vec(rng, 3, -1.0, 1.0);
        InputSpec s;
        s.base = x0;
        for (double v : x0) {
            s.lower.push_back(v - 0.6);
            s.upper.push_back(v + 0.6);
        }
        s.target = infer(net, x0).label;
        FalsifyConfig cfg;
        cfg.num_samples = 60;
        cfg.seed = 1000 + static_cast<std::uint64_t>(trial);
        auto cex = falsify(net, s, cfg);
        auto again = falsify(net, s, cfg);
        // Deterministic outcome.
        CHECK(cex.has_value() == again.has_value());
        if (!cex) continue;
        ++found;
        CHECK(cex->x == again->x);
        for (std::size_t i = 0; i < 3; ++i) {
            CHECK(cex->x[i] >= s.lower[i]);
            CHECK(cex->x[i] <= s.upper[i]);
        }
        Prediction pred = infer(net, cex->x);
        CHECK(pred.label != s.target);
        CHECK(pred.label == cex->predicted);
    }
    CHECK(found > 0);  // boxes this wide should break several nets
}

TEST_CASE("falsify validates dimensions") {
    Rng rng(1);
    Network net = random_net(rng, {4, 4, 2});
    InputSpec s = point_spec({0.0, 0.0}, 0);
    FalsifyConfig cfg;
    CHECK_THROWS_AS(falsify(net, s, cfg), std::invalid_argument);
}
