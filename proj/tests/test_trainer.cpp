#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>
#include <stdexcept>

#include "malcert/rng.hpp"
#include "malcert/trainer.hpp"
#include "support.hpp"

using namespace malcert;
using namespace testsup;

namespace {

// Two well-separated 2-D gaussian-ish blobs.
void blobs(Rng& rng, std::size_t n, std::vector<Vec>& X, std::vector<std::size_t>& y) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 2;
        const double cx = cls == 0 ? -2.0 : 2.0;
        X.push_back({cx + rng.uniform(-0.8, 0.8), rng.uniform(-0.8, 0.8)});
        y.push_back(cls);
    }
}

// 1x4x4 images: class 1 iff the top-left 2x2 block is bright.
void quadrant_images(Rng& rng, std::size_t n, std::vector<Vec>& X,
                     std::vector<std::size_t>& y) {
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t cls = i % 2;
        Vec img(16);
        for (std::size_t p = 0; p < 16; ++p) img[p] = rng.uniform(0.0, 0.3);
        if (cls == 1)
            for (std::size_t r = 0; r < 2; ++r)
                for (std::size_t c = 0; c < 2; ++c) img[r * 4 + c] = rng.uniform(0.7, 1.0);
        X.push_back(std::move(img));
        y.push_back(cls);
    }
}

}  // namespace

TEST_CASE("separable blobs reach high training accuracy") {
    Rng rng(1);
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    blobs(rng, 120, X, y);
    TrainConfig cfg;
    cfg.hidden = {};  // plain 2 -> 2 logistic-style model
    cfg.adam.lr = 0.05;  // Adam steps are lr-bounded; the bare model needs room
    cfg.epochs = 60;
    cfg.batch_size = 16;
    cfg.seed = 5;
    TrainResult res = train(X, y, 2, cfg);
    CHECK(res.train_accuracy >= 0.95);
    CHECK(res.final_epoch_loss <= res.first_epoch_loss);
    CHECK(res.net.input_dim == 2);
    CHECK(res.net.num_classes == 2);
}

TEST_CASE("hidden layers work and losses stay ordered") {
    Rng rng(2);
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    blobs(rng, 100, X, y);
    TrainConfig cfg;
    cfg.hidden = {8, 4};
    cfg.epochs = 25;
    cfg.batch_size = 10;
    cfg.seed = 77;
    TrainResult res = train(X, y, 2, cfg);
    CHECK(res.train_accuracy >= 0.95);
    CHECK(res.final_epoch_loss <= res.first_epoch_loss);
    // Architecture: affine+relu per hidden width plus the head.
    CHECK(res.net.layers.size() == 5);
}

TEST_CASE("same seed gives byte-identical model files") {
    Rng rng(3);
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    blobs(rng, 60, X, y);
    TrainConfig cfg;
    cfg.hidden = {6};
    cfg.epochs = 8;
    cfg.batch_size = 8;
    cfg.seed = 4242;
    std::string a = save_model(train(X, y, 2, cfg).net);
    std::string b = save_model(train(X, y, 2, cfg).net);
    CHECK(a == b);
    cfg.seed = 4243;
    std::string c = save_model(train(X, y, 2, cfg).net);
    CHECK(a != c);
}

TEST_CASE("trained models round-trip through the model format") {
    Rng rng(4);
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    blobs(rng, 80, X, y);
    TrainConfig cfg;
    cfg.hidden = {5};
    cfg.epochs = 10;
    cfg.seed = 9;
    Network net = train(X, y, 2, cfg).net;
    Network back = load_model(save_model(net));
    for (int k = 0; k < 50; ++k) {
        Vec x = {rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)};
        Prediction p = infer(net, x);
        Prediction q = infer(back, x);
        CHECK(p.label == q.label);
        CHECK(p.logits == q.logits);
    }
}

TEST_CASE("conv front end learns the quadrant task") {
    Rng rng(5);
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    quadrant_images(rng, 120, X, y);
    TrainConfig cfg;
    ConvFront cf;
    cf.channels = 1;
    cf.height = 4;
    cf.width = 4;
    cf.filters = 4;
    cf.kernel = 3;
    cf.stride = 2;  // no padding: 4 -> 1 spatial, 4 values total
    cfg.conv = cf;
    cfg.hidden = {};
    cfg.epochs = 40;
    cfg.batch_size = 16;
    cfg.seed = 31;
    TrainResult res = train(X, y, 2, cfg);
    CHECK(res.train_accuracy >= 0.9);
    CHECK(res.net.has_conv());

    // Conv weights serialize raw and lower on load; inference must agree
    // with the trainer's own evaluation path.
    Network loaded = load_model(save_model(res.net));
    CHECK_FALSE(loaded.has_conv());
    std::vector<std::size_t> preds;
    for (const Vec& x : X) preds.push_back(infer(loaded, x).label);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (preds[i] == y[i]) ++correct;
    CHECK(static_cast<double>(correct) / static_cast<double>(y.size()) ==
          doctest::Approx(res.train_accuracy).epsilon(1e-12));

    // Determinism holds for conv training too.
    CHECK(save_model(train(X, y, 2, cfg).net) == save_model(res.net));
}

TEST_CASE("config validation") {
    std::vector<Vec> X = {{0.0, 0.0}, {1.0, 1.0}};
    std::vector<std::size_t> y = {0, 1};
    TrainConfig cfg;
    cfg.epochs = 0;
    CHECK_THROWS_AS(train(X, y, 2, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(train(X, y, 2, cfg), std::invalid_argument);
    cfg = TrainConfig{};
    CHECK_THROWS_AS(train({}, {}, 2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train(X, {0}, 2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train(X, {0, 5}, 2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train({{0.0}, {1.0, 2.0}}, y, 2, cfg), std::invalid_argument);
    CHECK_THROWS_AS(train(X, y, 1, cfg), std::invalid_argument);
    ConvFront cf;
    cf.height = 3;
    cf.width = 3;  // 9 != 2
    cfg.conv = cf;
    CHECK_THROWS_AS(train(X, y, 2, cfg), std::invalid_argument);
}

TEST_CASE("NaN input aborts with a diagnostic") {
    std::vector<Vec> X = {{0.0, 1.0}, {std::numeric_limits<double>::quiet_NaN(), 0.0}};
    std::vector<std::size_t> y = {0, 1};
    TrainConfig cfg;
    cfg.epochs = 2;
    CHECK_THROWS_AS(train(X, y, 2, cfg), std::runtime_error);
}

TEST_CASE("evaluate routes through the metrics module") {
    Rng rng(6);
    Network net = random_net(rng, {3, 5, 3});
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    std::vector<std::size_t> preds;
    for (int i = 0; i < 40; ++i) {
        Vec x = random_vec(rng, 3, -1.0, 1.0);
        preds.push_back(infer(net, x).label);
        X.push_back(std::move(x));
        y.push_back(rng.index(3));
    }
    MetricsReport via_eval = evaluate(net, X, y);
    MetricsReport direct = compute_metrics(confusion(preds, y, 3));
    CHECK(via_eval.accuracy == direct.accuracy);
    CHECK(via_eval.precision_macro == direct.precision_macro);
    CHECK(via_eval.recall_macro == direct.recall_macro);
    CHECK(via_eval.f1 == direct.f1);
}

TEST_CASE("evaluate on memorized data is perfect; on random labels chance-level") {
    Rng rng(7);
    // argmax(x0, x1, -x0-x1) covers all three classes, so no class is absent
    // from the label set and the macro averages have no 0/0 cells.
    Network net;
    net.input_dim = 2;
    net.num_classes = 3;
    Mat w(3, 2);
    w(0, 0) = 1.0;
    w(1, 1) = 1.0;
    w(2, 0) = -1.0;
    w(2, 1) = -1.0;
    net.layers.push_back(AffineLayer{w, {0.0, 0.0, 0.0}});
    std::vector<Vec> X = {{2.0, 0.0}, {0.0, 2.0}, {-2.0, -2.0}};
    std::vector<std::size_t> self_labels, random_labels;
    for (const Vec& x : X) self_labels.push_back(infer(net, x).label);
    for (int i = 0; i < 3; ++i) random_labels.push_back(rng.index(3));
    for (int i = 0; i < 600; ++i) {
        Vec x = random_vec(rng, 2, -1.0, 1.0);
        self_labels.push_back(infer(net, x).label);  // memorized = its own argmax
        random_labels.push_back(rng.index(3));
        X.push_back(std::move(x));
    }
    MetricsReport perfect = evaluate(net, X, self_labels);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision_macro == 1.0);
    CHECK(perfect.recall_macro == 1.0);
    CHECK(perfect.f1 == 1.0);

    MetricsReport chance = evaluate(net, X, random_labels);
    CHECK(chance.accuracy >= 1.0 / 3.0 - 0.1);
    CHECK(chance.accuracy <= 1.0 / 3.0 + 0.1);
}

TEST_CASE("evaluate validates dimensions") {
    Rng rng(8);
    Network net = random_net(rng, {2, 3, 2});
    CHECK_THROWS_AS(evaluate(net, {}, {}), std::invalid_argument);
    CHECK_THROWS_AS(evaluate(net, {{1.0, 2.0}}, {0, 1}), std::invalid_argument);
    CHECK_THROWS(evaluate(net, {{1.0, 2.0, 3.0}}, {0}));
}
