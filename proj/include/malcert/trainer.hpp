#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "malcert/metrics.hpp"
#include "malcert/network.hpp"

namespace malcert {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Optional convolution front end: filters of kernel x kernel, stride `stride`,
// no padding, followed by ReLU, then the dense stack.
struct ConvFront {
    std::size_t channels = 1;
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t filters = 4;
    std::size_t kernel = 3;
    std::size_t stride = 2;
};

struct TrainConfig {
    std::vector<std::size_t> hidden;  // dense widths between input and logits
    std::optional<ConvFront> conv;
    AdamConfig adam;
    std::size_t epochs = 10;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
};

struct TrainResult {
    Network net;
    double first_epoch_loss = 0.0;
    double final_epoch_loss = 0.0;
    double train_accuracy = 0.0;
};

// Softmax + cross-entropy, Adam, seeded +-1/sqrt(fan_in) weight init with
// zero biases, per-epoch seeded shuffle. Fully deterministic given the seed.
TrainResult train(const std::vector<Vec>& X, const std::vector<std::size_t>& y,
                  std::size_t num_classes, const TrainConfig& cfg);

// Lowers any conv layer, infers every row, and routes through the metrics
// module.
MetricsReport evaluate(const Network& net, const std::vector<Vec>& X,
                       const std::vector<std::size_t>& y);

}  // namespace malcert
