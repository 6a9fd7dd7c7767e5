#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "malcert/linalg.hpp"

namespace malcert {

struct AffineLayer {
    Mat weights;  // out x in
    Vec bias;     // out
};

struct ReluLayer {
    std::size_t width = 0;
};

struct Conv2DLayer {
    std::array<std::size_t, 3> in_shape{};  // channels, height, width
    std::size_t filters = 0;
    std::array<std::size_t, 2> kernel{};
    std::array<std::size_t, 2> stride{1, 1};
    std::array<std::size_t, 2> padding{0, 0};
    std::vector<double> weights;  // [filter][channel][kh][kw], row-major
    Vec bias;                     // filters

    std::size_t out_height() const;
    std::size_t out_width() const;
    std::size_t input_size() const { return in_shape[0] * in_shape[1] * in_shape[2]; }
    std::size_t output_size() const { return filters * out_height() * out_width(); }
    double weight_at(std::size_t f, std::size_t c, std::size_t kh, std::size_t kw) const;
};

using Layer = std::variant<AffineLayer, ReluLayer, Conv2DLayer>;

// Feed-forward ReLU classifier. Layers chain dimensionally; after load-time
// lowering only Affine and Relu layers remain. Immutable once built, so a
// single instance can back any number of concurrent queries.
struct Network {
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;
    std::vector<Layer> layers;
    std::vector<std::string> labels;  // optional class names

    bool has_conv() const;
    std::size_t layer_output_dim(std::size_t index) const;
};

struct Prediction {
    Vec logits;
    std::size_t label = 0;
};

// Lowers a convolution to the equivalent dense affine map. Exact up to
// floating-point associativity; summation order is fixed by matvec.
AffineLayer lower_conv(const Conv2DLayer& conv);

// Parses the JSON model format and lowers every conv2d layer. Errors carry
// the offending layer index.
Network load_model(const std::string& text);

// Serializes in the same JSON format (deterministic byte output). Conv layers
// are written as conv2d, so a trained conv model round-trips through lowering
// on the next load.
std::string save_model(const Network& net);

// Argmax with ties broken toward the smallest class index.
std::size_t argmax_label(const Vec& logits);

// Runs the lowered network. Throws if a conv layer is still present or the
// input dimension does not match.
Prediction infer(const Network& net, const Vec& x);

// Dimension-chain validation shared by load_model and the trainer.
void validate_network(const Network& net);

}  // namespace malcert
