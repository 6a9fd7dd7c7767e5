#include "malcert/network.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

namespace malcert {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void layer_error(std::size_t index, const std::string& what) {
    throw std::runtime_error("model: layer " + std::to_string(index) + ": " + what);
}

}  // namespace

std::size_t Conv2DLayer::out_height() const {
    std::size_t padded = in_shape[1] + 2 * padding[0];
    if (kernel[0] > padded) throw std::runtime_error("conv2d: kernel height exceeds padded input");
    return (padded - kernel[0]) / stride[0] + 1;
}

std::size_t Conv2DLayer::out_width() const {
    std::size_t padded = in_shape[2] + 2 * padding[1];
    if (kernel[1] > padded) throw std::runtime_error("conv2d: kernel width exceeds padded input");
    return (padded - kernel[1]) / stride[1] + 1;
}

double Conv2DLayer::weight_at(std::size_t f, std::size_t c, std::size_t kh, std::size_t kw) const {
    std::size_t idx = ((f * in_shape[0] + c) * kernel[0] + kh) * kernel[1] + kw;
    return weights[idx];
}

bool Network::has_conv() const {
    for (const auto& layer : layers)
        if (std::holds_alternative<Conv2DLayer>(layer)) return true;
    return false;
}

std::size_t Network::layer_output_dim(std::size_t index) const {
    const Layer& layer = layers[index];
    if (const auto* a = std::get_if<AffineLayer>(&layer)) return a->weights.rows;
    if (const auto* r = std::get_if<ReluLayer>(&layer)) return r->width;
    return std::get<Conv2DLayer>(layer).output_size();
}

AffineLayer lower_conv(const Conv2DLayer& conv) {
    const std::size_t channels = conv.in_shape[0];
    const std::size_t in_h = conv.in_shape[1];
    const std::size_t in_w = conv.in_shape[2];
    const std::size_t out_h = conv.out_height();
    const std::size_t out_w = conv.out_width();

    AffineLayer out;
    out.weights = Mat(conv.output_size(), conv.input_size());
    out.bias.resize(conv.output_size());

    for (std::size_t f = 0; f < conv.filters; ++f) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                std::size_t row = (f * out_h + oy) * out_w + ox;
                out.bias[row] = conv.bias[f];
                for (std::size_t c = 0; c < channels; ++c) {
                    for (std::size_t kh = 0; kh < conv.kernel[0]; ++kh) {
                        // signed: padding can push source indices negative
                        long iy = static_cast<long>(oy * conv.stride[0] + kh) -
                                  static_cast<long>(conv.padding[0]);
                        if (iy < 0 || iy >= static_cast<long>(in_h)) continue;
                        for (std::size_t kw = 0; kw < conv.kernel[1]; ++kw) {
                            long ix = static_cast<long>(ox * conv.stride[1] + kw) -
                                      static_cast<long>(conv.padding[1]);
                            if (ix < 0 || ix >= static_cast<long>(in_w)) continue;
                            std::size_t col = (c * in_h + static_cast<std::size_t>(iy)) * in_w +
                                              static_cast<std::size_t>(ix);
                            out.weights(row, col) += conv.weight_at(f, c, kh, kw);
                        }
                    }
                }
            }
        }
    }
    return out;
}

void validate_network(const Network& net) {
    if (net.input_dim == 0) throw std::runtime_error("model: input_dim must be positive");
    if (net.num_classes == 0) throw std::runtime_error("model: num_classes must be positive");
    std::size_t cur = net.input_dim;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const Layer& layer = net.layers[i];
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            if (a->weights.cols != cur)
                layer_error(i, "dense expects input " + std::to_string(a->weights.cols) +
                                   ", previous layer provides " + std::to_string(cur));
            if (a->bias.size() != a->weights.rows)
                layer_error(i, "bias length " + std::to_string(a->bias.size()) +
                                   " does not match weight rows " + std::to_string(a->weights.rows));
            cur = a->weights.rows;
        } else if (const auto* r = std::get_if<ReluLayer>(&layer)) {
            if (r->width != cur) layer_error(i, "relu width does not match previous layer");
            cur = r->width;
        } else {
            const auto& c = std::get<Conv2DLayer>(layer);
            if (c.input_size() != cur)
                layer_error(i, "conv2d in_shape does not match previous layer output");
            if (c.weights.size() != c.filters * c.in_shape[0] * c.kernel[0] * c.kernel[1])
                layer_error(i, "conv2d weight array shape must be (filters, channels, kh, kw)");
            if (c.bias.size() != c.filters) layer_error(i, "conv2d bias length must equal filters");
            cur = c.output_size();  // throws if kernel exceeds padded input
        }
    }
    if (cur != net.num_classes)
        throw std::runtime_error("model: final layer width " + std::to_string(cur) +
                                 " does not equal num_classes " + std::to_string(net.num_classes));
}

namespace {

Mat parse_matrix(const json& j, std::size_t layer_idx) {
    if (!j.is_array() || j.empty()) layer_error(layer_idx, "weights must be a non-empty 2-D array");
    Mat m(j.size(), j[0].size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_array() || j[i].size() != m.cols)
            layer_error(layer_idx, "weight rows have inconsistent lengths");
        for (std::size_t k = 0; k < m.cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

Layer parse_layer(const json& j, std::size_t idx, std::size_t cur_dim) {
    const std::string type = j.value("type", "");
    if (type == "dense") {
        AffineLayer a;
        a.weights = parse_matrix(j.at("weights"), idx);
        a.bias = j.at("bias").get<Vec>();
        return a;
    }
    if (type == "relu") {
        return ReluLayer{cur_dim};
    }
    if (type == "conv2d") {
        Conv2DLayer c;
        auto shape = j.at("in_shape").get<std::vector<std::size_t>>();
        if (shape.size() != 3) layer_error(idx, "in_shape must be [channels, height, width]");
        c.in_shape = {shape[0], shape[1], shape[2]};
        c.filters = j.at("filters").get<std::size_t>();
        auto pair = [&](const char* key, std::array<std::size_t, 2>& dst) {
            auto v = j.at(key).get<std::vector<std::size_t>>();
            if (v.size() != 2) layer_error(idx, std::string(key) + " must have two entries");
            dst = {v[0], v[1]};
        };
        pair("kernel", c.kernel);
        pair("stride", c.stride);
        pair("padding", c.padding);
        if (c.stride[0] == 0 || c.stride[1] == 0) layer_error(idx, "stride must be positive");
        const json& w = j.at("weights");
        c.weights.reserve(c.filters * c.in_shape[0] * c.kernel[0] * c.kernel[1]);
        if (!w.is_array() || w.size() != c.filters)
            layer_error(idx, "conv2d weights must be indexed [filter][channel][kh][kw]");
        for (const auto& per_filter : w) {
            if (!per_filter.is_array() || per_filter.size() != c.in_shape[0])
                layer_error(idx, "conv2d weights channel count mismatch");
            for (const auto& per_channel : per_filter) {
                if (!per_channel.is_array() || per_channel.size() != c.kernel[0])
                    layer_error(idx, "conv2d weights kernel height mismatch");
                for (const auto& per_row : per_channel) {
                    if (!per_row.is_array() || per_row.size() != c.kernel[1])
                        layer_error(idx, "conv2d weights kernel width mismatch");
                    for (const auto& v : per_row) c.weights.push_back(v.get<double>());
                }
            }
        }
        c.bias = j.at("bias").get<Vec>();
        return c;
    }
    layer_error(idx, "unknown layer type '" + type + "'");
}

}  // namespace

Network load_model(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw std::runtime_error(std::string("model: malformed JSON: ") + e.what());
    }
    try {
        if (doc.value("version", 0) != 1) throw std::runtime_error("model: unsupported version");
        Network net;
        net.input_dim = doc.at("input_dim").get<std::size_t>();
        net.num_classes = doc.at("num_classes").get<std::size_t>();
        if (doc.contains("labels")) net.labels = doc["labels"].get<std::vector<std::string>>();

        std::size_t cur = net.input_dim;
        for (std::size_t i = 0; i < doc.at("layers").size(); ++i) {
            net.layers.push_back(parse_layer(doc["layers"][i], i, cur));
            if (const auto* a = std::get_if<AffineLayer>(&net.layers.back()))
                cur = a->weights.rows;
            else if (const auto* c = std::get_if<Conv2DLayer>(&net.layers.back()))
                cur = c->output_size();
        }
        validate_network(net);

        // Lower once at load so reachability only ever sees Affine and Relu.
        for (auto& layer : net.layers)
            if (const auto* c = std::get_if<Conv2DLayer>(&layer)) layer = lower_conv(*c);
        return net;
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("model: ") + e.what());
    }
}

namespace {

ordered_json matrix_json(const Mat& m) {
    ordered_json rows = ordered_json::array();
    for (std::size_t i = 0; i < m.rows; ++i) {
        ordered_json row = ordered_json::array();
        for (std::size_t j = 0; j < m.cols; ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string save_model(const Network& net) {
    ordered_json doc;
    doc["version"] = 1;
    doc["input_dim"] = net.input_dim;
    doc["num_classes"] = net.num_classes;
    if (!net.labels.empty()) doc["labels"] = net.labels;
    ordered_json layers = ordered_json::array();
    for (const auto& layer : net.layers) {
        ordered_json j;
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            j["type"] = "dense";
            j["weights"] = matrix_json(a->weights);
            j["bias"] = a->bias;
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            j["type"] = "relu";
        } else {
            const auto& c = std::get<Conv2DLayer>(layer);
            j["type"] = "conv2d";
            j["in_shape"] = {c.in_shape[0], c.in_shape[1], c.in_shape[2]};
            j["filters"] = c.filters;
            j["kernel"] = {c.kernel[0], c.kernel[1]};
            j["stride"] = {c.stride[0], c.stride[1]};
            j["padding"] = {c.padding[0], c.padding[1]};
            ordered_json w = ordered_json::array();
            for (std::size_t f = 0; f < c.filters; ++f) {
                ordered_json per_f = ordered_json::array();
                for (std::size_t ch = 0; ch < c.in_shape[0]; ++ch) {
                    ordered_json per_c = ordered_json::array();
                    for (std::size_t kh = 0; kh < c.kernel[0]; ++kh) {
                        ordered_json per_r = ordered_json::array();
                        for (std::size_t kw = 0; kw < c.kernel[1]; ++kw)
                            per_r.push_back(c.weight_at(f, ch, kh, kw));
                        per_c.push_back(std::move(per_r));
                    }
                    per_f.push_back(std::move(per_c));
                }
                w.push_back(std::move(per_f));
            }
            j["weights"] = std::move(w);
            j["bias"] = c.bias;
        }
        layers.push_back(std::move(j));
    }
    doc["layers"] = std::move(layers);
    return doc.dump();
}

std::size_t argmax_label(const Vec& logits) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < logits.size(); ++i)
        if (logits[i] > logits[best]) best = i;
    return best;
}

Prediction infer(const Network& net, const Vec& x) {
    if (x.size() != net.input_dim) throw std::invalid_argument("infer: dimension mismatch");
    Vec cur = x;
    for (const auto& layer : net.layers) {
        if (const auto* a = std::get_if<AffineLayer>(&layer)) {
            cur = matvec(a->weights, cur);
            for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += a->bias[i];
        } else if (std::holds_alternative<ReluLayer>(layer)) {
            for (double& v : cur)
                if (v < 0.0) v = 0.0;
        } else {
            throw std::runtime_error("infer: network contains an unlowered conv2d layer");
        }
    }
    return Prediction{cur, argmax_label(cur)};
}

}  // namespace malcert
