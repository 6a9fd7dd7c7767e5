#include "malcert/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "malcert/rng.hpp"

namespace malcert {

namespace {

// Flat parameter gradients / Adam moments for one trainable layer.
struct Buffers {
    Vec gw, gb;          // gradient accumulators
    Vec mw, vw, mb, vb;  // Adam moments

    void init(std::size_t nw, std::size_t nb) {
        gw.assign(nw, 0.0);
        gb.assign(nb, 0.0);
        mw.assign(nw, 0.0);
        vw.assign(nw, 0.0);
        mb.assign(nb, 0.0);
        vb.assign(nb, 0.0);
    }
    void zero_grads() {
        std::fill(gw.begin(), gw.end(), 0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
    }
};

Vec conv_forward(const Conv2DLayer& cv, const Vec& in) {
    const std::size_t C = cv.in_shape[0], H = cv.in_shape[1], W = cv.in_shape[2];
    const std::size_t OH = cv.out_height(), OW = cv.out_width();
    Vec out(cv.output_size(), 0.0);
    for (std::size_t f = 0; f < cv.filters; ++f)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
                double acc = cv.bias[f];
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t kh = 0; kh < cv.kernel[0]; ++kh) {
                        const long iy = static_cast<long>(oy * cv.stride[0] + kh) -
                                        static_cast<long>(cv.padding[0]);
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        for (std::size_t kw = 0; kw < cv.kernel[1]; ++kw) {
                            const long ix = static_cast<long>(ox * cv.stride[1] + kw) -
                                            static_cast<long>(cv.padding[1]);
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            acc += cv.weight_at(f, c, kh, kw) *
                                   in[(c * H + static_cast<std::size_t>(iy)) * W +
                                      static_cast<std::size_t>(ix)];
                        }
                    }
                out[(f * OH + oy) * OW + ox] = acc;
            }
    return out;
}

// Accumulates weight/bias gradients and returns the input gradient.
Vec conv_backward(const Conv2DLayer& cv, const Vec& in, const Vec& dout, Buffers& buf) {
    const std::size_t C = cv.in_shape[0], H = cv.in_shape[1], W = cv.in_shape[2];
    const std::size_t OH = cv.out_height(), OW = cv.out_width();
    const std::size_t KH = cv.kernel[0], KW = cv.kernel[1];
    Vec din(in.size(), 0.0);
    for (std::size_t f = 0; f < cv.filters; ++f)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const double g = dout[(f * OH + oy) * OW + ox];
                if (g == 0.0) continue;
                buf.gb[f] += g;
                for (std::size_t c = 0; c < C; ++c)
                    for (std::size_t kh = 0; kh < KH; ++kh) {
                        const long iy = static_cast<long>(oy * cv.stride[0] + kh) -
                                        static_cast<long>(cv.padding[0]);
                        if (iy < 0 || iy >= static_cast<long>(H)) continue;
                        for (std::size_t kw = 0; kw < KW; ++kw) {
                            const long ix = static_cast<long>(ox * cv.stride[1] + kw) -
                                            static_cast<long>(cv.padding[1]);
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            const std::size_t ii =
                                (c * H + static_cast<std::size_t>(iy)) * W +
                                static_cast<std::size_t>(ix);
                            const std::size_t wi = ((f * C + c) * KH + kh) * KW + kw;
                            buf.gw[wi] += g * in[ii];
                            din[ii] += cv.weights[wi] * g;
                        }
                    }
            }
    return din;
}

void adam_step(Vec& theta, Vec& m, Vec& v, const Vec& g, const AdamConfig& a, double bias1,
               double bias2) {
    for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = a.beta1 * m[i] + (1.0 - a.beta1) * g[i];
        v[i] = a.beta2 * v[i] + (1.0 - a.beta2) * g[i] * g[i];
        const double mh = m[i] / bias1;
        const double vh = v[i] / bias2;
        theta[i] -= a.lr * mh / (std::sqrt(vh) + a.eps);
    }
}

double softmax_ce(const Vec& logits, std::size_t label, Vec& probs) {
    probs.assign(logits.size(), 0.0);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        probs[i] = std::exp(logits[i] - mx);
        sum += probs[i];
    }
    for (double& p : probs) p /= sum;
    const double p = std::max(probs[label], 1e-300);
    return -std::log(p);
}

Network lowered_copy(const Network& net) {
    Network out = net;
    for (Layer& layer : out.layers)
        if (const auto* cv = std::get_if<Conv2DLayer>(&layer)) layer = lower_conv(*cv);
    return out;
}

}  // namespace

TrainResult train(const std::vector<Vec>& X, const std::vector<std::size_t>& y,
                  std::size_t num_classes, const TrainConfig& cfg) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("train: bad dataset");
    if (num_classes < 2) throw std::invalid_argument("train: need at least 2 classes");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    const std::size_t input_dim = X[0].size();
    if (input_dim == 0) throw std::invalid_argument("train: empty feature rows");
    for (const Vec& row : X)
        if (row.size() != input_dim) throw std::invalid_argument("train: ragged dataset");
    for (std::size_t label : y)
        if (label >= num_classes) throw std::invalid_argument("train: label out of range");

    // Assemble the architecture.
    Network net;
    net.input_dim = input_dim;
    net.num_classes = num_classes;
    std::size_t dim = input_dim;
    if (cfg.conv) {
        const ConvFront& cf = *cfg.conv;
        if (cf.channels * cf.height * cf.width != input_dim)
            throw std::invalid_argument("train: conv shape does not match input dim");
        if (cf.kernel == 0 || cf.stride == 0 || cf.filters == 0 || cf.kernel > cf.height ||
            cf.kernel > cf.width)
            throw std::invalid_argument("train: bad conv geometry");
        Conv2DLayer cv;
        cv.in_shape = {cf.channels, cf.height, cf.width};
        cv.filters = cf.filters;
        cv.kernel = {cf.kernel, cf.kernel};
        cv.stride = {cf.stride, cf.stride};
        cv.padding = {0, 0};
        cv.weights.assign(cf.filters * cf.channels * cf.kernel * cf.kernel, 0.0);
        cv.bias.assign(cf.filters, 0.0);
        dim = cv.output_size();
        net.layers.push_back(std::move(cv));
        net.layers.push_back(ReluLayer{dim});
    }
    for (std::size_t width : cfg.hidden) {
        if (width == 0) throw std::invalid_argument("train: zero-width hidden layer");
        net.layers.push_back(AffineLayer{Mat(width, dim), Vec(width, 0.0)});
        net.layers.push_back(ReluLayer{width});
        dim = width;
    }
    net.layers.push_back(AffineLayer{Mat(num_classes, dim), Vec(num_classes, 0.0)});

    // Seeded init: weights uniform +-1/sqrt(fan_in) in layer order, flat
    // storage order; biases stay zero.
    Rng rng(cfg.seed);
    std::vector<Buffers> bufs(net.layers.size());
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
        if (auto* aff = std::get_if<AffineLayer>(&net.layers[li])) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(aff->weights.cols));
            for (double& w : aff->weights.data) w = rng.uniform(-bound, bound);
            bufs[li].init(aff->weights.data.size(), aff->bias.size());
        } else if (auto* cv = std::get_if<Conv2DLayer>(&net.layers[li])) {
            const double bound =
                1.0 / std::sqrt(static_cast<double>(cv->in_shape[0] * cv->kernel[0] *
                                                    cv->kernel[1]));
            for (double& w : cv->weights) w = rng.uniform(-bound, bound);
            bufs[li].init(cv->weights.size(), cv->bias.size());
        }
    }
    validate_network(net);

    std::vector<std::size_t> order(X.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    TrainResult result;
    std::size_t step = 0;
    std::vector<Vec> acts(net.layers.size() + 1);
    Vec probs;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (Buffers& b : bufs) b.zero_grads();

            for (std::size_t k = start; k < end; ++k) {
                const Vec& x = X[order[k]];
                const std::size_t label = y[order[k]];

                acts[0] = x;
                for (std::size_t li = 0; li < net.layers.size(); ++li) {
                    const Layer& layer = net.layers[li];
                    if (const auto* aff = std::get_if<AffineLayer>(&layer)) {
                        acts[li + 1] = matvec(aff->weights, acts[li]);
                        for (std::size_t i = 0; i < aff->bias.size(); ++i)
                            acts[li + 1][i] += aff->bias[i];
                    } else if (std::holds_alternative<ReluLayer>(layer)) {
                        acts[li + 1] = acts[li];
                        for (double& v : acts[li + 1]) v = std::max(0.0, v);
                    } else {
                        acts[li + 1] = conv_forward(std::get<Conv2DLayer>(layer), acts[li]);
                    }
                }

                epoch_loss += softmax_ce(acts.back(), label, probs);

                Vec delta = probs;
                delta[label] -= 1.0;
                for (std::size_t li = net.layers.size(); li-- > 0;) {
                    const Layer& layer = net.layers[li];
                    if (const auto* aff = std::get_if<AffineLayer>(&layer)) {
                        Buffers& b = bufs[li];
                        const Vec& in = acts[li];
                        Vec din(in.size(), 0.0);
                        for (std::size_t r = 0; r < aff->weights.rows; ++r) {
                            const double g = delta[r];
                            b.gb[r] += g;
                            const double* wrow = aff->weights.row(r);
                            double* grow = &b.gw[r * aff->weights.cols];
                            for (std::size_t c = 0; c < aff->weights.cols; ++c) {
                                grow[c] += g * in[c];
                                din[c] += wrow[c] * g;
                            }
                        }
                        delta = std::move(din);
                    } else if (std::holds_alternative<ReluLayer>(layer)) {
                        const Vec& in = acts[li];
                        for (std::size_t i = 0; i < delta.size(); ++i)
                            if (in[i] <= 0.0) delta[i] = 0.0;
                    } else {
                        delta = conv_backward(std::get<Conv2DLayer>(layer), acts[li], delta,
                                              bufs[li]);
                    }
                }
            }

            const double scale = 1.0 / static_cast<double>(end - start);
            ++step;
            const double bias1 = 1.0 - std::pow(cfg.adam.beta1, static_cast<double>(step));
            const double bias2 = 1.0 - std::pow(cfg.adam.beta2, static_cast<double>(step));
            for (std::size_t li = 0; li < net.layers.size(); ++li) {
                Buffers& b = bufs[li];
                if (b.gw.empty() && b.gb.empty()) continue;
                for (double& g : b.gw) g *= scale;
                for (double& g : b.gb) g *= scale;
                if (auto* aff = std::get_if<AffineLayer>(&net.layers[li])) {
                    adam_step(aff->weights.data, b.mw, b.vw, b.gw, cfg.adam, bias1, bias2);
                    adam_step(aff->bias, b.mb, b.vb, b.gb, cfg.adam, bias1, bias2);
                } else if (auto* cv = std::get_if<Conv2DLayer>(&net.layers[li])) {
                    adam_step(cv->weights, b.mw, b.vw, b.gw, cfg.adam, bias1, bias2);
                    adam_step(cv->bias, b.mb, b.vb, b.gb, cfg.adam, bias1, bias2);
                }
            }
        }
        epoch_loss /= static_cast<double>(X.size());
        if (!std::isfinite(epoch_loss))
            throw std::runtime_error("train: loss diverged to NaN/inf at epoch " +
                                     std::to_string(epoch + 1));
        if (epoch == 0) result.first_epoch_loss = epoch_loss;
        result.final_epoch_loss = epoch_loss;
    }

    result.net = std::move(net);
    result.train_accuracy = evaluate(result.net, X, y).accuracy;
    return result;
}

MetricsReport evaluate(const Network& net, const std::vector<Vec>& X,
                       const std::vector<std::size_t>& y) {
    if (X.empty() || X.size() != y.size()) throw std::invalid_argument("evaluate: bad dataset");
    const Network runnable = net.has_conv() ? lowered_copy(net) : net;
    std::vector<std::size_t> preds;
    preds.reserve(X.size());
    for (const Vec& x : X) preds.push_back(infer(runnable, x).label);
    return compute_metrics(confusion(preds, y, net.num_classes));
}

}  // namespace malcert
