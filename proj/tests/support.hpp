#pragma once

// Shared test-side generators and oracles. The oracles recompute results with
// deliberately naive code paths, independent of the library implementations
// they are used to check.

#include <cmath>
#include <cstddef>
#include <vector>

#include "malcert/network.hpp"
#include "malcert/rng.hpp"
#include "malcert/star.hpp"

namespace testsup {

using malcert::Conv2DLayer;
using malcert::Mat;
using malcert::Network;
using malcert::Rng;
using malcert::StarSet;
using malcert::Vec;

// Straight-line forward pass over explicit weight/bias lists with a ReLU
// after every layer except the last.
inline Vec forward_naive(const std::vector<Mat>& ws, const std::vector<Vec>& bs, Vec x) {
    for (std::size_t li = 0; li < ws.size(); ++li) {
        Vec y(ws[li].rows, 0.0);
        for (std::size_t i = 0; i < ws[li].rows; ++i) {
            double acc = bs[li][i];
            for (std::size_t j = 0; j < ws[li].cols; ++j) acc += ws[li](i, j) * x[j];
            y[i] = acc;
        }
        if (li + 1 < ws.size())
            for (double& v : y)
                if (v < 0.0) v = 0.0;
        x = y;
    }
    return x;
}

// Direct convolution, indexing the flat weight array from scratch.
inline Vec conv2d_direct(const Conv2DLayer& c, const Vec& x) {
    const std::size_t C = c.in_shape[0], H = c.in_shape[1], W = c.in_shape[2];
    const std::size_t KH = c.kernel[0], KW = c.kernel[1];
    const std::size_t OH = (H + 2 * c.padding[0] - KH) / c.stride[0] + 1;
    const std::size_t OW = (W + 2 * c.padding[1] - KW) / c.stride[1] + 1;
    Vec y(c.filters * OH * OW, 0.0);
    for (std::size_t f = 0; f < c.filters; ++f)
        for (std::size_t oy = 0; oy < OH; ++oy)
            for (std::size_t ox = 0; ox < OW; ++ox) {
                double acc = c.bias[f];
                for (std::size_t ch = 0; ch < C; ++ch)
                    for (std::size_t kh = 0; kh < KH; ++kh)
                        for (std::size_t kw = 0; kw < KW; ++kw) {
                            long iy = static_cast<long>(oy * c.stride[0] + kh) -
                                      static_cast<long>(c.padding[0]);
                            long ix = static_cast<long>(ox * c.stride[1] + kw) -
                                      static_cast<long>(c.padding[1]);
                            if (iy < 0 || iy >= static_cast<long>(H)) continue;
                            if (ix < 0 || ix >= static_cast<long>(W)) continue;
                            double w =
                                c.weights[((f * C + ch) * KH + kh) * KW + kw];
                            acc += w * x[(ch * H + static_cast<std::size_t>(iy)) * W +
                                         static_cast<std::size_t>(ix)];
                        }
                y[(f * OH + oy) * OW + ox] = acc;
            }
    return y;
}

inline Mat random_mat(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0,
                      double hi = 1.0) {
    Mat m(r, c);
    for (double& v : m.data) v = rng.uniform(lo, hi);
    return m;
}

inline Vec random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (double& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Dense ReLU net with the given layer widths (input first, classes last).
inline Network random_net(Rng& rng, const std::vector<std::size_t>& widths,
                          double scale = 1.0) {
    Network net;
    net.input_dim = widths.front();
    net.num_classes = widths.back();
    for (std::size_t li = 0; li + 1 < widths.size(); ++li) {
        malcert::AffineLayer a;
        a.weights = random_mat(rng, widths[li + 1], widths[li], -scale, scale);
        a.bias = random_vec(rng, widths[li + 1], -scale, scale);
        net.layers.push_back(a);
        if (li + 2 < widths.size()) net.layers.push_back(malcert::ReluLayer{widths[li + 1]});
    }
    return net;
}

inline Vec net_eval_naive(const Network& net, const Vec& x) {
    std::vector<Mat> ws;
    std::vector<Vec> bs;
    for (const auto& layer : net.layers)
        if (const auto* a = std::get_if<malcert::AffineLayer>(&layer)) {
            ws.push_back(a->weights);
            bs.push_back(a->bias);
        }
    return forward_naive(ws, bs, x);
}

inline Vec sample_box(Rng& rng, const Vec& lb, const Vec& ub) {
    Vec x(lb.size());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(lb[i], ub[i]);
    return x;
}

// True if x lands inside at least one of the stars.
inline bool in_union(const std::vector<StarSet>& stars, const Vec& x) {
    for (const StarSet& s : stars)
        if (malcert::star_contains(s, x)) return true;
    return false;
}

}  // namespace testsup
