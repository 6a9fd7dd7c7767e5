#include "malcert/falsifier.hpp"

#include <algorithm>
#include <stdexcept>

#include "malcert/rng.hpp"

namespace malcert {

std::vector<Vec> gen_rand_examples(const InputSpec& spec, const FalsifyConfig& cfg) {
    const std::size_t n = spec.lower.size();
    if (n == 0 || spec.upper.size() != n || spec.base.size() != n)
        throw std::invalid_argument("falsify: malformed input spec");
    for (std::size_t i = 0; i < n; ++i)
        if (spec.lower[i] > spec.upper[i])
            throw std::invalid_argument("falsify: crossed bounds");
    if (cfg.num_samples == 0) throw std::invalid_argument("falsify: num_samples must be >= 1");

    Rng rng(cfg.seed);
    std::vector<Vec> out;
    out.reserve(cfg.num_samples);

    Vec base = spec.base;
    for (std::size_t i = 0; i < n; ++i)
        base[i] = std::min(std::max(base[i], spec.lower[i]), spec.upper[i]);
    out.push_back(base);

    if (cfg.include_corners) {
        std::size_t corners = std::min<std::size_t>(32, cfg.num_samples - out.size());
        for (std::size_t k = 0; k < corners; ++k) {
            Vec c(n);
            for (std::size_t i = 0; i < n; ++i)
                c[i] = rng.coin() ? spec.upper[i] : spec.lower[i];
            out.push_back(std::move(c));
        }
    }
    while (out.size() < cfg.num_samples) {
        Vec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = rng.uniform(spec.lower[i], spec.upper[i]);
        out.push_back(std::move(x));
    }
    return out;
}

std::optional<Counterexample> falsify(const Network& net, const InputSpec& spec,
                                      const FalsifyConfig& cfg) {
    if (net.input_dim != spec.lower.size())
        throw std::invalid_argument("falsify: spec does not match network input dim");
    for (const Vec& x : gen_rand_examples(spec, cfg)) {
        Prediction pred = infer(net, x);
        if (pred.label == spec.target) continue;
        // Re-check the invariants we promise about anything we return.
        bool inside = true;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] < spec.lower[i] || x[i] > spec.upper[i]) inside = false;
        if (inside && infer(net, x).label != spec.target) return Counterexample{x, pred.label};
    }
    return std::nullopt;
}

}  // namespace malcert
