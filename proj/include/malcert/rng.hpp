#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace malcert {

// Seedable PRNG used everywhere randomness is needed. Wraps mt19937_64 with
// fixed bit-to-double mappings so that a seed fully determines every draw;
// std::uniform_real_distribution is implementation-defined and is avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1), 53 mantissa bits.
    double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    // Uniform index in [0, n). Modulo bias is irrelevant at our sizes.
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

    bool coin() { return (gen_() & 1u) != 0; }

    // Fisher-Yates; std::shuffle is not portable across standard libraries.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = index(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace malcert
