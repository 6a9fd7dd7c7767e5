#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "malcert/network.hpp"
#include "malcert/specgen.hpp"

namespace malcert {

struct FalsifyConfig {
    std::size_t num_samples = 500;  // N_R
    std::uint64_t seed = 0;
    bool include_corners = true;
};

struct Counterexample {
    Vec x;
    std::size_t predicted = 0;
};

// Deterministic sample plan: the base point first, then (optionally) up to 32
// random corners of the box, then uniform draws. Every sample lies in
// [lower, upper].
std::vector<Vec> gen_rand_examples(const InputSpec& spec, const FalsifyConfig& cfg);

// First sample whose argmax differs from spec.target, re-checked before
// return; empty when all N_R samples classify as the target.
std::optional<Counterexample> falsify(const Network& net, const InputSpec& spec,
                                      const FalsifyConfig& cfg);

}  // namespace malcert
