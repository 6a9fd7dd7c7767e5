#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "malcert/falsifier.hpp"
#include "malcert/star.hpp"

namespace malcert {

struct StageTimes {
    double falsify = 0.0;
    double relax = 0.0;
    double approx = 0.0;
    double exact = 0.0;
    double total = 0.0;
};

// code: 0 falsified, 1 robust, 2 unknown. stage names the deciding phase:
// falsification | relax | approx | exact.
struct Verdict {
    int code = 2;
    std::string stage;
    StageTimes time_s;
    std::optional<Vec> counterexample;
    std::optional<std::size_t> predicted;
    std::uint64_t seed = 0;
};

struct VerifyConfig {
    std::size_t num_samples = 500;  // N_R for the falsification stage
    double relax_factor = 0.5;
    double timeout_s = 0.0;  // <= 0 means no deadline
    std::uint64_t seed = 0;
    bool include_corners = true;
    std::size_t star_budget = 10000;  // exact mode only
    LpOptions lp;
};

struct CheckResult {
    bool certified = false;
    // Predicate point maximizing Y_j - Y_target on the first violating pair,
    // when the LP produced one.
    std::optional<Vec> witness;
    std::size_t star_index = 0;
    std::size_t rival = 0;  // the j that failed
};

// Certified iff max(Y_j - Y_target) < 0 strictly, per star, per rival j.
// Ties and LP failures are undetermined.
CheckResult check_output_set(const std::vector<StarSet>& stars, std::size_t target,
                             const LpOptions& lp = {});

// Falsify -> relax(relax_factor) -> approx escalation; sound but incomplete.
Verdict verify_query(const Network& net, const InputSpec& spec, const VerifyConfig& cfg = {});

// Complete on desk-scale nets: exact reach, counterexamples recovered from LP
// witnesses and re-validated by concrete inference. Budget/timeout -> code 2.
Verdict verify_exact(const Network& net, const InputSpec& spec, const VerifyConfig& cfg = {});

std::string verdict_json(const Verdict& v);

}  // namespace malcert
