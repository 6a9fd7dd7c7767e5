#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "malcert/specgen.hpp"

namespace malcert {

// One disjunct of the output property: (op Y_lhs rhs) where rhs is another
// output variable or a constant.
struct OutputAtom {
    std::size_t lhs = 0;
    bool geq = true;  // >= when true, <= otherwise
    bool rhs_is_const = false;
    std::size_t rhs_index = 0;
    double rhs_value = 0.0;
};

struct VnnLibSpec {
    std::size_t num_inputs = 0;
    std::size_t num_outputs = 0;
    std::vector<std::pair<double, double>> input_bounds;
    std::vector<OutputAtom> property;  // satisfied if ANY atom holds
};

// Canonical text: declarations, two asserts per input (>= then <=), one
// property assert. Deterministic bytes; %.17g numerals so doubles round-trip.
std::string emit(const VnnLibSpec& spec);

// Negated-robustness emission: property = or_{j != target} (>= Y_j Y_target).
std::string emit(const InputSpec& spec, std::size_t target, std::size_t num_outputs);

// Accepts exactly the emitted grammar subset plus whitespace and ';' comments.
// Errors carry 1-based line numbers.
VnnLibSpec parse(const std::string& text);

// Recovers the target class when the property is a full negated-robustness
// disjunction; empty otherwise.
std::optional<std::size_t> robustness_target(const VnnLibSpec& spec);

struct BatchSample {
    Vec x;
    std::size_t y = 0;
};

struct ManifestRow {
    std::string file;
    std::size_t sample = 0;
    std::string mask;
    double epsilon = 0.0;
    std::size_t target = 0;
};

// Writes one .vnnlib per (sample, mask, eps) into out_dir, named
// <dataset>_<sample>_<mask>_<eps>.vnnlib. Feature mode when schema is given;
// pixel mode (mask fixed to "all", eps interpreted as k/255) otherwise.
std::vector<ManifestRow> batch_emit(const std::vector<BatchSample>& samples,
                                    std::vector<double> eps_list,
                                    std::vector<std::string> masks,
                                    const FeatureSchema* schema, const std::string& out_dir,
                                    const std::string& dataset_name, std::size_t num_outputs);

std::string manifest_csv(const std::vector<ManifestRow>& rows);

}  // namespace malcert
