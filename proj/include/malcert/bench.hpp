#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "malcert/specgen.hpp"
#include "malcert/verifier.hpp"

namespace malcert {

struct Dataset {
    std::vector<Vec> X;
    std::vector<std::size_t> y;
    std::vector<std::string> feature_names;
    std::size_t num_classes = 0;  // max label + 1
};

// CSV with a header; the `label` column holds integer classes, all other
// columns are features in order.
Dataset load_dataset_csv(const std::string& text);
std::string dataset_to_csv(const Dataset& ds);

struct SampleRef {
    std::size_t index = 0;  // row in the dataset
    Vec x;
    std::size_t label = 0;
};

struct SampleSelection {
    std::size_t count = 0;                  // uniform without replacement
    std::optional<std::size_t> per_class;   // overrides count when set
    std::uint64_t seed = 0;
};

struct BenchModel {
    std::string name;
    Network net;
};

struct BenchPlan {
    std::vector<BenchModel> models;
    const FeatureSchema* schema = nullptr;  // feature mode when set, pixel otherwise
    std::vector<std::string> masks;         // preset names; pixel mode forces {"all"}
    std::vector<double> epsilons;
    SampleSelection selection;
    VerifyConfig verifier;
    bool exact = false;  // verify_exact instead of the staged strategy
    std::size_t workers = 1;
};

struct BenchRow {
    std::string model;
    std::string mask;
    double epsilon = 0.0;
    std::size_t sample = 0;  // dataset row index
    std::size_t label = 0;
    int verdict = 2;
    std::string stage;
    double time_s = 0.0;
};

struct BenchCell {
    std::string model;
    std::string mask;
    double epsilon = 0.0;
    double cra_pct = 0.0;
    double avg_time_s = 0.0;
};

struct ClassCount {
    std::string model;
    std::size_t label = 0;
    std::size_t robust = 0;
    std::size_t total = 0;
};

struct BenchReport {
    std::vector<BenchRow> rows;  // sorted by (model, mask, epsilon, sample)
    std::vector<BenchCell> aggregates;
};

// Deterministic under seed; the same selection is reused across every
// (model, mask, epsilon) cell. Selected rows come back sorted by index.
std::vector<SampleRef> select_samples(const Dataset& ds, const SampleSelection& sel);

// One verify call per (model, mask, epsilon, sample). Failures become code-2
// rows tagged "error:..." instead of aborting the sweep.
BenchReport run_benchmark(const BenchPlan& plan, const Dataset& ds);

// Aggregates are a pure function of the rows; recomputable by anyone.
std::vector<BenchCell> aggregate_rows(const std::vector<BenchRow>& rows);
std::vector<ClassCount> per_class_table(const std::vector<BenchRow>& rows);

std::string rows_csv(const std::vector<BenchRow>& rows);
std::vector<BenchRow> parse_rows_csv(const std::string& text);
std::string aggregate_csv(const std::vector<BenchCell>& cells);
std::string per_class_csv(const std::vector<ClassCount>& counts);

}  // namespace malcert
