#pragma once

#include <cstddef>
#include <vector>

#include "malcert/verifier.hpp"

namespace malcert {

struct ConfusionCounts {
    std::size_t num_classes = 0;
    std::size_t total = 0;
    std::vector<std::size_t> tp, tn, fp, fn;  // one-vs-rest, indexed by class
};

struct MetricsReport {
    double accuracy = 0.0;
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1 = 0.0;
};

ConfusionCounts confusion(const std::vector<std::size_t>& preds,
                          const std::vector<std::size_t>& labels, std::size_t num_classes);

// Accuracy = correct/total; precision/recall are macro averages with 0/0
// class terms counted as 0; F1 = 2PR/(P+R), 0 when P+R = 0.
MetricsReport compute_metrics(const ConfusionCounts& cc);

// Certified robustness accuracy: fraction of verdicts with code 1. Codes 0
// and 2 both count against it.
double cra(const std::vector<Verdict>& verdicts);
double cra_codes(const std::vector<int>& codes);

}  // namespace malcert
