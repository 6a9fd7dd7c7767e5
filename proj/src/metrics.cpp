#include "malcert/metrics.hpp"

#include <stdexcept>

namespace malcert {

ConfusionCounts confusion(const std::vector<std::size_t>& preds,
                          const std::vector<std::size_t>& labels, std::size_t num_classes) {
    if (preds.size() != labels.size())
        throw std::invalid_argument("metrics: prediction / label length mismatch");
    if (preds.empty()) throw std::invalid_argument("metrics: empty input");
    if (num_classes == 0) throw std::invalid_argument("metrics: num_classes must be >= 1");

    ConfusionCounts cc;
    cc.num_classes = num_classes;
    cc.total = preds.size();
    cc.tp.assign(num_classes, 0);
    cc.tn.assign(num_classes, 0);
    cc.fp.assign(num_classes, 0);
    cc.fn.assign(num_classes, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] >= num_classes || labels[i] >= num_classes)
            throw std::invalid_argument("metrics: class index out of range");
        for (std::size_t c = 0; c < num_classes; ++c) {
            const bool p = preds[i] == c;
            const bool l = labels[i] == c;
            if (p && l)
                ++cc.tp[c];
            else if (p && !l)
                ++cc.fp[c];
            else if (!p && l)
                ++cc.fn[c];
            else
                ++cc.tn[c];
        }
    }
    return cc;
}

MetricsReport compute_metrics(const ConfusionCounts& cc) {
    if (cc.total == 0 || cc.num_classes == 0) throw std::invalid_argument("metrics: empty counts");
    MetricsReport r;
    std::size_t correct = 0;
    double prec_sum = 0.0, rec_sum = 0.0;
    for (std::size_t c = 0; c < cc.num_classes; ++c) {
        correct += cc.tp[c];
        const double tp = static_cast<double>(cc.tp[c]);
        const double fp = static_cast<double>(cc.fp[c]);
        const double fn = static_cast<double>(cc.fn[c]);
        if (tp + fp > 0.0) prec_sum += tp / (tp + fp);
        if (tp + fn > 0.0) rec_sum += tp / (tp + fn);
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(cc.total);
    r.precision_macro = prec_sum / static_cast<double>(cc.num_classes);
    r.recall_macro = rec_sum / static_cast<double>(cc.num_classes);
    const double pr = r.precision_macro + r.recall_macro;
    r.f1 = pr > 0.0 ? 2.0 * r.precision_macro * r.recall_macro / pr : 0.0;
    return r;
}

double cra_codes(const std::vector<int>& codes) {
    if (codes.empty()) throw std::invalid_argument("metrics: empty verdict list");
    std::size_t robust = 0;
    for (int c : codes)
        if (c == 1) ++robust;
    return static_cast<double>(robust) / static_cast<double>(codes.size());
}

double cra(const std::vector<Verdict>& verdicts) {
    std::vector<int> codes;
    codes.reserve(verdicts.size());
    for (const Verdict& v : verdicts) codes.push_back(v.code);
    return cra_codes(codes);
}

}  // namespace malcert
