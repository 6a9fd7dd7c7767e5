#include "malcert/verifier.hpp"

#include <algorithm>
#include <chrono>
#include <stdexcept>

#include <json.hpp>

namespace malcert {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

// max of (Y_j - Y_target) over one output star's predicate polytope.
LpOutcome max_gap(const StarSet& s, std::size_t j, std::size_t target, const LpOptions& lp,
                  double& constant) {
    LinearProgram prog;
    prog.sense = LpSense::Maximize;
    Vec vj = s.basis.row_copy(j);
    Vec vt = s.basis.row_copy(target);
    prog.objective.resize(s.num_preds());
    for (std::size_t k = 0; k < s.num_preds(); ++k) prog.objective[k] = vj[k] - vt[k];
    prog.constraints = s.pred_C;
    if (prog.constraints.rows == 0) prog.constraints = Mat(0, s.num_preds());
    prog.rhs = s.pred_d;
    prog.lower = s.pred_lb;
    prog.upper = s.pred_ub;
    constant = s.center[j] - s.center[target];
    return lp_solve(prog, lp);
}

void validate_spec(const Network& net, const InputSpec& spec) {
    const std::size_t n = spec.lower.size();
    if (n == 0 || spec.upper.size() != n || spec.base.size() != n)
        throw std::invalid_argument("verify: malformed input spec");
    if (net.input_dim != n)
        throw std::invalid_argument("verify: spec does not match network input dim");
    if (spec.target >= net.num_classes)
        throw std::invalid_argument("verify: target class out of range");
}

Clock::time_point deadline_for(const VerifyConfig& cfg, Clock::time_point t0) {
    if (cfg.timeout_s <= 0.0) return Clock::time_point::max();
    return t0 + std::chrono::duration_cast<Clock::duration>(
                    std::chrono::duration<double>(cfg.timeout_s));
}

}  // namespace

CheckResult check_output_set(const std::vector<StarSet>& stars, std::size_t target,
                             const LpOptions& lp) {
    CheckResult res;
    for (std::size_t si = 0; si < stars.size(); ++si) {
        const StarSet& s = stars[si];
        if (target >= s.dim()) throw std::invalid_argument("verify: target class out of range");
        for (std::size_t j = 0; j < s.dim(); ++j) {
            if (j == target) continue;
            double constant = 0.0;
            LpOutcome out = max_gap(s, j, target, lp, constant);
            if (out.status == LpStatus::Infeasible) break;  // empty star certifies trivially
            if (out.status != LpStatus::Optimal) {
                res.certified = false;
                res.star_index = si;
                res.rival = j;
                return res;  // LP failure: undetermined, no trustworthy witness
            }
            if (out.value + constant >= 0.0) {
                res.certified = false;
                res.witness = out.point;
                res.star_index = si;
                res.rival = j;
                return res;
            }
        }
    }
    res.certified = true;
    return res;
}

Verdict verify_query(const Network& net, const InputSpec& spec, const VerifyConfig& cfg) {
    validate_spec(net, spec);
    if (cfg.relax_factor < 0.0 || cfg.relax_factor > 1.0)
        throw std::invalid_argument("verify: relax factor outside [0,1]");
    if (cfg.num_samples == 0) throw std::invalid_argument("verify: num_samples must be >= 1");

    Verdict v;
    v.seed = cfg.seed;
    const Clock::time_point t0 = Clock::now();
    const Clock::time_point deadline = deadline_for(cfg, t0);

    // Stage 1: random falsification.
    {
        const Clock::time_point s0 = Clock::now();
        FalsifyConfig fc;
        fc.num_samples = cfg.num_samples;
        fc.seed = cfg.seed;
        fc.include_corners = cfg.include_corners;
        std::vector<Vec> samples = gen_rand_examples(spec, fc);
        for (std::size_t k = 0; k < samples.size(); ++k) {
            if ((k & 31u) == 0 && Clock::now() > deadline) {
                v.time_s.falsify = seconds_since(s0);
                v.time_s.total = seconds_since(t0);
                v.code = 2;
                v.stage = "falsification";
                return v;
            }
            Prediction pred = infer(net, samples[k]);
            if (pred.label != spec.target) {
                v.time_s.falsify = seconds_since(s0);
                v.time_s.total = seconds_since(t0);
                v.code = 0;
                v.stage = "falsification";
                v.counterexample = samples[k];
                v.predicted = pred.label;
                return v;
            }
        }
        v.time_s.falsify = seconds_since(s0);
    }

    const StarSet input = star_from_box(spec.lower, spec.upper);

    // Stage 2: relaxed star pass; stage 3: full approx pass.
    struct Stage {
        const char* name;
        ReachMethod method;
        double factor;
        double StageTimes::*slot;
    };
    const Stage stages[] = {
        {"relax", ReachMethod::Relax, cfg.relax_factor, &StageTimes::relax},
        {"approx", ReachMethod::Approx, 0.0, &StageTimes::approx},
    };
    for (const Stage& st : stages) {
        const Clock::time_point s0 = Clock::now();
        v.stage = st.name;
        ReachOptions ro;
        ro.method = st.method;
        ro.relax_factor = st.factor;
        ro.deadline = deadline;
        ro.lp = cfg.lp;
        try {
            std::vector<StarSet> out = reach(net, input, ro);
            CheckResult chk = check_output_set(out, spec.target, cfg.lp);
            v.time_s.*(st.slot) = seconds_since(s0);
            if (chk.certified) {
                v.code = 1;
                v.time_s.total = seconds_since(t0);
                return v;
            }
        } catch (const ReachError&) {
            v.time_s.*(st.slot) = seconds_since(s0);
            v.code = 2;
            v.time_s.total = seconds_since(t0);
            return v;
        }
        if (Clock::now() > deadline) {
            v.code = 2;
            v.time_s.total = seconds_since(t0);
            return v;
        }
    }
    v.code = 2;  // both overapproximations inconclusive
    v.time_s.total = seconds_since(t0);
    return v;
}

Verdict verify_exact(const Network& net, const InputSpec& spec, const VerifyConfig& cfg) {
    validate_spec(net, spec);

    Verdict v;
    v.seed = cfg.seed;
    v.stage = "exact";
    const Clock::time_point t0 = Clock::now();

    const StarSet input = star_from_box(spec.lower, spec.upper);
    ReachOptions ro;
    ro.method = ReachMethod::Exact;
    ro.star_budget = cfg.star_budget;
    ro.deadline = deadline_for(cfg, t0);
    ro.lp = cfg.lp;

    std::vector<StarSet> out;
    try {
        out = reach(net, input, ro);
    } catch (const ReachError&) {
        v.code = 2;
        v.time_s.exact = v.time_s.total = seconds_since(t0);
        return v;
    }

    bool undetermined = false;
    for (const StarSet& s : out) {
        for (std::size_t j = 0; j < s.dim() && !(v.code == 0); ++j) {
            if (j == spec.target) continue;
            double constant = 0.0;
            LpOutcome lo = max_gap(s, j, spec.target, cfg.lp, constant);
            if (lo.status == LpStatus::Infeasible) break;
            if (lo.status != LpStatus::Optimal) {
                undetermined = true;
                continue;
            }
            if (lo.value + constant < 0.0) continue;
            undetermined = true;
            // Exact mode adds no predicate variables, so the witness lives in
            // the input star's alpha space; map it back and re-validate.
            Vec x = input.center;
            for (std::size_t r = 0; r < input.basis.rows; ++r)
                for (std::size_t c = 0; c < input.basis.cols; ++c)
                    x[r] += input.basis(r, c) * lo.point[c];
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = std::min(std::max(x[i], spec.lower[i]), spec.upper[i]);
            Prediction pred = infer(net, x);
            if (pred.label != spec.target) {
                v.code = 0;
                v.counterexample = x;
                v.predicted = pred.label;
            }
        }
        if (v.code == 0) break;
    }
    if (v.code != 0) v.code = undetermined ? 2 : 1;
    v.time_s.exact = v.time_s.total = seconds_since(t0);
    return v;
}

std::string verdict_json(const Verdict& v) {
    nlohmann::ordered_json doc;
    doc["code"] = v.code;
    doc["stage"] = v.stage;
    doc["time_s"] = {{"falsify", v.time_s.falsify},
                     {"relax", v.time_s.relax},
                     {"approx", v.time_s.approx},
                     {"exact", v.time_s.exact},
                     {"total", v.time_s.total}};
    if (v.counterexample) {
        doc["counterexample"] = *v.counterexample;
        if (v.predicted) doc["predicted"] = *v.predicted;
    }
    doc["seed"] = v.seed;
    return doc.dump();
}

}  // namespace malcert
