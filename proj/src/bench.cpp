#include "malcert/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <stdexcept>
#include <thread>

#include "malcert/rng.hpp"

namespace malcert {

namespace {

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t p = line.find(sep, start);
        if (p == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, p - start));
        start = p + 1;
    }
}

std::vector<std::string> csv_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t p = text.find('\n', start);
        std::string line =
            p == std::string::npos ? text.substr(start) : text.substr(start, p - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
        if (p == std::string::npos) break;
        start = p + 1;
    }
    return lines;
}

double parse_double(const std::string& s, const char* what) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
        throw std::runtime_error(std::string("csv: bad ") + what + " '" + s + "'");
    return v;
}

std::size_t parse_index(const std::string& s, const char* what) {
    double v = parse_double(s, what);
    if (v < 0.0 || v != std::floor(v))
        throw std::runtime_error(std::string("csv: bad ") + what + " '" + s + "'");
    return static_cast<std::size_t>(v);
}

// Commas and newlines in error text would break the row format.
std::string sanitize_tag(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return s;
}

}  // namespace

Dataset load_dataset_csv(const std::string& text) {
    std::vector<std::string> lines = csv_lines(text);
    if (lines.size() < 2) throw std::runtime_error("csv: need a header and at least one row");
    std::vector<std::string> header = split(lines[0], ',');
    std::size_t label_col = header.size();
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == "label") {
            if (label_col != header.size()) throw std::runtime_error("csv: duplicate label column");
            label_col = i;
        }
    if (label_col == header.size()) throw std::runtime_error("csv: missing label column");
    if (header.size() < 2) throw std::runtime_error("csv: no feature columns");

    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i)
        if (i != label_col) ds.feature_names.push_back(header[i]);

    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::vector<std::string> cells = split(lines[li], ',');
        if (cells.size() != header.size())
            throw std::runtime_error("csv: row " + std::to_string(li) + " has " +
                                     std::to_string(cells.size()) + " cells, expected " +
                                     std::to_string(header.size()));
        Vec row;
        row.reserve(header.size() - 1);
        std::size_t label = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i == label_col)
                label = parse_index(cells[i], "label");
            else
                row.push_back(parse_double(cells[i], "feature"));
        }
        ds.X.push_back(std::move(row));
        ds.y.push_back(label);
        ds.num_classes = std::max(ds.num_classes, label + 1);
    }
    return ds;
}

std::string dataset_to_csv(const Dataset& ds) {
    if (ds.X.empty()) throw std::invalid_argument("csv: empty dataset");
    std::string out;
    for (const std::string& name : ds.feature_names) out += name + ",";
    out += "label\n";
    for (std::size_t r = 0; r < ds.X.size(); ++r) {
        for (double v : ds.X[r]) out += fmt_g17(v) + ",";
        out += std::to_string(ds.y[r]) + "\n";
    }
    return out;
}

std::vector<SampleRef> select_samples(const Dataset& ds, const SampleSelection& sel) {
    if (ds.X.empty()) throw std::invalid_argument("bench: empty dataset");
    std::vector<std::size_t> order(ds.X.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(sel.seed);
    rng.shuffle(order);

    std::vector<std::size_t> chosen;
    if (sel.per_class) {
        const std::size_t k = *sel.per_class;
        if (k == 0) throw std::invalid_argument("bench: per_class must be >= 1");
        std::vector<std::size_t> taken(ds.num_classes, 0);
        for (std::size_t idx : order)
            if (taken[ds.y[idx]] < k) {
                ++taken[ds.y[idx]];
                chosen.push_back(idx);
            }
        for (std::size_t c = 0; c < ds.num_classes; ++c)
            if (taken[c] < k)
                throw std::runtime_error("bench: class " + std::to_string(c) + " has only " +
                                         std::to_string(taken[c]) + " samples, need " +
                                         std::to_string(k));
    } else {
        if (sel.count == 0) throw std::invalid_argument("bench: sample count must be >= 1");
        if (sel.count > ds.X.size())
            throw std::invalid_argument("bench: sample count exceeds dataset size");
        chosen.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(sel.count));
    }
    std::sort(chosen.begin(), chosen.end());

    std::vector<SampleRef> out;
    out.reserve(chosen.size());
    for (std::size_t idx : chosen) out.push_back({idx, ds.X[idx], ds.y[idx]});
    return out;
}

BenchReport run_benchmark(const BenchPlan& plan, const Dataset& ds) {
    if (plan.models.empty()) throw std::invalid_argument("bench: no models");
    if (plan.epsilons.empty()) throw std::invalid_argument("bench: no epsilons");
    std::vector<double> eps = plan.epsilons;
    std::sort(eps.begin(), eps.end());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());

    std::vector<std::string> masks;
    if (plan.schema == nullptr) {
        masks = {"all"};
    } else {
        if (plan.masks.empty()) throw std::invalid_argument("bench: no masks");
        masks = plan.masks;
        std::sort(masks.begin(), masks.end());
        masks.erase(std::unique(masks.begin(), masks.end()), masks.end());
        for (const std::string& m : masks) mask_preset_from_string(m);  // validate early
    }

    std::vector<SampleRef> samples = select_samples(ds, plan.selection);

    // Model order follows the sorted names so row order is reproducible
    // regardless of how the plan was assembled.
    std::vector<std::size_t> model_order(plan.models.size());
    for (std::size_t i = 0; i < model_order.size(); ++i) model_order[i] = i;
    std::stable_sort(model_order.begin(), model_order.end(), [&](std::size_t a, std::size_t b) {
        return plan.models[a].name < plan.models[b].name;
    });

    struct Task {
        std::size_t model = 0;
        std::string mask;
        double epsilon = 0.0;
        const SampleRef* sample = nullptr;
    };
    std::vector<Task> tasks;
    for (std::size_t mi : model_order)
        for (const std::string& mask : masks)
            for (double e : eps)
                for (const SampleRef& s : samples) tasks.push_back({mi, mask, e, &s});

    BenchReport report;
    report.rows.resize(tasks.size());

    auto run_task = [&](std::size_t ti) {
        const Task& t = tasks[ti];
        BenchRow row;
        row.model = plan.models[t.model].name;
        row.mask = t.mask;
        row.epsilon = t.epsilon;
        row.sample = t.sample->index;
        row.label = t.sample->label;
        try {
            InputSpec spec;
            if (plan.schema) {
                FeatureMask fm;
                fm.preset = mask_preset_from_string(t.mask);
                spec = build_feature_spec(t.sample->x, t.sample->label, t.epsilon, *plan.schema,
                                          fm);
            } else {
                if (t.epsilon < 0.0 || t.epsilon != std::floor(t.epsilon))
                    throw std::invalid_argument("bench: pixel epsilon must be a whole 1/255 step");
                spec = build_pixel_spec(t.sample->x, t.sample->label,
                                        static_cast<int>(t.epsilon));
            }
            Verdict v = plan.exact ? verify_exact(plan.models[t.model].net, spec, plan.verifier)
                                   : verify_query(plan.models[t.model].net, spec, plan.verifier);
            row.verdict = v.code;
            row.stage = v.stage;
            row.time_s = v.time_s.total;
        } catch (const std::exception& e) {
            row.verdict = 2;
            row.stage = "error:" + sanitize_tag(e.what());
            row.time_s = 0.0;
        }
        report.rows[ti] = std::move(row);
    };

    const std::size_t workers = std::max<std::size_t>(1, plan.workers);
    if (workers == 1) {
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) run_task(ti);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    std::size_t ti = next.fetch_add(1);
                    if (ti >= tasks.size()) return;
                    run_task(ti);
                }
            });
        for (std::thread& th : pool) th.join();
    }

    report.aggregates = aggregate_rows(report.rows);
    return report;
}

std::vector<BenchCell> aggregate_rows(const std::vector<BenchRow>& rows) {
    std::vector<BenchCell> cells;
    std::size_t i = 0;
    while (i < rows.size()) {
        std::size_t j = i;
        std::size_t robust = 0;
        double time_sum = 0.0;
        while (j < rows.size() && rows[j].model == rows[i].model &&
               rows[j].mask == rows[i].mask && rows[j].epsilon == rows[i].epsilon) {
            if (rows[j].verdict == 1) ++robust;
            time_sum += rows[j].time_s;
            ++j;
        }
        const double n = static_cast<double>(j - i);
        cells.push_back({rows[i].model, rows[i].mask, rows[i].epsilon,
                         100.0 * static_cast<double>(robust) / n, time_sum / n});
        i = j;
    }
    return cells;
}

std::vector<ClassCount> per_class_table(const std::vector<BenchRow>& rows) {
    std::map<std::pair<std::string, std::size_t>, ClassCount> table;
    for (const BenchRow& r : rows) {
        ClassCount& cc = table[{r.model, r.label}];
        cc.model = r.model;
        cc.label = r.label;
        cc.total += 1;
        if (r.verdict == 1) cc.robust += 1;
    }
    std::vector<ClassCount> out;
    out.reserve(table.size());
    for (const auto& kv : table) out.push_back(kv.second);
    return out;
}

std::string rows_csv(const std::vector<BenchRow>& rows) {
    std::string out = "model,mask,epsilon,sample,class,verdict,stage,time_s\n";
    for (const BenchRow& r : rows) {
        out += r.model + "," + r.mask + "," + fmt_g17(r.epsilon) + "," +
               std::to_string(r.sample) + "," + std::to_string(r.label) + "," +
               std::to_string(r.verdict) + "," + r.stage + "," + fmt_g17(r.time_s) + "\n";
    }
    return out;
}

std::vector<BenchRow> parse_rows_csv(const std::string& text) {
    std::vector<std::string> lines = csv_lines(text);
    if (lines.empty() || lines[0] != "model,mask,epsilon,sample,class,verdict,stage,time_s")
        throw std::runtime_error("csv: missing bench row header");
    std::vector<BenchRow> rows;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        std::vector<std::string> cells = split(lines[li], ',');
        if (cells.size() != 8)
            throw std::runtime_error("csv: bench row " + std::to_string(li) + " malformed");
        BenchRow r;
        r.model = cells[0];
        r.mask = cells[1];
        r.epsilon = parse_double(cells[2], "epsilon");
        r.sample = parse_index(cells[3], "sample");
        r.label = parse_index(cells[4], "class");
        const std::size_t code = parse_index(cells[5], "verdict");
        if (code > 2) throw std::runtime_error("csv: verdict out of range");
        r.verdict = static_cast<int>(code);
        r.stage = cells[6];
        r.time_s = parse_double(cells[7], "time_s");
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string aggregate_csv(const std::vector<BenchCell>& cells) {
    std::string out = "model,mask,epsilon,cra_pct,avg_time_s\n";
    for (const BenchCell& c : cells) {
        out += c.model + "," + c.mask + "," + fmt_g17(c.epsilon) + "," + fmt_g17(c.cra_pct) +
               "," + fmt_g17(c.avg_time_s) + "\n";
    }
    return out;
}

std::string per_class_csv(const std::vector<ClassCount>& counts) {
    std::string out = "model,class,robust,total\n";
    for (const ClassCount& c : counts) {
        out += c.model + "," + std::to_string(c.label) + "," + std::to_string(c.robust) + "," +
               std::to_string(c.total) + "\n";
    }
    return out;
}

}  // namespace malcert
