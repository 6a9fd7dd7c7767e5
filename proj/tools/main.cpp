#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "malcert/bench.hpp"
#include "malcert/preprocess.hpp"
#include "malcert/trainer.hpp"
#include "malcert/vnnlib.hpp"

namespace fs = std::filesystem;
using namespace malcert;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    if (!out) throw std::runtime_error("short write to " + path);
}

std::vector<std::uint8_t> read_bytes(const std::string& path) {
    std::string text = read_file(path);
    return {text.begin(), text.end()};
}

std::string path_stem(const std::string& p) { return fs::path(p).stem().string(); }

std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* verdict_word(int code) {
    return code == 1 ? "holds" : code == 0 ? "violated" : "timeout";
}

const std::vector<std::string> kMaskPresets = {"all", "cont-disc", "discrete", "continuous"};

struct ByteplotOpts {
    std::string in, out_pgm, out_csv;
    std::size_t width = 256;
    std::vector<std::size_t> resize;  // height width
};

void run_byteplot(const ByteplotOpts& o) {
    if (o.out_pgm.empty() && o.out_csv.empty())
        throw std::invalid_argument("byteplot: need --out-pgm and/or --out-csv");
    ByteImage img = bytes_to_image(read_bytes(o.in), o.width);
    if (!o.resize.empty()) img = resize_nearest(img, o.resize[1], o.resize[0]);
    if (!o.out_pgm.empty()) write_file(o.out_pgm, write_pgm(img));
    if (!o.out_csv.empty()) {
        Vec v = normalize(img);
        std::string line;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (i) line += ",";
            line += fmt_g17(v[i]);
        }
        write_file(o.out_csv, line + "\n");
    }
    std::printf("%zux%zu\n", img.width, img.height);
}

struct ScaleOpts {
    std::string data, out, save_params, load_params;
};

void run_scale(const ScaleOpts& o) {
    Dataset ds = load_dataset_csv(read_file(o.data));
    ScalerParams p =
        o.load_params.empty() ? fit_scaler(ds.X) : scaler_from_json(read_file(o.load_params));
    for (Vec& row : ds.X) row = apply_scaler(p, row);
    write_file(o.out, dataset_to_csv(ds));
    if (!o.save_params.empty()) write_file(o.save_params, scaler_to_json(p));
    std::printf("scaled %zu rows, %zu features\n", ds.X.size(), ds.feature_names.size());
}

struct TrainOpts {
    std::string data, out;
    std::vector<std::size_t> hidden;
    std::size_t epochs = 10, batch = 32, classes = 0;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    std::vector<std::size_t> conv;  // height width
    std::size_t channels = 1, filters = 4, kernel = 3, stride = 2;
};

void run_train(const TrainOpts& o) {
    Dataset ds = load_dataset_csv(read_file(o.data));
    TrainConfig cfg;
    cfg.hidden = o.hidden;
    cfg.epochs = o.epochs;
    cfg.batch_size = o.batch;
    cfg.adam.lr = o.lr;
    cfg.seed = o.seed;
    if (!o.conv.empty()) {
        ConvFront cf;
        cf.channels = o.channels;
        cf.height = o.conv[0];
        cf.width = o.conv[1];
        cf.filters = o.filters;
        cf.kernel = o.kernel;
        cf.stride = o.stride;
        cfg.conv = cf;
    }
    const std::size_t classes = std::max(o.classes, ds.num_classes);
    TrainResult res = malcert::train(ds.X, ds.y, classes, cfg);
    write_file(o.out, save_model(res.net));
    std::printf("train accuracy %.4f, epoch loss %.6f -> %.6f\n", res.train_accuracy,
                res.first_epoch_loss, res.final_epoch_loss);
}

struct GenOpts {
    std::string data, schema, out, name;
    std::vector<std::string> masks;
    std::vector<double> eps;
    std::size_t samples = 0;
    std::optional<std::size_t> per_class;
    std::uint64_t seed = 0;
    std::size_t classes = 0;
};

void run_gen(const GenOpts& o) {
    Dataset ds = load_dataset_csv(read_file(o.data));
    SampleSelection sel;
    sel.seed = o.seed;
    sel.per_class = o.per_class;
    sel.count = o.samples ? o.samples : ds.X.size();
    std::vector<SampleRef> refs = select_samples(ds, sel);

    std::vector<BatchSample> batch;
    batch.reserve(refs.size());
    for (const SampleRef& r : refs) batch.push_back({r.x, r.label});

    FeatureSchema schema;
    const FeatureSchema* schema_ptr = nullptr;
    std::vector<std::string> masks = o.masks;
    if (!o.schema.empty()) {
        schema = load_schema(read_file(o.schema));
        schema_ptr = &schema;
        if (masks.empty()) masks = kMaskPresets;
    } else {
        masks = {"all"};
    }
    const std::string name = o.name.empty() ? path_stem(o.data) : o.name;
    const std::size_t classes = std::max(o.classes, ds.num_classes);
    std::vector<ManifestRow> rows =
        batch_emit(batch, o.eps, masks, schema_ptr, o.out, name, classes);
    write_file((fs::path(o.out) / "manifest.csv").string(), manifest_csv(rows));
    std::printf("wrote %zu specs to %s\n", rows.size(), o.out.c_str());
}

struct VerifyOpts {
    std::string model, vnnlib, data, schema, mask = "all", method = "auto", out;
    std::size_t index = 0;
    double eps = -1.0;
    double timeout = 0.0;
    std::size_t nr = 500;
    std::uint64_t seed = 0;
};

void run_verify(const VerifyOpts& o) {
    Network net = load_model(read_file(o.model));
    InputSpec spec;
    if (!o.vnnlib.empty()) {
        VnnLibSpec vs = parse(read_file(o.vnnlib));
        if (vs.num_inputs != net.input_dim)
            throw std::runtime_error("vnnlib inputs do not match the model");
        if (vs.num_outputs != net.num_classes)
            throw std::runtime_error("vnnlib outputs do not match the model");
        std::optional<std::size_t> target = robustness_target(vs);
        if (!target) throw std::runtime_error("vnnlib property is not a robustness query");
        spec.target = *target;
        spec.mask = "all";
        for (const auto& [lo, hi] : vs.input_bounds) {
            spec.lower.push_back(lo);
            spec.upper.push_back(hi);
            spec.base.push_back((lo + hi) / 2.0);
        }
    } else {
        if (o.data.empty())
            throw std::invalid_argument("verify: need --vnnlib or --data with --index/--eps");
        if (o.eps < 0.0) throw std::invalid_argument("verify: --eps is required with --data");
        Dataset ds = load_dataset_csv(read_file(o.data));
        if (o.index >= ds.X.size()) throw std::invalid_argument("verify: --index out of range");
        if (!o.schema.empty()) {
            FeatureSchema schema = load_schema(read_file(o.schema));
            FeatureMask fm;
            fm.preset = mask_preset_from_string(o.mask);
            spec = build_feature_spec(ds.X[o.index], ds.y[o.index], o.eps, schema, fm);
        } else {
            if (o.eps != std::floor(o.eps))
                throw std::invalid_argument("verify: pixel --eps must be a whole 1/255 step");
            spec = build_pixel_spec(ds.X[o.index], ds.y[o.index], static_cast<int>(o.eps));
        }
    }
    VerifyConfig vc;
    vc.num_samples = o.nr;
    vc.timeout_s = o.timeout;
    vc.seed = o.seed;
    Verdict v = o.method == "exact" ? verify_exact(net, spec, vc) : verify_query(net, spec, vc);
    std::printf("%s\n", verdict_word(v.code));
    if (!o.out.empty()) write_file(o.out, verdict_json(v) + "\n");
}

struct BenchOpts {
    std::vector<std::string> models;
    std::string data, schema, out;
    std::vector<std::string> masks;
    std::vector<double> eps;
    std::size_t samples = 0;
    std::optional<std::size_t> per_class;
    std::string method = "auto";
    std::size_t workers = 1, nr = 500;
    double timeout = 0.0;
    std::uint64_t seed = 0;
};

void run_bench(const BenchOpts& o) {
    Dataset ds = load_dataset_csv(read_file(o.data));
    BenchPlan plan;
    for (const std::string& path : o.models)
        plan.models.push_back({path_stem(path), load_model(read_file(path))});
    FeatureSchema schema;
    if (!o.schema.empty()) {
        schema = load_schema(read_file(o.schema));
        plan.schema = &schema;
        plan.masks = o.masks.empty() ? kMaskPresets : o.masks;
    }
    plan.epsilons = o.eps;
    plan.selection.seed = o.seed;
    plan.selection.per_class = o.per_class;
    plan.selection.count = o.samples ? o.samples : ds.X.size();
    plan.verifier.num_samples = o.nr;
    plan.verifier.timeout_s = o.timeout;
    plan.verifier.seed = o.seed;
    plan.exact = o.method == "exact";
    plan.workers = o.workers;
    BenchReport rep = run_benchmark(plan, ds);
    const std::string summary = aggregate_csv(rep.aggregates);
    write_file(o.out + "_rows.csv", rows_csv(rep.rows));
    write_file(o.out + "_summary.csv", summary);
    write_file(o.out + "_per_class.csv", per_class_csv(per_class_table(rep.rows)));
    std::fputs(summary.c_str(), stdout);
}

struct ReportOpts {
    std::string rows, out;
};

void run_report(const ReportOpts& o) {
    std::vector<BenchRow> rows = parse_rows_csv(read_file(o.rows));
    const std::string summary = aggregate_csv(aggregate_rows(rows));
    const std::string per_class = per_class_csv(per_class_table(rows));
    if (!o.out.empty()) {
        write_file(o.out + "_summary.csv", summary);
        write_file(o.out + "_per_class.csv", per_class);
    }
    std::fputs(summary.c_str(), stdout);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"star-set reachability robustness toolkit for small classifiers"};
    app.require_subcommand(1);

    ByteplotOpts bp;
    CLI::App* c_bp = app.add_subcommand("byteplot", "Render a raw binary as a grayscale byteplot");
    c_bp->add_option("--in", bp.in, "raw binary input")->required();
    c_bp->add_option("--width", bp.width, "image width in pixels")->capture_default_str();
    c_bp->add_option("--resize", bp.resize, "resize to HEIGHT WIDTH (nearest neighbor)")
        ->expected(2);
    c_bp->add_option("--out-pgm", bp.out_pgm, "P5 graymap output path");
    c_bp->add_option("--out-csv", bp.out_csv, "normalized pixel row output path");

    ScaleOpts sc;
    CLI::App* c_sc = app.add_subcommand("scale", "Standardize dataset features");
    c_sc->add_option("--data", sc.data, "dataset CSV with label column")->required();
    c_sc->add_option("--out", sc.out, "scaled CSV output path")->required();
    CLI::Option* sc_save = c_sc->add_option("--save-params", sc.save_params, "write scaler JSON");
    c_sc->add_option("--load-params", sc.load_params, "apply existing scaler JSON")
        ->excludes(sc_save);

    TrainOpts tr;
    CLI::App* c_tr = app.add_subcommand("train", "Train a small classifier");
    c_tr->add_option("--data", tr.data, "dataset CSV with label column")->required();
    c_tr->add_option("--out", tr.out, "model JSON output path")->required();
    c_tr->add_option("--hidden", tr.hidden, "hidden layer width (repeatable)");
    c_tr->add_option("--epochs", tr.epochs)->capture_default_str();
    c_tr->add_option("--batch", tr.batch)->capture_default_str();
    c_tr->add_option("--lr", tr.lr, "Adam learning rate")->capture_default_str();
    c_tr->add_option("--seed", tr.seed)->capture_default_str();
    c_tr->add_option("--classes", tr.classes, "class count override");
    c_tr->add_option("--conv", tr.conv, "conv front end input HEIGHT WIDTH")->expected(2);
    c_tr->add_option("--channels", tr.channels)->capture_default_str();
    c_tr->add_option("--filters", tr.filters)->capture_default_str();
    c_tr->add_option("--kernel", tr.kernel)->capture_default_str();
    c_tr->add_option("--stride", tr.stride)->capture_default_str();

    GenOpts gn;
    CLI::App* c_gn = app.add_subcommand("gen-vnnlib", "Emit robustness specs for samples");
    c_gn->add_option("--data", gn.data, "dataset CSV with label column")->required();
    c_gn->add_option("--schema", gn.schema, "feature schema JSON (pixel mode when absent)");
    c_gn->add_option("--out", gn.out, "output directory")->required();
    c_gn->add_option("--name", gn.name, "dataset name for filenames (default: data stem)");
    c_gn->add_option("--mask", gn.masks, "mask preset (repeatable; default: all presets)")
        ->check(CLI::IsMember(kMaskPresets));
    c_gn->add_option("--eps", gn.eps, "epsilon (repeatable)")->required();
    CLI::Option* gn_samples = c_gn->add_option("--samples", gn.samples, "sample count");
    c_gn->add_option("--per-class", gn.per_class, "samples per class")->excludes(gn_samples);
    c_gn->add_option("--seed", gn.seed)->capture_default_str();
    c_gn->add_option("--classes", gn.classes, "output count override");

    VerifyOpts vf;
    CLI::App* c_vf = app.add_subcommand("verify", "Verify one robustness query");
    c_vf->add_option("--model", vf.model, "model JSON")->required();
    CLI::Option* vf_vnn = c_vf->add_option("--vnnlib", vf.vnnlib, "VNN-LIB query file");
    c_vf->add_option("--data", vf.data, "dataset CSV with label column")->excludes(vf_vnn);
    c_vf->add_option("--index", vf.index, "dataset row to verify");
    c_vf->add_option("--eps", vf.eps, "epsilon (percent with schema, 1/255 steps without)");
    c_vf->add_option("--schema", vf.schema, "feature schema JSON");
    c_vf->add_option("--mask", vf.mask, "mask preset")
        ->check(CLI::IsMember(kMaskPresets))
        ->capture_default_str();
    c_vf->add_option("--method", vf.method)->check(CLI::IsMember({"auto", "exact"}))
        ->capture_default_str();
    c_vf->add_option("--timeout", vf.timeout, "seconds, 0 = none")->capture_default_str();
    c_vf->add_option("--nr", vf.nr, "falsifier sample count")->capture_default_str();
    c_vf->add_option("--seed", vf.seed)->capture_default_str();
    c_vf->add_option("--out", vf.out, "verdict JSON output path");

    BenchOpts bn;
    CLI::App* c_bn = app.add_subcommand("bench", "Sweep models x masks x epsilons x samples");
    c_bn->add_option("--model", bn.models, "model JSON (repeatable)")->required();
    c_bn->add_option("--data", bn.data, "dataset CSV with label column")->required();
    c_bn->add_option("--schema", bn.schema, "feature schema JSON (pixel mode when absent)");
    c_bn->add_option("--mask", bn.masks, "mask preset (repeatable; default: all presets)")
        ->check(CLI::IsMember(kMaskPresets));
    c_bn->add_option("--eps", bn.eps, "epsilon (repeatable)")->required();
    CLI::Option* bn_samples = c_bn->add_option("--samples", bn.samples, "sample count");
    c_bn->add_option("--per-class", bn.per_class, "samples per class")->excludes(bn_samples);
    c_bn->add_option("--method", bn.method)->check(CLI::IsMember({"auto", "exact"}))
        ->capture_default_str();
    c_bn->add_option("--workers", bn.workers)->capture_default_str();
    c_bn->add_option("--nr", bn.nr, "falsifier sample count")->capture_default_str();
    c_bn->add_option("--timeout", bn.timeout, "per-query seconds, 0 = none")
        ->capture_default_str();
    c_bn->add_option("--seed", bn.seed)->capture_default_str();
    c_bn->add_option("--out", bn.out, "output prefix for report CSVs")->required();

    ReportOpts rp;
    CLI::App* c_rp = app.add_subcommand("report", "Recompute aggregates from a rows CSV");
    c_rp->add_option("--rows", rp.rows, "rows CSV from bench")->required();
    c_rp->add_option("--out", rp.out, "output prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (app.got_subcommand(c_bp)) run_byteplot(bp);
        if (app.got_subcommand(c_sc)) run_scale(sc);
        if (app.got_subcommand(c_tr)) run_train(tr);
        if (app.got_subcommand(c_gn)) run_gen(gn);
        if (app.got_subcommand(c_vf)) run_verify(vf);
        if (app.got_subcommand(c_bn)) run_bench(bn);
        if (app.got_subcommand(c_rp)) run_report(rp);
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
