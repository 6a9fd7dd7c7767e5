#include "malcert/specgen.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace malcert {

namespace {

const struct {
    FeatureKind kind;
    const char* name;
} kKindNames[] = {
    {FeatureKind::Continuous, "continuous"},
    {FeatureKind::Categorical, "categorical"},
    {FeatureKind::HashCategorical, "hash_categorical"},
    {FeatureKind::DiscreteLarge, "discrete_large"},
    {FeatureKind::Binary, "binary"},
    {FeatureKind::HashCatDiscrete, "hash_cat_discrete"},
    {FeatureKind::Memory, "memory"},
    {FeatureKind::Null, "null"},
};

}  // namespace

FeatureKind feature_kind_from_string(const std::string& s) {
    for (const auto& e : kKindNames)
        if (s == e.name) return e.kind;
    throw std::runtime_error("schema: unknown feature kind '" + s + "'");
}

std::string feature_kind_to_string(FeatureKind k) {
    for (const auto& e : kKindNames)
        if (k == e.kind) return e.name;
    throw std::logic_error("schema: bad kind value");
}

FeatureSchema load_schema(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(std::string("schema: malformed JSON: ") + e.what());
    }
    try {
        FeatureSchema schema;
        for (const auto& f : doc.at("features")) {
            Feature feat;
            feat.name = f.at("name").get<std::string>();
            feat.kind = feature_kind_from_string(f.at("kind").get<std::string>());
            feat.min = f.at("min").get<double>();
            feat.max = f.at("max").get<double>();
            if (feat.min > feat.max)
                throw std::runtime_error("schema: feature '" + feat.name + "' has min > max");
            schema.features.push_back(std::move(feat));
        }
        if (schema.features.empty()) throw std::runtime_error("schema: no features");
        return schema;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("schema: ") + e.what());
    }
}

std::string save_schema(const FeatureSchema& schema) {
    nlohmann::ordered_json doc;
    doc["features"] = nlohmann::ordered_json::array();
    for (const Feature& f : schema.features) {
        nlohmann::ordered_json j;
        j["name"] = f.name;
        j["kind"] = feature_kind_to_string(f.kind);
        j["min"] = f.min;
        j["max"] = f.max;
        doc["features"].push_back(std::move(j));
    }
    return doc.dump();
}

MaskPreset mask_preset_from_string(const std::string& s) {
    if (s == "all") return MaskPreset::All;
    if (s == "cont-disc") return MaskPreset::ContinuousAndDiscrete;
    if (s == "discrete") return MaskPreset::Discrete;
    if (s == "continuous") return MaskPreset::Continuous;
    throw std::runtime_error("mask: unknown preset '" + s +
                             "' (expected all|cont-disc|discrete|continuous)");
}

std::string mask_preset_to_string(MaskPreset p) {
    switch (p) {
        case MaskPreset::All: return "all";
        case MaskPreset::ContinuousAndDiscrete: return "cont-disc";
        case MaskPreset::Discrete: return "discrete";
        case MaskPreset::Continuous: return "continuous";
        case MaskPreset::Custom: return "custom";
    }
    throw std::logic_error("mask: bad preset value");
}

std::vector<std::size_t> resolve_mask(const FeatureMask& mask, const FeatureSchema& schema) {
    if (schema.features.empty()) throw std::invalid_argument("mask: empty schema");
    std::vector<std::size_t> out;
    switch (mask.preset) {
        case MaskPreset::All:
            for (std::size_t i = 0; i < schema.size(); ++i) out.push_back(i);
            return out;
        case MaskPreset::Custom:
            out = mask.custom;
            std::sort(out.begin(), out.end());
            out.erase(std::unique(out.begin(), out.end()), out.end());
            for (std::size_t i : out)
                if (i >= schema.size())
                    throw std::invalid_argument("mask: custom index out of range");
            return out;
        default:
            break;
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const FeatureKind k = schema.features[i].kind;
        const bool want =
            (mask.preset == MaskPreset::Discrete && k == FeatureKind::DiscreteLarge) ||
            (mask.preset == MaskPreset::Continuous && k == FeatureKind::Continuous) ||
            (mask.preset == MaskPreset::ContinuousAndDiscrete &&
             (k == FeatureKind::Continuous || k == FeatureKind::DiscreteLarge));
        if (want) out.push_back(i);
    }
    return out;
}

InputSpec build_feature_spec(const Vec& x, std::size_t y, double eps_percent,
                             const FeatureSchema& schema, const FeatureMask& mask) {
    if (x.size() != schema.size())
        throw std::invalid_argument("spec: sample length does not match schema");
    if (eps_percent < 0.0) throw std::invalid_argument("spec: negative epsilon");
    std::vector<std::size_t> idx = resolve_mask(mask, schema);

    InputSpec spec;
    spec.base = x;
    spec.lower = x;
    spec.upper = x;
    spec.epsilon = eps_percent;
    spec.mask = mask_preset_to_string(mask.preset);
    spec.target = y;
    for (std::size_t i : idx) {
        const double delta =
            (eps_percent / 100.0) * (schema.features[i].max - schema.features[i].min);
        spec.lower[i] = x[i] - delta;
        spec.upper[i] = x[i] + delta;
    }
    return spec;
}

InputSpec build_pixel_spec(const Vec& x, std::size_t y, int k) {
    if (x.empty()) throw std::invalid_argument("spec: empty image");
    if (k < 0) throw std::invalid_argument("spec: negative pixel epsilon");
    for (double v : x)
        if (v < 0.0 || v > 1.0)
            throw std::invalid_argument("spec: pixel outside [0,1]");
    const double delta = static_cast<double>(k) / 255.0;
    InputSpec spec;
    spec.base = x;
    spec.lower = x;
    spec.upper = x;
    spec.epsilon = static_cast<double>(k);
    spec.mask = "all";
    spec.target = y;
    for (std::size_t i = 0; i < x.size(); ++i) {
        spec.lower[i] = std::max(0.0, x[i] - delta);
        spec.upper[i] = std::min(1.0, x[i] + delta);
    }
    return spec;
}

}  // namespace malcert
