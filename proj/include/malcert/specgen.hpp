#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "malcert/linalg.hpp"

namespace malcert {

enum class FeatureKind {
    Continuous,
    Categorical,
    HashCategorical,
    DiscreteLarge,
    Binary,
    HashCatDiscrete,
    Memory,
    Null,
};

FeatureKind feature_kind_from_string(const std::string& s);
std::string feature_kind_to_string(FeatureKind k);

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Continuous;
    double min = 0.0;
    double max = 0.0;
};

// Ranges describe the post-scaling representation the model consumes.
struct FeatureSchema {
    std::vector<Feature> features;

    std::size_t size() const { return features.size(); }
};

FeatureSchema load_schema(const std::string& json_text);
std::string save_schema(const FeatureSchema& schema);

enum class MaskPreset { All, ContinuousAndDiscrete, Discrete, Continuous, Custom };

MaskPreset mask_preset_from_string(const std::string& s);  // all|cont-disc|discrete|continuous
std::string mask_preset_to_string(MaskPreset p);

struct FeatureMask {
    MaskPreset preset = MaskPreset::All;
    std::vector<std::size_t> custom;  // Custom only
};

// Sorted perturbable index set. "null"-kind features respond only to All.
std::vector<std::size_t> resolve_mask(const FeatureMask& mask, const FeatureSchema& schema);

struct InputSpec {
    Vec base;
    Vec lower;
    Vec upper;
    double epsilon = 0.0;  // percent (feature mode) or k (pixel mode)
    std::string mask;      // preset name, "all" for pixel specs
    std::size_t target = 0;
};

// Feature-space L_inf spec: masked dims get +-(eps_percent/100)*(max-min),
// deliberately unclipped (features live in standardized space).
InputSpec build_feature_spec(const Vec& x, std::size_t y, double eps_percent,
                             const FeatureSchema& schema, const FeatureMask& mask);

// Pixel spec: +-k/255 on every dim, clipped to [0,1].
InputSpec build_pixel_spec(const Vec& x, std::size_t y, int k);

}  // namespace malcert
