#pragma once

#include <string>
#include <unordered_set>
#include <vector>

#include "tabml/errors.hpp"

namespace tabml {

// Value domain of a feature column. Fractions are validated to [0,1];
// counts and densities to [0, inf).
enum class FeatureKind { Fraction, Count, Density };

inline const char* to_string(FeatureKind k) {
    switch (k) {
        case FeatureKind::Fraction: return "fraction";
        case FeatureKind::Count: return "count";
        case FeatureKind::Density: return "density";
    }
    return "?";
}

inline FeatureKind feature_kind_from_string(const std::string& s) {
    if (s == "fraction") return FeatureKind::Fraction;
    if (s == "count") return FeatureKind::Count;
    if (s == "density") return FeatureKind::Density;
    throw ParamError("unknown feature kind: " + s);
}

struct FeatureSpec {
    std::string name;
    FeatureKind kind = FeatureKind::Density;
};

struct FeatureSchema {
    std::vector<FeatureSpec> features;
    std::string target_name = "target";

    void validate() const {
        if (features.empty()) throw ParamError("schema needs at least one feature");
        std::unordered_set<std::string> seen;
        for (const auto& f : features) {
            if (f.name.empty()) throw ParamError("schema feature name must be nonempty");
            if (f.name.find(',') != std::string::npos || f.name.find('\n') != std::string::npos)
                throw ParamError("schema feature name cannot contain ',' or newline: " + f.name);
            if (!seen.insert(f.name).second)
                throw ParamError("duplicate schema feature name: " + f.name);
        }
    }

    int n_features() const { return static_cast<int>(features.size()); }

    // Index of a named feature, or -1.
    int find(const std::string& name) const {
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name == name) return static_cast<int>(i);
        return -1;
    }

    int require(const std::string& name) const {
        const int i = find(name);
        if (i < 0) throw SchemaError("unknown feature: " + name);
        return i;
    }

    bool operator==(const FeatureSchema& o) const {
        if (target_name != o.target_name || features.size() != o.features.size()) return false;
        for (std::size_t i = 0; i < features.size(); ++i)
            if (features[i].name != o.features[i].name || features[i].kind != o.features[i].kind)
                return false;
        return true;
    }
};

// Default 19-column urban-health schema: socio-demographic percentages,
// built-environment counts/shares, and environmental hazard levels, with a
// categorical cancer-degree target.
inline FeatureSchema urban_health_schema() {
    using K = FeatureKind;
    FeatureSchema s;
    s.features = {
        {"Poverty", K::Fraction},  {"Unemployed", K::Fraction}, {"NHD", K::Fraction},
        {"NHI", K::Fraction},      {"Age", K::Fraction},        {"Disability", K::Fraction},
        {"SP", K::Fraction},       {"Minority", K::Fraction},   {"MH", K::Fraction},
        {"NV", K::Fraction},       {"PD", K::Density},          {"#GS", K::Count},
        {"#MF", K::Count},         {"#RC", K::Count},           {"GS", K::Fraction},
        {"DA", K::Fraction},       {"TC", K::Fraction},         {"Heat", K::Count},
        {"TE", K::Density},
    };
    s.target_name = "Cancer";
    return s;
}

}  // namespace tabml
