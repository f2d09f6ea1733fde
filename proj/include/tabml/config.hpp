#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/causal.hpp"
#include "tabml/errors.hpp"
#include "tabml/gbt.hpp"
#include "tabml/resample.hpp"
#include "tabml/schema.hpp"
#include "tabml/synth.hpp"
#include "tabml/tree.hpp"

namespace tabml {

// Per-family hyperparameter lists; candidates are the Cartesian product in
// field order, last axis fastest.
struct ModelGrids {
    bool knn_enabled = false;
    std::vector<int> knn_k;

    bool tree_enabled = false;
    std::vector<int> tree_max_depth;
    std::vector<int> tree_min_samples_leaf;
    std::vector<Criterion> tree_criterion;

    bool forest_enabled = false;
    std::vector<int> forest_n_trees;
    std::vector<int> forest_max_depth;
    std::vector<int> forest_min_samples_leaf;
    std::vector<int> forest_features_per_split;  // 0 = sqrt, -1 = all
    std::vector<bool> forest_bootstrap;

    bool gbt_enabled = false;
    std::vector<double> gbt_learning_rate;
    std::vector<int> gbt_n_estimators;
    std::vector<double> gbt_subsample;
    std::vector<double> gbt_colsample_bytree;
    std::vector<int> gbt_max_depth;
    std::vector<double> gbt_alpha;
    std::vector<double> gbt_gamma;
    std::vector<double> gbt_lambda;
};

struct RunConfig {
    std::uint64_t seed = 42;
    std::string out_dir = "out";

    std::string csv_path;  // empty when synthetic
    bool use_synth = false;
    SynthSpec synth;

    FeatureSchema schema;
    int binning_k = 3;
    double train_fraction = 0.7;
    int cv_folds = 5;

    bool smote_enabled = true;
    int smote_k_neighbors = 5;
    int smote_target = 0;  // 0 = match majority

    ModelGrids grids;
    bool explain_enabled = true;
    std::vector<InterventionSpec> interventions;
    bool impute_mean = false;

    nlohmann::json canonical;  // parsed document, for hashing/manifest
};

namespace config_detail {

using nlohmann::json;

inline FeatureSchema schema_from_json(const json& j) {
    FeatureSchema s;
    s.target_name = j.value("target", "target");
    if (!j.contains("features") || !j.at("features").is_array())
        throw ConfigError("schema.features must be an array");
    for (const json& f : j.at("features")) {
        FeatureSpec spec;
        spec.name = f.at("name").get<std::string>();
        spec.kind = feature_kind_from_string(f.value("kind", "density"));
        s.features.push_back(std::move(spec));
    }
    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid schema: ") + e.what());
    }
    return s;
}

inline json schema_to_json(const FeatureSchema& s) {
    json features = json::array();
    for (const auto& f : s.features)
        features.push_back({{"name", f.name}, {"kind", to_string(f.kind)}});
    return json{{"target", s.target_name}, {"features", features}};
}

inline SynthSpec synth_from_json(const json& j, const FeatureSchema& schema) {
    SynthSpec spec;
    spec.schema = schema;
    spec.n = j.value("n", 1000);
    spec.k_classes = j.value("classes", 3);
    spec.dominant_feature = j.value("dominant_feature", "");
    spec.dominant_weight = j.value("dominant_weight", 3.0);
    if (j.contains("interaction")) {
        const auto pair = j.at("interaction").get<std::vector<std::string>>();
        if (pair.size() != 2) throw ConfigError("synth.interaction must name two features");
        spec.interaction = {pair[0], pair[1]};
    }
    spec.interaction_weight = j.value("interaction_weight", 0.0);
    spec.causal_feature = j.value("causal_feature", "");
    spec.causal_weight = j.value("causal_weight", 0.0);
    spec.noise = j.value("noise", 0.0);
    if (j.contains("class_proportions"))
        spec.class_proportions = j.at("class_proportions").get<std::vector<double>>();
    spec.constant_feature = j.value("constant_feature", "");
    return spec;
}

inline int features_per_split_from_json(const json& v) {
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "sqrt") return 0;
        if (s == "all") return -1;
        throw ConfigError("features_per_split must be \"sqrt\", \"all\", or an integer");
    }
    return v.get<int>();
}

inline ModelGrids grids_from_json(const json& models) {
    ModelGrids g;
    if (models.contains("knn")) {
        g.knn_enabled = true;
        g.knn_k = models.at("knn").value("k", std::vector<int>{1, 3, 5, 7, 9, 11, 13, 15, 17, 19,
                                                               21, 23, 25, 27, 29, 31});
    }
    if (models.contains("tree")) {
        const json& t = models.at("tree");
        g.tree_enabled = true;
        g.tree_max_depth = t.value("max_depth", std::vector<int>{4, 8, 16});
        g.tree_min_samples_leaf = t.value("min_samples_leaf", std::vector<int>{1, 5});
        for (const std::string& c :
             t.value("criterion", std::vector<std::string>{"gini"}))
            g.tree_criterion.push_back(criterion_from_string(c));
    }
    if (models.contains("forest")) {
        const json& f = models.at("forest");
        g.forest_enabled = true;
        g.forest_n_trees = f.value("n_trees", std::vector<int>{100});
        g.forest_max_depth = f.value("max_depth", std::vector<int>{-1});
        g.forest_min_samples_leaf = f.value("min_samples_leaf", std::vector<int>{1});
        if (f.contains("features_per_split"))
            for (const json& v : f.at("features_per_split"))
                g.forest_features_per_split.push_back(features_per_split_from_json(v));
        else
            g.forest_features_per_split.push_back(0);
        g.forest_bootstrap = f.value("bootstrap", std::vector<bool>{true});
    }
    if (models.contains("gbt")) {
        const json& x = models.at("gbt");
        g.gbt_enabled = true;
        g.gbt_learning_rate = x.value("learning_rate", std::vector<double>{0.3});
        g.gbt_n_estimators = x.value("n_estimators", std::vector<int>{50});
        g.gbt_subsample = x.value("subsample", std::vector<double>{1.0});
        g.gbt_colsample_bytree = x.value("colsample_bytree", std::vector<double>{1.0});
        g.gbt_max_depth = x.value("max_depth", std::vector<int>{3, 5});
        g.gbt_alpha = x.value("alpha", std::vector<double>{0.0});
        g.gbt_gamma = x.value("gamma", std::vector<double>{0.0});
        g.gbt_lambda = x.value("lambda", std::vector<double>{1.0});
    }
    return g;
}

inline InterventionSpec intervention_from_json(const json& j) {
    InterventionSpec spec;
    spec.feature = j.at("feature").get<std::string>();
    const std::string mode = j.value("mode", "relative");
    if (mode == "relative")
        spec.mode = InterventionSpec::Mode::Relative;
    else if (mode == "set")
        spec.mode = InterventionSpec::Mode::AbsoluteSet;
    else
        throw ConfigError("intervention mode must be \"relative\" or \"set\"");
    spec.amount = j.at("amount").get<double>();
    if (j.contains("clip")) {
        const auto clip = j.at("clip").get<std::vector<double>>();
        if (clip.size() != 2) throw ConfigError("intervention clip must be [lo, hi]");
        spec.clip = {clip[0], clip[1]};
    }
    try {
        spec.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid intervention: ") + e.what());
    }
    return spec;
}

}  // namespace config_detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using config_detail::json;
    RunConfig cfg;
    cfg.canonical = j;
    try {
        cfg.seed = j.value("seed", std::uint64_t{42});
        cfg.out_dir = j.value("out_dir", "out");

        cfg.schema = j.contains("schema") ? config_detail::schema_from_json(j.at("schema"))
                                          : urban_health_schema();

        if (!j.contains("data")) throw ConfigError("config needs a \"data\" section");
        const json& data = j.at("data");
        if (data.contains("csv") == data.contains("synth"))
            throw ConfigError("data must name exactly one of \"csv\" or \"synth\"");
        if (data.contains("csv")) {
            cfg.csv_path = data.at("csv").get<std::string>();
        } else {
            cfg.use_synth = true;
            cfg.synth = config_detail::synth_from_json(data.at("synth"), cfg.schema);
        }

        cfg.binning_k = j.contains("binning") ? j.at("binning").value("k", 3) : 3;
        cfg.train_fraction =
            j.contains("split") ? j.at("split").value("train_fraction", 0.7) : 0.7;
        cfg.cv_folds = j.contains("cv") ? j.at("cv").value("folds", 5) : 5;

        if (j.contains("smote")) {
            const json& s = j.at("smote");
            cfg.smote_enabled = s.value("enabled", true);
            cfg.smote_k_neighbors = s.value("k_neighbors", 5);
            cfg.smote_target = s.value("target", 0);
        }

        if (j.contains("models")) {
            cfg.grids = config_detail::grids_from_json(j.at("models"));
        } else {
            const json all = {{"knn", json::object()},
                              {"tree", json::object()},
                              {"forest", json::object()},
                              {"gbt", json::object()}};
            cfg.grids = config_detail::grids_from_json(all);
        }
        if (!(cfg.grids.knn_enabled || cfg.grids.tree_enabled || cfg.grids.forest_enabled ||
              cfg.grids.gbt_enabled))
            throw ConfigError("model roster is empty");

        cfg.explain_enabled = j.contains("explain") ? j.at("explain").value("enabled", true) : true;

        if (j.contains("interventions")) {
            for (const json& spec : j.at("interventions"))
                cfg.interventions.push_back(config_detail::intervention_from_json(spec));
        } else {
            // stock experiments, wherever the schema carries these features
            auto maybe = [&](const std::string& name, double amount) {
                if (cfg.schema.find(name) >= 0)
                    cfg.interventions.push_back(
                        {name, InterventionSpec::Mode::Relative, amount, std::nullopt});
            };
            maybe("GS", 0.25);
            maybe("DA", -0.25);
            maybe("TE", -0.25);
        }

        cfg.impute_mean = j.value("impute_mean", false);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return cfg;
}

// Structural validation before any compute.
inline void validate_run_config(const RunConfig& cfg) {
    if (!(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0))
        throw ConfigError("split.train_fraction must lie in (0,1)");
    if (cfg.binning_k < 2) throw ConfigError("binning.k must be >= 2");
    if (cfg.cv_folds < 2) throw ConfigError("cv.folds must be >= 2");
    if (cfg.smote_k_neighbors < 1) throw ConfigError("smote.k_neighbors must be >= 1");
    if (cfg.smote_target < 0) throw ConfigError("smote.target must be >= 0");
    if (!cfg.use_synth && !std::filesystem::exists(cfg.csv_path))
        throw ConfigError("dataset file does not exist: " + cfg.csv_path);
    if (cfg.use_synth && cfg.synth.k_classes < 2)
        throw ConfigError("synth.classes must be >= 2");
    for (const auto& spec : cfg.interventions)
        if (cfg.schema.find(spec.feature) < 0)
            throw ConfigError("intervention names unknown feature: " + spec.feature);
}

inline RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("invalid JSON in " + path + ": " + e.what());
    }
    return parse_run_config(j);
}

// FNV-1a over the canonical dump with the output path stripped and the
// effective seed substituted: the hash identifies the experiment, not where
// its reports land.
inline std::string config_hash(const RunConfig& cfg) {
    nlohmann::json doc = cfg.canonical;
    doc.erase("out_dir");
    doc["seed"] = cfg.seed;
    const std::string dump = doc.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace tabml
