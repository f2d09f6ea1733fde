#pragma once

#include <fstream>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "tabml/classifier.hpp"
#include "tabml/errors.hpp"
#include "tabml/explain.hpp"
#include "tabml/forest.hpp"
#include "tabml/gbt.hpp"
#include "tabml/knn.hpp"
#include "tabml/tree.hpp"
#include "tabml/version.hpp"

namespace tabml {

using json = nlohmann::json;

inline json node_to_json(const TreeNode& node) {
    json j;
    if (node.cover >= 0.0) j["cover"] = node.cover;
    if (node.is_leaf()) {
        if (!node.class_counts.empty())
            j["counts"] = node.class_counts;
        else
            j["value"] = node.value;
        return j;
    }
    j["feature"] = node.feature;
    j["threshold"] = node.threshold;
    j["left"] = node_to_json(*node.left);
    j["right"] = node_to_json(*node.right);
    return j;
}

inline TreePtr node_from_json(const json& j) {
    auto node = std::make_unique<TreeNode>();
    node->cover = j.value("cover", -1.0);
    if (j.contains("feature")) {
        node->feature = j.at("feature").get<int>();
        node->threshold = j.at("threshold").get<double>();
        node->left = node_from_json(j.at("left"));
        node->right = node_from_json(j.at("right"));
    } else if (j.contains("counts")) {
        node->class_counts = j.at("counts").get<std::vector<double>>();
    } else {
        node->value = j.at("value").get<double>();
    }
    return node;
}

inline json gbt_params_to_json(const GbtParams& p) {
    return json{{"learning_rate", p.learning_rate},
                {"n_estimators", p.n_estimators},
                {"subsample", p.subsample},
                {"colsample_bytree", p.colsample_bytree},
                {"max_depth", p.max_depth},
                {"alpha", p.alpha},
                {"gamma", p.gamma},
                {"lambda", p.lambda},
                {"seed", p.seed}};
}

inline GbtParams gbt_params_from_json(const json& j) {
    GbtParams p;
    p.learning_rate = j.value("learning_rate", p.learning_rate);
    p.n_estimators = j.value("n_estimators", p.n_estimators);
    p.subsample = j.value("subsample", p.subsample);
    p.colsample_bytree = j.value("colsample_bytree", p.colsample_bytree);
    p.max_depth = j.value("max_depth", p.max_depth);
    p.alpha = j.value("alpha", p.alpha);
    p.gamma = j.value("gamma", p.gamma);
    p.lambda = j.value("lambda", p.lambda);
    p.seed = j.value("seed", p.seed);
    return p;
}

namespace model_io_detail {

inline json doc_header(const std::string& type, int n_classes,
                       const std::vector<std::string>& feature_names) {
    json j;
    j["format"] = "tabml.model";
    j["version"] = kModelFormatVersion;
    j["type"] = type;
    j["n_classes"] = n_classes;
    j["features"] = feature_names;
    return j;
}

}  // namespace model_io_detail

inline json model_to_json(const TreeModel& model, const std::vector<std::string>& feature_names) {
    json j = model_io_detail::doc_header("tree", model.n_classes, feature_names);
    j["root"] = node_to_json(*model.root);
    return j;
}

inline json model_to_json(const ForestModel& model, const std::vector<std::string>& feature_names) {
    json j = model_io_detail::doc_header("forest", model.n_classes, feature_names);
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"max_depth", model.params.max_depth},
                   {"min_samples_leaf", model.params.min_samples_leaf},
                   {"criterion", model.params.criterion == Criterion::Gini ? "gini" : "entropy"},
                   {"features_per_split", model.params.features_per_split},
                   {"bootstrap", model.params.bootstrap},
                   {"seed", model.params.seed}};
    j["trees"] = json::array();
    for (const auto& tree : model.trees) j["trees"].push_back(node_to_json(*tree));
    j["bootstrap_rows"] = model.bootstrap_rows;
    return j;
}

inline json model_to_json(const GbtEnsemble& model, const std::vector<std::string>& feature_names) {
    json j = model_io_detail::doc_header("gbt", model.n_classes, feature_names);
    j["params"] = gbt_params_to_json(model.params);
    j["base_score"] = model.base_score;
    j["rounds"] = json::array();
    for (const auto& round : model.rounds) {
        json jr = json::array();
        for (const auto& tree : round) jr.push_back(node_to_json(*tree));
        j["rounds"].push_back(std::move(jr));
    }
    return j;
}

inline json model_to_json(const KnnModel& model, const std::vector<std::string>& feature_names) {
    json j = model_io_detail::doc_header("knn", model.n_classes, feature_names);
    j["k"] = model.k;
    j["rows"] = model.rows;
    j["labels"] = model.labels;
    return j;
}

// Any serialized model, reloaded. Holds the storage the scorers and SHAP
// views point into, so keep it alive while they are used.
struct LoadedModel {
    std::string type;
    std::vector<std::string> feature_names;
    int n_classes = 0;
    std::variant<TreeModel, ForestModel, GbtEnsemble, KnnModel> model;

    const char* family() const { return type.c_str(); }

    ClassScorer scorer() const {
        return std::visit([](const auto& m) { return make_scorer(m); }, model);
    }

    bool shap_capable() const { return type != "knn"; }

    ShapModelView shap_view() const {
        if (const auto* t = std::get_if<TreeModel>(&model)) return make_shap_view(*t);
        if (const auto* f = std::get_if<ForestModel>(&model)) return make_shap_view(*f);
        if (const auto* g = std::get_if<GbtEnsemble>(&model)) return make_shap_view(*g);
        throw ParamError("knn models have no tree attribution view");
    }
};

inline LoadedModel model_from_json(const json& j) {
    if (j.value("format", "") != "tabml.model")
        throw ParseError("not a tabml.model document");
    LoadedModel out;
    out.type = j.at("type").get<std::string>();
    out.feature_names = j.at("features").get<std::vector<std::string>>();
    out.n_classes = j.at("n_classes").get<int>();
    const int m = static_cast<int>(out.feature_names.size());

    if (out.type == "tree") {
        TreeModel model;
        model.n_classes = out.n_classes;
        model.n_features = m;
        model.root = node_from_json(j.at("root"));
        out.model = std::move(model);
    } else if (out.type == "forest") {
        ForestModel model;
        model.n_classes = out.n_classes;
        model.n_features = m;
        const json& p = j.at("params");
        model.params.n_trees = p.value("n_trees", 1);
        model.params.max_depth = p.value("max_depth", -1);
        model.params.min_samples_leaf = p.value("min_samples_leaf", 1);
        model.params.criterion = criterion_from_string(p.value("criterion", "gini"));
        model.params.features_per_split = p.value("features_per_split", 0);
        model.params.bootstrap = p.value("bootstrap", true);
        model.params.seed = p.value("seed", std::uint64_t{0});
        for (const json& t : j.at("trees")) model.trees.push_back(node_from_json(t));
        if (j.contains("bootstrap_rows"))
            model.bootstrap_rows = j.at("bootstrap_rows").get<std::vector<std::vector<int>>>();
        out.model = std::move(model);
    } else if (out.type == "gbt") {
        GbtEnsemble model;
        model.n_classes = out.n_classes;
        model.n_features = m;
        model.params = gbt_params_from_json(j.at("params"));
        model.base_score = j.at("base_score").get<std::vector<double>>();
        for (const json& jr : j.at("rounds")) {
            std::vector<TreePtr> round;
            for (const json& t : jr) round.push_back(node_from_json(t));
            model.rounds.push_back(std::move(round));
        }
        out.model = std::move(model);
    } else if (out.type == "knn") {
        KnnModel model;
        model.n_classes = out.n_classes;
        model.k = j.at("k").get<int>();
        model.rows = j.at("rows").get<std::vector<std::vector<double>>>();
        model.labels = j.at("labels").get<std::vector<int>>();
        out.model = std::move(model);
    } else {
        throw ParseError("unknown model type: " + out.type);
    }
    return out;
}

inline void save_model_json(const json& doc, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot write file: " + path);
    out << doc.dump(2) << '\n';
}

inline LoadedModel load_model_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ParseError("invalid JSON in " + path + ": " + e.what());
    }
    return model_from_json(j);
}

}  // namespace tabml
