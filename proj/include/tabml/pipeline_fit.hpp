#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/classifier.hpp"
#include "tabml/config.hpp"
#include "tabml/explain.hpp"
#include "tabml/metrics.hpp"
#include "tabml/model_io.hpp"
#include "tabml/resample.hpp"

namespace tabml {

// A fitted model of any roster family, shared-ownership so scorers and
// attribution views can outlive the fitting scope.
struct FittedModel {
    std::string family;
    std::shared_ptr<const KnnModel> knn;
    std::shared_ptr<const TreeModel> tree;
    std::shared_ptr<const ForestModel> forest;
    std::shared_ptr<const GbtEnsemble> gbt;

    int predict(std::span<const double> x) const {
        if (knn) return knn_predict(*knn, x);
        if (tree) return tree_predict(*tree, x);
        if (forest) return forest_predict(*forest, x);
        if (gbt) return gbt_predict_label(*gbt, x);
        throw Error("empty fitted model");
    }

    ClassScorer scorer() const {
        ClassScorer s;
        if (knn) {
            auto m = knn;
            s.label = [m](std::span<const double> x) { return knn_predict(*m, x); };
        } else if (tree) {
            auto m = tree;
            s.label = [m](std::span<const double> x) { return tree_predict(*m, x); };
            s.proba = [m](std::span<const double> x) {
                const TreeNode* leaf = route_to_leaf(m->root.get(), x);
                double total = 0.0;
                for (double c : leaf->class_counts) total += c;
                std::vector<double> p(leaf->class_counts.size(), 0.0);
                if (total > 0.0)
                    for (std::size_t c = 0; c < p.size(); ++c) p[c] = leaf->class_counts[c] / total;
                return p;
            };
        } else if (forest) {
            auto m = forest;
            s.label = [m](std::span<const double> x) { return forest_predict(*m, x); };
            s.proba = [m](std::span<const double> x) {
                std::vector<double> votes(static_cast<std::size_t>(m->n_classes), 0.0);
                for (const auto& t : m->trees)
                    votes[static_cast<std::size_t>(leaf_prediction(*route_to_leaf(t.get(), x)) - 1)] += 1.0;
                for (double& v : votes) v /= static_cast<double>(m->trees.size());
                return votes;
            };
        } else if (gbt) {
            auto m = gbt;
            s.label = [m](std::span<const double> x) { return gbt_predict_label(*m, x); };
            s.proba = [m](std::span<const double> x) { return gbt_predict_proba(*m, x); };
        } else {
            throw Error("empty fitted model");
        }
        return s;
    }

    bool shap_capable() const { return tree || forest || gbt; }

    ShapModelView shap_view() const {
        if (tree) return make_shap_view(*tree);
        if (forest) return make_shap_view(*forest);
        if (gbt) return make_shap_view(*gbt);
        throw ParamError(family + " models have no tree attribution view");
    }

    json to_json(const std::vector<std::string>& feature_names) const {
        if (knn) return model_to_json(*knn, feature_names);
        if (tree) return model_to_json(*tree, feature_names);
        if (forest) return model_to_json(*forest, feature_names);
        if (gbt) return model_to_json(*gbt, feature_names);
        throw Error("empty fitted model");
    }
};

struct FamilyCandidate {
    json params_doc;
    std::function<FittedModel(const Dataset&)> fit;
};

struct FamilySpec {
    std::string name;
    std::vector<FamilyCandidate> candidates;
};

// Mean CV macro-F1 (standard form) of one fit recipe. The per-fold SMOTE
// seed derivation matches grid_search's, so pipeline scores and grid_search
// scores agree exactly for GBT.
inline double cv_macro_f1(const Dataset& train, const FoldPlan& folds,
                          const std::optional<SmoteParams>& resample,
                          const std::function<FittedModel(const Dataset&)>& fit, int k_classes) {
    double sum = 0.0;
    for (int f = 0; f < folds.k; ++f) {
        Dataset fit_part = train.subset(folds.complement_rows(f));
        const Dataset eval_part = train.subset(folds.fold_rows(f));
        if (resample) {
            SmoteParams sp = *resample;
            sp.seed = mix_seed(sp.seed, static_cast<std::uint64_t>(f));
            fit_part = smote(fit_part, sp).data;
        }
        const FittedModel model = fit(fit_part);
        std::vector<int> pred(static_cast<std::size_t>(eval_part.n_rows()));
        for (int i = 0; i < eval_part.n_rows(); ++i)
            pred[static_cast<std::size_t>(i)] = model.predict(eval_part.row(i));
        sum += macro_scores(confusion(eval_part.labels(), pred, k_classes)).macro_f1_standard;
    }
    return sum / static_cast<double>(folds.k);
}

// Roster candidates in fixed family order, Cartesian products in field
// order (last axis fastest).
inline std::vector<FamilySpec> enumerate_families(const ModelGrids& grids,
                                                  std::uint64_t master_seed) {
    std::vector<FamilySpec> out;

    if (grids.knn_enabled) {
        FamilySpec spec;
        spec.name = "knn";
        for (int k : grids.knn_k) {
            FamilyCandidate cand;
            cand.params_doc = {{"k", k}};
            cand.fit = [k](const Dataset& train) {
                FittedModel m;
                m.family = "knn";
                m.knn = std::make_shared<KnnModel>(knn_fit(train, k));
                return m;
            };
            spec.candidates.push_back(std::move(cand));
        }
        out.push_back(std::move(spec));
    }

    if (grids.tree_enabled) {
        FamilySpec spec;
        spec.name = "tree";
        for (int depth : grids.tree_max_depth)
            for (int msl : grids.tree_min_samples_leaf)
                for (Criterion crit : grids.tree_criterion) {
                    FamilyCandidate cand;
                    cand.params_doc = {{"max_depth", depth},
                                       {"min_samples_leaf", msl},
                                       {"criterion", crit == Criterion::Gini ? "gini" : "entropy"}};
                    cand.fit = [depth, msl, crit](const Dataset& train) {
                        CartParams p;
                        p.max_depth = depth;
                        p.min_samples_leaf = msl;
                        p.criterion = crit;
                        FittedModel m;
                        m.family = "tree";
                        m.tree = std::make_shared<TreeModel>(tree_fit(train, p));
                        return m;
                    };
                    spec.candidates.push_back(std::move(cand));
                }
        out.push_back(std::move(spec));
    }

    if (grids.forest_enabled) {
        FamilySpec spec;
        spec.name = "forest";
        const std::uint64_t seed = mix_seed(master_seed, 21);
        for (int n_trees : grids.forest_n_trees)
            for (int depth : grids.forest_max_depth)
                for (int msl : grids.forest_min_samples_leaf)
                    for (int fps : grids.forest_features_per_split)
                        for (bool bootstrap : grids.forest_bootstrap) {
                            FamilyCandidate cand;
                            cand.params_doc = {
                                {"n_trees", n_trees},
                                {"max_depth", depth},
                                {"min_samples_leaf", msl},
                                {"features_per_split",
                                 fps == 0 ? json("sqrt") : (fps == -1 ? json("all") : json(fps))},
                                {"bootstrap", bootstrap}};
                            cand.fit = [n_trees, depth, msl, fps, bootstrap, seed](const Dataset& train) {
                                ForestParams p;
                                p.n_trees = n_trees;
                                p.max_depth = depth;
                                p.min_samples_leaf = msl;
                                p.features_per_split = fps;
                                p.bootstrap = bootstrap;
                                p.seed = seed;
                                FittedModel m;
                                m.family = "forest";
                                m.forest = std::make_shared<ForestModel>(forest_fit(train, p));
                                return m;
                            };
                            spec.candidates.push_back(std::move(cand));
                        }
        out.push_back(std::move(spec));
    }

    if (grids.gbt_enabled) {
        FamilySpec spec;
        spec.name = "gbt";
        const std::uint64_t seed = mix_seed(master_seed, 20);
        for (double lr : grids.gbt_learning_rate)
            for (int rounds : grids.gbt_n_estimators)
                for (double sub : grids.gbt_subsample)
                    for (double col : grids.gbt_colsample_bytree)
                        for (int depth : grids.gbt_max_depth)
                            for (double alpha : grids.gbt_alpha)
                                for (double gamma : grids.gbt_gamma)
                                    for (double lambda : grids.gbt_lambda) {
                                        GbtParams p;
                                        p.learning_rate = lr;
                                        p.n_estimators = rounds;
                                        p.subsample = sub;
                                        p.colsample_bytree = col;
                                        p.max_depth = depth;
                                        p.alpha = alpha;
                                        p.gamma = gamma;
                                        p.lambda = lambda;
                                        p.seed = seed;
                                        FamilyCandidate cand;
                                        cand.params_doc = gbt_params_to_json(p);
                                        cand.fit = [p](const Dataset& train) {
                                            FittedModel m;
                                            m.family = "gbt";
                                            m.gbt = std::make_shared<GbtEnsemble>(gbt_fit(train, p));
                                            return m;
                                        };
                                        spec.candidates.push_back(std::move(cand));
                                    }
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace tabml
