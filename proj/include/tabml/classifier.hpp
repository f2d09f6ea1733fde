#pragma once

#include <span>
#include <vector>

#include "tabml/causal.hpp"
#include "tabml/forest.hpp"
#include "tabml/gbt.hpp"
#include "tabml/knn.hpp"
#include "tabml/tree.hpp"

namespace tabml {

// Scorer adapters. The referenced model must outlive the scorer.

inline ClassScorer make_scorer(const KnnModel& model) {
    ClassScorer s;
    s.label = [&model](std::span<const double> x) { return knn_predict(model, x); };
    return s;
}

inline ClassScorer make_scorer(const TreeModel& model) {
    ClassScorer s;
    s.label = [&model](std::span<const double> x) { return tree_predict(model, x); };
    s.proba = [&model](std::span<const double> x) {
        const TreeNode* leaf = route_to_leaf(model.root.get(), x);
        double total = 0.0;
        for (double c : leaf->class_counts) total += c;
        std::vector<double> p(leaf->class_counts.size(), 0.0);
        if (total > 0.0)
            for (std::size_t c = 0; c < p.size(); ++c) p[c] = leaf->class_counts[c] / total;
        return p;
    };
    return s;
}

inline ClassScorer make_scorer(const ForestModel& model) {
    ClassScorer s;
    s.label = [&model](std::span<const double> x) { return forest_predict(model, x); };
    s.proba = [&model](std::span<const double> x) {
        std::vector<double> votes(static_cast<std::size_t>(model.n_classes), 0.0);
        for (const auto& tree : model.trees)
            votes[static_cast<std::size_t>(leaf_prediction(*route_to_leaf(tree.get(), x)) - 1)] += 1.0;
        for (double& v : votes) v /= static_cast<double>(model.trees.size());
        return votes;
    };
    return s;
}

inline ClassScorer make_scorer(const GbtEnsemble& model) {
    ClassScorer s;
    s.label = [&model](std::span<const double> x) { return gbt_predict_label(model, x); };
    s.proba = [&model](std::span<const double> x) { return gbt_predict_proba(model, x); };
    return s;
}

}  // namespace tabml
