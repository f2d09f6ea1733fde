#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/rng.hpp"
#include "tabml/tree.hpp"

namespace tabml {

struct ForestParams {
    int n_trees = 100;
    int max_depth = -1;
    int min_samples_leaf = 1;
    Criterion criterion = Criterion::Gini;
    // features drawn per split: 0 = sqrt(M), -1 = all, >0 = that many
    int features_per_split = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<TreePtr> trees;
    std::vector<std::vector<int>> bootstrap_rows;  // per tree, empty when bootstrap off
    ForestParams params;
    int n_features = 0;
    int n_classes = 0;
};

inline int resolve_features_per_split(int configured, int m) {
    if (configured == -1) return m;
    if (configured == 0) return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(m)))));
    if (configured < -1 || configured > m) throw ParamError("features_per_split out of range");
    return configured;
}

// Bagged CART trees; per-tree seeded bootstrap and per-node feature subsets.
// One tree, no bootstrap, all features reproduces tree_fit node-for-node.
inline ForestModel forest_fit(const Dataset& train, const ForestParams& params) {
    if (train.n_rows() == 0) throw InsufficientDataError("empty training set");
    if (!train.has_labels()) throw MissingLabelsError("forest_fit requires labels");
    if (params.n_trees < 1) throw ParamError("n_trees must be >= 1");

    const int n = train.n_rows();
    const int m = train.n_features();
    const int m_try = resolve_features_per_split(params.features_per_split, m);

    CartParams cart;
    cart.max_depth = params.max_depth;
    cart.min_samples_leaf = params.min_samples_leaf;
    cart.criterion = params.criterion;

    ForestModel model;
    model.params = params;
    model.n_features = m;
    model.n_classes = train.n_classes();
    model.trees.reserve(static_cast<std::size_t>(params.n_trees));

    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<int> rows(static_cast<std::size_t>(n));
        if (params.bootstrap) {
            for (int i = 0; i < n; ++i)
                rows[static_cast<std::size_t>(i)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));
            std::sort(rows.begin(), rows.end());
            model.bootstrap_rows.push_back(rows);
        } else {
            std::iota(rows.begin(), rows.end(), 0);
            model.bootstrap_rows.emplace_back();
        }
        Rng* node_rng = m_try < m ? &rng : nullptr;
        model.trees.push_back(tree_detail::grow_cart(train, tree_detail::presort(train, rows), 0,
                                                     cart, m_try, node_rng));
    }
    return model;
}

// Majority vote over trees, ties to the smallest class label.
inline int forest_predict(const ForestModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.n_features)
        throw ShapeError("row width does not match the model");
    std::vector<int> votes(static_cast<std::size_t>(model.n_classes), 0);
    for (const auto& tree : model.trees)
        ++votes[static_cast<std::size_t>(leaf_prediction(*route_to_leaf(tree.get(), x)) - 1)];
    int best = 1;
    int best_votes = -1;
    for (std::size_t c = 0; c < votes.size(); ++c) {
        if (votes[c] > best_votes) {
            best_votes = votes[c];
            best = static_cast<int>(c) + 1;
        }
    }
    return best;
}

}  // namespace tabml
