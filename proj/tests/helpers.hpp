#pragma once

// shared test utilities: tiny dataset builders and randomized tree-ensemble
// fixtures for attribution checks

#include <memory>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/explain.hpp"
#include "tabml/rng.hpp"
#include "tabml/tree.hpp"

namespace tabml::test {

inline Dataset make_ds(int m, const std::vector<std::vector<double>>& rows,
                       const std::vector<int>& labels, int k) {
    FeatureSchema schema;
    for (int j = 0; j < m; ++j)
        schema.features.push_back({"f" + std::to_string(j), FeatureKind::Density});
    std::vector<double> vals;
    for (const auto& r : rows) vals.insert(vals.end(), r.begin(), r.end());
    Dataset ds(schema, std::move(vals));
    if (!labels.empty()) ds.set_labels(labels, k, /*require_full_coverage=*/false);
    return ds;
}

// random score tree with positive covers; split thresholds in (0,1)
inline TreePtr random_score_tree(Rng& rng, int m, int depth, int max_depth) {
    auto node = std::make_unique<TreeNode>();
    if (depth >= max_depth || rng.uniform() < 0.25) {
        node->value = rng.uniform() * 2.0 - 1.0;
        node->cover = 1.0 + static_cast<double>(rng.below(20));
        return node;
    }
    node->feature = static_cast<int>(rng.below(static_cast<std::uint64_t>(m)));
    node->threshold = rng.uniform();
    node->left = random_score_tree(rng, m, depth + 1, max_depth);
    node->right = random_score_tree(rng, m, depth + 1, max_depth);
    node->cover = node->left->cover + node->right->cover;
    return node;
}

struct RandomEnsemble {
    ShapModelView view;
    std::vector<TreePtr> storage;
    std::vector<double> x;
};

// randomized fixture: 1..8 score trees over <= 12 features, depth <= 3
inline RandomEnsemble random_ensemble(std::uint64_t seed) {
    Rng rng(seed);
    RandomEnsemble out;
    const int m = 2 + static_cast<int>(rng.below(11));  // 2..12
    const int n_trees = 1 + static_cast<int>(rng.below(8));
    const int k = 1 + static_cast<int>(rng.below(3));
    out.view.n_classes = k;
    out.view.n_features = m;
    out.view.base_offset.assign(static_cast<std::size_t>(k), 0.0);
    for (int t = 0; t < n_trees; ++t) {
        out.storage.push_back(random_score_tree(rng, m, 0, 3));
        out.view.trees.push_back({out.storage.back().get(),
                                  static_cast<int>(rng.below(static_cast<std::uint64_t>(k))),
                                  rng.uniform() + 0.1, false});
    }
    out.x.resize(static_cast<std::size_t>(m));
    for (auto& v : out.x) v = rng.uniform();
    return out;
}

}  // namespace tabml::test
