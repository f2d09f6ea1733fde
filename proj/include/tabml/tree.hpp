#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <span>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/rng.hpp"

namespace tabml {

// Binary tree node shared by the CART classifier, random forest, and
// gradient-boosted trees. Routing rule everywhere: value < threshold goes
// left, ties at the threshold go right. `cover` is the number of training
// rows that passed through the node at fit time (bootstrap/subsample
// multiplicity included); attribution needs it.
struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    double cover = -1.0;  // -1 = unrecorded
    std::vector<double> class_counts;  // classifier leaves
    double value = 0.0;                // score leaves (boosting)
    std::unique_ptr<TreeNode> left;
    std::unique_ptr<TreeNode> right;

    bool is_leaf() const { return feature < 0; }
};

using TreePtr = std::unique_ptr<TreeNode>;

struct TreeModel {
    TreePtr root;
    int n_features = 0;
    int n_classes = 0;
};

enum class Criterion { Gini, Entropy };

inline Criterion criterion_from_string(const std::string& s) {
    if (s == "gini") return Criterion::Gini;
    if (s == "entropy") return Criterion::Entropy;
    throw ParamError("unknown criterion: " + s);
}

inline double impurity(const std::vector<double>& counts, double n, Criterion crit) {
    if (n <= 0.0) return 0.0;
    if (crit == Criterion::Gini) {
        double s = 0.0;
        for (double c : counts) {
            const double p = c / n;
            s += p * p;
        }
        return 1.0 - s;
    }
    double h = 0.0;
    for (double c : counts) {
        if (c <= 0.0) continue;
        const double p = c / n;
        h -= p * std::log2(p);
    }
    return h;
}

namespace tree_detail {

constexpr double kGainEps = 1e-12;

// Per-feature row ids sorted by (value, id). Ids may repeat under bootstrap.
inline std::vector<std::vector<int>> presort(const Dataset& ds, const std::vector<int>& rows) {
    const int m = ds.n_features();
    std::vector<std::vector<int>> lists(static_cast<std::size_t>(m), rows);
    for (int f = 0; f < m; ++f) {
        auto& lst = lists[static_cast<std::size_t>(f)];
        std::sort(lst.begin(), lst.end(), [&](int a, int b) {
            const double va = ds.at(a, f);
            const double vb = ds.at(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
    }
    return lists;
}

// Splits every per-feature list by the chosen route, preserving sort order.
inline void partition(const std::vector<std::vector<int>>& lists, const Dataset& ds, int feature,
                      double threshold, std::vector<std::vector<int>>& left,
                      std::vector<std::vector<int>>& right) {
    const std::size_t m = lists.size();
    left.assign(m, {});
    right.assign(m, {});
    for (std::size_t f = 0; f < m; ++f) {
        for (int row : lists[f]) {
            if (ds.at(row, feature) < threshold)
                left[f].push_back(row);
            else
                right[f].push_back(row);
        }
    }
}

inline double midpoint(double lo, double hi) {
    const double t = lo + (hi - lo) / 2.0;
    return t;
}

struct CartSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

}  // namespace tree_detail

struct CartParams {
    int max_depth = -1;  // -1 = unlimited
    int min_samples_leaf = 1;
    Criterion criterion = Criterion::Gini;
};

namespace tree_detail {

// Greedy CART node construction over presorted lists. `m_try` features are
// drawn per node from `rng` when it is non-null and m_try < M; otherwise all
// features are scanned in index order. Candidate thresholds sit at midpoints
// of consecutive distinct values; ties on gain resolve to the lower feature
// index then the lower threshold (scan order).
inline TreePtr grow_cart(const Dataset& ds, std::vector<std::vector<int>> lists, int depth,
                         const CartParams& params, int m_try, Rng* rng) {
    const int m = ds.n_features();
    const auto& any = lists[0];
    const int n = static_cast<int>(any.size());

    std::vector<double> counts(static_cast<std::size_t>(ds.n_classes()), 0.0);
    for (int row : any) counts[static_cast<std::size_t>(ds.label(row) - 1)] += 1.0;
    int present = 0;
    for (double c : counts)
        if (c > 0.0) ++present;

    auto make_leaf = [&]() {
        auto leaf = std::make_unique<TreeNode>();
        leaf->cover = static_cast<double>(n);
        leaf->class_counts = counts;
        return leaf;
    };

    const bool depth_stop = params.max_depth >= 0 && depth >= params.max_depth;
    if (present <= 1 || depth_stop || n < 2 * params.min_samples_leaf) return make_leaf();

    std::vector<int> features;
    if (rng != nullptr && m_try < m) {
        features = rng->sample_indices(m, m_try);
    } else {
        features.resize(static_cast<std::size_t>(m));
        std::iota(features.begin(), features.end(), 0);
    }

    const double parent_imp = impurity(counts, n, params.criterion);
    CartSplit best;
    std::vector<double> left_counts(counts.size());
    for (int f : features) {
        const auto& lst = lists[static_cast<std::size_t>(f)];
        std::fill(left_counts.begin(), left_counts.end(), 0.0);
        int nl = 0;
        for (int pos = 0; pos < n; ++pos) {
            const int row = lst[static_cast<std::size_t>(pos)];
            left_counts[static_cast<std::size_t>(ds.label(row) - 1)] += 1.0;
            ++nl;
            if (pos + 1 >= n) break;
            const double v = ds.at(row, f);
            const double vn = ds.at(lst[static_cast<std::size_t>(pos + 1)], f);
            if (!(vn > v)) continue;
            const int nr = n - nl;
            if (nl < params.min_samples_leaf || nr < params.min_samples_leaf) continue;
            const double thr = midpoint(v, vn);
            if (!(v < thr)) continue;

            std::vector<double> rc(counts.size());
            for (std::size_t c = 0; c < counts.size(); ++c) rc[c] = counts[c] - left_counts[c];
            const double child =
                (nl * impurity(left_counts, nl, params.criterion) + nr * impurity(rc, nr, params.criterion)) /
                static_cast<double>(n);
            const double gain = parent_imp - child;
            if (!best.found || gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.gain = gain;
            }
        }
    }

    // Zero-gain splits are allowed on impure nodes (they can still separate
    // classes deeper down, e.g. XOR); without any candidate the node closes.
    if (!best.found || best.gain < -kGainEps) return make_leaf();

    std::vector<std::vector<int>> left_lists, right_lists;
    partition(lists, ds, best.feature, best.threshold, left_lists, right_lists);
    lists.clear();
    lists.shrink_to_fit();

    auto node = std::make_unique<TreeNode>();
    node->feature = best.feature;
    node->threshold = best.threshold;
    node->cover = static_cast<double>(n);
    node->left = grow_cart(ds, std::move(left_lists), depth + 1, params, m_try, rng);
    node->right = grow_cart(ds, std::move(right_lists), depth + 1, params, m_try, rng);
    return node;
}

}  // namespace tree_detail

inline TreeModel tree_fit(const Dataset& train, const CartParams& params = {}) {
    if (train.n_rows() == 0) throw InsufficientDataError("empty training set");
    if (!train.has_labels()) throw MissingLabelsError("tree_fit requires labels");
    if (params.min_samples_leaf < 1) throw ParamError("min_samples_leaf must be >= 1");

    std::vector<int> rows(static_cast<std::size_t>(train.n_rows()));
    std::iota(rows.begin(), rows.end(), 0);
    TreeModel model;
    model.n_features = train.n_features();
    model.n_classes = train.n_classes();
    model.root = tree_detail::grow_cart(train, tree_detail::presort(train, rows), 0, params,
                                        train.n_features(), nullptr);
    return model;
}

// Routes a row to its leaf.
inline const TreeNode* route_to_leaf(const TreeNode* node, std::span<const double> x) {
    while (!node->is_leaf())
        node = x[static_cast<std::size_t>(node->feature)] < node->threshold ? node->left.get()
                                                                            : node->right.get();
    return node;
}

// Majority class of a leaf, ties to the smallest label.
inline int leaf_prediction(const TreeNode& leaf) {
    int best = 1;
    double best_count = -1.0;
    for (std::size_t c = 0; c < leaf.class_counts.size(); ++c) {
        if (leaf.class_counts[c] > best_count) {
            best_count = leaf.class_counts[c];
            best = static_cast<int>(c) + 1;
        }
    }
    return best;
}

inline int tree_predict(const TreeModel& model, std::span<const double> x) {
    if (static_cast<int>(x.size()) != model.n_features)
        throw ShapeError("row width does not match the model");
    return leaf_prediction(*route_to_leaf(model.root.get(), x));
}

inline TreePtr clone_tree(const TreeNode& node) {
    auto out = std::make_unique<TreeNode>();
    out->feature = node.feature;
    out->threshold = node.threshold;
    out->cover = node.cover;
    out->class_counts = node.class_counts;
    out->value = node.value;
    if (node.left) out->left = clone_tree(*node.left);
    if (node.right) out->right = clone_tree(*node.right);
    return out;
}

inline bool trees_equal(const TreeNode& a, const TreeNode& b) {
    if (a.feature != b.feature || a.threshold != b.threshold || a.cover != b.cover ||
        a.class_counts != b.class_counts || a.value != b.value)
        return false;
    if (static_cast<bool>(a.left) != static_cast<bool>(b.left) ||
        static_cast<bool>(a.right) != static_cast<bool>(b.right))
        return false;
    if (a.left && !trees_equal(*a.left, *b.left)) return false;
    if (a.right && !trees_equal(*a.right, *b.right)) return false;
    return true;
}

// Marks features used by at least one internal node.
inline void collect_used_features(const TreeNode& node, std::vector<char>& used) {
    if (node.is_leaf()) return;
    used[static_cast<std::size_t>(node.feature)] = 1;
    collect_used_features(*node.left, used);
    collect_used_features(*node.right, used);
}

}  // namespace tabml
