#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/forest.hpp"
#include "tabml/gbt.hpp"
#include "tabml/tree.hpp"

namespace tabml {

// Uniform scorer view over the tree models. Each entry contributes
// weight * leaf_score to one class margin; classifier leaves score as the
// class share of their counts, boosting leaves as the raw value.
struct ShapTreeRef {
    const TreeNode* root = nullptr;
    int klass = 0;       // 0-based target class
    double weight = 1.0;
    bool leaf_uses_counts = false;
};

struct ShapModelView {
    int n_classes = 0;
    int n_features = 0;
    std::vector<double> base_offset;  // per class
    std::vector<ShapTreeRef> trees;
};

// Per-class additive attribution: base_value[c] + sum(phi[c]) equals the
// raw margin of class c at the explained row.
struct ShapExplanation {
    std::vector<std::vector<double>> phi;  // [class][feature]
    std::vector<double> base_value;        // [class]
};

inline ShapModelView make_shap_view(const GbtEnsemble& model) {
    ShapModelView view;
    view.n_classes = model.n_classes;
    view.n_features = model.n_features;
    view.base_offset = model.base_score;
    for (const auto& round : model.rounds)
        for (int c = 0; c < model.n_classes; ++c)
            view.trees.push_back({round[static_cast<std::size_t>(c)].get(), c,
                                  model.params.learning_rate, false});
    return view;
}

inline ShapModelView make_shap_view(const ForestModel& model) {
    ShapModelView view;
    view.n_classes = model.n_classes;
    view.n_features = model.n_features;
    view.base_offset.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    const double w = 1.0 / static_cast<double>(model.trees.size());
    for (const auto& tree : model.trees)
        for (int c = 0; c < model.n_classes; ++c)
            view.trees.push_back({tree.get(), c, w, true});
    return view;
}

inline ShapModelView make_shap_view(const TreeModel& model) {
    ShapModelView view;
    view.n_classes = model.n_classes;
    view.n_features = model.n_features;
    view.base_offset.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    for (int c = 0; c < model.n_classes; ++c)
        view.trees.push_back({model.root.get(), c, 1.0, true});
    return view;
}

namespace shap_detail {

inline double leaf_score(const TreeNode& leaf, int klass, bool uses_counts) {
    if (!uses_counts) return leaf.value;
    double total = 0.0;
    for (double c : leaf.class_counts) total += c;
    return total > 0.0 ? leaf.class_counts[static_cast<std::size_t>(klass)] / total : 0.0;
}

inline void require_covers(const TreeNode& node) {
    if (!(node.cover > 0.0))
        throw MissingCoverError("tree node lacks a positive cover record");
    if (!node.is_leaf()) {
        require_covers(*node.left);
        require_covers(*node.right);
    }
}

// Cover-weighted expectation of the tree's score for one class: the value
// of the empty coalition.
inline double tree_expectation(const TreeNode& node, int klass, bool uses_counts) {
    if (node.is_leaf()) return leaf_score(node, klass, uses_counts);
    const double wl = node.left->cover / node.cover;
    const double wr = node.right->cover / node.cover;
    return wl * tree_expectation(*node.left, klass, uses_counts) +
           wr * tree_expectation(*node.right, klass, uses_counts);
}

// --- path-dependent TreeSHAP (polynomial-time exact attribution) ---

struct PathElem {
    int feature = -1;
    double zero_frac = 1.0;  // flow-through proportion when the feature is absent
    double one_frac = 1.0;   // 1 when x's path keeps following, else 0
    double pweight = 1.0;
};

inline void extend_path(std::vector<PathElem>& path, double pz, double po, int pf) {
    const int l = static_cast<int>(path.size());
    path.push_back({pf, pz, po, l == 0 ? 1.0 : 0.0});
    for (int i = l - 1; i >= 0; --i) {
        path[static_cast<std::size_t>(i + 1)].pweight +=
            po * path[static_cast<std::size_t>(i)].pweight * (i + 1) / static_cast<double>(l + 1);
        path[static_cast<std::size_t>(i)].pweight =
            pz * path[static_cast<std::size_t>(i)].pweight * (l - i) / static_cast<double>(l + 1);
    }
}

// Sum of the path weights with element i unwound (not materialized).
inline double unwound_sum(const std::vector<PathElem>& path, int i) {
    const int l = static_cast<int>(path.size()) - 1;
    const double oz = path[static_cast<std::size_t>(i)].zero_frac;
    const double oo = path[static_cast<std::size_t>(i)].one_frac;
    double total = 0.0;
    if (oo != 0.0) {
        double next_one = path[static_cast<std::size_t>(l)].pweight;
        for (int j = l - 1; j >= 0; --j) {
            const double w = next_one * (l + 1) / ((j + 1) * oo);
            total += w;
            next_one = path[static_cast<std::size_t>(j)].pweight - w * oz * (l - j) / static_cast<double>(l + 1);
        }
    } else {
        for (int j = l - 1; j >= 0; --j)
            total += path[static_cast<std::size_t>(j)].pweight * (l + 1) / (oz * (l - j));
    }
    return total;
}

inline void unwind_path(std::vector<PathElem>& path, int i) {
    const int l = static_cast<int>(path.size()) - 1;
    const double oz = path[static_cast<std::size_t>(i)].zero_frac;
    const double oo = path[static_cast<std::size_t>(i)].one_frac;
    if (oo != 0.0) {
        double next_one = path[static_cast<std::size_t>(l)].pweight;
        for (int j = l - 1; j >= 0; --j) {
            const double saved = path[static_cast<std::size_t>(j)].pweight;
            path[static_cast<std::size_t>(j)].pweight = next_one * (l + 1) / ((j + 1) * oo);
            next_one = saved - path[static_cast<std::size_t>(j)].pweight * oz * (l - j) /
                                   static_cast<double>(l + 1);
        }
    } else {
        for (int j = l - 1; j >= 0; --j)
            path[static_cast<std::size_t>(j)].pweight =
                path[static_cast<std::size_t>(j)].pweight * (l + 1) / (oz * (l - j));
    }
    for (int j = i; j < l; ++j) {
        path[static_cast<std::size_t>(j)].feature = path[static_cast<std::size_t>(j + 1)].feature;
        path[static_cast<std::size_t>(j)].zero_frac = path[static_cast<std::size_t>(j + 1)].zero_frac;
        path[static_cast<std::size_t>(j)].one_frac = path[static_cast<std::size_t>(j + 1)].one_frac;
    }
    path.pop_back();
}

inline void shap_recurse(const TreeNode* node, std::vector<PathElem> path, double pz, double po,
                         int pf, std::span<const double> x, int klass, bool uses_counts,
                         std::vector<double>& phi) {
    extend_path(path, pz, po, pf);

    if (node->is_leaf()) {
        const double v = leaf_score(*node, klass, uses_counts);
        for (int i = 1; i < static_cast<int>(path.size()); ++i) {
            const double w = unwound_sum(path, i);
            phi[static_cast<std::size_t>(path[static_cast<std::size_t>(i)].feature)] +=
                w *
                (path[static_cast<std::size_t>(i)].one_frac - path[static_cast<std::size_t>(i)].zero_frac) *
                v;
        }
        return;
    }

    const bool go_left = x[static_cast<std::size_t>(node->feature)] < node->threshold;
    const TreeNode* hot = go_left ? node->left.get() : node->right.get();
    const TreeNode* cold = go_left ? node->right.get() : node->left.get();
    const double hot_z = hot->cover / node->cover;
    const double cold_z = cold->cover / node->cover;

    double incoming_z = 1.0;
    double incoming_o = 1.0;
    int prev = -1;
    for (int i = 1; i < static_cast<int>(path.size()); ++i) {
        if (path[static_cast<std::size_t>(i)].feature == node->feature) {
            prev = i;
            break;
        }
    }
    if (prev >= 0) {
        incoming_z = path[static_cast<std::size_t>(prev)].zero_frac;
        incoming_o = path[static_cast<std::size_t>(prev)].one_frac;
        unwind_path(path, prev);
    }

    shap_recurse(hot, path, hot_z * incoming_z, incoming_o, node->feature, x, klass, uses_counts, phi);
    shap_recurse(cold, std::move(path), cold_z * incoming_z, 0.0, node->feature, x, klass,
                 uses_counts, phi);
}

}  // namespace shap_detail

// Exact Shapley attribution of the path-dependent conditional-expectation
// game: absent features route by training-cover proportions recorded at fit
// time. Attributions sum across trees per class.
inline ShapExplanation treeshap(const ShapModelView& view, std::span<const double> x) {
    if (static_cast<int>(x.size()) != view.n_features)
        throw ShapeError("row width does not match the model");
    ShapExplanation out;
    out.base_value = view.base_offset;
    out.phi.assign(static_cast<std::size_t>(view.n_classes),
                   std::vector<double>(static_cast<std::size_t>(view.n_features), 0.0));

    std::vector<double> tree_phi(static_cast<std::size_t>(view.n_features));
    for (const auto& ref : view.trees) {
        shap_detail::require_covers(*ref.root);
        std::fill(tree_phi.begin(), tree_phi.end(), 0.0);
        shap_detail::shap_recurse(ref.root, {}, 1.0, 1.0, -1, x, ref.klass, ref.leaf_uses_counts,
                                  tree_phi);
        auto& phi_c = out.phi[static_cast<std::size_t>(ref.klass)];
        for (int j = 0; j < view.n_features; ++j)
            phi_c[static_cast<std::size_t>(j)] += ref.weight * tree_phi[static_cast<std::size_t>(j)];
        out.base_value[static_cast<std::size_t>(ref.klass)] +=
            ref.weight * shap_detail::tree_expectation(*ref.root, ref.klass, ref.leaf_uses_counts);
    }
    return out;
}

// Raw per-class margins of the view (what attributions must reconstruct).
inline std::vector<double> view_margins(const ShapModelView& view, std::span<const double> x) {
    std::vector<double> margins = view.base_offset;
    for (const auto& ref : view.trees)
        margins[static_cast<std::size_t>(ref.klass)] +=
            ref.weight *
            shap_detail::leaf_score(*route_to_leaf(ref.root, x), ref.klass, ref.leaf_uses_counts);
    return margins;
}

namespace shap_detail {

inline double subset_value(const TreeNode* node, std::span<const double> x, std::uint64_t mask,
                           int klass, bool uses_counts) {
    if (node->is_leaf()) return leaf_score(*node, klass, uses_counts);
    if ((mask >> node->feature) & 1ULL) {
        const TreeNode* next = x[static_cast<std::size_t>(node->feature)] < node->threshold
                                   ? node->left.get()
                                   : node->right.get();
        return subset_value(next, x, mask, klass, uses_counts);
    }
    const double wl = node->left->cover / node->cover;
    const double wr = node->right->cover / node->cover;
    return wl * subset_value(node->left.get(), x, mask, klass, uses_counts) +
           wr * subset_value(node->right.get(), x, mask, klass, uses_counts);
}

}  // namespace shap_detail

// Subset-enumeration oracle for the same game treeshap plays:
// phi_j = sum_S |S|! (M-|S|-1)! / M! * (v(S+j) - v(S)). Exponential in the
// feature count; refuses more than `max_features`.
inline std::vector<std::vector<double>> brute_force_shapley(const ShapModelView& view,
                                                            std::span<const double> x,
                                                            int max_features = 15) {
    const int m = view.n_features;
    if (m > max_features || m > 15)
        throw TractabilityError("brute-force enumeration over " + std::to_string(m) +
                                " features is intractable");
    if (static_cast<int>(x.size()) != m) throw ShapeError("row width does not match the model");

    const std::uint64_t n_masks = 1ULL << m;
    std::vector<double> factorial(static_cast<std::size_t>(m + 1), 1.0);
    for (int i = 1; i <= m; ++i)
        factorial[static_cast<std::size_t>(i)] = factorial[static_cast<std::size_t>(i - 1)] * i;

    std::vector<std::vector<double>> phi(static_cast<std::size_t>(view.n_classes),
                                         std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::vector<double> values(static_cast<std::size_t>(n_masks));

    for (int c = 0; c < view.n_classes; ++c) {
        std::fill(values.begin(), values.end(), 0.0);
        for (const auto& ref : view.trees) {
            if (ref.klass != c) continue;
            shap_detail::require_covers(*ref.root);
            for (std::uint64_t mask = 0; mask < n_masks; ++mask)
                values[static_cast<std::size_t>(mask)] +=
                    ref.weight *
                    shap_detail::subset_value(ref.root, x, mask, ref.klass, ref.leaf_uses_counts);
        }
        for (std::uint64_t mask = 0; mask < n_masks; ++mask) {
            const int s = std::popcount(mask);
            for (int j = 0; j < m; ++j) {
                if ((mask >> j) & 1ULL) continue;
                const double w = factorial[static_cast<std::size_t>(s)] *
                                 factorial[static_cast<std::size_t>(m - s - 1)] /
                                 factorial[static_cast<std::size_t>(m)];
                phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] +=
                    w * (values[static_cast<std::size_t>(mask | (1ULL << j))] -
                         values[static_cast<std::size_t>(mask)]);
            }
        }
    }
    return phi;
}

// Global importance and per-row dominant-feature tally over a dataset.
struct ImportanceReport {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> mean_abs_phi;  // [class][feature]
    std::vector<double> aggregate;                  // class-summed mean |phi|
    std::vector<int> ranking;                       // aggregate order, descending
    std::vector<std::vector<int>> ranking_per_class;
    std::vector<int> per_row_top;   // dominant feature per row
    std::vector<double> top_share;  // per feature, fraction of rows on top
};

inline ImportanceReport global_importance(const ShapModelView& view, const Dataset& ds) {
    if (ds.n_rows() == 0) throw InsufficientDataError("cannot rank features on an empty dataset");
    if (ds.n_features() != view.n_features) throw ShapeError("dataset width does not match the model");

    const int m = view.n_features;
    const int k = view.n_classes;
    const int n = ds.n_rows();

    ImportanceReport report;
    for (const auto& f : ds.schema().features) report.feature_names.push_back(f.name);
    report.mean_abs_phi.assign(static_cast<std::size_t>(k),
                               std::vector<double>(static_cast<std::size_t>(m), 0.0));
    report.top_share.assign(static_cast<std::size_t>(m), 0.0);
    report.per_row_top.resize(static_cast<std::size_t>(n));

    std::vector<double> row_agg(static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i) {
        const ShapExplanation expl = treeshap(view, ds.row(i));
        std::fill(row_agg.begin(), row_agg.end(), 0.0);
        for (int c = 0; c < k; ++c)
            for (int j = 0; j < m; ++j) {
                const double a = std::abs(expl.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)]);
                report.mean_abs_phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] += a;
                row_agg[static_cast<std::size_t>(j)] += a;
            }
        int top = 0;
        for (int j = 1; j < m; ++j)
            if (row_agg[static_cast<std::size_t>(j)] > row_agg[static_cast<std::size_t>(top)]) top = j;
        report.per_row_top[static_cast<std::size_t>(i)] = top;
        report.top_share[static_cast<std::size_t>(top)] += 1.0;
    }

    for (auto& per_class : report.mean_abs_phi)
        for (double& v : per_class) v /= static_cast<double>(n);
    for (double& s : report.top_share) s /= static_cast<double>(n);

    report.aggregate.assign(static_cast<std::size_t>(m), 0.0);
    for (int c = 0; c < k; ++c)
        for (int j = 0; j < m; ++j)
            report.aggregate[static_cast<std::size_t>(j)] +=
                report.mean_abs_phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)];

    auto ranked = [m](const std::vector<double>& scores) {
        std::vector<int> order(static_cast<std::size_t>(m));
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
            return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
        });
        return order;
    };
    report.ranking = ranked(report.aggregate);
    for (int c = 0; c < k; ++c)
        report.ranking_per_class.push_back(ranked(report.mean_abs_phi[static_cast<std::size_t>(c)]));
    return report;
}

}  // namespace tabml
