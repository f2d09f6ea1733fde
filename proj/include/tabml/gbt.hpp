#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/metrics.hpp"
#include "tabml/resample.hpp"
#include "tabml/rng.hpp"
#include "tabml/tree.hpp"

namespace tabml {

struct GbtParams {
    double learning_rate = 0.3;
    int n_estimators = 100;  // boosting rounds
    double subsample = 1.0;
    double colsample_bytree = 1.0;
    int max_depth = 6;
    double alpha = 0.0;   // L1 leaf penalty (soft threshold on G)
    double gamma = 0.0;   // minimum split gain
    double lambda = 1.0;  // L2 leaf penalty
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0 && learning_rate <= 1.0))
            throw ParamError("learning_rate must lie in (0,1]");
        if (n_estimators < 0) throw ParamError("n_estimators must be >= 0");
        if (!(subsample > 0.0 && subsample <= 1.0)) throw ParamError("subsample must lie in (0,1]");
        if (!(colsample_bytree > 0.0 && colsample_bytree <= 1.0))
            throw ParamError("colsample_bytree must lie in (0,1]");
        if (max_depth < 1) throw ParamError("max_depth must be >= 1");
        if (alpha < 0.0) throw ParamError("alpha must be >= 0");
        if (gamma < 0.0) throw ParamError("gamma must be >= 0");
        if (lambda < 0.0) throw ParamError("lambda must be >= 0");
    }
};

// Softmax boosting ensemble: K score trees per round, class-1-based labels.
// Leaf values are stored unscaled; the learning rate applies at margin
// accumulation time.
struct GbtEnsemble {
    int n_classes = 0;
    int n_features = 0;
    std::vector<double> base_score;            // log class priors
    std::vector<std::vector<TreePtr>> rounds;  // rounds[r][c]
    GbtParams params;
    std::vector<double> train_logloss;  // [0] = prior-only model, then one entry per round
};

inline std::vector<double> softmax(std::span<const double> margins) {
    double mx = margins[0];
    for (double v : margins) mx = std::max(mx, v);
    std::vector<double> p(margins.size());
    double sum = 0.0;
    for (std::size_t c = 0; c < margins.size(); ++c) {
        p[c] = std::exp(margins[c] - mx);
        sum += p[c];
    }
    for (double& v : p) v /= sum;
    return p;
}

namespace gbt_detail {

inline double leaf_weight(double g, double h, double alpha, double lambda) {
    const double mag = std::max(std::abs(g) - alpha, 0.0);
    const double soft = g > 0.0 ? mag : -mag;
    return -soft / (h + lambda);
}

struct GbtSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// Greedy second-order growth over presorted lists for the sampled features.
// `lists[i]` corresponds to `feats[i]`. Gain must be strictly positive.
inline TreePtr grow_gbt(const Dataset& ds, std::vector<std::vector<int>> lists,
                        const std::vector<int>& feats, const std::vector<double>& g,
                        const std::vector<double>& h, const GbtParams& params, int depth) {
    const auto& any = lists[0];
    const int n = static_cast<int>(any.size());
    double g_sum = 0.0;
    double h_sum = 0.0;
    for (int row : any) {
        g_sum += g[static_cast<std::size_t>(row)];
        h_sum += h[static_cast<std::size_t>(row)];
    }

    auto make_leaf = [&]() {
        auto leaf = std::make_unique<TreeNode>();
        leaf->cover = static_cast<double>(n);
        leaf->value = leaf_weight(g_sum, h_sum, params.alpha, params.lambda);
        return leaf;
    };

    if (depth >= params.max_depth || n < 2) return make_leaf();

    const double lam = params.lambda;
    const double parent_score = g_sum * g_sum / (h_sum + lam);
    GbtSplit best;
    for (std::size_t fi = 0; fi < feats.size(); ++fi) {
        const int f = feats[fi];
        const auto& lst = lists[fi];
        double gl = 0.0;
        double hl = 0.0;
        for (int pos = 0; pos < n; ++pos) {
            const int row = lst[static_cast<std::size_t>(pos)];
            gl += g[static_cast<std::size_t>(row)];
            hl += h[static_cast<std::size_t>(row)];
            if (pos + 1 >= n) break;
            const double v = ds.at(row, f);
            const double vn = ds.at(lst[static_cast<std::size_t>(pos + 1)], f);
            if (!(vn > v)) continue;
            const double thr = tree_detail::midpoint(v, vn);
            if (!(v < thr)) continue;
            const double gr = g_sum - gl;
            const double hr = h_sum - hl;
            const double gain =
                0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - parent_score) - params.gamma;
            if (!best.found || gain > best.gain) {
                best.found = true;
                best.feature = f;
                best.threshold = thr;
                best.gain = gain;
            }
        }
    }

    if (!best.found || !(best.gain > 0.0)) return make_leaf();

    const std::size_t m_sub = lists.size();
    std::vector<std::vector<int>> left(m_sub), right(m_sub);
    for (std::size_t fi = 0; fi < m_sub; ++fi) {
        for (int row : lists[fi]) {
            if (ds.at(row, best.feature) < best.threshold)
                left[fi].push_back(row);
            else
                right[fi].push_back(row);
        }
    }
    lists.clear();
    lists.shrink_to_fit();

    auto node = std::make_unique<TreeNode>();
    node->feature = best.feature;
    node->threshold = best.threshold;
    node->cover = static_cast<double>(n);
    node->left = grow_gbt(ds, std::move(left), feats, g, h, params, depth + 1);
    node->right = grow_gbt(ds, std::move(right), feats, g, h, params, depth + 1);
    return node;
}

inline std::vector<std::vector<int>> presort_subset(const Dataset& ds, const std::vector<int>& rows,
                                                    const std::vector<int>& feats) {
    std::vector<std::vector<int>> lists(feats.size(), rows);
    for (std::size_t fi = 0; fi < feats.size(); ++fi) {
        const int f = feats[fi];
        auto& lst = lists[fi];
        std::sort(lst.begin(), lst.end(), [&](int a, int b) {
            const double va = ds.at(a, f);
            const double vb = ds.at(b, f);
            if (va != vb) return va < vb;
            return a < b;
        });
    }
    return lists;
}

}  // namespace gbt_detail

inline std::vector<double> gbt_predict_margins(const GbtEnsemble& model, std::span<const double> x,
                                               int upto_rounds = -1) {
    if (static_cast<int>(x.size()) != model.n_features)
        throw ShapeError("row width does not match the model");
    std::vector<double> margins = model.base_score;
    const int r_end = upto_rounds < 0 ? static_cast<int>(model.rounds.size())
                                      : std::min<int>(upto_rounds, static_cast<int>(model.rounds.size()));
    for (int r = 0; r < r_end; ++r)
        for (int c = 0; c < model.n_classes; ++c)
            margins[static_cast<std::size_t>(c)] +=
                model.params.learning_rate *
                route_to_leaf(model.rounds[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get(), x)->value;
    return margins;
}

inline std::vector<double> gbt_predict_proba(const GbtEnsemble& model, std::span<const double> x) {
    const auto margins = gbt_predict_margins(model, x);
    return softmax(margins);
}

inline int gbt_predict_label(const GbtEnsemble& model, std::span<const double> x) {
    const auto p = gbt_predict_proba(model, x);
    int best = 1;
    double best_p = -1.0;
    for (std::size_t c = 0; c < p.size(); ++c) {
        if (p[c] > best_p) {
            best_p = p[c];
            best = static_cast<int>(c) + 1;
        }
    }
    return best;
}

// Multiclass softmax boosting with second-order splits. Per round, the K
// class trees share the margin snapshot taken at the round start; gradients
// g = p - 1{y=c}, hessians h = p(1-p). Per-tree RNG streams are derived from
// (seed, round, class), so a shorter fit is a prefix of a longer one.
inline GbtEnsemble gbt_fit(const Dataset& train, const GbtParams& params) {
    params.validate();
    if (!train.has_labels()) throw MissingLabelsError("gbt_fit requires labels");
    const int n = train.n_rows();
    const int m = train.n_features();
    const int k = train.n_classes();

    std::vector<int> class_count(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) ++class_count[static_cast<std::size_t>(train.label(i) - 1)];
    for (int c = 0; c < k; ++c)
        if (class_count[static_cast<std::size_t>(c)] == 0)
            throw MissingClassError("class " + std::to_string(c + 1) + " absent from training data");

    GbtEnsemble model;
    model.n_classes = k;
    model.n_features = m;
    model.params = params;
    model.base_score.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c)
        model.base_score[static_cast<std::size_t>(c)] =
            std::log(static_cast<double>(class_count[static_cast<std::size_t>(c)]) / static_cast<double>(n));

    std::vector<std::vector<double>> margins(static_cast<std::size_t>(n), model.base_score);

    auto log_loss = [&]() {
        double loss = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto p = softmax(margins[static_cast<std::size_t>(i)]);
            loss -= std::log(p[static_cast<std::size_t>(train.label(i) - 1)]);
        }
        return loss / static_cast<double>(n);
    };
    model.train_logloss.push_back(log_loss());

    const int n_sub = std::max(1, static_cast<int>(std::llround(params.subsample * n)));
    const int m_sub = std::max(1, static_cast<int>(std::llround(params.colsample_bytree * m)));

    std::vector<int> all_rows(static_cast<std::size_t>(n));
    std::iota(all_rows.begin(), all_rows.end(), 0);
    std::vector<int> all_feats(static_cast<std::size_t>(m));
    std::iota(all_feats.begin(), all_feats.end(), 0);

    std::vector<double> g(static_cast<std::size_t>(n));
    std::vector<double> h(static_cast<std::size_t>(n));

    for (int r = 0; r < params.n_estimators; ++r) {
        // fixed probability snapshot shared by the K class trees
        std::vector<std::vector<double>> probs(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) probs[static_cast<std::size_t>(i)] = softmax(margins[static_cast<std::size_t>(i)]);

        std::vector<TreePtr> round_trees;
        round_trees.reserve(static_cast<std::size_t>(k));
        for (int c = 0; c < k; ++c) {
            Rng rng(mix_seed(params.seed,
                             static_cast<std::uint64_t>(r) * static_cast<std::uint64_t>(k) +
                                 static_cast<std::uint64_t>(c) + 1000));
            const std::vector<int> rows =
                params.subsample < 1.0 ? rng.sample_indices(n, n_sub) : all_rows;
            const std::vector<int> feats =
                params.colsample_bytree < 1.0 ? rng.sample_indices(m, m_sub) : all_feats;

            for (int i = 0; i < n; ++i) {
                const double p = probs[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
                g[static_cast<std::size_t>(i)] = p - (train.label(i) == c + 1 ? 1.0 : 0.0);
                h[static_cast<std::size_t>(i)] = p * (1.0 - p);
            }
            round_trees.push_back(gbt_detail::grow_gbt(
                train, gbt_detail::presort_subset(train, rows, feats), feats, g, h, params, 0));
        }

        for (int i = 0; i < n; ++i) {
            const auto x = train.row(i);
            for (int c = 0; c < k; ++c)
                margins[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] +=
                    params.learning_rate *
                    route_to_leaf(round_trees[static_cast<std::size_t>(c)].get(), x)->value;
        }
        model.rounds.push_back(std::move(round_trees));
        model.train_logloss.push_back(log_loss());
    }
    return model;
}

struct GridSearchResult {
    GbtParams best;
    int best_index = 0;
    std::vector<double> cv_scores;  // mean CV macro-F1 per grid candidate
};

// Per candidate: per fold, optionally SMOTE the in-fold training part, fit,
// score the held-out fold by standard macro-F1, average. Ties go to the
// earliest grid position.
inline GridSearchResult grid_search(const Dataset& train, const std::vector<GbtParams>& grid,
                                    const FoldPlan& folds,
                                    const std::optional<SmoteParams>& resample = std::nullopt) {
    if (grid.empty()) throw ParamError("empty hyperparameter grid");
    if (!train.has_labels()) throw MissingLabelsError("grid_search requires labels");

    GridSearchResult result;
    result.cv_scores.reserve(grid.size());
    double best_score = -1.0;
    for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        double score_sum = 0.0;
        for (int f = 0; f < folds.k; ++f) {
            Dataset fit_part = train.subset(folds.complement_rows(f));
            const Dataset eval_part = train.subset(folds.fold_rows(f));
            if (resample) {
                SmoteParams sp = *resample;
                sp.seed = mix_seed(sp.seed, static_cast<std::uint64_t>(f));
                fit_part = smote(fit_part, sp).data;
            }
            const GbtEnsemble model = gbt_fit(fit_part, grid[gi]);
            std::vector<int> pred(static_cast<std::size_t>(eval_part.n_rows()));
            for (int i = 0; i < eval_part.n_rows(); ++i)
                pred[static_cast<std::size_t>(i)] = gbt_predict_label(model, eval_part.row(i));
            score_sum +=
                macro_scores(confusion(eval_part.labels(), pred, train.n_classes())).macro_f1_standard;
        }
        const double mean_score = score_sum / static_cast<double>(folds.k);
        result.cv_scores.push_back(mean_score);
        if (mean_score > best_score) {
            best_score = mean_score;
            result.best_index = static_cast<int>(gi);
        }
    }
    result.best = grid[static_cast<std::size_t>(result.best_index)];
    return result;
}

}  // namespace tabml
