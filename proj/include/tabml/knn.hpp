#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"

namespace tabml {

// Lazy learner: stores the training set verbatim.
struct KnnModel {
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    int k = 1;
    int n_classes = 0;
};

inline KnnModel knn_fit(const Dataset& train, int k) {
    if (!train.has_labels()) throw MissingLabelsError("knn_fit requires labels");
    if (k < 1 || k > train.n_rows())
        throw ParamError("k must lie in 1..n (" + std::to_string(k) + " given, n=" +
                         std::to_string(train.n_rows()) + ")");
    KnnModel model;
    model.k = k;
    model.n_classes = train.n_classes();
    model.rows.reserve(static_cast<std::size_t>(train.n_rows()));
    for (int i = 0; i < train.n_rows(); ++i) {
        const auto r = train.row(i);
        model.rows.emplace_back(r.begin(), r.end());
    }
    model.labels = train.labels();
    return model;
}

// Majority vote among the k nearest rows (Euclidean). Distance ties break to
// the lower row index, vote ties to the smallest class label.
inline int knn_predict(const KnnModel& model, std::span<const double> x) {
    if (model.rows.empty()) throw InsufficientDataError("empty knn model");
    if (x.size() != model.rows[0].size()) throw ShapeError("row width does not match the model");

    std::vector<std::pair<double, int>> dist;
    dist.reserve(model.rows.size());
    for (std::size_t i = 0; i < model.rows.size(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            const double d = x[j] - model.rows[i][j];
            s += d * d;
        }
        dist.emplace_back(s, static_cast<int>(i));
    }
    std::sort(dist.begin(), dist.end());

    std::vector<int> votes(static_cast<std::size_t>(model.n_classes), 0);
    for (int i = 0; i < model.k; ++i)
        ++votes[static_cast<std::size_t>(model.labels[static_cast<std::size_t>(dist[static_cast<std::size_t>(i)].second)] - 1)];

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
