#pragma once

#include <string>
#include <vector>

#include "tabml/errors.hpp"

namespace tabml {

// K x K count matrix; entry (i,j) = rows of true class i+1 predicted as j+1.
struct ConfusionMatrix {
    int k = 0;
    std::vector<long long> counts;  // row-major

    long long& at(int i, int j) { return counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }
    long long at(int i, int j) const { return counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(k) + static_cast<std::size_t>(j)]; }

    long long total() const {
        long long s = 0;
        for (long long c : counts) s += c;
        return s;
    }

    long long trace() const {
        long long s = 0;
        for (int c = 0; c < k; ++c) s += at(c, c);
        return s;
    }
};

struct ClassPRF {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MacroScores {
    std::vector<ClassPRF> per_class;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1_standard = 0.0;       // 2*MP*MR/(MP+MR); selection criterion
    double macro_f1_halved = 0.0;  // MP*MR/(MP+MR)
    double accuracy = 0.0;
};

inline ConfusionMatrix confusion(const std::vector<int>& y_true, const std::vector<int>& y_pred,
                                 int k) {
    if (y_true.size() != y_pred.size()) throw ShapeError("label vectors differ in length");
    if (k < 1) throw ParamError("class count must be >= 1");
    ConfusionMatrix cm;
    cm.k = k;
    cm.counts.assign(static_cast<std::size_t>(k) * static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 1 || t > k || p < 1 || p > k)
            throw RangeError("label outside 1.." + std::to_string(k) + " at position " +
                             std::to_string(i + 1));
        ++cm.at(t - 1, p - 1);
    }
    return cm;
}

// One-vs-rest precision/recall/F1 for class c (1-based); 0/0 cells are 0.
inline ClassPRF per_class_prf(const ConfusionMatrix& cm, int c) {
    if (cm.total() == 0) throw EmptyMatrixError("cannot score an empty confusion matrix");
    if (c < 1 || c > cm.k) throw RangeError("class outside 1.." + std::to_string(cm.k));
    const int ci = c - 1;
    double tp = static_cast<double>(cm.at(ci, ci));
    double fp = 0.0;
    double fn = 0.0;
    for (int i = 0; i < cm.k; ++i) {
        if (i != ci) {
            fp += static_cast<double>(cm.at(i, ci));
            fn += static_cast<double>(cm.at(ci, i));
        }
    }
    ClassPRF out;
    out.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
    out.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
    out.f1 = out.precision + out.recall > 0.0
                 ? 2.0 * out.precision * out.recall / (out.precision + out.recall)
                 : 0.0;
    return out;
}

inline MacroScores macro_scores(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw EmptyMatrixError("cannot score an empty confusion matrix");
    MacroScores out;
    out.per_class.reserve(static_cast<std::size_t>(cm.k));
    for (int c = 1; c <= cm.k; ++c) {
        const ClassPRF prf = per_class_prf(cm, c);
        out.per_class.push_back(prf);
        out.macro_precision += prf.precision;
        out.macro_recall += prf.recall;
    }
    out.macro_precision /= static_cast<double>(cm.k);
    out.macro_recall /= static_cast<double>(cm.k);
    const double denom = out.macro_precision + out.macro_recall;
    out.macro_f1_halved = denom > 0.0 ? out.macro_precision * out.macro_recall / denom : 0.0;
    out.macro_f1_standard = 2.0 * out.macro_f1_halved;
    out.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(cm.total());
    return out;
}

// Rows divided by their sums; an all-zero row stays zero.
inline std::vector<double> row_normalize(const ConfusionMatrix& cm) {
    std::vector<double> out(cm.counts.size(), 0.0);
    for (int i = 0; i < cm.k; ++i) {
        long long row_sum = 0;
        for (int j = 0; j < cm.k; ++j) row_sum += cm.at(i, j);
        if (row_sum == 0) continue;
        for (int j = 0; j < cm.k; ++j)
            out[static_cast<std::size_t>(i) * static_cast<std::size_t>(cm.k) + static_cast<std::size_t>(j)] =
                static_cast<double>(cm.at(i, j)) / static_cast<double>(row_sum);
    }
    return out;
}

}  // namespace tabml
