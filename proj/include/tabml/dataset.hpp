#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "tabml/errors.hpp"
#include "tabml/rng.hpp"
#include "tabml/schema.hpp"

namespace tabml {

// Row-major feature matrix bound to a schema, with optional integer class
// labels (1..K) and/or a raw real-valued target column. Immutable once
// assembled; all mutators validate.
class Dataset {
public:
    Dataset() = default;

    Dataset(FeatureSchema schema, std::vector<double> row_major_values)
        : schema_(std::move(schema)), values_(std::move(row_major_values)) {
        schema_.validate();
        const std::size_t m = static_cast<std::size_t>(schema_.n_features());
        if (m == 0 || values_.size() % m != 0)
            throw ShapeError("value count is not a multiple of the schema width");
        n_rows_ = static_cast<int>(values_.size() / m);
        validate_values();
    }

    int n_rows() const { return n_rows_; }
    int n_features() const { return schema_.n_features(); }
    const FeatureSchema& schema() const { return schema_; }

    std::span<const double> row(int i) const {
        const std::size_t m = static_cast<std::size_t>(n_features());
        return {values_.data() + static_cast<std::size_t>(i) * m, m};
    }

    double at(int i, int j) const {
        return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_features()) +
                       static_cast<std::size_t>(j)];
    }

    std::vector<double> column(int j) const {
        std::vector<double> out(static_cast<std::size_t>(n_rows_));
        for (int i = 0; i < n_rows_; ++i) out[static_cast<std::size_t>(i)] = at(i, j);
        return out;
    }

    const std::vector<double>& raw_values() const { return values_; }

    bool has_labels() const { return !labels_.empty(); }
    const std::vector<int>& labels() const { return labels_; }
    int label(int i) const { return labels_[static_cast<std::size_t>(i)]; }
    int n_classes() const { return n_classes_; }

    bool has_target() const { return !target_.empty(); }
    const std::vector<double>& target() const { return target_; }

    // Attach labels in 1..k. Full coverage of 1..k is required where the
    // dataset is a complete corpus (load/bin/synth); subsets skip it.
    void set_labels(std::vector<int> labels, int k, bool require_full_coverage = true) {
        if (static_cast<int>(labels.size()) != n_rows_)
            throw ShapeError("label count does not match row count");
        if (k < 1) throw ParamError("class count must be >= 1");
        std::vector<char> present(static_cast<std::size_t>(k), 0);
        for (int y : labels) {
            if (y < 1 || y > k)
                throw RangeError("label " + std::to_string(y) + " outside 1.." + std::to_string(k));
            present[static_cast<std::size_t>(y - 1)] = 1;
        }
        if (require_full_coverage) {
            for (int c = 0; c < k; ++c)
                if (!present[static_cast<std::size_t>(c)])
                    throw MissingClassError("no rows with label " + std::to_string(c + 1));
        }
        labels_ = std::move(labels);
        n_classes_ = k;
    }

    void set_target(std::vector<double> target) {
        if (static_cast<int>(target.size()) != n_rows_)
            throw ShapeError("target count does not match row count");
        for (double v : target)
            if (!std::isfinite(v)) throw RangeError("target value not finite");
        target_ = std::move(target);
    }

    Dataset subset(const std::vector<int>& indices) const {
        const std::size_t m = static_cast<std::size_t>(n_features());
        std::vector<double> vals;
        vals.reserve(indices.size() * m);
        for (int i : indices) {
            const auto r = row(i);
            vals.insert(vals.end(), r.begin(), r.end());
        }
        Dataset out(schema_, std::move(vals));
        if (has_labels()) {
            std::vector<int> lab;
            lab.reserve(indices.size());
            for (int i : indices) lab.push_back(labels_[static_cast<std::size_t>(i)]);
            out.set_labels(std::move(lab), n_classes_, /*require_full_coverage=*/false);
        }
        if (has_target()) {
            std::vector<double> tgt;
            tgt.reserve(indices.size());
            for (int i : indices) tgt.push_back(target_[static_cast<std::size_t>(i)]);
            out.set_target(std::move(tgt));
        }
        return out;
    }

private:
    void validate_values() const {
        const int m = n_features();
        for (int i = 0; i < n_rows_; ++i) {
            for (int j = 0; j < m; ++j) {
                const double v = at(i, j);
                if (!std::isfinite(v))
                    throw RangeError("non-finite value at (row " + std::to_string(i + 1) + ", \"" +
                                     schema_.features[static_cast<std::size_t>(j)].name + "\")");
                const FeatureKind kind = schema_.features[static_cast<std::size_t>(j)].kind;
                if (kind == FeatureKind::Fraction && (v < 0.0 || v > 1.0))
                    throw RangeError("fraction value " + std::to_string(v) + " outside [0,1] at (row " +
                                     std::to_string(i + 1) + ", \"" +
                                     schema_.features[static_cast<std::size_t>(j)].name + "\")");
                if (kind != FeatureKind::Fraction && v < 0.0)
                    throw RangeError("negative value at (row " + std::to_string(i + 1) + ", \"" +
                                     schema_.features[static_cast<std::size_t>(j)].name + "\")");
            }
        }
    }

    FeatureSchema schema_;
    std::vector<double> values_;
    int n_rows_ = 0;
    std::vector<int> labels_;
    std::vector<double> target_;
    int n_classes_ = 0;
};

// Equal-frequency discretization into labels 1..k. Boundaries sit at rank
// positions ceil(n*j/k); a tie run crossing a boundary is pushed whole into
// the lower bin, so the label is a deterministic function of the value.
// Heavy ties may leave upper bins empty; only an all-identical input is an
// error.
inline std::vector<int> equal_frequency_bin(const std::vector<double>& values, int k) {
    if (k < 2) throw ParamError("bin count must be >= 2");
    if (values.empty()) throw ParamError("cannot bin an empty value list");
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (sorted.front() == sorted.back())
        throw DegenerateError("all values identical: cannot form " + std::to_string(k) +
                              " nonempty bins");

    std::vector<double> upper;  // largest value of bins 1..k-1
    upper.reserve(static_cast<std::size_t>(k - 1));
    for (int j = 1; j < k; ++j) {
        std::size_t pos = (n * static_cast<std::size_t>(j) + static_cast<std::size_t>(k) - 1) /
                          static_cast<std::size_t>(k);  // ceil(n*j/k)
        while (pos < n && sorted[pos] == sorted[pos - 1]) ++pos;
        upper.push_back(sorted[pos - 1]);
    }

    std::vector<int> labels(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        int lab = 1;
        for (double b : upper)
            if (values[i] > b) ++lab;
        labels[i] = lab;
    }
    return labels;
}

struct SplitPlan {
    std::vector<int> train_indices;
    std::vector<int> test_indices;
    std::uint64_t seed = 0;
};

struct FoldPlan {
    int k = 0;
    std::vector<int> fold_assignment;  // per row, 0..k-1
    std::uint64_t seed = 0;

    std::vector<int> fold_rows(int fold) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < fold_assignment.size(); ++i)
            if (fold_assignment[i] == fold) out.push_back(static_cast<int>(i));
        return out;
    }

    std::vector<int> complement_rows(int fold) const {
        std::vector<int> out;
        for (std::size_t i = 0; i < fold_assignment.size(); ++i)
            if (fold_assignment[i] != fold) out.push_back(static_cast<int>(i));
        return out;
    }
};

inline SplitPlan split_train_test(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ParamError("train fraction must lie in (0,1)");
    const int n = ds.n_rows();
    if (n < 2) throw InsufficientDataError("need at least 2 rows to split");

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    int n_train = static_cast<int>(std::llround(static_cast<double>(n) * train_fraction));
    n_train = std::clamp(n_train, 1, n - 1);

    SplitPlan plan;
    plan.seed = seed;
    plan.train_indices.assign(perm.begin(), perm.begin() + n_train);
    plan.test_indices.assign(perm.begin() + n_train, perm.end());
    return plan;
}

inline FoldPlan kfold(const Dataset& ds, int k, std::uint64_t seed) {
    if (k < 2) throw ParamError("fold count must be >= 2");
    const int n = ds.n_rows();
    if (n < k) throw InsufficientDataError("fewer rows than folds");

    std::vector<int> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);

    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.fold_assignment.assign(static_cast<std::size_t>(n), 0);
    for (int pos = 0; pos < n; ++pos)
        plan.fold_assignment[static_cast<std::size_t>(perm[static_cast<std::size_t>(pos)])] = pos % k;
    return plan;
}

}  // namespace tabml
