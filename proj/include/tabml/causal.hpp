#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/stats.hpp"

namespace tabml {

// Single-feature perturbation: multiply by (1 + fraction) or set a constant,
// then clip. Without an explicit clip range, fraction-kind features clip to
// [0,1] and the rest to [0, inf).
struct InterventionSpec {
    std::string feature;
    enum class Mode { Relative, AbsoluteSet } mode = Mode::Relative;
    double amount = 0.0;  // signed fraction (relative) or the set value
    std::optional<std::pair<double, double>> clip;

    void validate() const {
        if (feature.empty()) throw ParamError("intervention needs a feature name");
        if (mode == Mode::Relative && !(amount > -1.0))
            throw ParamError("relative fraction must exceed -1");
        if (clip && clip->first > clip->second) throw ParamError("clip lo must be <= hi");
    }
};

struct AteResult {
    double ate = 0.0;
    double mean_control = 0.0;
    double mean_treated = 0.0;
    std::vector<int> stratum_indices;
    int n_changed = 0;  // stratum rows whose predicted class decreased
};

struct TTestResult {
    std::string feature;
    double t = 0.0;
    double dof = 0.0;
    double p = 1.0;
    bool significant = false;  // p < 0.05
};

// Predicted class label for a row, plus (optionally) class probabilities.
struct ClassScorer {
    std::function<int(std::span<const double>)> label;
    std::function<std::vector<double>(std::span<const double>)> proba;  // may be empty
};

inline Dataset intervene(const Dataset& ds, const InterventionSpec& spec) {
    spec.validate();
    const int j = ds.schema().require(spec.feature);
    const FeatureKind kind = ds.schema().features[static_cast<std::size_t>(j)].kind;

    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    if (spec.clip) {
        lo = spec.clip->first;
        hi = spec.clip->second;
    } else if (kind == FeatureKind::Fraction) {
        hi = 1.0;
    }

    const int m = ds.n_features();
    std::vector<double> values(ds.raw_values());
    for (int i = 0; i < ds.n_rows(); ++i) {
        double& v = values[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) +
                           static_cast<std::size_t>(j)];
        v = spec.mode == InterventionSpec::Mode::Relative ? v * (1.0 + spec.amount) : spec.amount;
        v = std::min(std::max(v, lo), hi);
    }

    Dataset out(ds.schema(), std::move(values));
    if (ds.has_labels()) out.set_labels(ds.labels(), ds.n_classes(), /*require_full_coverage=*/false);
    if (ds.has_target()) out.set_target(ds.target());
    return out;
}

// ATE over the high-prevalence stratum: rows whose CONTROL prediction is
// class 2 or above, fixed before treatment. Y is the integer predicted class
// (or its probability-weighted expectation with `expected_class`).
inline AteResult ate(const ClassScorer& model, const Dataset& ds, const InterventionSpec& spec,
                     bool expected_class = false) {
    const Dataset treated = intervene(ds, spec);
    if (expected_class && !model.proba) throw ParamError("scorer lacks probabilities");

    auto outcome = [&](const Dataset& d, int i) -> double {
        if (!expected_class) return static_cast<double>(model.label(d.row(i)));
        const auto p = model.proba(d.row(i));
        double y = 0.0;
        for (std::size_t c = 0; c < p.size(); ++c) y += static_cast<double>(c + 1) * p[c];
        return y;
    };

    AteResult result;
    double sum_control = 0.0;
    double sum_treated = 0.0;
    for (int i = 0; i < ds.n_rows(); ++i) {
        const int control_label = model.label(ds.row(i));
        if (control_label < 2) continue;
        result.stratum_indices.push_back(i);
        const int treated_label = model.label(treated.row(i));
        if (treated_label < control_label) ++result.n_changed;
        sum_control += outcome(ds, i);
        sum_treated += outcome(treated, i);
    }
    if (result.stratum_indices.empty())
        throw EmptyStratumError("no rows predicted in the high-prevalence stratum");

    const double n = static_cast<double>(result.stratum_indices.size());
    result.mean_control = sum_control / n;
    result.mean_treated = sum_treated / n;
    result.ate = result.mean_treated - result.mean_control;
    return result;
}

// Rows (over the whole dataset) whose predicted class decreases under the
// intervention.
inline std::vector<int> changed_areas(const ClassScorer& model, const Dataset& ds,
                                      const InterventionSpec& spec) {
    const Dataset treated = intervene(ds, spec);
    std::vector<int> out;
    for (int i = 0; i < ds.n_rows(); ++i)
        if (model.label(treated.row(i)) < model.label(ds.row(i))) out.push_back(i);
    return out;
}

// Welch's unequal-variance t-test with Satterthwaite degrees of freedom and
// a two-sided p-value from the regularized incomplete beta.
inline TTestResult welch_t_test(const std::vector<double>& sample_a,
                                const std::vector<double>& sample_b) {
    const std::size_t na = sample_a.size();
    const std::size_t nb = sample_b.size();
    if (na < 2 || nb < 2) throw InsufficientDataError("welch t-test needs >= 2 values per sample");

    auto mean_var = [](const std::vector<double>& s) {
        double mean = 0.0;
        for (double v : s) mean += v;
        mean /= static_cast<double>(s.size());
        double var = 0.0;
        for (double v : s) var += (v - mean) * (v - mean);
        var /= static_cast<double>(s.size() - 1);  // unbiased
        return std::pair<double, double>(mean, var);
    };
    const auto [ma, va] = mean_var(sample_a);
    const auto [mb, vb] = mean_var(sample_b);

    TTestResult out;
    const double qa = va / static_cast<double>(na);
    const double qb = vb / static_cast<double>(nb);
    const double se2 = qa + qb;
    if (se2 == 0.0) {
        // both samples constant
        out.dof = static_cast<double>(na + nb - 2);
        if (ma == mb) {
            out.t = 0.0;
            out.p = 1.0;
        } else {
            out.t = ma > mb ? std::numeric_limits<double>::infinity()
                            : -std::numeric_limits<double>::infinity();
            out.p = 0.0;
        }
        out.significant = out.p < 0.05;
        return out;
    }

    out.t = (ma - mb) / std::sqrt(se2);
    out.dof = se2 * se2 / (qa * qa / static_cast<double>(na - 1) + qb * qb / static_cast<double>(nb - 1));
    out.p = student_t_two_sided_p(out.t, out.dof);
    out.significant = out.p < 0.05;
    return out;
}

// Welch test of changed-row feature values against all-row values, one
// result per feature in schema order.
inline std::vector<TTestResult> profile_changed(const Dataset& ds, const std::vector<int>& changed) {
    if (changed.size() < 2)
        throw InsufficientDataError("need >= 2 changed rows to profile");
    std::vector<TTestResult> out;
    out.reserve(static_cast<std::size_t>(ds.n_features()));
    for (int j = 0; j < ds.n_features(); ++j) {
        const std::vector<double> all = ds.column(j);
        std::vector<double> sub;
        sub.reserve(changed.size());
        for (int i : changed) sub.push_back(ds.at(i, j));
        TTestResult r = welch_t_test(sub, all);
        r.feature = ds.schema().features[static_cast<std::size_t>(j)].name;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace tabml
