#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/rng.hpp"
#include "tabml/schema.hpp"

namespace tabml {

// Synthetic-data recipe. Features are drawn per schema kind; the label is
// the class-proportion quantile cut of a latent score
//   score = dominant_weight * z(dominant)
//         + interaction_weight * z(a)*z(b)
//         + causal_weight * z(causal)
//         + noise * N(0,1)
// where z() standardizes the generated column. A negative causal weight
// plants a protective monotone link (higher value -> lower class).
struct SynthSpec {
    FeatureSchema schema;
    int n = 1000;
    int k_classes = 3;
    std::string dominant_feature;  // empty = none
    double dominant_weight = 3.0;
    std::optional<std::pair<std::string, std::string>> interaction;
    double interaction_weight = 0.0;
    std::string causal_feature;  // empty = none
    double causal_weight = 0.0;
    double noise = 0.0;
    std::vector<double> class_proportions;  // empty = equal
    std::string constant_feature;           // generated as constant 0.5 (never splittable)
};

struct SynthMeta {
    std::string dominant_feature;
    std::string causal_feature;
    int causal_direction = 0;  // sign of causal_weight
    std::string constant_feature;
    std::vector<int> class_counts;
    std::uint64_t seed = 0;
};

namespace synth_detail {

inline std::vector<double> zscore(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double sd = std::sqrt(var);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out[i] = sd > 0.0 ? (v[i] - mean) / sd : 0.0;
    return out;
}

}  // namespace synth_detail

inline std::pair<Dataset, SynthMeta> synth_generate(const SynthSpec& spec, std::uint64_t seed) {
    if (spec.k_classes < 2) throw ParamError("synthetic class count must be >= 2");
    if (spec.n < spec.k_classes) throw InsufficientDataError("fewer rows than classes");
    spec.schema.validate();

    std::vector<double> props = spec.class_proportions;
    if (props.empty())
        props.assign(static_cast<std::size_t>(spec.k_classes), 1.0 / spec.k_classes);
    if (static_cast<int>(props.size()) != spec.k_classes)
        throw ParamError("class proportion count must equal class count");
    double total = 0.0;
    for (double p : props) {
        if (p <= 0.0) throw ParamError("class proportions must be positive");
        total += p;
    }
    for (double& p : props) p /= total;

    const int m = spec.schema.n_features();
    const int n = spec.n;
    const int constant_idx =
        spec.constant_feature.empty() ? -1 : spec.schema.require(spec.constant_feature);

    // Column-wise draws, one RNG stream per feature.
    std::vector<std::vector<double>> cols(static_cast<std::size_t>(m));
    for (int j = 0; j < m; ++j) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(j) + 100));
        auto& col = cols[static_cast<std::size_t>(j)];
        col.resize(static_cast<std::size_t>(n));
        const FeatureKind kind = spec.schema.features[static_cast<std::size_t>(j)].kind;
        for (int i = 0; i < n; ++i) {
            double v;
            if (j == constant_idx) {
                v = kind == FeatureKind::Fraction ? 0.5 : 10.0;
            } else if (kind == FeatureKind::Fraction) {
                v = rng.uniform();
            } else if (kind == FeatureKind::Count) {
                v = std::floor(rng.uniform() * 40.0);
            } else {
                v = -std::log(1.0 - rng.uniform()) * 10.0;  // exponential, mean 10
            }
            col[static_cast<std::size_t>(i)] = v;
        }
    }

    // Latent score.
    std::vector<double> score(static_cast<std::size_t>(n), 0.0);
    auto add_weighted = [&](const std::string& name, double w) {
        if (name.empty() || w == 0.0) return;
        const int j = spec.schema.require(name);
        const auto z = synth_detail::zscore(cols[static_cast<std::size_t>(j)]);
        for (int i = 0; i < n; ++i) score[static_cast<std::size_t>(i)] += w * z[static_cast<std::size_t>(i)];
    };
    add_weighted(spec.dominant_feature, spec.dominant_weight);
    add_weighted(spec.causal_feature, spec.causal_weight);
    if (spec.interaction && spec.interaction_weight != 0.0) {
        const int a = spec.schema.require(spec.interaction->first);
        const int b = spec.schema.require(spec.interaction->second);
        const auto za = synth_detail::zscore(cols[static_cast<std::size_t>(a)]);
        const auto zb = synth_detail::zscore(cols[static_cast<std::size_t>(b)]);
        for (int i = 0; i < n; ++i)
            score[static_cast<std::size_t>(i)] +=
                spec.interaction_weight * za[static_cast<std::size_t>(i)] * zb[static_cast<std::size_t>(i)];
    }
    if (spec.noise > 0.0) {
        Rng rng(mix_seed(seed, 7));
        for (int i = 0; i < n; ++i) score[static_cast<std::size_t>(i)] += spec.noise * rng.normal();
    }

    // Cut scores at cumulative proportion ranks; ties broken by row index so
    // class counts match the rank boundaries exactly.
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (score[static_cast<std::size_t>(a)] != score[static_cast<std::size_t>(b)])
            return score[static_cast<std::size_t>(a)] < score[static_cast<std::size_t>(b)];
        return a < b;
    });
    std::vector<int> labels(static_cast<std::size_t>(n));
    std::vector<int> class_counts(static_cast<std::size_t>(spec.k_classes), 0);
    double cum = 0.0;
    std::size_t start = 0;
    for (int c = 0; c < spec.k_classes; ++c) {
        cum += props[static_cast<std::size_t>(c)];
        std::size_t end = c + 1 == spec.k_classes
                              ? static_cast<std::size_t>(n)
                              : static_cast<std::size_t>(std::llround(cum * n));
        // keep every class nonempty
        const std::size_t remaining = static_cast<std::size_t>(spec.k_classes - c - 1);
        end = std::clamp(end, start + 1, static_cast<std::size_t>(n) - remaining);
        for (std::size_t pos = start; pos < end; ++pos) {
            labels[static_cast<std::size_t>(order[pos])] = c + 1;
            ++class_counts[static_cast<std::size_t>(c)];
        }
        start = end;
    }

    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(m));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
            values.push_back(cols[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);

    Dataset ds(spec.schema, std::move(values));
    ds.set_labels(labels, spec.k_classes);

    SynthMeta meta;
    meta.dominant_feature = spec.dominant_feature;
    meta.causal_feature = spec.causal_feature;
    meta.causal_direction = spec.causal_weight > 0 ? 1 : (spec.causal_weight < 0 ? -1 : 0);
    meta.constant_feature = spec.constant_feature;
    meta.class_counts = class_counts;
    meta.seed = seed;
    return {std::move(ds), std::move(meta)};
}

}  // namespace tabml
