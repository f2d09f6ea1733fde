#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <vector>

#include "tabml/dataset.hpp"
#include "tabml/errors.hpp"
#include "tabml/rng.hpp"

namespace tabml {

struct SmoteParams {
    int k_neighbors = 5;
    int target_count = 0;  // 0 = match the majority class
    std::uint64_t seed = 0;
};

// One provenance record per synthetic row: s = base + t * (neighbor - base),
// indices into the original training rows.
struct SmoteProvenance {
    int synthetic_index = 0;  // row id in the balanced output
    int base_index = 0;
    int neighbor_index = 0;
    double t = 0.0;
};

struct SmoteResult {
    Dataset data;
    std::vector<SmoteProvenance> provenance;
};

namespace smote_detail {

inline double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Indices (into `members`) of the k nearest same-class neighbors of
// members[self], ties broken by lower original row index.
inline std::vector<int> nearest_neighbors(const Dataset& ds, const std::vector<int>& members,
                                          int self, int k) {
    std::vector<std::pair<double, int>> dist;
    dist.reserve(members.size() - 1);
    const auto x = ds.row(members[static_cast<std::size_t>(self)]);
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (static_cast<int>(i) == self) continue;
        dist.emplace_back(sq_dist(x, ds.row(members[i])), members[i]);
    }
    std::sort(dist.begin(), dist.end());
    std::vector<int> out;
    const int take = std::min<int>(k, static_cast<int>(dist.size()));
    out.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) out.push_back(dist[static_cast<std::size_t>(i)].second);
    return out;
}

}  // namespace smote_detail

// Oversamples every class below the target count by interpolating toward
// seeded-random picks among each base row's k nearest same-class neighbors
// (Euclidean, raw feature values). Original rows pass through unmodified and
// in order; synthetic rows are appended class by class.
inline SmoteResult smote(const Dataset& train, const SmoteParams& params) {
    if (!train.has_labels()) throw MissingLabelsError("smote requires labels");
    if (params.k_neighbors < 1) throw ParamError("k_neighbors must be >= 1");
    if (params.target_count < 0) throw ParamError("target count must be >= 0");

    const int k_classes = train.n_classes();
    std::map<int, std::vector<int>> members_by_class;
    for (int i = 0; i < train.n_rows(); ++i) members_by_class[train.label(i)].push_back(i);

    int target = params.target_count;
    if (target == 0)
        for (const auto& [c, members] : members_by_class)
            target = std::max(target, static_cast<int>(members.size()));

    const int m = train.n_features();
    std::vector<double> values(train.raw_values());
    std::vector<int> labels(train.labels());
    std::vector<SmoteProvenance> provenance;

    for (const auto& [c, members] : members_by_class) {
        const int size = static_cast<int>(members.size());
        if (size >= target) continue;
        if (size < 2)
            throw DegenerateError("class " + std::to_string(c) +
                                  " has a single member: no neighbor to interpolate toward");

        Rng rng(mix_seed(params.seed, static_cast<std::uint64_t>(c)));
        std::vector<int> order(members.size());
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);

        const int k_eff = std::min(params.k_neighbors, size - 1);
        std::vector<std::vector<int>> neighbor_cache(members.size());

        for (int s = 0; s < target - size; ++s) {
            const int slot = order[static_cast<std::size_t>(s % size)];
            auto& neigh = neighbor_cache[static_cast<std::size_t>(slot)];
            if (neigh.empty())
                neigh = smote_detail::nearest_neighbors(train, members, slot, k_eff);
            const int base = members[static_cast<std::size_t>(slot)];
            const int z = neigh[static_cast<std::size_t>(rng.below(neigh.size()))];
            const double t = rng.uniform();

            const auto xb = train.row(base);
            const auto xz = train.row(z);
            for (int j = 0; j < m; ++j)
                values.push_back(xb[static_cast<std::size_t>(j)] +
                                 t * (xz[static_cast<std::size_t>(j)] - xb[static_cast<std::size_t>(j)]));
            labels.push_back(c);
            provenance.push_back({static_cast<int>(labels.size()) - 1, base, z, t});
        }
    }

    Dataset out(train.schema(), std::move(values));
    out.set_labels(std::move(labels), k_classes, /*require_full_coverage=*/false);
    return {std::move(out), std::move(provenance)};
}

}  // namespace tabml
