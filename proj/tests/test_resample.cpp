#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "tabml/resample.hpp"
#include "tabml/rng.hpp"
#include "tabml/synth.hpp"

using namespace tabml;

namespace {

Dataset imbalanced(const std::vector<int>& class_sizes, int m, std::uint64_t seed) {
    FeatureSchema schema;
    for (int j = 0; j < m; ++j)
        schema.features.push_back({"f" + std::to_string(j), FeatureKind::Fraction});
    Rng rng(seed);
    std::vector<double> vals;
    std::vector<int> labels;
    for (std::size_t c = 0; c < class_sizes.size(); ++c)
        for (int i = 0; i < class_sizes[c]; ++i) {
            for (int j = 0; j < m; ++j) vals.push_back(rng.uniform());
            labels.push_back(static_cast<int>(c) + 1);
        }
    Dataset ds(schema, std::move(vals));
    ds.set_labels(std::move(labels), static_cast<int>(class_sizes.size()));
    return ds;
}

std::map<int, int> class_counts(const Dataset& ds) {
    std::map<int, int> out;
    for (int i = 0; i < ds.n_rows(); ++i) ++out[ds.label(i)];
    return out;
}

}  // namespace

TEST_CASE("smote leaves balanced data untouched") {
    const Dataset ds = imbalanced({100, 100, 100}, 3, 1);
    const SmoteResult res = smote(ds, {5, 0, 42});
    CHECK(res.data.n_rows() == 300);
    CHECK(res.data.raw_values() == ds.raw_values());
    CHECK(res.provenance.empty());
}

TEST_CASE("smote balances to the majority count") {
    const Dataset ds = imbalanced({90, 60, 30}, 4, 2);
    const SmoteResult res = smote(ds, {5, 0, 42});
    const auto counts = class_counts(res.data);
    CHECK(counts.at(1) == 90);
    CHECK(counts.at(2) == 90);
    CHECK(counts.at(3) == 90);
    CHECK(res.data.n_rows() == 270);
    CHECK(res.provenance.size() == 90);

    SECTION("original rows pass through unmodified and in order") {
        for (int i = 0; i < ds.n_rows(); ++i) {
            const auto a = ds.row(i);
            const auto b = res.data.row(i);
            CHECK(std::equal(a.begin(), a.end(), b.begin()));
            CHECK(res.data.label(i) == ds.label(i));
        }
    }

    SECTION("determinism") {
        const SmoteResult again = smote(ds, {5, 0, 42});
        CHECK(again.data.raw_values() == res.data.raw_values());
        const SmoteResult other = smote(ds, {5, 0, 43});
        CHECK(other.data.raw_values() != res.data.raw_values());
    }
}

TEST_CASE("synthetic rows are convex combinations with logged provenance") {
    const Dataset ds = imbalanced({50, 12}, 3, 7);
    const SmoteResult res = smote(ds, {5, 0, 9});
    REQUIRE(res.provenance.size() == 38);
    for (const auto& p : res.provenance) {
        CHECK(p.t >= 0.0);
        CHECK(p.t <= 1.0);
        CHECK(ds.label(p.base_index) == res.data.label(p.synthetic_index));
        CHECK(ds.label(p.neighbor_index) == res.data.label(p.synthetic_index));
        const auto x = ds.row(p.base_index);
        const auto z = ds.row(p.neighbor_index);
        const auto s = res.data.row(p.synthetic_index);
        for (std::size_t j = 0; j < x.size(); ++j) {
            CHECK(s[j] == Catch::Approx(x[j] + p.t * (z[j] - x[j])).margin(1e-12));
            CHECK(s[j] >= 0.0);  // fraction kind stays in range by convexity
            CHECK(s[j] <= 1.0);
        }
    }
}

TEST_CASE("smote on a two-point minority stays on the segment") {
    FeatureSchema schema;
    schema.features = {{"x", FeatureKind::Density}, {"y", FeatureKind::Density}};
    Dataset ds(schema, {0.0, 0.0, 1.0, 1.0, 5.0, 5.0, 6.0, 5.0, 5.0, 6.0});
    ds.set_labels({1, 1, 2, 2, 2}, 2);
    const SmoteResult res = smote(ds, {5, 0, 3});
    REQUIRE(res.data.n_rows() == 6);
    const auto s = res.data.row(5);
    CHECK(s[0] == Catch::Approx(s[1]).margin(1e-12));  // on the segment (t,t)
    CHECK(s[0] >= 0.0);
    CHECK(s[0] <= 1.0);
}

TEST_CASE("smote error contracts") {
    SECTION("no labels") {
        FeatureSchema schema;
        schema.features = {{"x", FeatureKind::Density}};
        const Dataset ds(schema, {1.0, 2.0});
        CHECK_THROWS_AS(smote(ds, {5, 0, 1}), MissingLabelsError);
    }

    SECTION("singleton minority class") {
        FeatureSchema schema;
        schema.features = {{"x", FeatureKind::Density}};
        Dataset ds(schema, {1.0, 2.0, 3.0, 4.0});
        ds.set_labels({1, 1, 1, 2}, 2);
        CHECK_THROWS_AS(smote(ds, {5, 0, 1}), DegenerateError);
    }

    SECTION("k_neighbors below 1") {
        const Dataset ds = imbalanced({5, 3}, 2, 1);
        CHECK_THROWS_AS(smote(ds, {0, 0, 1}), ParamError);
    }

    SECTION("explicit target leaves larger classes alone") {
        const Dataset ds = imbalanced({20, 5}, 2, 4);
        const SmoteResult res = smote(ds, {3, 10, 1});
        const auto counts = class_counts(res.data);
        CHECK(counts.at(1) == 20);
        CHECK(counts.at(2) == 10);
    }
}
