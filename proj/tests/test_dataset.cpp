#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "tabml/csv.hpp"
#include "tabml/dataset.hpp"
#include "tabml/rng.hpp"
#include "tabml/synth.hpp"

using namespace tabml;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "tabml_tests";
    fs::create_directories(dir);
    return dir / name;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

// independent rank-boundary oracle: boundaries at ceil(n*j/k) on the sorted
// sample, ties pushed into the lower bin
std::vector<int> bin_oracle(const std::vector<double>& values, int k) {
    std::vector<double> sorted(values);
    std::sort(sorted.begin(), sorted.end());
    const int n = static_cast<int>(sorted.size());
    std::vector<double> bounds;
    for (int j = 1; j < k; ++j) {
        int pos = (n * j + k - 1) / k;
        while (pos < n && sorted[pos] == sorted[pos - 1]) ++pos;
        bounds.push_back(sorted[pos - 1]);
    }
    std::vector<int> labels(values.size(), 1);
    for (std::size_t i = 0; i < values.size(); ++i)
        for (double b : bounds)
            if (values[i] > b) ++labels[i];
    return labels;
}

}  // namespace

TEST_CASE("dataset validates schema and values") {
    FeatureSchema schema;
    schema.features = {{"a", FeatureKind::Fraction}, {"b", FeatureKind::Count}};
    schema.target_name = "y";

    CHECK_NOTHROW(Dataset(schema, {0.5, 3.0, 1.0, 0.0}));
    CHECK_THROWS_AS(Dataset(schema, {0.5, 3.0, 1.5, 0.0}), RangeError);   // fraction > 1
    CHECK_THROWS_AS(Dataset(schema, {0.5, -1.0, 1.0, 0.0}), RangeError);  // negative count
    CHECK_THROWS_AS(Dataset(schema, {0.5, 3.0, 1.0}), ShapeError);        // ragged

    FeatureSchema dup;
    dup.features = {{"a", FeatureKind::Fraction}, {"a", FeatureKind::Count}};
    CHECK_THROWS_AS(Dataset(dup, {0.1, 2.0}), ParamError);

    Dataset ds(schema, {0.5, 3.0, 1.0, 0.0});
    CHECK_THROWS_AS(ds.set_labels({1, 3}, 3), MissingClassError);  // gap in coverage
    CHECK_THROWS_AS(ds.set_labels({0, 1}, 2), RangeError);
    ds.set_labels({2, 1}, 2);
    CHECK(ds.n_classes() == 2);
}

TEST_CASE("load_csv matches the urban schema round trip") {
    const FeatureSchema schema = urban_health_schema();
    std::string header;
    for (int j = 0; j < schema.n_features(); ++j)
        header += schema.features[static_cast<std::size_t>(j)].name + ",";
    header += "Cancer";

    std::string row1, row2;
    for (int j = 0; j < schema.n_features(); ++j) {
        const bool frac = schema.features[static_cast<std::size_t>(j)].kind == FeatureKind::Fraction;
        row1 += frac ? "0.25," : "4,";
        row2 += frac ? "0.75," : "9,";
    }
    const auto path = temp_file("urban.csv");
    write_file(path, header + "\n" + row1 + "1\n" + row2 + "2\n");

    const Dataset ds = load_csv(path.string(), schema);
    CHECK(ds.n_rows() == 2);
    CHECK(ds.n_features() == 19);
    REQUIRE(ds.has_labels());
    CHECK(ds.labels() == std::vector<int>{1, 2});
    CHECK(ds.n_classes() == 2);
}

TEST_CASE("load_csv matches columns by name in any order") {
    FeatureSchema schema;
    schema.features = {{"a", FeatureKind::Count}, {"b", FeatureKind::Count},
                       {"c", FeatureKind::Count}};
    schema.target_name = "y";
    const auto path = temp_file("shuffled.csv");
    // file order differs from schema order and carries an unknown extra column
    write_file(path, "c,y,extra,a,b\n30,1,99,10,20\n31,2,99,11,21\n");
    const Dataset ds = load_csv(path.string(), schema);
    CHECK(ds.at(0, 0) == 10.0);
    CHECK(ds.at(0, 1) == 20.0);
    CHECK(ds.at(0, 2) == 30.0);
    CHECK(ds.at(1, 0) == 11.0);
    CHECK(ds.labels() == std::vector<int>{1, 2});
}

TEST_CASE("load_csv error contracts") {
    FeatureSchema schema = urban_health_schema();

    SECTION("missing schema column is named") {
        const auto path = temp_file("missing_gs.csv");
        std::string header;
        for (int j = 0; j < schema.n_features(); ++j) {
            const std::string& name = schema.features[static_cast<std::size_t>(j)].name;
            if (name == "GS") continue;
            header += name + ",";
        }
        header.pop_back();
        write_file(path, header + "\n");
        CHECK_THROWS_WITH(load_csv(path.string(), schema), Catch::Matchers::ContainsSubstring("GS"));
        CHECK_THROWS_AS(load_csv(path.string(), schema), SchemaError);
    }

    SECTION("fraction out of range reports row and column") {
        FeatureSchema small;
        small.features = {{"Poverty", FeatureKind::Fraction}};
        small.target_name = "Cancer";
        const auto path = temp_file("range.csv");
        write_file(path, "Poverty\n0.2\n0.4\n1.2\n");
        CHECK_THROWS_AS(load_csv(path.string(), small), RangeError);
        CHECK_THROWS_WITH(load_csv(path.string(), small),
                          Catch::Matchers::ContainsSubstring("row 3") &&
                              Catch::Matchers::ContainsSubstring("Poverty"));
    }

    SECTION("non-numeric cell reports location") {
        FeatureSchema small;
        small.features = {{"a", FeatureKind::Count}, {"b", FeatureKind::Count}};
        const auto path = temp_file("nonnum.csv");
        write_file(path, "a,b\n1,2\n1,oops\n");
        CHECK_THROWS_AS(load_csv(path.string(), small), ParseError);
        CHECK_THROWS_WITH(load_csv(path.string(), small),
                          Catch::Matchers::ContainsSubstring("row 2") &&
                              Catch::Matchers::ContainsSubstring("\"b\""));
    }

    SECTION("missing value errors unless imputation is on") {
        FeatureSchema small;
        small.features = {{"a", FeatureKind::Count}, {"b", FeatureKind::Count}};
        const auto path = temp_file("missing_cell.csv");
        write_file(path, "a,b\n1,2\n,4\n3,6\n");
        CHECK_THROWS_AS(load_csv(path.string(), small), ParseError);
        CsvOptions opts;
        opts.impute_mean = true;
        const Dataset ds = load_csv(path.string(), small, opts);
        CHECK(ds.at(1, 0) == 2.0);  // mean of 1 and 3
    }
}

TEST_CASE("equal-frequency binning") {
    SECTION("distinct values split into equal-count tertiles") {
        CHECK(equal_frequency_bin({10, 20, 30, 40, 50, 60}, 3) ==
              std::vector<int>{1, 1, 2, 2, 3, 3});
    }

    SECTION("all-identical values are degenerate") {
        CHECK_THROWS_AS(equal_frequency_bin({5, 5, 5, 5}, 3), DegenerateError);
    }

    SECTION("k below 2 is a parameter error") {
        CHECK_THROWS_AS(equal_frequency_bin({1, 2, 3}, 1), ParamError);
    }

    SECTION("301 distinct draws make tertiles of 101/100/100") {
        Rng rng(17);
        std::set<double> distinct;
        while (distinct.size() < 301) distinct.insert(rng.uniform());
        std::vector<double> values(distinct.begin(), distinct.end());
        Rng shuffler(3);
        shuffler.shuffle(values);

        const std::vector<int> labels = equal_frequency_bin(values, 3);
        CHECK(labels == bin_oracle(values, 3));
        std::vector<int> counts(3, 0);
        for (int v : labels) ++counts[static_cast<std::size_t>(v - 1)];
        CHECK(counts == std::vector<int>{101, 100, 100});
    }

    SECTION("ties never straddle a boundary") {
        const std::vector<double> values{1, 1, 1, 1, 2, 3};
        const std::vector<int> labels = equal_frequency_bin(values, 3);
        CHECK(labels == bin_oracle(values, 3));
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t j = 0; j < values.size(); ++j)
                if (values[i] == values[j]) CHECK(labels[i] == labels[j]);
    }

    SECTION("monotone in value; full label coverage on distinct inputs") {
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            Rng rng(seed);
            const int n = 20 + static_cast<int>(rng.below(200));
            const int k = 2 + static_cast<int>(rng.below(5));
            std::set<double> distinct;
            while (static_cast<int>(distinct.size()) < n) distinct.insert(rng.uniform());
            std::vector<double> values(distinct.begin(), distinct.end());
            rng.shuffle(values);

            const std::vector<int> labels = equal_frequency_bin(values, k);
            CHECK(labels == bin_oracle(values, k));
            std::vector<int> counts(static_cast<std::size_t>(k), 0);
            for (std::size_t i = 0; i < values.size(); ++i) {
                ++counts[static_cast<std::size_t>(labels[i] - 1)];
                for (std::size_t j = 0; j < values.size(); ++j)
                    if (values[i] <= values[j]) CHECK(labels[i] <= labels[j]);
            }
            const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
            CHECK(*hi - *lo <= 1);
            CHECK(*lo >= 1);
        }
    }
}

TEST_CASE("train/test split") {
    FeatureSchema schema;
    schema.features = {{"x", FeatureKind::Density}};
    std::vector<double> vals(10);
    std::iota(vals.begin(), vals.end(), 0.0);
    const Dataset ds(schema, vals);

    const SplitPlan plan = split_train_test(ds, 0.7, 1);
    CHECK(plan.train_indices.size() == 7);
    CHECK(plan.test_indices.size() == 3);

    std::set<int> all(plan.train_indices.begin(), plan.train_indices.end());
    all.insert(plan.test_indices.begin(), plan.test_indices.end());
    CHECK(all.size() == 10);

    const SplitPlan again = split_train_test(ds, 0.7, 1);
    CHECK(plan.train_indices == again.train_indices);
    CHECK(plan.test_indices == again.test_indices);

    const SplitPlan other = split_train_test(ds, 0.7, 2);
    CHECK(plan.train_indices != other.train_indices);

    const Dataset tiny(schema, {1.0});
    CHECK_THROWS_AS(split_train_test(tiny, 0.7, 1), InsufficientDataError);
    CHECK_THROWS_AS(split_train_test(ds, 1.5, 1), ParamError);
}

TEST_CASE("k-fold partition") {
    FeatureSchema schema;
    schema.features = {{"x", FeatureKind::Density}};

    SECTION("even fold sizes") {
        std::vector<double> vals(100);
        std::iota(vals.begin(), vals.end(), 0.0);
        const Dataset ds(schema, vals);
        const FoldPlan plan = kfold(ds, 5, 3);
        for (int f = 0; f < 5; ++f) CHECK(plan.fold_rows(f).size() == 20);
    }

    SECTION("remainder rule and exhaustive union") {
        std::vector<double> vals(101);
        std::iota(vals.begin(), vals.end(), 0.0);
        const Dataset ds(schema, vals);
        const FoldPlan plan = kfold(ds, 5, 3);
        std::multiset<std::size_t> sizes;
        std::set<int> seen;
        for (int f = 0; f < 5; ++f) {
            const auto rows = plan.fold_rows(f);
            sizes.insert(rows.size());
            seen.insert(rows.begin(), rows.end());
        }
        CHECK(sizes == std::multiset<std::size_t>{21, 20, 20, 20, 20});
        CHECK(seen.size() == 101);

        const FoldPlan again = kfold(ds, 5, 3);
        CHECK(plan.fold_assignment == again.fold_assignment);
    }

    SECTION("fewer rows than folds") {
        const Dataset ds(schema, {1.0, 2.0});
        CHECK_THROWS_AS(kfold(ds, 3, 1), InsufficientDataError);
    }
}

TEST_CASE("synthetic generator") {
    FeatureSchema schema = urban_health_schema();

    SECTION("noise-free single threshold is depth-1 separable") {
        SynthSpec spec;
        spec.schema = schema;
        spec.n = 200;
        spec.k_classes = 2;
        spec.dominant_feature = "Age";
        spec.dominant_weight = 1.0;
        auto [ds, meta] = synth_generate(spec, 5);
        const int age = schema.require("Age");
        // labels must be a threshold function of the Age column
        double max_low = -1e300, min_high = 1e300;
        for (int i = 0; i < ds.n_rows(); ++i) {
            if (ds.label(i) == 1)
                max_low = std::max(max_low, ds.at(i, age));
            else
                min_high = std::min(min_high, ds.at(i, age));
        }
        CHECK(max_low < min_high);
    }

    SECTION("deterministic under the seed") {
        SynthSpec spec;
        spec.schema = schema;
        spec.n = 120;
        spec.dominant_feature = "Age";
        spec.noise = 0.4;
        auto [a, ma] = synth_generate(spec, 9);
        auto [b, mb] = synth_generate(spec, 9);
        CHECK(a.raw_values() == b.raw_values());
        CHECK(a.labels() == b.labels());
        auto [c, mc] = synth_generate(spec, 10);
        CHECK(a.raw_values() != c.raw_values());
    }

    SECTION("planted class proportions land within binomial 3 sigma") {
        SynthSpec spec;
        spec.schema = schema;
        spec.n = 1000;
        spec.dominant_feature = "Age";
        spec.noise = 1.0;
        spec.class_proportions = {0.6, 0.3, 0.1};
        auto [ds, meta] = synth_generate(spec, 11);
        const std::vector<double> expect{600.0, 300.0, 100.0};
        const std::vector<double> p{0.6, 0.3, 0.1};
        for (int c = 0; c < 3; ++c) {
            const double sigma = std::sqrt(1000.0 * p[static_cast<std::size_t>(c)] *
                                           (1.0 - p[static_cast<std::size_t>(c)]));
            CHECK(std::abs(meta.class_counts[static_cast<std::size_t>(c)] -
                           expect[static_cast<std::size_t>(c)]) <= 3.0 * sigma);
        }
    }

    SECTION("class count below 2 is a parameter error") {
        SynthSpec spec;
        spec.schema = schema;
        spec.k_classes = 1;
        CHECK_THROWS_AS(synth_generate(spec, 1), ParamError);
    }
}

TEST_CASE("csv write/load round trip is bit-exact") {
    FeatureSchema schema;
    schema.features = {{"f", FeatureKind::Fraction}, {"c", FeatureKind::Count},
                       {"d", FeatureKind::Density}};
    schema.target_name = "y";

    Rng rng(23);
    std::vector<double> vals;
    for (int i = 0; i < 50; ++i) {
        vals.push_back(rng.uniform());
        vals.push_back(std::floor(rng.uniform() * 100));
        vals.push_back(rng.uniform() * 1e6);
    }

    SECTION("with integer labels") {
        Dataset ds(schema, vals);
        std::vector<int> labels;
        for (int i = 0; i < 50; ++i) labels.push_back(1 + i % 3);
        ds.set_labels(labels, 3);
        const auto path = temp_file("roundtrip_labels.csv");
        write_csv(ds, path.string());
        const Dataset back = load_csv(path.string(), schema);
        CHECK(back.raw_values() == ds.raw_values());
        CHECK(back.labels() == ds.labels());
    }

    SECTION("with a raw real target") {
        Dataset ds(schema, vals);
        std::vector<double> target;
        for (int i = 0; i < 50; ++i) target.push_back(rng.uniform() * 0.3);
        ds.set_target(target);
        const auto path = temp_file("roundtrip_target.csv");
        write_csv(ds, path.string());
        const Dataset back = load_csv(path.string(), schema);
        CHECK(back.raw_values() == ds.raw_values());
        CHECK(back.target() == ds.target());
        CHECK(!back.has_labels());
    }
}
