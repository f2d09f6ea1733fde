#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "helpers.hpp"
#include "tabml/explain.hpp"
#include "tabml/forest.hpp"
#include "tabml/gbt.hpp"
#include "tabml/synth.hpp"

using namespace tabml;
using tabml::test::make_ds;
using tabml::test::random_ensemble;

namespace {

ShapModelView single_tree_view(const TreeNode* root, int m) {
    ShapModelView view;
    view.n_classes = 1;
    view.n_features = m;
    view.base_offset = {0.0};
    view.trees.push_back({root, 0, 1.0, false});
    return view;
}

}  // namespace

TEST_CASE("single leaf attributes nothing") {
    TreeNode leaf;
    leaf.value = 3.25;
    leaf.cover = 7.0;
    const ShapModelView view = single_tree_view(&leaf, 4);
    const ShapExplanation expl = treeshap(view, std::vector<double>{0, 0, 0, 0});
    CHECK(expl.base_value[0] == Catch::Approx(3.25).margin(1e-15));
    for (double p : expl.phi[0]) CHECK(p == 0.0);
}

TEST_CASE("stump attribution is payout minus expectation") {
    // split on feature 1 at 0.5: left score a (cover 3), right score b (cover 1)
    const double a = 2.0, b = -1.0, n_l = 3.0, n_r = 1.0;
    TreeNode root;
    root.feature = 1;
    root.threshold = 0.5;
    root.cover = n_l + n_r;
    root.left = std::make_unique<TreeNode>();
    root.left->value = a;
    root.left->cover = n_l;
    root.right = std::make_unique<TreeNode>();
    root.right->value = b;
    root.right->cover = n_r;

    const ShapModelView view = single_tree_view(&root, 3);
    const std::vector<double> x{9.0, 0.2, 9.0};  // routes left
    const ShapExplanation expl = treeshap(view, x);
    const double expectation = (n_l * a + n_r * b) / (n_l + n_r);
    CHECK(expl.phi[0][1] == Catch::Approx(a - expectation).margin(1e-12));
    CHECK(expl.phi[0][0] == 0.0);
    CHECK(expl.phi[0][2] == 0.0);
    CHECK(expl.base_value[0] == Catch::Approx(expectation).margin(1e-12));

    const std::vector<double> xr{9.0, 0.9, 9.0};  // routes right
    const ShapExplanation er = treeshap(view, xr);
    CHECK(er.phi[0][1] == Catch::Approx(b - expectation).margin(1e-12));
}

TEST_CASE("brute force on one feature is the two-subset difference") {
    TreeNode root;
    root.feature = 0;
    root.threshold = 0.4;
    root.cover = 10.0;
    root.left = std::make_unique<TreeNode>();
    root.left->value = 1.0;
    root.left->cover = 6.0;
    root.right = std::make_unique<TreeNode>();
    root.right->value = 5.0;
    root.right->cover = 4.0;

    const ShapModelView view = single_tree_view(&root, 1);
    const std::vector<double> x{0.1};
    const auto phi = brute_force_shapley(view, x);
    const double v_full = 1.0;                              // fixed to x: routes left
    const double v_empty = (6.0 * 1.0 + 4.0 * 5.0) / 10.0;  // cover-weighted
    CHECK(phi[0][0] == Catch::Approx(v_full - v_empty).margin(1e-12));
}

TEST_CASE("exchangeable features receive equal attribution") {
    // symmetric depth-2 tree: both levels split at 0.5, value = #{hot features}
    auto leaf = [](double v, double cover) {
        auto node = std::make_unique<TreeNode>();
        node->value = v;
        node->cover = cover;
        return node;
    };
    auto inner = [](int feature, TreePtr l, TreePtr r) {
        auto node = std::make_unique<TreeNode>();
        node->feature = feature;
        node->threshold = 0.5;
        node->left = std::move(l);
        node->right = std::move(r);
        node->cover = node->left->cover + node->right->cover;
        return node;
    };
    TreePtr root = inner(0, inner(1, leaf(0.0, 5), leaf(1.0, 5)), inner(1, leaf(1.0, 5), leaf(2.0, 5)));

    const ShapModelView view = single_tree_view(root.get(), 2);
    const ShapExplanation same = treeshap(view, std::vector<double>{0.7, 0.7});
    CHECK(same.phi[0][0] == Catch::Approx(same.phi[0][1]).margin(1e-12));
    const ShapExplanation zero = treeshap(view, std::vector<double>{0.2, 0.2});
    CHECK(zero.phi[0][0] == Catch::Approx(zero.phi[0][1]).margin(1e-12));
}

TEST_CASE("treeshap equals the subset-enumeration oracle on randomized fixtures") {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto fixture = random_ensemble(seed);
        const ShapExplanation fast = treeshap(fixture.view, fixture.x);
        const auto slow = brute_force_shapley(fixture.view, fixture.x);
        for (int c = 0; c < fixture.view.n_classes; ++c)
            for (int j = 0; j < fixture.view.n_features; ++j)
                worst = std::max(worst,
                                 std::abs(fast.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)] -
                                          slow[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)]));
    }
    CHECK(worst <= 1e-9);
}

TEST_CASE("shapley efficiency on random trees") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        const auto fixture = random_ensemble(seed);
        const ShapExplanation expl = treeshap(fixture.view, fixture.x);
        const auto margins = view_margins(fixture.view, fixture.x);
        for (int c = 0; c < fixture.view.n_classes; ++c) {
            double total = expl.base_value[static_cast<std::size_t>(c)];
            for (double p : expl.phi[static_cast<std::size_t>(c)]) total += p;
            CHECK(total == Catch::Approx(margins[static_cast<std::size_t>(c)]).margin(1e-9));
        }
    }
}

TEST_CASE("attributions add across trees") {
    Rng rng(55);
    const int m = 5;
    const TreePtr t1 = tabml::test::random_score_tree(rng, m, 0, 3);
    const TreePtr t2 = tabml::test::random_score_tree(rng, m, 0, 3);
    std::vector<double> x(m);
    for (auto& v : x) v = rng.uniform();

    const ShapModelView both = [&] {
        ShapModelView v;
        v.n_classes = 1;
        v.n_features = m;
        v.base_offset = {0.0};
        v.trees.push_back({t1.get(), 0, 1.0, false});
        v.trees.push_back({t2.get(), 0, 1.0, false});
        return v;
    }();
    const ShapExplanation sum = treeshap(both, x);
    const ShapExplanation e1 = treeshap(single_tree_view(t1.get(), m), x);
    const ShapExplanation e2 = treeshap(single_tree_view(t2.get(), m), x);
    for (int j = 0; j < m; ++j)
        CHECK(sum.phi[0][static_cast<std::size_t>(j)] ==
              Catch::Approx(e1.phi[0][static_cast<std::size_t>(j)] +
                            e2.phi[0][static_cast<std::size_t>(j)])
                  .margin(1e-12));
}

TEST_CASE("unused features get exactly zero attribution") {
    SynthSpec spec;
    spec.schema = urban_health_schema();
    spec.n = 150;
    spec.dominant_feature = "Age";
    spec.constant_feature = "MH";  // constant column can never split
    auto [ds, meta] = synth_generate(spec, 80);
    GbtParams params;
    params.n_estimators = 5;
    params.max_depth = 3;
    const GbtEnsemble model = gbt_fit(ds, params);
    const ShapModelView view = make_shap_view(model);

    std::vector<char> used(static_cast<std::size_t>(ds.n_features()), 0);
    for (const auto& ref : view.trees) collect_used_features(*ref.root, used);
    const int mh = ds.schema().require("MH");
    REQUIRE(used[static_cast<std::size_t>(mh)] == 0);

    for (int i = 0; i < 25; ++i) {
        const ShapExplanation expl = treeshap(view, ds.row(i));
        for (int c = 0; c < model.n_classes; ++c)
            CHECK(expl.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(mh)] == 0.0);
    }
}

TEST_CASE("local accuracy against gbt margins") {
    SynthSpec spec;
    spec.schema = urban_health_schema();
    spec.n = 200;
    spec.dominant_feature = "Age";
    spec.interaction = {{"Poverty", "TE"}};
    spec.interaction_weight = 1.2;
    spec.noise = 0.4;
    auto [ds, meta] = synth_generate(spec, 81);
    GbtParams params;
    params.n_estimators = 8;
    params.max_depth = 4;
    const GbtEnsemble model = gbt_fit(ds, params);
    const ShapModelView view = make_shap_view(model);

    for (int i = 0; i < ds.n_rows(); i += 7) {
        const auto margins = gbt_predict_margins(model, ds.row(i));
        const ShapExplanation expl = treeshap(view, ds.row(i));
        for (int c = 0; c < model.n_classes; ++c) {
            double total = expl.base_value[static_cast<std::size_t>(c)];
            for (double p : expl.phi[static_cast<std::size_t>(c)]) total += p;
            CHECK(total == Catch::Approx(margins[static_cast<std::size_t>(c)]).margin(1e-9));
        }
    }
}

TEST_CASE("forest view keeps local accuracy") {
    SynthSpec spec;
    spec.schema = urban_health_schema();
    spec.n = 150;
    spec.dominant_feature = "NV";
    spec.noise = 0.4;
    auto [ds, meta] = synth_generate(spec, 82);
    ForestParams fp;
    fp.n_trees = 7;
    fp.max_depth = 4;
    fp.seed = 5;
    const ForestModel model = forest_fit(ds, fp);
    const ShapModelView view = make_shap_view(model);
    for (int i = 0; i < 20; ++i) {
        const auto margins = view_margins(view, ds.row(i));
        const ShapExplanation expl = treeshap(view, ds.row(i));
        for (int c = 0; c < model.n_classes; ++c) {
            double total = expl.base_value[static_cast<std::size_t>(c)];
            for (double p : expl.phi[static_cast<std::size_t>(c)]) total += p;
            CHECK(total == Catch::Approx(margins[static_cast<std::size_t>(c)]).margin(1e-9));
        }
    }
}

TEST_CASE("missing covers are rejected") {
    TreeNode root;
    root.feature = 0;
    root.threshold = 0.5;
    root.cover = -1.0;  // unrecorded
    root.left = std::make_unique<TreeNode>();
    root.left->value = 1.0;
    root.right = std::make_unique<TreeNode>();
    root.right->value = 2.0;
    const ShapModelView view = single_tree_view(&root, 1);
    CHECK_THROWS_AS(treeshap(view, std::vector<double>{0.1}), MissingCoverError);
    CHECK_THROWS_AS(brute_force_shapley(view, std::vector<double>{0.1}), MissingCoverError);
}

TEST_CASE("brute force refuses wide feature spaces") {
    TreeNode leaf;
    leaf.value = 1.0;
    leaf.cover = 1.0;
    ShapModelView view = single_tree_view(&leaf, 20);
    CHECK_THROWS_AS(brute_force_shapley(view, std::vector<double>(20, 0.0)), TractabilityError);
}

TEST_CASE("global importance") {
    SECTION("only split feature ranks first; the rest are zero") {
        TreeNode root;
        root.feature = 2;
        root.threshold = 0.5;
        root.cover = 10.0;
        root.left = std::make_unique<TreeNode>();
        root.left->value = -1.0;
        root.left->cover = 5.0;
        root.right = std::make_unique<TreeNode>();
        root.right->value = 1.0;
        root.right->cover = 5.0;
        const ShapModelView view = single_tree_view(&root, 4);

        const Dataset ds = make_ds(4,
                                   {{0.1, 0.2, 0.3, 0.4},
                                    {0.9, 0.8, 0.7, 0.6},
                                    {0.5, 0.5, 0.2, 0.5},
                                    {0.5, 0.5, 0.9, 0.5}},
                                   {}, 0);
        const ImportanceReport report = global_importance(view, ds);
        CHECK(report.ranking[0] == 2);
        CHECK(report.aggregate[2] > 0.0);
        CHECK(report.aggregate[0] == 0.0);
        CHECK(report.aggregate[1] == 0.0);
        CHECK(report.aggregate[3] == 0.0);
        CHECK(report.top_share[2] == 1.0);

        double share_sum = 0.0;
        for (double s : report.top_share) share_sum += s;
        CHECK(share_sum == Catch::Approx(1.0).margin(1e-12));
    }

    SECTION("prior-only model attributes nothing") {
        SynthSpec spec;
        spec.schema = urban_health_schema();
        spec.n = 80;
        spec.dominant_feature = "Age";
        auto [ds, meta] = synth_generate(spec, 83);
        GbtParams params;
        params.n_estimators = 0;
        const GbtEnsemble model = gbt_fit(ds, params);
        const ImportanceReport report = global_importance(make_shap_view(model), ds);
        for (double v : report.aggregate) CHECK(v == 0.0);
    }

    SECTION("planted dominant feature is recovered") {
        SynthSpec spec;
        spec.schema = urban_health_schema();
        spec.n = 400;
        spec.dominant_feature = "Age";
        spec.dominant_weight = 4.0;
        spec.noise = 0.5;
        auto [ds, meta] = synth_generate(spec, 84);
        GbtParams params;
        params.n_estimators = 20;
        params.max_depth = 3;
        const GbtEnsemble model = gbt_fit(ds, params);
        const ImportanceReport report = global_importance(make_shap_view(model), ds);
        const int age = ds.schema().require("Age");
        CHECK(report.ranking[0] == age);
        CHECK(report.top_share[static_cast<std::size_t>(age)] > 0.5);
    }

    SECTION("empty dataset is insufficient") {
        TreeNode leaf;
        leaf.value = 1.0;
        leaf.cover = 1.0;
        const ShapModelView view = single_tree_view(&leaf, 1);
        FeatureSchema schema;
        schema.features = {{"f0", FeatureKind::Density}};
        const Dataset empty(schema, {});
        CHECK_THROWS_AS(global_importance(view, empty), InsufficientDataError);
    }
}
