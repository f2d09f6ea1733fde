#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabml/classifier.hpp"
#include "tabml/config.hpp"
#include "tabml/csv.hpp"
#include "tabml/explain.hpp"
#include "tabml/model_io.hpp"
#include "tabml/pipeline_fit.hpp"
#include "tabml/synth.hpp"
#include "tabml/version.hpp"

namespace tabml {

namespace fs = std::filesystem;

inline void write_text_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.parent_path() / (".tmp." + path.filename().string());
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

inline std::string sanitize_filename(const std::string& name) {
    std::string out;
    for (char c : name)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.') ? c : '_';
    return out;
}

struct FamilyOutcome {
    std::string family;
    json best_params;
    double cv_macro_f1 = -1.0;
    bool usable = false;
    MacroScores test_scores;
    ConfusionMatrix test_cm;
    FittedModel refit;
};

struct RunReport {
    std::string out_dir;
    std::string winner_family;
    json winner_params;
    double winner_cv = -1.0;
    std::vector<FamilyOutcome> families;
    std::vector<std::string> notes;
    std::vector<std::string> files;
};

namespace pipeline_detail {

inline std::string num(double v) { return csv_detail::format_double(v); }

inline void emit(RunReport& report, const fs::path& out_dir, const std::string& name,
                 const std::string& content) {
    write_text_atomic(out_dir / name, content);
    report.files.push_back(name);
}

inline std::string scores_csv(const std::vector<FamilyOutcome>& families) {
    std::ostringstream out;
    out << "model,cv_macro_f1,test_accuracy,test_macro_precision,test_macro_recall,"
           "test_macro_f1,test_macro_f1_halved\n";
    for (const auto& f : families) {
        if (!f.usable) continue;
        out << f.family << ',' << num(f.cv_macro_f1) << ',' << num(f.test_scores.accuracy) << ','
            << num(f.test_scores.macro_precision) << ',' << num(f.test_scores.macro_recall) << ','
            << num(f.test_scores.macro_f1_standard) << ','
            << num(f.test_scores.macro_f1_halved) << '\n';
    }
    return out.str();
}

inline json scores_json(const MacroScores& s) {
    json per_class = json::array();
    for (const auto& prf : s.per_class)
        per_class.push_back(
            {{"precision", prf.precision}, {"recall", prf.recall}, {"f1", prf.f1}});
    return json{{"accuracy", s.accuracy},
                {"macro_precision", s.macro_precision},
                {"macro_recall", s.macro_recall},
                {"macro_f1", s.macro_f1_standard},
                {"macro_f1_halved", s.macro_f1_halved},
                {"per_class", per_class}};
}

inline std::string confusion_csv(const ConfusionMatrix& cm, bool normalized) {
    std::ostringstream out;
    out << "true_class";
    for (int j = 0; j < cm.k; ++j) out << ",pred_" << (j + 1);
    out << '\n';
    const std::vector<double> norm = normalized ? row_normalize(cm) : std::vector<double>{};
    for (int i = 0; i < cm.k; ++i) {
        out << (i + 1);
        for (int j = 0; j < cm.k; ++j) {
            out << ',';
            if (normalized)
                out << num(norm[static_cast<std::size_t>(i) * static_cast<std::size_t>(cm.k) +
                                static_cast<std::size_t>(j)]);
            else
                out << cm.at(i, j);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace pipeline_detail

// Full pipeline: ingest -> bin -> split -> (SMOTE inside CV folds) -> model
// selection by CV macro-F1 -> held-out evaluation -> attribution ->
// interventions -> report files. Everything downstream of the master seed is
// deterministic; two runs with the same config produce byte-identical trees.
inline RunReport run_pipeline(const RunConfig& cfg) {
    validate_run_config(cfg);

    const fs::path out_dir(cfg.out_dir);
    fs::create_directories(out_dir);
    fs::create_directories(out_dir / "models");

    try {
        RunReport report;
        report.out_dir = cfg.out_dir;

        // ---- ingest ----
        Dataset ds;
        std::optional<SynthMeta> synth_meta;
        if (cfg.use_synth) {
            auto [generated, meta] = synth_generate(cfg.synth, mix_seed(cfg.seed, 1));
            ds = std::move(generated);
            synth_meta = meta;
        } else {
            CsvOptions opts;
            opts.impute_mean = cfg.impute_mean;
            ds = load_csv(cfg.csv_path, cfg.schema, opts);
        }

        // ---- bin the outcome (before the split, on the full corpus) ----
        if (!ds.has_labels()) {
            if (!ds.has_target())
                throw MissingLabelsError("dataset has neither class labels nor a raw target to bin");
            ds.set_labels(equal_frequency_bin(ds.target(), cfg.binning_k), cfg.binning_k);
        }
        const int k_classes = ds.n_classes();

        // ---- split ----
        const SplitPlan split = split_train_test(ds, cfg.train_fraction, mix_seed(cfg.seed, 11));
        const Dataset train = ds.subset(split.train_indices);
        const Dataset test = ds.subset(split.test_indices);
        const FoldPlan folds = kfold(train, cfg.cv_folds, mix_seed(cfg.seed, 12));

        std::optional<SmoteParams> smote_params;
        std::optional<SmoteResult> balanced_train;
        if (cfg.smote_enabled) {
            smote_params = SmoteParams{cfg.smote_k_neighbors, cfg.smote_target, mix_seed(cfg.seed, 13)};
            balanced_train = smote(train, *smote_params);
        }

        // ---- model selection ----
        for (const auto& family : enumerate_families(cfg.grids, cfg.seed)) {
            FamilyOutcome outcome;
            outcome.family = family.name;
            int best_index = -1;
            for (std::size_t ci = 0; ci < family.candidates.size(); ++ci) {
                double score = -1.0;
                try {
                    score = cv_macro_f1(train, folds, smote_params, family.candidates[ci].fit,
                                        k_classes);
                } catch (const Error&) {
                    continue;  // candidate infeasible on this data (e.g. knn k too large)
                }
                if (score > outcome.cv_macro_f1) {
                    outcome.cv_macro_f1 = score;
                    best_index = static_cast<int>(ci);
                }
            }
            if (best_index < 0) {
                report.notes.push_back("family " + family.name +
                                       " skipped: no feasible hyperparameter candidate");
                report.families.push_back(std::move(outcome));
                continue;
            }
            outcome.best_params = family.candidates[static_cast<std::size_t>(best_index)].params_doc;

            // final refit on the (optionally SMOTE-balanced) training split
            const Dataset& fit_train = balanced_train ? balanced_train->data : train;
            outcome.refit = family.candidates[static_cast<std::size_t>(best_index)].fit(fit_train);

            std::vector<int> pred(static_cast<std::size_t>(test.n_rows()));
            for (int i = 0; i < test.n_rows(); ++i)
                pred[static_cast<std::size_t>(i)] = outcome.refit.predict(test.row(i));
            outcome.test_cm = confusion(test.labels(), pred, k_classes);
            outcome.test_scores = macro_scores(outcome.test_cm);
            outcome.usable = true;
            report.families.push_back(std::move(outcome));
        }

        const FamilyOutcome* winner = nullptr;
        for (const auto& f : report.families)
            if (f.usable && (winner == nullptr || f.cv_macro_f1 > winner->cv_macro_f1)) winner = &f;
        if (winner == nullptr) throw InsufficientDataError("no model family could be trained");
        report.winner_family = winner->family;
        report.winner_params = winner->best_params;
        report.winner_cv = winner->cv_macro_f1;

        // ---- report files ----
        std::vector<std::string> feature_names;
        for (const auto& f : ds.schema().features) feature_names.push_back(f.name);

        if (cfg.use_synth) {
            pipeline_detail::emit(report, out_dir, "dataset.csv", csv_to_string(ds));
            json meta{{"dominant_feature", synth_meta->dominant_feature},
                      {"causal_feature", synth_meta->causal_feature},
                      {"causal_direction", synth_meta->causal_direction},
                      {"constant_feature", synth_meta->constant_feature},
                      {"class_counts", synth_meta->class_counts},
                      {"seed", synth_meta->seed}};
            pipeline_detail::emit(report, out_dir, "synth_meta.json", meta.dump(2) + "\n");
        }

        if (balanced_train) {
            std::ostringstream prov;
            prov << "synthetic_index,base_index,neighbor_index,t\n";
            for (const auto& p : balanced_train->provenance)
                prov << p.synthetic_index << ',' << p.base_index << ',' << p.neighbor_index << ','
                     << pipeline_detail::num(p.t) << '\n';
            pipeline_detail::emit(report, out_dir, "smote_provenance.csv", prov.str());
        }

        pipeline_detail::emit(report, out_dir, "metrics.csv",
                              pipeline_detail::scores_csv(report.families));
        {
            json jm = json::object();
            for (const auto& f : report.families) {
                if (!f.usable) continue;
                jm[f.family] = {{"params", f.best_params},
                                {"cv_macro_f1", f.cv_macro_f1},
                                {"test", pipeline_detail::scores_json(f.test_scores)}};
            }
            pipeline_detail::emit(report, out_dir, "metrics.json", jm.dump(2) + "\n");
        }
        pipeline_detail::emit(report, out_dir, "confusion.csv",
                              pipeline_detail::confusion_csv(winner->test_cm, false));
        pipeline_detail::emit(report, out_dir, "confusion_normalized.csv",
                              pipeline_detail::confusion_csv(winner->test_cm, true));

        for (const auto& f : report.families) {
            if (!f.usable) continue;
            const std::string name = "models/" + f.family + ".json";
            write_text_atomic(out_dir / name, f.refit.to_json(feature_names).dump(2) + "\n");
            report.files.push_back(name);
        }

        // ---- attribution + interventions use the winning tree-based model ----
        const FamilyOutcome* tree_model = winner;
        if (!winner->refit.shap_capable()) {
            tree_model = nullptr;
            for (const auto& f : report.families)
                if (f.usable && f.refit.shap_capable() &&
                    (tree_model == nullptr || f.cv_macro_f1 > tree_model->cv_macro_f1))
                    tree_model = &f;
            if (tree_model != nullptr)
                report.notes.push_back("winner " + winner->family +
                                       " has no attribution view; explanations use " +
                                       tree_model->family);
            else
                report.notes.push_back("no tree-based model in roster; explanation and "
                                       "intervention stages skipped");
        }

        if (cfg.explain_enabled && tree_model != nullptr) {
            const ShapModelView view = tree_model->refit.shap_view();
            const ImportanceReport imp = global_importance(view, ds);

            std::ostringstream rank_csv;
            rank_csv << "rank,feature,mean_abs_shap\n";
            for (std::size_t r = 0; r < imp.ranking.size(); ++r) {
                const int j = imp.ranking[r];
                rank_csv << (r + 1) << ',' << feature_names[static_cast<std::size_t>(j)] << ','
                         << pipeline_detail::num(imp.aggregate[static_cast<std::size_t>(j)]) << '\n';
            }
            pipeline_detail::emit(report, out_dir, "importance.csv", rank_csv.str());

            std::ostringstream top_csv;
            top_csv << "feature,count,share_pct\n";
            std::vector<int> order = imp.ranking;
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                return imp.top_share[static_cast<std::size_t>(a)] >
                       imp.top_share[static_cast<std::size_t>(b)];
            });
            for (int j : order) {
                const double share = imp.top_share[static_cast<std::size_t>(j)];
                const long long count = std::llround(share * ds.n_rows());
                top_csv << feature_names[static_cast<std::size_t>(j)] << ',' << count << ','
                        << pipeline_detail::num(share * 100.0) << '\n';
            }
            pipeline_detail::emit(report, out_dir, "top_features.csv", top_csv.str());

            {
                json ji;
                ji["model"] = tree_model->family;
                ji["features"] = feature_names;
                ji["aggregate_mean_abs_shap"] = imp.aggregate;
                ji["mean_abs_shap_per_class"] = imp.mean_abs_phi;
                json ranking = json::array();
                for (int j : imp.ranking) ranking.push_back(feature_names[static_cast<std::size_t>(j)]);
                ji["ranking"] = ranking;
                json per_class = json::array();
                for (const auto& rc : imp.ranking_per_class) {
                    json names = json::array();
                    for (int j : rc) names.push_back(feature_names[static_cast<std::size_t>(j)]);
                    per_class.push_back(names);
                }
                ji["ranking_per_class"] = per_class;
                ji["top_share"] = imp.top_share;
                pipeline_detail::emit(report, out_dir, "importance.json", ji.dump(2) + "\n");
            }

            std::ostringstream expl_csv;
            expl_csv << "row_id,class,feature,phi,base\n";
            for (int i = 0; i < ds.n_rows(); ++i) {
                const ShapExplanation expl = treeshap(view, ds.row(i));
                for (int c = 0; c < k_classes; ++c)
                    for (int j = 0; j < ds.n_features(); ++j)
                        expl_csv << i << ',' << (c + 1) << ',' << feature_names[static_cast<std::size_t>(j)]
                                 << ','
                                 << pipeline_detail::num(
                                        expl.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)])
                                 << ','
                                 << pipeline_detail::num(expl.base_value[static_cast<std::size_t>(c)])
                                 << '\n';
            }
            pipeline_detail::emit(report, out_dir, "explanations.csv", expl_csv.str());
        }

        if (!cfg.interventions.empty() && tree_model != nullptr) {
            const ClassScorer scorer = tree_model->refit.scorer();
            const ShapModelView view = tree_model->refit.shap_view();
            std::vector<char> used(static_cast<std::size_t>(ds.n_features()), 0);
            for (const auto& ref : view.trees) collect_used_features(*ref.root, used);

            std::ostringstream ate_csv;
            ate_csv << "feature,mode,amount,ate,mean_control,mean_treated,n_stratum,n_changed,note\n";
            for (const auto& spec : cfg.interventions) {
                const std::string mode =
                    spec.mode == InterventionSpec::Mode::Relative ? "relative" : "set";
                ate_csv << spec.feature << ',' << mode << ',' << pipeline_detail::num(spec.amount)
                        << ',';
                const int fidx = ds.schema().require(spec.feature);
                if (!used[static_cast<std::size_t>(fidx)]) {
                    // dummy feature: identically zero effect, reported as NA
                    ate_csv << "NA,NA,NA,0,0,feature is used by no split of the model (zero "
                               "attribution); effect is identically 0\n";
                    continue;
                }
                try {
                    const AteResult res = ate(scorer, ds, spec);
                    ate_csv << pipeline_detail::num(res.ate) << ','
                            << pipeline_detail::num(res.mean_control) << ','
                            << pipeline_detail::num(res.mean_treated) << ','
                            << res.stratum_indices.size() << ',' << res.n_changed << ",\n";
                } catch (const EmptyStratumError&) {
                    ate_csv << "NA,NA,NA,0,0,no rows predicted in the high-prevalence stratum\n";
                    continue;
                }

                const std::vector<int> changed = changed_areas(scorer, ds, spec);
                if (changed.size() >= 2) {
                    std::ostringstream prof;
                    prof << "feature,mean_changed,mean_all,t,p,significant\n";
                    const auto tests = profile_changed(ds, changed);
                    for (std::size_t j = 0; j < tests.size(); ++j) {
                        double mean_changed = 0.0;
                        for (int i : changed) mean_changed += ds.at(i, static_cast<int>(j));
                        mean_changed /= static_cast<double>(changed.size());
                        double mean_all = 0.0;
                        for (int i = 0; i < ds.n_rows(); ++i) mean_all += ds.at(i, static_cast<int>(j));
                        mean_all /= static_cast<double>(ds.n_rows());
                        prof << tests[j].feature << ',' << pipeline_detail::num(mean_changed) << ','
                             << pipeline_detail::num(mean_all) << ',' << pipeline_detail::num(tests[j].t)
                             << ',' << pipeline_detail::num(tests[j].p) << ','
                             << (tests[j].significant ? 1 : 0) << '\n';
                    }
                    pipeline_detail::emit(report, out_dir,
                                          "changed_profile_" + sanitize_filename(spec.feature) + ".csv",
                                          prof.str());
                } else {
                    report.notes.push_back("intervention on " + spec.feature + ": only " +
                                           std::to_string(changed.size()) +
                                           " changed rows; profile skipped");
                }
            }
            pipeline_detail::emit(report, out_dir, "ate.csv", ate_csv.str());
        }

        // ---- manifest ----
        {
            json jm;
            jm["config_hash"] = config_hash(cfg);
            jm["seed"] = cfg.seed;
            jm["versions"] = {{"tabml", kVersion},
                              {"model_format", kModelFormatVersion},
                              {"config_format", kConfigFormatVersion}};
            jm["winner"] = {{"family", report.winner_family},
                            {"params", report.winner_params},
                            {"cv_macro_f1", report.winner_cv}};
            json families = json::array();
            for (const auto& f : report.families) {
                json jf{{"family", f.family}, {"usable", f.usable}};
                if (f.usable) {
                    jf["params"] = f.best_params;
                    jf["cv_macro_f1"] = f.cv_macro_f1;
                    jf["test_macro_f1"] = f.test_scores.macro_f1_standard;
                }
                families.push_back(std::move(jf));
            }
            jm["families"] = families;
            jm["explain_model"] = tree_model != nullptr ? json(tree_model->family) : json();
            jm["notes"] = report.notes;
            jm["files"] = report.files;
            pipeline_detail::emit(report, out_dir, "manifest.json", jm.dump(2) + "\n");
        }
        return report;
    } catch (const std::exception& e) {
        std::error_code ec;
        std::ofstream marker(out_dir / "FAILED.txt", std::ios::binary);
        if (marker) marker << e.what() << '\n';
        throw;
    }
}

// Hand-checkable fixtures consumed by the test suites; regeneration is
// byte-idempotent.
inline void write_fixture_bundle(const std::string& dir) {
    const fs::path out(dir);
    fs::create_directories(out);

    write_text_atomic(out / "xor.csv", "x1,x2,label\n0,0,1\n0,1,2\n1,0,2\n1,1,1\n");

    {
        // two-class stump ensemble with cover records
        GbtEnsemble stump;
        stump.n_classes = 2;
        stump.n_features = 2;
        stump.base_score = {0.0, 0.0};
        stump.params.learning_rate = 1.0;
        stump.params.n_estimators = 1;
        auto tree = std::make_unique<TreeNode>();
        tree->feature = 0;
        tree->threshold = 0.5;
        tree->cover = 4.0;
        tree->left = std::make_unique<TreeNode>();
        tree->left->value = 1.0;
        tree->left->cover = 3.0;
        tree->right = std::make_unique<TreeNode>();
        tree->right->value = -1.0;
        tree->right->cover = 1.0;
        auto zero = std::make_unique<TreeNode>();
        zero->value = 0.0;
        zero->cover = 4.0;
        std::vector<TreePtr> round;
        round.push_back(std::move(tree));
        round.push_back(std::move(zero));
        stump.rounds.push_back(std::move(round));
        write_text_atomic(out / "stump_gbt.json",
                          model_to_json(stump, {"x1", "x2"}).dump(2) + "\n");
    }

    {
        std::ostringstream csv;
        csv << "GS\n";
        for (int i = 0; i < 100; ++i) csv << pipeline_detail::num(i / 100.0) << '\n';
        write_text_atomic(out / "ate_fixture.csv", csv.str());
    }

    {
        // deterministic scorer: class 3 if GS < 0.2, class 2 if GS < 0.5, else 1
        TreeModel scorer;
        scorer.n_classes = 3;
        scorer.n_features = 1;
        scorer.root = std::make_unique<TreeNode>();
        scorer.root->feature = 0;
        scorer.root->threshold = 0.2;
        scorer.root->cover = 100.0;
        scorer.root->left = std::make_unique<TreeNode>();
        scorer.root->left->class_counts = {0.0, 0.0, 20.0};
        scorer.root->left->cover = 20.0;
        auto right = std::make_unique<TreeNode>();
        right->feature = 0;
        right->threshold = 0.5;
        right->cover = 80.0;
        right->left = std::make_unique<TreeNode>();
        right->left->class_counts = {0.0, 30.0, 0.0};
        right->left->cover = 30.0;
        right->right = std::make_unique<TreeNode>();
        right->right->class_counts = {50.0, 0.0, 0.0};
        right->right->cover = 50.0;
        scorer.root->right = std::move(right);
        write_text_atomic(out / "ate_scorer.json", model_to_json(scorer, {"GS"}).dump(2) + "\n");
    }

    write_text_atomic(out / "ttest_vectors.csv", "a,b\n1,2\n2,3\n3,4\n4,5\n5,6\n");

    {
        json cfg{
            {"seed", 7},
            {"out_dir", "out"},
            {"data",
             {{"synth",
               {{"n", 400},
                {"classes", 3},
                {"dominant_feature", "Age"},
                {"dominant_weight", 3.0},
                {"causal_feature", "GS"},
                {"causal_weight", -2.0},
                {"noise", 0.4}}}}},
            {"cv", {{"folds", 3}}},
            {"models",
             {{"knn", {{"k", {5}}}},
              {"tree", {{"max_depth", {6}}, {"min_samples_leaf", {2}}}},
              {"forest", {{"n_trees", {30}}, {"max_depth", {8}}}},
              {"gbt", {{"n_estimators", {25}}, {"max_depth", {3}}}}}},
        };
        write_text_atomic(out / "sample_config.json", cfg.dump(2) + "\n");
    }
}

}  // namespace tabml
