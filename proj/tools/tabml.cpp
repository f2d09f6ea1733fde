// tabml command-line front end: schema-driven tabular classification,
// attribution, and counterfactual intervention over a single JSON config.

#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tabml/config.hpp"
#include "tabml/csv.hpp"
#include "tabml/model_io.hpp"
#include "tabml/pipeline.hpp"
#include "tabml/version.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool impute_mean = false;
};

tabml::RunConfig resolve_config(const CommonArgs& args) {
    tabml::RunConfig cfg;
    if (!args.config_path.empty()) {
        cfg = tabml::load_run_config(args.config_path);
    } else {
        // defaults: urban schema, data section must come from flags/commands
        cfg.schema = tabml::urban_health_schema();
        cfg.canonical = nlohmann::json::object();
    }
    if (args.seed) cfg.seed = *args.seed;
    if (args.out_dir) cfg.out_dir = *args.out_dir;
    if (args.impute_mean) cfg.impute_mean = true;
    return cfg;
}

tabml::Dataset load_dataset_for(const tabml::RunConfig& cfg, const std::string& data_csv) {
    tabml::CsvOptions opts;
    opts.impute_mean = cfg.impute_mean;
    tabml::Dataset ds = tabml::load_csv(data_csv, cfg.schema, opts);
    if (!ds.has_labels() && ds.has_target())
        ds.set_labels(tabml::equal_frequency_bin(ds.target(), cfg.binning_k), cfg.binning_k);
    return ds;
}

void write_eval_outputs(const tabml::Dataset& ds, const tabml::LoadedModel& model,
                        const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    std::vector<int> pred(static_cast<std::size_t>(ds.n_rows()));
    const tabml::ClassScorer scorer = model.scorer();
    for (int i = 0; i < ds.n_rows(); ++i)
        pred[static_cast<std::size_t>(i)] = scorer.label(ds.row(i));
    const tabml::ConfusionMatrix cm = tabml::confusion(ds.labels(), pred, ds.n_classes());
    const tabml::MacroScores scores = tabml::macro_scores(cm);

    std::ostringstream csv;
    csv << "model,accuracy,macro_precision,macro_recall,macro_f1,macro_f1_halved\n";
    csv << model.type << ',' << tabml::csv_detail::format_double(scores.accuracy) << ','
        << tabml::csv_detail::format_double(scores.macro_precision) << ','
        << tabml::csv_detail::format_double(scores.macro_recall) << ','
        << tabml::csv_detail::format_double(scores.macro_f1_standard) << ','
        << tabml::csv_detail::format_double(scores.macro_f1_halved) << '\n';
    tabml::write_text_atomic(fs::path(out_dir) / "metrics.csv", csv.str());
    tabml::write_text_atomic(fs::path(out_dir) / "confusion.csv",
                             tabml::pipeline_detail::confusion_csv(cm, false));
    tabml::write_text_atomic(fs::path(out_dir) / "confusion_normalized.csv",
                             tabml::pipeline_detail::confusion_csv(cm, true));
    std::cout << "macro-F1 " << scores.macro_f1_standard << ", reports in " << out_dir << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tabml: tabular classification, attribution, and intervention toolkit"};
    app.set_version_flag("--version", std::string(tabml::kVersion));
    app.require_subcommand(1);

    CommonArgs args;
    std::string model_path;
    std::string data_csv;
    std::string fixtures_dir = "fixtures";

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", args.config_path, "JSON run configuration");
        if (config_required) opt->required();
        cmd->add_option("--seed", args.seed, "override the master seed");
        cmd->add_option("--out", args.out_dir, "override the output directory");
        cmd->add_flag("--impute-mean", args.impute_mean,
                      "mean-impute missing feature cells instead of failing");
    };

    CLI::App* run = app.add_subcommand("run", "execute the full pipeline from a config");
    add_common(run, true);

    CLI::App* synth = app.add_subcommand("synth", "generate the config's synthetic dataset");
    add_common(synth, true);

    CLI::App* fixtures = app.add_subcommand("fixtures", "write the hand-checkable fixture bundle");
    fixtures->add_option("--out", fixtures_dir, "fixture directory");

    CLI::App* explain = app.add_subcommand("explain", "attribute a saved model over a dataset");
    add_common(explain, false);
    explain->add_option("--model", model_path, "model JSON")->required();
    explain->add_option("--data", data_csv, "dataset CSV")->required();

    CLI::App* intervene_cmd =
        app.add_subcommand("intervene", "run the config's interventions with a saved model");
    add_common(intervene_cmd, true);
    intervene_cmd->add_option("--model", model_path, "model JSON")->required();
    intervene_cmd->add_option("--data", data_csv, "dataset CSV")->required();

    CLI::App* eval = app.add_subcommand("eval", "score a saved model on a labeled dataset");
    add_common(eval, false);
    eval->add_option("--model", model_path, "model JSON")->required();
    eval->add_option("--data", data_csv, "dataset CSV")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            const tabml::RunConfig cfg = resolve_config(args);
            const tabml::RunReport report = tabml::run_pipeline(cfg);
            std::cout << "winner: " << report.winner_family
                      << " (cv macro-F1 " << report.winner_cv << "), reports in " << report.out_dir
                      << "\n";
            return kExitOk;
        }

        if (synth->parsed()) {
            tabml::RunConfig cfg = resolve_config(args);
            if (!cfg.use_synth)
                throw tabml::ConfigError("synth subcommand needs a config with data.synth");
            namespace fs = std::filesystem;
            fs::create_directories(cfg.out_dir);
            auto [ds, meta] = tabml::synth_generate(cfg.synth, tabml::mix_seed(cfg.seed, 1));
            tabml::write_csv(ds, (fs::path(cfg.out_dir) / "dataset.csv").string());
            nlohmann::json jm{{"dominant_feature", meta.dominant_feature},
                              {"causal_feature", meta.causal_feature},
                              {"causal_direction", meta.causal_direction},
                              {"constant_feature", meta.constant_feature},
                              {"class_counts", meta.class_counts},
                              {"seed", meta.seed}};
            tabml::write_text_atomic(fs::path(cfg.out_dir) / "synth_meta.json", jm.dump(2) + "\n");
            std::cout << "dataset.csv and synth_meta.json written to " << cfg.out_dir << "\n";
            return kExitOk;
        }

        if (fixtures->parsed()) {
            tabml::write_fixture_bundle(fixtures_dir);
            std::cout << "fixture bundle written to " << fixtures_dir << "\n";
            return kExitOk;
        }

        if (explain->parsed()) {
            const tabml::RunConfig cfg = resolve_config(args);
            const tabml::LoadedModel model = tabml::load_model_json(model_path);
            const tabml::Dataset ds = load_dataset_for(cfg, data_csv);
            if (!model.shap_capable())
                throw tabml::ParamError("model type " + model.type + " has no attribution view");

            namespace fs = std::filesystem;
            fs::create_directories(cfg.out_dir);
            const tabml::ShapModelView view = model.shap_view();
            const tabml::ImportanceReport imp = tabml::global_importance(view, ds);
            std::ostringstream rank_csv;
            rank_csv << "rank,feature,mean_abs_shap\n";
            for (std::size_t r = 0; r < imp.ranking.size(); ++r) {
                const int j = imp.ranking[r];
                rank_csv << (r + 1) << ',' << imp.feature_names[static_cast<std::size_t>(j)] << ','
                         << tabml::csv_detail::format_double(
                                imp.aggregate[static_cast<std::size_t>(j)])
                         << '\n';
            }
            tabml::write_text_atomic(fs::path(cfg.out_dir) / "importance.csv", rank_csv.str());

            std::ostringstream expl_csv;
            expl_csv << "row_id,class,feature,phi,base\n";
            for (int i = 0; i < ds.n_rows(); ++i) {
                const tabml::ShapExplanation expl = tabml::treeshap(view, ds.row(i));
                for (int c = 0; c < view.n_classes; ++c)
                    for (int j = 0; j < ds.n_features(); ++j)
                        expl_csv << i << ',' << (c + 1) << ','
                                 << imp.feature_names[static_cast<std::size_t>(j)] << ','
                                 << tabml::csv_detail::format_double(
                                        expl.phi[static_cast<std::size_t>(c)][static_cast<std::size_t>(j)])
                                 << ','
                                 << tabml::csv_detail::format_double(
                                        expl.base_value[static_cast<std::size_t>(c)])
                                 << '\n';
            }
            tabml::write_text_atomic(fs::path(cfg.out_dir) / "explanations.csv", expl_csv.str());
            std::cout << "importance.csv and explanations.csv written to " << cfg.out_dir << "\n";
            return kExitOk;
        }

        if (intervene_cmd->parsed()) {
            const tabml::RunConfig cfg = resolve_config(args);
            const tabml::LoadedModel model = tabml::load_model_json(model_path);
            const tabml::Dataset ds = load_dataset_for(cfg, data_csv);
            if (cfg.interventions.empty())
                throw tabml::ConfigError("config declares no interventions");

            namespace fs = std::filesystem;
            fs::create_directories(cfg.out_dir);
            const tabml::ClassScorer scorer = model.scorer();
            std::vector<char> used(static_cast<std::size_t>(ds.n_features()), 1);
            if (model.shap_capable()) {
                std::fill(used.begin(), used.end(), 0);
                const tabml::ShapModelView view = model.shap_view();
                for (const auto& ref : view.trees) tabml::collect_used_features(*ref.root, used);
            }

            std::ostringstream ate_csv;
            ate_csv << "feature,mode,amount,ate,mean_control,mean_treated,n_stratum,n_changed,note\n";
            for (const auto& spec : cfg.interventions) {
                const std::string mode =
                    spec.mode == tabml::InterventionSpec::Mode::Relative ? "relative" : "set";
                ate_csv << spec.feature << ',' << mode << ','
                        << tabml::csv_detail::format_double(spec.amount) << ',';
                const int fidx = ds.schema().require(spec.feature);
                if (!used[static_cast<std::size_t>(fidx)]) {
                    ate_csv << "NA,NA,NA,0,0,feature is used by no split of the model (zero "
                               "attribution); effect is identically 0\n";
                    continue;
                }
                try {
                    const tabml::AteResult res = tabml::ate(scorer, ds, spec);
                    ate_csv << tabml::csv_detail::format_double(res.ate) << ','
                            << tabml::csv_detail::format_double(res.mean_control) << ','
                            << tabml::csv_detail::format_double(res.mean_treated) << ','
                            << res.stratum_indices.size() << ',' << res.n_changed << ",\n";
                } catch (const tabml::EmptyStratumError&) {
                    ate_csv << "NA,NA,NA,0,0,no rows predicted in the high-prevalence stratum\n";
                }
            }
            tabml::write_text_atomic(fs::path(cfg.out_dir) / "ate.csv", ate_csv.str());
            std::cout << "ate.csv written to " << cfg.out_dir << "\n";
            return kExitOk;
        }

        if (eval->parsed()) {
            const tabml::RunConfig cfg = resolve_config(args);
            const tabml::LoadedModel model = tabml::load_model_json(model_path);
            const tabml::Dataset ds = load_dataset_for(cfg, data_csv);
            if (!ds.has_labels())
                throw tabml::MissingLabelsError("eval needs a labeled (or binnable) dataset");
            write_eval_outputs(ds, model, cfg.out_dir);
            return kExitOk;
        }
    } catch (const tabml::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitConfig;
}
