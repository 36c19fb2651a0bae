#include "apwatch/config.hpp"
#include "apwatch/detect/detector.hpp"
#include "apwatch/error.hpp"
#include "apwatch/eval/experiment.hpp"
#include "apwatch/eval/report.hpp"
#include "apwatch/features/featurizer.hpp"
#include "apwatch/features/pca.hpp"
#include "apwatch/hmm/gaussian_hmm.hpp"
#include "apwatch/hmm/scoring.hpp"
#include "apwatch/hmm/training.hpp"
#include "apwatch/io.hpp"
#include "apwatch/sim/anomaly.hpp"
#include "apwatch/sim/scenario.hpp"
#include "apwatch/sim/session_io.hpp"
#include "apwatch/sim/simulator.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

using namespace apwatch;

namespace {

constexpr const char* kConfigHelp = R"(
Config files hold one `key = value` per line; `#` starts a comment. Unknown
keys are rejected. Precedence: --set > --config file > built-in defaults.
Run `apwatch config` to print every key with its default.)";

constexpr const char* kSessionFormat = R"(
sessions file (CSV, header row):
  ap_id,station_id,start_s,end_s,input_octets,output_octets,input_packets,output_packets
  times in seconds with 3 decimals; one row per association session.)";

constexpr const char* kFeatureFormat = R"(
features file (CSV, header row):
  slot_index,user_count,session_count,connection_duration,input_octets,output_octets,input_packets,output_packets
  one row per slot, gap-free from slot 0.)";

constexpr const char* kSeriesFormat = R"(
likelihood file (CSV, header row):
  slot_index,loglik
  per-slot predictive log-likelihood in nats, 17 significant digits.)";

constexpr const char* kModelFormat = R"(
model files are JSON: format "apwatch-hmm-v1" (n, D, pi, A row-major, means,
covariances row-major, variance floor, training fingerprint) and
"apwatch-pca-v1" (mean, scale, components row-major, explained variance ratios).)";

constexpr const char* kDetectionFormat = R"(
detections file is JSON, format "apwatch-detections-v1": method, slot_count,
config {bins, mode_fraction, tails}, anomalous_slots, per_series {name: slots}.)";

constexpr const char* kTreeFormat = R"(
output tree:
  <out>/manifest.json                   effective config, notes, every file with FNV-1a hashes
  <out>/comparison.csv                  family,metric,ordering,raw,pca,hmm (medians)
  <out>/models/ap<N>_{pca,hmm}.json      models fitted on the normal corpus; ap<N>_trace.csv
  <out>/<family>/summary.csv            seed,method,precision,recall,true_positive,false_positive,false_negative,flagged
  <out>/<family>/boxplot.csv            method,metric,stat,value (stat: min,q1,median,q3,max)
  <out>/<family>/boxplot.svg
  <out>/<family>/<seed>/sessions.csv, features.csv, likelihood.csv, detections.json,
                        series_plot.csv (kind,slot_index,value; kind: series|marker|truth), likelihood.svg
summary and boxplot files start with one `#` line stating the metric conventions:
precision = 1 when nothing is flagged, recall = NA with no anomalous slot,
nearest-rank quantiles.)";

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;

    FlatConfig load() const {
        FlatConfig cfg = config_path.empty() ? FlatConfig::defaults() : FlatConfig::load(config_path);
        for (const auto& o : overrides) {
            cfg.apply_override(o);
        }
        return cfg;
    }

    /// File config without command-line overrides; eval applies overrides after family settings.
    FlatConfig load_base() const {
        return config_path.empty() ? FlatConfig::defaults() : FlatConfig::load(config_path);
    }
};

void add_common(CLI::App* app, Common& common) {
    app->add_option("--config", common.config_path, "flat key = value config file")->check(CLI::ExistingFile);
    app->add_option("--set", common.overrides, "override a config key (key=value), repeatable");
}

hmm::TrainConfig train_config_from(const FlatConfig& cfg) {
    hmm::TrainConfig tc;
    tc.max_iterations = static_cast<int>(cfg.get_int("hmm.max_iterations"));
    tc.tolerance = cfg.get_double("hmm.tolerance");
    tc.restarts = static_cast<int>(cfg.get_int("hmm.restarts"));
    tc.seed = cfg.get_uint("hmm.seed");
    const auto& cov = cfg.get("hmm.covariance");
    if (cov != "diagonal" && cov != "full") {
        throw ValidationError("hmm.covariance must be 'diagonal' or 'full', got '" + cov + "'");
    }
    tc.covariance = cov == "full" ? hmm::CovarianceMode::Full : hmm::CovarianceMode::Diagonal;
    tc.validate();
    return tc;
}

hmm::SeriesMode series_mode_from(const FlatConfig& cfg) {
    const auto& v = cfg.get("hmm.series");
    if (v == "incremental") {
        return hmm::SeriesMode::Incremental;
    }
    if (v == "window") {
        return hmm::SeriesMode::Window;
    }
    throw ValidationError("hmm.series must be 'incremental' or 'window', got '" + v + "'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"apwatch: 802.11 AP usage simulator and HMM anomaly detector"};
    app.require_subcommand(1);
    app.footer(kConfigHelp);

    // simulate
    Common sim_common;
    std::optional<std::uint64_t> sim_seed;
    std::string sim_out;
    std::string sim_truth;
    auto* simulate = app.add_subcommand("simulate", "simulate one scenario and write its session log");
    add_common(simulate, sim_common);
    simulate->add_option("--seed", sim_seed, "overrides run.seed");
    simulate->add_option("--out", sim_out, "sessions CSV to write")->required();
    simulate->add_option("--truth", sim_truth, "optional CSV of per-slot ground-truth labels (slot_index,anomalous)");
    simulate->footer(std::string(kConfigHelp) + kSessionFormat);

    // featurize
    std::string feat_sessions;
    int feat_ap = 0;
    double feat_slot = 15;
    double feat_duration = 600;
    std::string feat_out;
    auto* featurize = app.add_subcommand("featurize", "turn a session log into per-slot features for one AP");
    featurize->add_option("--sessions", feat_sessions, "sessions CSV")->required()->check(CLI::ExistingFile);
    featurize->add_option("--ap", feat_ap, "AP index")->capture_default_str();
    featurize->add_option("--slot", feat_slot, "slot length in seconds")->capture_default_str();
    featurize->add_option("--duration", feat_duration, "run duration in seconds")->capture_default_str();
    featurize->add_option("--out", feat_out, "features CSV to write")->required();
    featurize->footer(std::string(kSessionFormat) + kFeatureFormat);

    // train
    Common train_common;
    std::vector<std::string> train_features;
    std::optional<int> train_states;
    std::optional<int> train_restarts;
    std::string train_model_out;
    std::string train_pca_out;
    auto* train = app.add_subcommand("train", "fit PCA and a Gaussian HMM on normal-run feature files");
    add_common(train, train_common);
    train->add_option("--features", train_features, "feature CSVs, one per training run")
        ->required()
        ->check(CLI::ExistingFile);
    train->add_option("--states", train_states, "overrides hmm.states");
    train->add_option("--restarts", train_restarts, "overrides hmm.restarts");
    train->add_option("--out-model", train_model_out, "HMM JSON to write")->required();
    train->add_option("--out-pca", train_pca_out, "PCA JSON to write (default: <out-model>.pca.json)");
    train->footer(std::string(kConfigHelp) + kFeatureFormat + kModelFormat);

    // score
    Common score_common;
    std::string score_model;
    std::string score_pca;
    std::string score_features;
    std::string score_out;
    auto* score = app.add_subcommand("score", "per-slot log-likelihood series of one feature file");
    add_common(score, score_common);
    score->add_option("--model", score_model, "HMM JSON")->required()->check(CLI::ExistingFile);
    score->add_option("--pca", score_pca, "PCA JSON (required when hmm.input = pca)")->check(CLI::ExistingFile);
    score->add_option("--features", score_features, "features CSV")->required()->check(CLI::ExistingFile);
    score->add_option("--out", score_out, "likelihood CSV to write")->required();
    score->footer(std::string(kConfigHelp) + kFeatureFormat + kSeriesFormat + kModelFormat);

    // detect
    Common detect_common;
    std::string det_series;
    std::string det_features;
    std::string det_pca;
    std::string det_method;
    std::string det_bins;
    std::optional<double> det_fraction;
    std::string det_tails;
    std::string det_out;
    auto* detect_cmd = app.add_subcommand("detect", "histogram quarter-of-mode detection");
    add_common(detect_cmd, detect_common);
    auto* series_opt =
        detect_cmd->add_option("--series", det_series, "likelihood CSV (method hmm)")->check(CLI::ExistingFile);
    auto* features_opt =
        detect_cmd->add_option("--features", det_features, "features CSV (method raw or pca)")->check(CLI::ExistingFile);
    series_opt->excludes(features_opt);
    detect_cmd->add_option("--pca", det_pca, "PCA JSON (method pca)")->check(CLI::ExistingFile);
    detect_cmd->add_option("--method", det_method, "hmm | raw | pca (default: hmm with --series, raw with --features)");
    detect_cmd->add_option("--bins", det_bins, "bin count or 'auto' (overrides detector.bins)");
    detect_cmd->add_option("--mode-fraction", det_fraction, "overrides detector.mode_fraction");
    detect_cmd->add_option("--tails", det_tails, "low | both (default per method from the config)");
    detect_cmd->add_option("--out", det_out, "detections JSON to write")->required();
    detect_cmd->footer(std::string(kConfigHelp) + kSeriesFormat + kFeatureFormat + kDetectionFormat);

    // eval
    Common eval_common;
    std::string eval_family;
    std::string eval_seeds;
    std::string eval_out;
    int eval_jobs = 1;
    bool eval_force = false;
    auto* eval_cmd = app.add_subcommand("eval", "run one scenario family over its test seeds");
    add_common(eval_cmd, eval_common);
    eval_cmd->add_option("--family", eval_family, "scenario family")->required();
    eval_cmd->add_option("--seeds", eval_seeds, "test seeds, e.g. 1..10 or 1,4,7 (default eval.test_seeds)");
    eval_cmd->add_option("--out", eval_out, "output directory")->required();
    eval_cmd->add_option("--jobs", eval_jobs, "concurrent runs")->capture_default_str();
    eval_cmd->add_flag("--force", eval_force, "replace a non-empty output directory");
    std::string family_list;
    for (const auto& f : eval::families()) {
        family_list += (family_list.empty() ? "" : ", ") + f.name;
    }
    eval_cmd->footer(std::string(kConfigHelp) + "\n\nfamilies: " + family_list + "\n" + kTreeFormat);

    // repro
    Common repro_common;
    std::string repro_out;
    int repro_jobs = 1;
    bool repro_force = false;
    auto* repro_cmd = app.add_subcommand("repro", "train on the normal corpus and run every scenario family");
    add_common(repro_cmd, repro_common);
    repro_cmd->add_option("--out", repro_out, "output directory")->required();
    repro_cmd->add_option("--jobs", repro_jobs, "concurrent runs")->capture_default_str();
    repro_cmd->add_flag("--force", repro_force, "replace a non-empty output directory");
    repro_cmd->footer(std::string(kConfigHelp) + "\n\nfamilies: " + family_list + "\n" + kTreeFormat);

    // config
    Common config_common;
    auto* config_cmd = app.add_subcommand("config", "print the effective configuration");
    add_common(config_cmd, config_common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) {
            FlatConfig cfg = sim_common.load();
            if (sim_seed) {
                cfg.set("run.seed", std::to_string(*sim_seed));
            }
            const auto spec = sim::ScenarioSpec::from_config(cfg);
            sim::save_sessions(sim_out, sim::simulate(spec));
            if (!sim_truth.empty()) {
                std::string text = "slot_index,anomalous\n";
                const auto truth = sim::ground_truth(spec);
                for (std::size_t i = 0; i < truth.size(); ++i) {
                    text += std::to_string(i) + "," + (truth[i] ? "1" : "0") + "\n";
                }
                write_text_atomic(sim_truth, text);
            }
        } else if (featurize->parsed()) {
            const auto events = sim::load_sessions(feat_sessions);
            features::save_features(feat_out, features::featurize(events, feat_ap, feat_slot, feat_duration));
        } else if (train->parsed()) {
            FlatConfig cfg = train_common.load();
            if (train_states) {
                cfg.set("hmm.states", std::to_string(*train_states));
            }
            if (train_restarts) {
                cfg.set("hmm.restarts", std::to_string(*train_restarts));
            }
            std::vector<features::FeatureSeries> runs;
            for (const auto& path : train_features) {
                runs.push_back(features::load_features(path, 0, cfg.get_double("run.slot_s")));
            }
            eval::ApModels models;
            models.pca = features::fit_pca(features::stack(runs), static_cast<int>(cfg.get_int("pca.components")),
                                           cfg.get_bool("pca.standardize"));
            std::vector<hmm::Observations> sequences;
            for (const auto& r : runs) {
                sequences.push_back(eval::hmm_observations(cfg, models, r));
            }
            const auto tc = train_config_from(cfg);
            const int states = static_cast<int>(cfg.get_int("hmm.states"));
            for (const auto& w :
                 hmm::init_random(states, sequences, tc.seed, tc.variance_floor_fraction).warnings) {
                std::cerr << "warning: " << w << '\n';
            }
            auto result = hmm::train(states, sequences, tc);
            result.model.training_fingerprint = tc.fingerprint() + ";config=" + fingerprint_hex(cfg.to_text());
            hmm::save_model(train_model_out, result.model);
            features::save_pca(train_pca_out.empty() ? train_model_out + ".pca.json" : train_pca_out, models.pca);
            std::cout << "trained " << states << "-state model: log-likelihood " << result.trace.back() << " after "
                      << result.iterations << " iterations (restart " << result.best_restart << ")\n";
        } else if (score->parsed()) {
            const FlatConfig cfg = score_common.load();
            const auto model = hmm::load_model(score_model);
            const auto series = features::load_features(score_features, 0, cfg.get_double("run.slot_s"));
            const auto mode = series_mode_from(cfg);
            const int window = static_cast<int>(cfg.get_int("hmm.window"));
            hmm::LikelihoodSeries ls;
            if (cfg.get("hmm.input") == "pca") {
                if (score_pca.empty()) {
                    throw ValidationError("--pca is required when hmm.input = pca");
                }
                ls = hmm::score_run(model, features::load_pca(score_pca), series, mode, window);
            } else {
                ls = hmm::score_run_raw(model, series, mode, window);
            }
            hmm::save_series(score_out, ls.values);
        } else if (detect_cmd->parsed()) {
            FlatConfig cfg = detect_common.load();
            if (!det_bins.empty()) {
                cfg.set("detector.bins", det_bins);
            }
            if (det_fraction) {
                cfg.set("detector.mode_fraction", format_exact(*det_fraction));
            }
            if (det_series.empty() && det_features.empty()) {
                throw ValidationError("one of --series or --features is required");
            }
            const auto method =
                detect::parse_method(det_method.empty() ? (det_series.empty() ? "raw" : "hmm") : det_method);
            if ((method == detect::Method::Hmm) != !det_series.empty()) {
                throw ValidationError("method hmm takes --series; raw and pca take --features");
            }
            detect::HistogramThresholdConfig dc;
            dc.bin_count = cfg.get("detector.bins") == "auto" ? 0 : static_cast<int>(cfg.get_int("detector.bins"));
            dc.mode_fraction = cfg.get_double("detector.mode_fraction");
            dc.tails = detect::parse_tails(
                !det_tails.empty() ? det_tails
                                   : cfg.get(method == detect::Method::Hmm ? "detector.hmm_tails"
                                                                           : "detector.baseline_tails"));
            dc.validate();
            detect::DetectionResult result;
            if (method == detect::Method::Hmm) {
                result = detect::detect_hmm(hmm::load_series(det_series), dc);
            } else {
                const auto series = features::load_features(det_features, 0, cfg.get_double("run.slot_s"));
                if (method == detect::Method::Raw) {
                    result = detect::detect_raw(series, dc);
                } else {
                    if (det_pca.empty()) {
                        throw ValidationError("--pca is required for method pca");
                    }
                    result = detect::detect_pca(series, features::load_pca(det_pca), dc);
                }
            }
            detect::save_detection(det_out, result);
        } else if (eval_cmd->parsed()) {
            eval::ReproOptions options;
            options.out_dir = eval_out;
            options.jobs = eval_jobs;
            options.force = eval_force;
            const std::vector<std::uint64_t> seeds = eval_seeds.empty() ? std::vector<std::uint64_t>{}
                                                                       : parse_seed_list(eval_seeds);
            const auto result =
                eval::eval_family(eval_common.load_base(), eval_common.overrides, eval_family, seeds, options);
            for (const auto& o : result.comparison.orderings) {
                std::cout << o.family << ' ' << o.metric << ": " << o.ordering << '\n';
            }
        } else if (repro_cmd->parsed()) {
            eval::ReproOptions options;
            options.out_dir = repro_out;
            options.jobs = repro_jobs;
            options.force = repro_force;
            const auto result = eval::repro(repro_common.load_base(), repro_common.overrides, options);
            for (const auto& o : result.comparison.orderings) {
                std::cout << o.family << ' ' << o.metric << ": " << o.ordering << '\n';
            }
            const auto& c = result.comparison;
            std::cout << "hmm precision >= baselines on every family: "
                      << (c.hmm_precision_not_below_baselines ? "yes" : "no") << '\n'
                      << "hmm strictly ahead on overload and flash crowd: "
                      << (c.hmm_strictly_better_overload_flash ? "yes" : "no") << '\n'
                      << "hmm noise recall non-increasing: " << (c.noise_recall_non_increasing ? "yes" : "no")
                      << '\n';
        } else if (config_cmd->parsed()) {
            std::cout << config_common.load().to_text();
        }
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "i/o error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
