#pragma once

#include "apwatch/config.hpp"
#include "apwatch/detect/detector.hpp"
#include "apwatch/eval/metrics.hpp"
#include "apwatch/features/featurizer.hpp"
#include "apwatch/features/pca.hpp"
#include "apwatch/hmm/scoring.hpp"
#include "apwatch/hmm/training.hpp"
#include "apwatch/sim/scenario.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace apwatch::eval {

/// A named scenario variant: the anomaly keys it sets on top of the base config.
struct Family {
    std::string name;
    std::vector<std::pair<std::string, std::string>> settings;
};

const std::vector<Family>& families();
const Family& find_family(const std::string& name);

/// base -> family settings -> user overrides, so command-line values win.
FlatConfig family_config(const FlatConfig& base, const std::string& family,
                         const std::vector<std::string>& overrides = {});

/// Models fitted on the normal corpus for one AP (or for all APs pooled).
struct ApModels {
    int ap = -1;  // -1: shared by every AP
    features::PcaModel pca;
    hmm::TrainResult training;
};

struct TrainedModels {
    std::vector<ApModels> models;
    std::vector<std::string> warnings;
    std::string corpus_fingerprint;

    const ApModels& for_ap(int ap) const;
};

/// Simulates the normal runs for every `eval.train_seeds` seed and fits PCA
/// and the HMM per AP (or globally, per `pca.scope` / `hmm.scope`).
/// Anomaly keys in `cfg` are ignored.
TrainedModels train_models(const FlatConfig& cfg);

/// The observation matrix fed to the HMM for one series (PCA scores or raw features).
hmm::Observations hmm_observations(const FlatConfig& cfg, const ApModels& models,
                                   const features::FeatureSeries& series);

inline constexpr std::array<detect::Method, 3> kMethods = {detect::Method::Raw, detect::Method::Pca,
                                                           detect::Method::Hmm};

struct MethodOutcome {
    detect::DetectionResult detection;
    Confusion confusion;
    double precision = 1;
    std::optional<double> recall;
};

/// One (family, seed) run on the anomaly's target AP.
struct CellResult {
    std::string family;
    std::uint64_t seed = 0;
    int ap = 0;
    std::vector<sim::SessionEvent> sessions;
    features::FeatureSeries features;
    Eigen::VectorXd likelihood;
    std::vector<bool> truth;
    std::array<MethodOutcome, 3> outcomes;  // ordered as kMethods

    const MethodOutcome& outcome(detect::Method m) const;
};

CellResult run_cell(const FlatConfig& cfg, const std::string& family, const TrainedModels& models);

struct MethodSummary {
    detect::Method method = detect::Method::Hmm;
    std::vector<double> precision;               // per seed
    std::vector<std::optional<double>> recall;   // per seed
    std::vector<int> true_positives;             // per seed
    std::vector<int> false_positives;
    std::vector<int> false_negatives;
    std::optional<Quantiles> precision_q;
    std::optional<Quantiles> recall_q;           // over seeds with a defined recall
};

struct FamilySummary {
    std::string family;
    std::vector<std::uint64_t> seeds;
    std::size_t slot_count = 0;
    std::array<MethodSummary, 3> methods;  // ordered as kMethods

    const MethodSummary& method(detect::Method m) const;
};

FamilySummary summarize_cells(const std::string& family, const std::vector<CellResult>& cells);

struct ExperimentSpec {
    std::string family;
    FlatConfig base = FlatConfig::defaults();
    std::vector<std::string> overrides;
    std::vector<std::uint64_t> seeds;  // empty: eval.test_seeds

    void validate() const;
};

struct ExperimentResult {
    FamilySummary summary;
    std::vector<CellResult> cells;  // ordered by seed
};

/// Runs every seed of one family against already trained models. Cells run
/// on up to `jobs` threads; results are ordered by seed.
ExperimentResult run_experiment(const ExperimentSpec& spec, const TrainedModels& models, int jobs = 1);

/// Convenience: trains on the normal corpus, then runs the experiment.
ExperimentResult run_experiment(const ExperimentSpec& spec, int jobs = 1);

/// Median orderings per family and metric, plus the directional checks.
struct Ordering {
    std::string family;
    std::string metric;  // precision | recall
    std::string ordering;  // e.g. "hmm > raw = pca"
    std::array<std::optional<double>, 3> medians;  // as kMethods
};

struct ComparisonReport {
    std::vector<Ordering> orderings;
    bool hmm_precision_not_below_baselines = true;    // every family
    bool hmm_strictly_better_overload_flash = true;   // precision and recall
    bool noise_recall_non_increasing = true;
    std::vector<std::string> notes;
};

ComparisonReport compare_methods(const std::vector<FamilySummary>& summaries);

}  // namespace apwatch::eval
