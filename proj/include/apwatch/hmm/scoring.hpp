#pragma once

#include "apwatch/features/featurizer.hpp"
#include "apwatch/features/pca.hpp"
#include "apwatch/hmm/gaussian_hmm.hpp"

#include <iosfwd>
#include <string>

namespace apwatch::hmm {

enum class SeriesMode {
    Incremental,  // predictive log-likelihood per slot
    Window,       // log-likelihood of the trailing window ending at each slot
};

/// Per-slot log-likelihood values in nats.
struct LikelihoodSeries {
    Eigen::VectorXd values;
    double total = 0;
};

LikelihoodSeries loglik_series(const GaussianHmm& model, const Observations& obs,
                               SeriesMode mode = SeriesMode::Incremental, int window = 5);

/// Projects the series through the PCA model and scores it.
LikelihoodSeries score_run(const GaussianHmm& model, const features::PcaModel& pca,
                           const features::FeatureSeries& series, SeriesMode mode = SeriesMode::Incremental,
                           int window = 5);

/// Scores raw 7-feature observations (no PCA).
LikelihoodSeries score_run_raw(const GaussianHmm& model, const features::FeatureSeries& series,
                               SeriesMode mode = SeriesMode::Incremental, int window = 5);

inline constexpr const char* kLikelihoodHeader = "slot_index,loglik";
void write_series(std::ostream& out, const Eigen::VectorXd& values);
Eigen::VectorXd read_series(std::istream& in);
void save_series(const std::string& path, const Eigen::VectorXd& values);
Eigen::VectorXd load_series(const std::string& path);

}  // namespace apwatch::hmm
