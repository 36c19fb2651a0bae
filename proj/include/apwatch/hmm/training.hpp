#pragma once

#include "apwatch/hmm/gaussian_hmm.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace apwatch::hmm {

enum class CovarianceMode { Diagonal, Full };

struct TrainConfig {
    int max_iterations = 20;
    double tolerance = 1e-6;  // relative log-likelihood improvement
    int restarts = 5;
    std::uint64_t seed = 7;
    CovarianceMode covariance = CovarianceMode::Diagonal;
    double variance_floor_fraction = 1e-6;

    void validate() const;
    std::string fingerprint() const;
};

struct InitResult {
    GaussianHmm model;
    std::vector<std::string> warnings;
};

/// Random initial model: means uniform in mu +/- 3 sigma per dimension,
/// diagonal variances uniform in [sigma^2 / 2, 3 sigma^2], pi and transition
/// rows from renormalized i.i.d. uniforms. Deterministic in `seed`.
InitResult init_random(int states, const std::vector<Observations>& data, std::uint64_t seed,
                       double variance_floor_fraction = 1e-6);
InitResult init_random(int states, const Observations& data, std::uint64_t seed,
                       double variance_floor_fraction = 1e-6);

struct TrainResult {
    GaussianHmm model;
    std::vector<double> trace;  // trace[i]: log-likelihood after i EM updates
    int iterations = 0;
    bool converged = false;
    int best_restart = 0;
    std::vector<double> restart_loglik;
};

/// EM from a given starting point, pooling statistics over all sequences.
/// Throws NumericError if the likelihood ever drops, which would mean a bug.
TrainResult baum_welch(const GaussianHmm& initial, const std::vector<Observations>& sequences,
                       const TrainConfig& config);

/// Best-of-`restarts` training from seed-derived random initialisations.
TrainResult train(int states, const std::vector<Observations>& sequences, const TrainConfig& config);

}  // namespace apwatch::hmm
