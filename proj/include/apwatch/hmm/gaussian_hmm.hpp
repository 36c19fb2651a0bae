#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace apwatch::hmm {

/// T x D observation matrix; row t is o_t.
using Observations = Eigen::MatrixXd;

/// Ergodic HMM with multivariate Gaussian emissions.
struct GaussianHmm {
    Eigen::VectorXd pi;                        // n
    Eigen::MatrixXd transitions;               // n x n, row-stochastic
    std::vector<Eigen::VectorXd> means;        // n of D
    std::vector<Eigen::MatrixXd> covariances;  // n of D x D
    Eigen::VectorXd variance_floor;            // D
    std::string training_fingerprint;

    int states() const { return static_cast<int>(pi.size()); }
    int dimension() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

    /// Checks shapes, stochasticity within 1e-9 and covariance symmetry/PD.
    void validate() const;
};

/// Cholesky factors of every state covariance, computed once per scoring call.
class EmissionModel {
public:
    explicit EmissionModel(const GaussianHmm& model);

    double log_density(int state, const Eigen::Ref<const Eigen::VectorXd>& o) const;
    /// T x n matrix of log b_i(o_t).
    Eigen::MatrixXd log_densities(const Observations& obs) const;

private:
    const GaussianHmm& model_;
    std::vector<Eigen::MatrixXd> lower_;
    std::vector<double> log_norm_;  // -0.5 log|S| - D/2 log 2pi
};

/// log N(o; mu_i, Sigma_i). Throws NumericError naming the state when Sigma_i is not PD.
double emission_logdensity(const GaussianHmm& model, int state, const Eigen::VectorXd& o);

struct ForwardResult {
    double total = 0;           // log P(O | model)
    Eigen::VectorXd per_slot;   // L_t = log P(o_1..o_t) - log P(o_1..o_{t-1})
};

/// Scaled forward recursion. The per-slot values telescope to `total`.
ForwardResult forward_loglik(const GaussianHmm& model, const Observations& obs);

struct ViterbiResult {
    std::vector<int> path;
    double log_probability = 0;  // log P(O, S* | model)
};

/// Most likely state path; ties go to the lower state index.
ViterbiResult viterbi(const GaussianHmm& model, const Observations& obs);

/// Applies a state permutation: new state k is old state perm[k].
GaussianHmm permute_states(const GaussianHmm& model, const std::vector<int>& perm);

std::string model_to_json(const GaussianHmm& model);
GaussianHmm model_from_json(const std::string& text);
void save_model(const std::string& path, const GaussianHmm& model);
GaussianHmm load_model(const std::string& path);

}  // namespace apwatch::hmm
