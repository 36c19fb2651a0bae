#pragma once

#include <Eigen/Dense>

#include <string>

namespace apwatch::features {

struct PcaModel {
    Eigen::VectorXd mean;                      // per feature
    Eigen::VectorXd scale;                     // per-feature standard deviation (1 when not standardizing)
    Eigen::MatrixXd components;                // k x D, orthonormal rows
    Eigen::VectorXd explained_variance_ratio;  // k, non-increasing
    bool standardized = true;

    int dimension() const { return static_cast<int>(mean.size()); }
    int component_count() const { return static_cast<int>(components.rows()); }
    double cumulative_ratio() const { return explained_variance_ratio.sum(); }

    Eigen::VectorXd standardize(const Eigen::VectorXd& x) const;
    /// components * standardized(x)
    Eigen::VectorXd project(const Eigen::VectorXd& x) const;
    /// Row-wise projection of a T x D matrix into T x k scores.
    Eigen::MatrixXd project_rows(const Eigen::MatrixXd& rows) const;
    /// Maps k scores back into standardized feature space.
    Eigen::VectorXd reconstruct_standardized(const Eigen::VectorXd& scores) const;
};

/// Fits PCA on T x D rows. Zero-variance features get scale 1. Components are
/// the top-k eigenvectors of the (standardized) sample covariance, each signed
/// so its largest-magnitude loading is positive.
PcaModel fit_pca(const Eigen::MatrixXd& rows, int k, bool standardize = true);

std::string pca_to_json(const PcaModel& model);
PcaModel pca_from_json(const std::string& text);
void save_pca(const std::string& path, const PcaModel& model);
PcaModel load_pca(const std::string& path);

}  // namespace apwatch::features
