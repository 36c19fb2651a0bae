#include "apwatch/features/pca.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace apwatch::features {

Eigen::VectorXd PcaModel::standardize(const Eigen::VectorXd& x) const {
    if (x.size() != mean.size()) {
        throw ValidationError("pca: vector has " + std::to_string(x.size()) + " entries, model expects " +
                              std::to_string(mean.size()));
    }
    return (x - mean).cwiseQuotient(scale);
}

Eigen::VectorXd PcaModel::project(const Eigen::VectorXd& x) const { return components * standardize(x); }

Eigen::MatrixXd PcaModel::project_rows(const Eigen::MatrixXd& rows) const {
    if (rows.cols() != mean.size()) {
        throw ValidationError("pca: rows have " + std::to_string(rows.cols()) + " columns, model expects " +
                              std::to_string(mean.size()));
    }
    Eigen::MatrixXd z = (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
    return z * components.transpose();
}

Eigen::VectorXd PcaModel::reconstruct_standardized(const Eigen::VectorXd& scores) const {
    return components.transpose() * scores;
}

PcaModel fit_pca(const Eigen::MatrixXd& rows, int k, bool standardize) {
    const auto n = rows.rows();
    const auto d = rows.cols();
    if (n < 2) {
        throw ValidationError("fit_pca: need at least 2 rows, got " + std::to_string(n));
    }
    if (k < 1 || k > d) {
        throw ValidationError("fit_pca: component count must be in [1, " + std::to_string(d) + "]");
    }
    PcaModel model;
    model.standardized = standardize;
    model.mean = rows.colwise().mean().transpose();
    Eigen::MatrixXd centered = rows.rowwise() - model.mean.transpose();
    model.scale = Eigen::VectorXd::Ones(d);
    if (standardize) {
        for (Eigen::Index j = 0; j < d; ++j) {
            double sd = std::sqrt(centered.col(j).squaredNorm() / static_cast<double>(n - 1));
            if (sd > 0 && std::isfinite(sd)) {
                model.scale[j] = sd;
            }
        }
    }
    Eigen::MatrixXd z = centered.array().rowwise() / model.scale.transpose().array();
    Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) {
        throw NumericError("fit_pca: eigen decomposition failed");
    }
    Eigen::VectorXd eigenvalues = solver.eigenvalues().cwiseMax(0.0);
    const Eigen::MatrixXd& vectors = solver.eigenvectors();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
    for (Eigen::Index i = 0; i < d; ++i) {
        order[static_cast<std::size_t>(i)] = i;
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](Eigen::Index a, Eigen::Index b) { return eigenvalues[a] > eigenvalues[b]; });

    const double total = eigenvalues.sum();
    model.components.resize(k, d);
    model.explained_variance_ratio.resize(k);
    for (int i = 0; i < k; ++i) {
        const Eigen::Index src = order[static_cast<std::size_t>(i)];
        Eigen::VectorXd v = vectors.col(src).normalized();
        Eigen::Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v[arg] < 0) {
            v = -v;
        }
        model.components.row(i) = v.transpose();
        model.explained_variance_ratio[i] = total > 0 ? eigenvalues[src] / total : 0.0;
    }
    return model;
}

namespace {

nlohmann::json vec_json(const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd json_vec(const nlohmann::json& j) {
    auto values = j.get<std::vector<double>>();
    return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

}  // namespace

std::string pca_to_json(const PcaModel& model) {
    nlohmann::json j;
    j["format"] = "apwatch-pca-v1";
    j["dimension"] = model.dimension();
    j["components_count"] = model.component_count();
    j["standardized"] = model.standardized;
    j["mean"] = vec_json(model.mean);
    j["scale"] = vec_json(model.scale);
    std::vector<double> rows;
    for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
        for (Eigen::Index c = 0; c < model.components.cols(); ++c) {
            rows.push_back(model.components(i, c));
        }
    }
    j["components_row_major"] = rows;
    j["explained_variance_ratio"] = vec_json(model.explained_variance_ratio);
    return j.dump(2) + "\n";
}

PcaModel pca_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "apwatch-pca-v1") {
            throw ValidationError("pca model: unsupported format");
        }
        PcaModel m;
        const int d = j.at("dimension").get<int>();
        const int k = j.at("components_count").get<int>();
        m.standardized = j.at("standardized").get<bool>();
        m.mean = json_vec(j.at("mean"));
        m.scale = json_vec(j.at("scale"));
        auto rows = j.at("components_row_major").get<std::vector<double>>();
        m.explained_variance_ratio = json_vec(j.at("explained_variance_ratio"));
        if (m.mean.size() != d || m.scale.size() != d || static_cast<int>(rows.size()) != k * d ||
            m.explained_variance_ratio.size() != k) {
            throw ValidationError("pca model: inconsistent dimensions");
        }
        m.components.resize(k, d);
        for (int i = 0; i < k; ++i) {
            for (int c = 0; c < d; ++c) {
                m.components(i, c) = rows[static_cast<std::size_t>(i * d + c)];
            }
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("pca model: ") + e.what());
    }
}

void save_pca(const std::string& path, const PcaModel& model) { write_text_atomic(path, pca_to_json(model)); }

PcaModel load_pca(const std::string& path) { return pca_from_json(read_text(path)); }

}  // namespace apwatch::features
