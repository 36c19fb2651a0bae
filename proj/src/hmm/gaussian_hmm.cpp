#include "apwatch/hmm/gaussian_hmm.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <json.hpp>

#include <cmath>
#include <limits>
#include <numbers>

namespace apwatch::hmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
    const double m = v.maxCoeff();
    if (m == kNegInf) {
        return kNegInf;
    }
    return m + std::log((v.array() - m).exp().sum());
}

void check_dimension(const GaussianHmm& model, const Observations& obs) {
    if (obs.rows() < 1) {
        throw ValidationError("observation sequence must contain at least one observation");
    }
    if (obs.cols() != model.dimension()) {
        throw ValidationError("observation dimension " + std::to_string(obs.cols()) + " does not match model dimension " +
                              std::to_string(model.dimension()));
    }
}

}  // namespace

void GaussianHmm::validate() const {
    const int n = states();
    if (n < 1) {
        throw ValidationError("hmm: at least one state required");
    }
    const int d = dimension();
    if (transitions.rows() != n || transitions.cols() != n || static_cast<int>(means.size()) != n ||
        static_cast<int>(covariances.size()) != n || variance_floor.size() != d) {
        throw ValidationError("hmm: inconsistent parameter shapes");
    }
    if ((pi.array() < 0).any() || std::fabs(pi.sum() - 1.0) > 1e-9) {
        throw ValidationError("hmm: initial distribution is not stochastic");
    }
    for (int i = 0; i < n; ++i) {
        if ((transitions.row(i).array() < 0).any() || std::fabs(transitions.row(i).sum() - 1.0) > 1e-9) {
            throw ValidationError("hmm: transition row " + std::to_string(i) + " is not stochastic");
        }
        const auto& s = covariances[static_cast<std::size_t>(i)];
        if (means[static_cast<std::size_t>(i)].size() != d || s.rows() != d || s.cols() != d) {
            throw ValidationError("hmm: state " + std::to_string(i) + " has wrong emission dimension");
        }
        if (!s.isApprox(s.transpose(), 1e-12)) {
            throw ValidationError("hmm: covariance of state " + std::to_string(i) + " is not symmetric");
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s, Eigen::EigenvaluesOnly);
        if (eig.eigenvalues().minCoeff() <= 0) {
            throw NumericError("hmm: covariance of state " + std::to_string(i) + " is not positive definite");
        }
    }
}

EmissionModel::EmissionModel(const GaussianHmm& model) : model_(model) {
    const int d = model.dimension();
    for (int i = 0; i < model.states(); ++i) {
        Eigen::LLT<Eigen::MatrixXd> llt(model.covariances[static_cast<std::size_t>(i)]);
        if (llt.info() != Eigen::Success) {
            throw NumericError("emission covariance of state " + std::to_string(i) + " is not positive definite");
        }
        Eigen::MatrixXd l = llt.matrixL();
        double log_det = 2.0 * l.diagonal().array().log().sum();
        if (!std::isfinite(log_det)) {
            throw NumericError("emission covariance of state " + std::to_string(i) + " is degenerate");
        }
        lower_.push_back(std::move(l));
        log_norm_.push_back(-0.5 * log_det - 0.5 * d * std::log(2.0 * std::numbers::pi));
    }
}

double EmissionModel::log_density(int state, const Eigen::Ref<const Eigen::VectorXd>& o) const {
    const auto s = static_cast<std::size_t>(state);
    Eigen::VectorXd diff = o - model_.means[s];
    lower_[s].triangularView<Eigen::Lower>().solveInPlace(diff);
    return log_norm_[s] - 0.5 * diff.squaredNorm();
}

Eigen::MatrixXd EmissionModel::log_densities(const Observations& obs) const {
    Eigen::MatrixXd out(obs.rows(), model_.states());
    for (Eigen::Index t = 0; t < obs.rows(); ++t) {
        Eigen::VectorXd o = obs.row(t).transpose();
        for (int i = 0; i < model_.states(); ++i) {
            out(t, i) = log_density(i, o);
        }
    }
    return out;
}

double emission_logdensity(const GaussianHmm& model, int state, const Eigen::VectorXd& o) {
    if (state < 0 || state >= model.states()) {
        throw ValidationError("state index out of range");
    }
    if (o.size() != model.dimension()) {
        throw ValidationError("observation dimension does not match model");
    }
    return EmissionModel(model).log_density(state, o);
}

ForwardResult forward_loglik(const GaussianHmm& model, const Observations& obs) {
    check_dimension(model, obs);
    const Eigen::MatrixXd log_b = EmissionModel(model).log_densities(obs);
    const auto steps = obs.rows();
    const int n = model.states();

    ForwardResult result;
    result.per_slot.resize(steps);
    Eigen::VectorXd alpha(n);
    Eigen::VectorXd terms(n);
    for (Eigen::Index t = 0; t < steps; ++t) {
        Eigen::VectorXd predicted = t == 0 ? Eigen::VectorXd(model.pi)
                                           : Eigen::VectorXd(model.transitions.transpose() * alpha);
        for (int i = 0; i < n; ++i) {
            terms[i] = predicted[i] > 0 ? std::log(predicted[i]) + log_b(t, i) : kNegInf;
        }
        const double step = log_sum_exp(terms);
        if (!std::isfinite(step)) {
            throw NumericError("forward recursion lost all probability mass at slot " + std::to_string(t));
        }
        alpha = (terms.array() - step).exp();
        result.per_slot[t] = step;
    }
    result.total = result.per_slot.sum();
    return result;
}

ViterbiResult viterbi(const GaussianHmm& model, const Observations& obs) {
    check_dimension(model, obs);
    const Eigen::MatrixXd log_b = EmissionModel(model).log_densities(obs);
    const auto steps = obs.rows();
    const int n = model.states();
    auto safe_log = [](double p) { return p > 0 ? std::log(p) : kNegInf; };
    Eigen::MatrixXd log_a = model.transitions.unaryExpr(safe_log);

    Eigen::MatrixXd delta(steps, n);
    Eigen::MatrixXi back(steps, n);
    for (int i = 0; i < n; ++i) {
        delta(0, i) = safe_log(model.pi[i]) + log_b(0, i);
        back(0, i) = 0;
    }
    for (Eigen::Index t = 1; t < steps; ++t) {
        for (int j = 0; j < n; ++j) {
            int best = 0;
            double best_score = delta(t - 1, 0) + log_a(0, j);
            for (int i = 1; i < n; ++i) {
                double score = delta(t - 1, i) + log_a(i, j);
                if (score > best_score) {
                    best_score = score;
                    best = i;
                }
            }
            delta(t, j) = best_score + log_b(t, j);
            back(t, j) = best;
        }
    }
    ViterbiResult result;
    result.path.assign(static_cast<std::size_t>(steps), 0);
    int last = 0;
    for (int i = 1; i < n; ++i) {
        if (delta(steps - 1, i) > delta(steps - 1, last)) {
            last = i;
        }
    }
    result.log_probability = delta(steps - 1, last);
    result.path.back() = last;
    for (Eigen::Index t = steps - 1; t > 0; --t) {
        result.path[static_cast<std::size_t>(t - 1)] = back(t, result.path[static_cast<std::size_t>(t)]);
    }
    return result;
}

GaussianHmm permute_states(const GaussianHmm& model, const std::vector<int>& perm) {
    const int n = model.states();
    if (static_cast<int>(perm.size()) != n) {
        throw ValidationError("permutation size does not match state count");
    }
    GaussianHmm out = model;
    for (int k = 0; k < n; ++k) {
        const auto src = static_cast<std::size_t>(perm[static_cast<std::size_t>(k)]);
        out.pi[k] = model.pi[static_cast<Eigen::Index>(src)];
        out.means[static_cast<std::size_t>(k)] = model.means[src];
        out.covariances[static_cast<std::size_t>(k)] = model.covariances[src];
        for (int l = 0; l < n; ++l) {
            out.transitions(k, l) = model.transitions(static_cast<Eigen::Index>(src), perm[static_cast<std::size_t>(l)]);
        }
    }
    return out;
}

namespace {

std::vector<double> flatten(const Eigen::MatrixXd& m) {
    std::vector<double> out;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            out.push_back(m(r, c));
        }
    }
    return out;
}

Eigen::MatrixXd unflatten(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<Eigen::Index>(v.size()) != rows * cols) {
        throw ValidationError("hmm model: matrix has wrong number of entries");
    }
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
        }
    }
    return m;
}

}  // namespace

std::string model_to_json(const GaussianHmm& model) {
    nlohmann::json j;
    j["format"] = "apwatch-hmm-v1";
    j["states"] = model.states();
    j["dimension"] = model.dimension();
    j["pi"] = std::vector<double>(model.pi.data(), model.pi.data() + model.pi.size());
    j["transitions_row_major"] = flatten(model.transitions);
    auto means = nlohmann::json::array();
    auto covs = nlohmann::json::array();
    for (int i = 0; i < model.states(); ++i) {
        const auto& mu = model.means[static_cast<std::size_t>(i)];
        means.push_back(std::vector<double>(mu.data(), mu.data() + mu.size()));
        covs.push_back(flatten(model.covariances[static_cast<std::size_t>(i)]));
    }
    j["means"] = means;
    j["covariances_row_major"] = covs;
    j["variance_floor"] =
        std::vector<double>(model.variance_floor.data(), model.variance_floor.data() + model.variance_floor.size());
    j["training_fingerprint"] = model.training_fingerprint;
    return j.dump(2) + "\n";
}

GaussianHmm model_from_json(const std::string& text) {
    try {
        auto j = nlohmann::json::parse(text);
        if (j.at("format") != "apwatch-hmm-v1") {
            throw ValidationError("hmm model: unsupported format");
        }
        const int n = j.at("states").get<int>();
        const int d = j.at("dimension").get<int>();
        GaussianHmm m;
        auto pi = j.at("pi").get<std::vector<double>>();
        if (static_cast<int>(pi.size()) != n) {
            throw ValidationError("hmm model: pi has wrong length");
        }
        m.pi = Eigen::Map<Eigen::VectorXd>(pi.data(), n);
        m.transitions = unflatten(j.at("transitions_row_major").get<std::vector<double>>(), n, n);
        for (int i = 0; i < n; ++i) {
            auto mu = j.at("means").at(static_cast<std::size_t>(i)).get<std::vector<double>>();
            if (static_cast<int>(mu.size()) != d) {
                throw ValidationError("hmm model: mean has wrong length");
            }
            m.means.emplace_back(Eigen::Map<Eigen::VectorXd>(mu.data(), d));
            m.covariances.push_back(
                unflatten(j.at("covariances_row_major").at(static_cast<std::size_t>(i)).get<std::vector<double>>(), d, d));
        }
        auto floor = j.at("variance_floor").get<std::vector<double>>();
        m.variance_floor = Eigen::Map<Eigen::VectorXd>(floor.data(), static_cast<Eigen::Index>(floor.size()));
        m.training_fingerprint = j.at("training_fingerprint").get<std::string>();
        m.validate();
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("hmm model: ") + e.what());
    }
}

void save_model(const std::string& path, const GaussianHmm& model) { write_text_atomic(path, model_to_json(model)); }

GaussianHmm load_model(const std::string& path) { return model_from_json(read_text(path)); }

}  // namespace apwatch::hmm
