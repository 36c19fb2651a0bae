#include "apwatch/hmm/training.hpp"

#include "apwatch/error.hpp"
#include "apwatch/rng.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>

namespace apwatch::hmm {

void TrainConfig::validate() const {
    if (max_iterations < 1) {
        throw ValidationError("hmm.max_iterations must be >= 1");
    }
    if (!(tolerance > 0)) {
        throw ValidationError("hmm.tolerance must be > 0");
    }
    if (restarts < 1) {
        throw ValidationError("hmm.restarts must be >= 1");
    }
    if (!(variance_floor_fraction > 0)) {
        throw ValidationError("variance floor fraction must be > 0");
    }
}

std::string TrainConfig::fingerprint() const {
    std::ostringstream s;
    s << "max_iterations=" << max_iterations << ";tolerance=" << tolerance << ";restarts=" << restarts
      << ";seed=" << seed << ";covariance=" << (covariance == CovarianceMode::Diagonal ? "diagonal" : "full")
      << ";floor=" << variance_floor_fraction;
    return s.str();
}

namespace {

Eigen::MatrixXd pool(const std::vector<Observations>& data) {
    Eigen::Index rows = 0;
    const Eigen::Index d = data.empty() ? 0 : data.front().cols();
    for (const auto& s : data) {
        if (s.cols() != d) {
            throw ValidationError("training sequences have different dimensionality");
        }
        rows += s.rows();
    }
    Eigen::MatrixXd all(rows, d);
    Eigen::Index r = 0;
    for (const auto& s : data) {
        all.middleRows(r, s.rows()) = s;
        r += s.rows();
    }
    return all;
}

double log_sum_exp(const Eigen::VectorXd& v) {
    const double m = v.maxCoeff();
    if (m == -std::numeric_limits<double>::infinity()) {
        return m;
    }
    return m + std::log((v.array() - m).exp().sum());
}

Eigen::VectorXd random_simplex(int n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) {
        v[i] = 1.0 - uniform01(rng);  // (0, 1]
    }
    return v / v.sum();
}

/// Clamps covariance to the variance floor. Diagonal: per-dimension clamp.
/// Full: eigenvalues clamped at the smallest floor.
Eigen::MatrixXd apply_floor(const Eigen::MatrixXd& cov, const Eigen::VectorXd& floor, CovarianceMode mode) {
    if (mode == CovarianceMode::Diagonal) {
        Eigen::VectorXd diag = cov.diagonal().cwiseMax(floor);
        return diag.asDiagonal();
    }
    Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
    Eigen::VectorXd values = eig.eigenvalues().cwiseMax(floor.minCoeff());
    Eigen::MatrixXd out = eig.eigenvectors() * values.asDiagonal() * eig.eigenvectors().transpose();
    return 0.5 * (out + out.transpose());
}

struct Statistics {
    double loglik = 0;
    Eigen::VectorXd gamma_first;         // sum over sequences of gamma_1
    Eigen::MatrixXd xi;                  // expected transitions
    Eigen::VectorXd gamma_from;          // sum of gamma_t over t < T
    Eigen::VectorXd gamma_all;           // sum of gamma_t over all t
    std::vector<Eigen::VectorXd> sum_o;  // per state
    std::vector<Eigen::MatrixXd> sum_oo; // per state
};

Statistics expectation(const GaussianHmm& model, const std::vector<Observations>& sequences) {
    const int n = model.states();
    const int d = model.dimension();
    Statistics st;
    st.gamma_first = Eigen::VectorXd::Zero(n);
    st.xi = Eigen::MatrixXd::Zero(n, n);
    st.gamma_from = Eigen::VectorXd::Zero(n);
    st.gamma_all = Eigen::VectorXd::Zero(n);
    st.sum_o.assign(static_cast<std::size_t>(n), Eigen::VectorXd::Zero(d));
    st.sum_oo.assign(static_cast<std::size_t>(n), Eigen::MatrixXd::Zero(d, d));

    const EmissionModel emissions(model);
    const Eigen::MatrixXd log_a = model.transitions.array().log().matrix();
    const Eigen::VectorXd log_pi = model.pi.array().log().matrix();
    for (const auto& obs : sequences) {
        const Eigen::Index steps = obs.rows();
        const Eigen::MatrixXd log_b = emissions.log_densities(obs);

        Eigen::MatrixXd la(steps, n);
        la.row(0) = (log_pi + log_b.row(0).transpose()).transpose();
        for (Eigen::Index t = 1; t < steps; ++t) {
            for (int j = 0; j < n; ++j) {
                la(t, j) = log_sum_exp(la.row(t - 1).transpose() + log_a.col(j)) + log_b(t, j);
            }
        }
        const double ll = log_sum_exp(la.row(steps - 1).transpose());
        if (!std::isfinite(ll)) {
            throw NumericError("baum-welch: sequence log-likelihood is not finite");
        }
        st.loglik += ll;

        Eigen::MatrixXd lb(steps, n);
        lb.row(steps - 1).setZero();
        for (Eigen::Index t = steps - 2; t >= 0; --t) {
            const Eigen::VectorXd next = log_b.row(t + 1).transpose() + lb.row(t + 1).transpose();
            for (int i = 0; i < n; ++i) {
                lb(t, i) = log_sum_exp(log_a.row(i).transpose() + next);
            }
        }
        for (Eigen::Index t = 0; t < steps; ++t) {
            Eigen::VectorXd g = (la.row(t) + lb.row(t)).transpose().array() - ll;
            g = g.array().exp();
            g /= g.sum();
            if (t == 0) {
                st.gamma_first += g;
            }
            if (t + 1 < steps) {
                st.gamma_from += g;
                const Eigen::VectorXd next = log_b.row(t + 1).transpose() + lb.row(t + 1).transpose();
                Eigen::MatrixXd x(n, n);
                for (int i = 0; i < n; ++i) {
                    for (int j = 0; j < n; ++j) {
                        x(i, j) = std::exp(la(t, i) + log_a(i, j) + next[j] - ll);
                    }
                }
                const double total = x.sum();
                if (total > 0) {
                    st.xi += x / total;
                }
            }
            st.gamma_all += g;
            const Eigen::VectorXd o = obs.row(t).transpose();
            for (int i = 0; i < n; ++i) {
                st.sum_o[static_cast<std::size_t>(i)] += g[i] * o;
                st.sum_oo[static_cast<std::size_t>(i)] += g[i] * (o * o.transpose());
            }
        }
    }
    return st;
}

GaussianHmm maximization(const GaussianHmm& model, const Statistics& st, std::size_t sequence_count,
                         CovarianceMode mode) {
    constexpr double kDeadState = 1e-10;
    GaussianHmm next = model;
    const int n = model.states();
    next.pi = st.gamma_first / static_cast<double>(sequence_count);
    next.pi /= next.pi.sum();
    for (int i = 0; i < n; ++i) {
        if (st.gamma_from[i] > kDeadState) {
            Eigen::VectorXd row = st.xi.row(i).transpose() / st.gamma_from[i];
            next.transitions.row(i) = (row / row.sum()).transpose();
        }
        const double w = st.gamma_all[i];
        if (w <= kDeadState) {
            continue;
        }
        const auto s = static_cast<std::size_t>(i);
        Eigen::VectorXd mu = st.sum_o[s] / w;
        Eigen::MatrixXd cov = st.sum_oo[s] / w - mu * mu.transpose();
        next.means[s] = mu;
        next.covariances[s] = apply_floor(cov, model.variance_floor, mode);
    }
    return next;
}

}  // namespace

InitResult init_random(int states, const std::vector<Observations>& data, std::uint64_t seed,
                       double variance_floor_fraction) {
    if (states < 1) {
        throw ValidationError("hmm.states must be >= 1");
    }
    const Eigen::MatrixXd all = pool(data);
    if (all.rows() < 2) {
        throw ValidationError("init_random: need at least 2 observations");
    }
    const Eigen::Index d = all.cols();
    const Eigen::VectorXd mu = all.colwise().mean().transpose();
    const Eigen::VectorXd var = (all.rowwise() - mu.transpose()).colwise().squaredNorm().transpose() /
                                static_cast<double>(all.rows());

    InitResult out;
    auto& m = out.model;
    m.variance_floor.resize(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        if (var[j] > 0) {
            m.variance_floor[j] = variance_floor_fraction * var[j];
        } else {
            m.variance_floor[j] = variance_floor_fraction;
            out.warnings.push_back("dimension " + std::to_string(j) + " has zero variance; variance floor applied");
        }
    }

    Rng rng = make_stream(seed, StreamKind::HmmInit);
    for (int i = 0; i < states; ++i) {
        Eigen::VectorXd mean(d);
        Eigen::VectorXd v(d);
        for (Eigen::Index j = 0; j < d; ++j) {
            const double sigma = std::sqrt(var[j]);
            mean[j] = mu[j] - 3.0 * sigma + 6.0 * sigma * uniform01(rng);
            const double lo = 0.5 * var[j];
            const double hi = 3.0 * var[j];
            v[j] = std::max(m.variance_floor[j], lo + (hi - lo) * uniform01(rng));
        }
        m.means.push_back(mean);
        m.covariances.emplace_back(v.asDiagonal());
    }
    m.pi = random_simplex(states, rng);
    m.transitions.resize(states, states);
    for (int i = 0; i < states; ++i) {
        m.transitions.row(i) = random_simplex(states, rng).transpose();
    }
    return out;
}

InitResult init_random(int states, const Observations& data, std::uint64_t seed, double variance_floor_fraction) {
    return init_random(states, std::vector<Observations>{data}, seed, variance_floor_fraction);
}

TrainResult baum_welch(const GaussianHmm& initial, const std::vector<Observations>& sequences,
                       const TrainConfig& config) {
    config.validate();
    if (sequences.empty()) {
        throw ValidationError("baum_welch: empty training set");
    }
    Eigen::Index total = 0;
    for (const auto& s : sequences) {
        if (s.rows() < 1) {
            throw ValidationError("baum_welch: empty observation sequence");
        }
        if (s.cols() != initial.dimension()) {
            throw ValidationError("baum_welch: sequence dimension does not match model");
        }
        total += s.rows();
    }
    if (total < initial.states()) {
        throw ValidationError("baum_welch: fewer observations than states");
    }

    TrainResult result;
    result.model = initial;
    Statistics st = expectation(result.model, sequences);
    result.trace.push_back(st.loglik);
    for (int iter = 1; iter <= config.max_iterations; ++iter) {
        GaussianHmm candidate = maximization(result.model, st, sequences.size(), config.covariance);
        Statistics next = expectation(candidate, sequences);
        const double prev = result.trace.back();
        const double slack = 1e-8 * std::max(1.0, std::fabs(prev));
        if (next.loglik < prev - slack) {
            throw NumericError("baum_welch: log-likelihood decreased from " + std::to_string(prev) + " to " +
                               std::to_string(next.loglik) + " at iteration " + std::to_string(iter));
        }
        result.model = std::move(candidate);
        st = std::move(next);
        result.trace.push_back(st.loglik);
        result.iterations = iter;
        const double denom = std::fabs(prev) > 0 ? std::fabs(prev) : 1.0;
        if ((st.loglik - prev) / denom < config.tolerance) {
            result.converged = true;
            break;
        }
    }
    result.restart_loglik = {result.trace.back()};
    return result;
}

TrainResult train(int states, const std::vector<Observations>& sequences, const TrainConfig& config) {
    config.validate();
    if (sequences.empty()) {
        throw ValidationError("train: empty training set");
    }
    TrainResult best;
    std::vector<double> finals;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < config.restarts; ++r) {
        Rng derive = make_stream(config.seed, StreamKind::HmmInit, 1000 + static_cast<std::uint64_t>(r));
        auto init = init_random(states, sequences, derive(), config.variance_floor_fraction);
        init.model.training_fingerprint = config.fingerprint();
        TrainResult run = baum_welch(init.model, sequences, config);
        finals.push_back(run.trace.back());
        if (r == 0 || run.trace.back() > best_ll) {
            best_ll = run.trace.back();
            best = std::move(run);
            best.best_restart = r;
        }
    }
    best.restart_loglik = finals;
    return best;
}

}  // namespace apwatch::hmm
