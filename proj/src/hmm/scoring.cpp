#include "apwatch/hmm/scoring.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace apwatch::hmm {

LikelihoodSeries loglik_series(const GaussianHmm& model, const Observations& obs, SeriesMode mode, int window) {
    const ForwardResult fwd = forward_loglik(model, obs);
    LikelihoodSeries out;
    out.total = fwd.total;
    if (mode == SeriesMode::Incremental) {
        out.values = fwd.per_slot;
        return out;
    }
    if (window < 1) {
        throw ValidationError("hmm.window must be >= 1");
    }
    const Eigen::Index steps = obs.rows();
    out.values.resize(steps);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const Eigen::Index first = std::max<Eigen::Index>(0, t - window + 1);
        out.values[t] = forward_loglik(model, obs.middleRows(first, t - first + 1)).total;
    }
    return out;
}

LikelihoodSeries score_run(const GaussianHmm& model, const features::PcaModel& pca,
                           const features::FeatureSeries& series, SeriesMode mode, int window) {
    if (pca.component_count() != model.dimension()) {
        throw ValidationError("model dimension " + std::to_string(model.dimension()) +
                              " does not match PCA component count " + std::to_string(pca.component_count()));
    }
    if (pca.dimension() != features::kFeatureCount) {
        throw ValidationError("PCA model was not fitted on the 7 slot features");
    }
    return loglik_series(model, pca.project_rows(series.matrix()), mode, window);
}

LikelihoodSeries score_run_raw(const GaussianHmm& model, const features::FeatureSeries& series, SeriesMode mode,
                               int window) {
    if (model.dimension() != features::kFeatureCount) {
        throw ValidationError("model dimension " + std::to_string(model.dimension()) +
                              " does not match the 7 raw features");
    }
    return loglik_series(model, series.matrix(), mode, window);
}

void write_series(std::ostream& out, const Eigen::VectorXd& values) {
    out << kLikelihoodHeader << '\n';
    for (Eigen::Index t = 0; t < values.size(); ++t) {
        out << t << ',' << format_exact(values[t]) << '\n';
    }
}

Eigen::VectorXd read_series(std::istream& in) {
    const auto rows = read_csv(in, kLikelihoodHeader, "likelihood series");
    Eigen::VectorXd values(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (parse_int(rows[i][0], "slot_index") != static_cast<long long>(i)) {
            throw ValidationError("likelihood series: slot_index out of order at row " + std::to_string(i + 1));
        }
        values[static_cast<Eigen::Index>(i)] = parse_double(rows[i][1], "loglik");
    }
    return values;
}

void save_series(const std::string& path, const Eigen::VectorXd& values) {
    std::ostringstream s;
    write_series(s, values);
    write_text_atomic(path, s.str());
}

Eigen::VectorXd load_series(const std::string& path) {
    std::istringstream s(read_text(path));
    return read_series(s);
}

}  // namespace apwatch::hmm
