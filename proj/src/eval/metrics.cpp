#include "apwatch/eval/metrics.hpp"

#include "apwatch/error.hpp"

#include <algorithm>
#include <cmath>

namespace apwatch::eval {

Confusion confusion(const std::vector<int>& detected, const std::vector<bool>& truth) {
    std::vector<bool> flagged(truth.size(), false);
    for (int s : detected) {
        if (s < 0 || static_cast<std::size_t>(s) >= truth.size()) {
            throw ValidationError("detected slot " + std::to_string(s) + " outside the run");
        }
        flagged[static_cast<std::size_t>(s)] = true;
    }
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (flagged[i] && truth[i]) {
            ++c.true_positive;
        } else if (flagged[i]) {
            ++c.false_positive;
        } else if (truth[i]) {
            ++c.false_negative;
        } else {
            ++c.true_negative;
        }
    }
    return c;
}

double precision(const Confusion& c) {
    const int flagged = c.true_positive + c.false_positive;
    return flagged == 0 ? 1.0 : static_cast<double>(c.true_positive) / flagged;
}

std::optional<double> recall(const Confusion& c) {
    const int positives = c.true_positive + c.false_negative;
    if (positives == 0) {
        return std::nullopt;
    }
    return static_cast<double>(c.true_positive) / positives;
}

double nearest_rank(std::vector<double> values, double p) {
    if (values.empty()) {
        throw ValidationError("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    auto rank = static_cast<std::size_t>(std::ceil(p * n));
    rank = std::clamp<std::size_t>(rank, 1, values.size());
    return values[rank - 1];
}

std::optional<Quantiles> summarize(const std::vector<double>& values) {
    if (values.empty()) {
        return std::nullopt;
    }
    Quantiles q;
    q.min = nearest_rank(values, 0.0);
    q.q1 = nearest_rank(values, 0.25);
    q.median = nearest_rank(values, 0.5);
    q.q3 = nearest_rank(values, 0.75);
    q.max = nearest_rank(values, 1.0);
    q.count = values.size();
    return q;
}

}  // namespace apwatch::eval
