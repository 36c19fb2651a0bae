#pragma once

#include <optional>
#include <string>
#include <vector>

namespace apwatch::eval {

struct Confusion {
    int true_positive = 0;
    int false_positive = 0;
    int false_negative = 0;
    int true_negative = 0;
};

Confusion confusion(const std::vector<int>& detected, const std::vector<bool>& truth);

/// 1.0 when nothing is flagged.
double precision(const Confusion& c);
/// Empty when the truth set is empty.
std::optional<double> recall(const Confusion& c);

/// Nearest-rank quantile: the ceil(p * n)-th smallest value (1-based, at least 1).
double nearest_rank(std::vector<double> values, double p);

struct Quantiles {
    double min = 0;
    double q1 = 0;
    double median = 0;
    double q3 = 0;
    double max = 0;
    std::size_t count = 0;
};

/// Empty when `values` is empty.
std::optional<Quantiles> summarize(const std::vector<double>& values);

}  // namespace apwatch::eval
