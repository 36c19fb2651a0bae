#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace apwatch::detect {

enum class Tails { Low, Both };

struct HistogramThresholdConfig {
    int bin_count = 0;  // 0 = auto, ceil(sqrt(N))
    double mode_fraction = 0.25;
    Tails tails = Tails::Low;

    void validate() const;
};

/// Equal-width histogram over [min, max]; the last bin is closed.
struct Histogram {
    double low = 0;
    double width = 0;
    std::vector<int> counts;
    std::vector<int> bin_of;  // per sample
};

Histogram build_histogram(const Eigen::VectorXd& values, int bins);

int resolve_bin_count(const HistogramThresholdConfig& config, std::size_t n);

/// Highest-count bin; ties go to the bin whose centre is nearest the median
/// value, then to the lower index.
int mode_bin(const Histogram& hist, const Eigen::VectorXd& values);

/// Walks away from the mode bin. The first bin whose count is below
/// mode_fraction * mode count, and every bin beyond it, is anomalous.
/// Returns the sorted indices of samples falling in anomalous bins.
std::vector<int> histogram_threshold(const Eigen::VectorXd& values, const HistogramThresholdConfig& config);

Tails parse_tails(const std::string& text);
std::string to_string(Tails tails);

}  // namespace apwatch::detect
