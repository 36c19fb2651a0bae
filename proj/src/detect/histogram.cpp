#include "apwatch/detect/histogram.hpp"

#include "apwatch/error.hpp"

#include <algorithm>
#include <cmath>

namespace apwatch::detect {

void HistogramThresholdConfig::validate() const {
    if (bin_count != 0 && bin_count < 2) {
        throw ValidationError("detector.bins must be 'auto' or >= 2");
    }
    if (!(mode_fraction > 0 && mode_fraction < 1)) {
        throw ValidationError("detector.mode_fraction must lie in (0, 1)");
    }
}

int resolve_bin_count(const HistogramThresholdConfig& config, std::size_t n) {
    if (config.bin_count > 0) {
        return config.bin_count;
    }
    return std::max(2, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n)))));
}

Histogram build_histogram(const Eigen::VectorXd& values, int bins) {
    Histogram h;
    h.low = values.minCoeff();
    const double high = values.maxCoeff();
    h.width = (high - h.low) / bins;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    h.bin_of.resize(static_cast<std::size_t>(values.size()));
    for (Eigen::Index i = 0; i < values.size(); ++i) {
        int b = 0;
        if (values[i] >= high) {
            b = bins - 1;
        } else {
            // Fraction of the range, so that affine maps of the input land in the same bins.
            const double u = (values[i] - h.low) / (high - h.low);
            b = std::clamp(static_cast<int>(std::floor(u * bins)), 0, bins - 1);
        }
        h.bin_of[static_cast<std::size_t>(i)] = b;
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

int mode_bin(const Histogram& hist, const Eigen::VectorXd& values) {
    std::vector<double> sorted(values.data(), values.data() + values.size());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median = n % 2 == 1 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    // Median position on the bin scale; comparing there keeps ties scale-free.
    const double range = sorted.back() - sorted.front();
    const int bins = static_cast<int>(hist.counts.size());
    const double median_pos = (median - sorted.front()) / range * bins;

    const int top = *std::max_element(hist.counts.begin(), hist.counts.end());
    int best = -1;
    double best_distance = 0;
    for (int b = 0; b < bins; ++b) {
        if (hist.counts[static_cast<std::size_t>(b)] != top) {
            continue;
        }
        const double distance = std::fabs(b + 0.5 - median_pos);
        if (best < 0 || distance < best_distance) {
            best = b;
            best_distance = distance;
        }
    }
    return best;
}

std::vector<int> histogram_threshold(const Eigen::VectorXd& values, const HistogramThresholdConfig& config) {
    config.validate();
    if (values.size() < 4) {
        throw ValidationError("histogram threshold needs at least 4 values, got " + std::to_string(values.size()));
    }
    if (!values.allFinite()) {
        throw ValidationError("histogram threshold input contains non-finite values");
    }
    if (values.minCoeff() == values.maxCoeff()) {
        return {};
    }
    const int bins = resolve_bin_count(config, static_cast<std::size_t>(values.size()));
    const Histogram hist = build_histogram(values, bins);
    const int mode = mode_bin(hist, values);
    const double cut = config.mode_fraction * hist.counts[static_cast<std::size_t>(mode)];

    std::vector<bool> anomalous(static_cast<std::size_t>(bins), false);
    auto walk = [&](int step) {
        for (int b = mode + step; b >= 0 && b < bins; b += step) {
            if (hist.counts[static_cast<std::size_t>(b)] < cut) {
                for (int r = b; r >= 0 && r < bins; r += step) {
                    anomalous[static_cast<std::size_t>(r)] = true;
                }
                return;
            }
        }
    };
    walk(-1);
    if (config.tails == Tails::Both) {
        walk(+1);
    }

    std::vector<int> out;
    for (std::size_t i = 0; i < hist.bin_of.size(); ++i) {
        if (anomalous[static_cast<std::size_t>(hist.bin_of[i])]) {
            out.push_back(static_cast<int>(i));
        }
    }
    return out;
}

Tails parse_tails(const std::string& text) {
    if (text == "low") {
        return Tails::Low;
    }
    if (text == "both") {
        return Tails::Both;
    }
    throw ValidationError("tails must be 'low' or 'both', got '" + text + "'");
}

std::string to_string(Tails tails) {
    return tails == Tails::Low ? "low" : "both";
}

}  // namespace apwatch::detect
