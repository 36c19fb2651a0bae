#pragma once

#include "apwatch/detect/histogram.hpp"
#include "apwatch/features/featurizer.hpp"
#include "apwatch/features/pca.hpp"

#include <map>
#include <string>
#include <vector>

namespace apwatch::detect {

enum class Method { Hmm, Raw, Pca };

std::string to_string(Method method);
Method parse_method(const std::string& text);

struct DetectionResult {
    Method method = Method::Hmm;
    std::size_t slot_count = 0;
    std::vector<int> anomalous_slots;                   // sorted, unique
    std::map<std::string, std::vector<int>> per_series;  // raw/pca: series name -> slots
    HistogramThresholdConfig config;
};

/// Quarter-of-mode rule on the likelihood series, low tail by default.
DetectionResult detect_hmm(const Eigen::VectorXd& loglik, const HistogramThresholdConfig& config);

/// Rule applied to each of the 7 features independently; the result is the union.
DetectionResult detect_raw(const features::FeatureSeries& series, const HistogramThresholdConfig& config);

/// Rule applied to each projected component independently; the result is the union.
DetectionResult detect_pca(const features::FeatureSeries& series, const features::PcaModel& pca,
                           const HistogramThresholdConfig& config);

/// Union of per-series detections over the columns of a T x k matrix.
DetectionResult detect_columns(const Eigen::MatrixXd& columns, const std::vector<std::string>& names, Method method,
                               const HistogramThresholdConfig& config);

std::string detection_to_json(const DetectionResult& result);
DetectionResult detection_from_json(const std::string& text);
void save_detection(const std::string& path, const DetectionResult& result);
DetectionResult load_detection(const std::string& path);

}  // namespace apwatch::detect
