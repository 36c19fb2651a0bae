#include "apwatch/detect/detector.hpp"

#include "apwatch/error.hpp"
#include "apwatch/io.hpp"

#include <json.hpp>

#include <algorithm>
#include <set>

namespace apwatch::detect {

std::string to_string(Method method) {
    switch (method) {
        case Method::Hmm:
            return "hmm";
        case Method::Raw:
            return "raw";
        case Method::Pca:
            return "pca";
    }
    return "hmm";
}

Method parse_method(const std::string& text) {
    if (text == "hmm") {
        return Method::Hmm;
    }
    if (text == "raw") {
        return Method::Raw;
    }
    if (text == "pca") {
        return Method::Pca;
    }
    throw ValidationError("method must be one of hmm, raw, pca; got '" + text + "'");
}

DetectionResult detect_hmm(const Eigen::VectorXd& loglik, const HistogramThresholdConfig& config) {
    DetectionResult r;
    r.method = Method::Hmm;
    r.slot_count = static_cast<std::size_t>(loglik.size());
    r.config = config;
    r.anomalous_slots = histogram_threshold(loglik, config);
    return r;
}

DetectionResult detect_columns(const Eigen::MatrixXd& columns, const std::vector<std::string>& names, Method method,
                               const HistogramThresholdConfig& config) {
    if (static_cast<std::size_t>(columns.cols()) != names.size()) {
        throw ValidationError("detector: series names do not match column count");
    }
    DetectionResult r;
    r.method = method;
    r.slot_count = static_cast<std::size_t>(columns.rows());
    r.config = config;
    std::set<int> all;
    for (Eigen::Index c = 0; c < columns.cols(); ++c) {
        const Eigen::VectorXd col = columns.col(c);
        auto found = histogram_threshold(col, config);
        all.insert(found.begin(), found.end());
        r.per_series[names[static_cast<std::size_t>(c)]] = std::move(found);
    }
    r.anomalous_slots.assign(all.begin(), all.end());
    return r;
}

DetectionResult detect_raw(const features::FeatureSeries& series, const HistogramThresholdConfig& config) {
    std::vector<std::string> names(features::kFeatureNames.begin(), features::kFeatureNames.end());
    return detect_columns(series.matrix(), names, Method::Raw, config);
}

DetectionResult detect_pca(const features::FeatureSeries& series, const features::PcaModel& pca,
                           const HistogramThresholdConfig& config) {
    if (pca.dimension() != features::kFeatureCount) {
        throw ValidationError("PCA model was not fitted on the 7 slot features");
    }
    const Eigen::MatrixXd scores = pca.project_rows(series.matrix());
    std::vector<std::string> names;
    for (int k = 0; k < pca.component_count(); ++k) {
        names.push_back("pc" + std::to_string(k + 1));
    }
    return detect_columns(scores, names, Method::Pca, config);
}

std::string detection_to_json(const DetectionResult& result) {
    nlohmann::ordered_json j;
    j["format"] = "apwatch-detections-v1";
    j["method"] = to_string(result.method);
    j["slot_count"] = result.slot_count;
    j["config"] = {{"bins", result.config.bin_count == 0 ? nlohmann::ordered_json("auto")
                                                           : nlohmann::ordered_json(result.config.bin_count)},
                   {"mode_fraction", result.config.mode_fraction},
                   {"tails", to_string(result.config.tails)}};
    j["anomalous_slots"] = result.anomalous_slots;
    nlohmann::ordered_json detail = nlohmann::ordered_json::object();
    for (const auto& [name, slots] : result.per_series) {
        detail[name] = slots;
    }
    j["per_series"] = detail;
    return j.dump(2) + "\n";
}

DetectionResult detection_from_json(const std::string& text) {
    DetectionResult r;
    try {
        const auto j = nlohmann::json::parse(text);
        if (j.at("format") != "apwatch-detections-v1") {
            throw ValidationError("detections: unknown format");
        }
        r.method = parse_method(j.at("method").get<std::string>());
        r.slot_count = j.at("slot_count").get<std::size_t>();
        const auto& c = j.at("config");
        r.config.bin_count = c.at("bins").is_string() ? 0 : c.at("bins").get<int>();
        r.config.mode_fraction = c.at("mode_fraction").get<double>();
        r.config.tails = parse_tails(c.at("tails").get<std::string>());
        r.anomalous_slots = j.at("anomalous_slots").get<std::vector<int>>();
        for (const auto& [name, slots] : j.at("per_series").items()) {
            r.per_series[name] = slots.get<std::vector<int>>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("detections: ") + e.what());
    }
    for (int s : r.anomalous_slots) {
        if (s < 0 || static_cast<std::size_t>(s) >= r.slot_count) {
            throw ValidationError("detections: slot index out of range");
        }
    }
    return r;
}

void save_detection(const std::string& path, const DetectionResult& result) {
    write_text_atomic(path, detection_to_json(result));
}

DetectionResult load_detection(const std::string& path) {
    return detection_from_json(read_text(path));
}

}  // namespace apwatch::detect
