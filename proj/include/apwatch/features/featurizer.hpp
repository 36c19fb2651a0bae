#pragma once

#include "apwatch/sim/scenario.hpp"

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

namespace apwatch::features {

inline constexpr int kFeatureCount = 7;

/// Per-AP, per-slot summary: three density attributes then four usage attributes.
struct FeatureVector {
    double user_count = 0;
    double session_count = 0;
    double connection_duration = 0;
    double input_octets = 0;
    double output_octets = 0;
    double input_packets = 0;
    double output_packets = 0;

    Eigen::VectorXd to_vector() const;
    static FeatureVector from_vector(const Eigen::VectorXd& v);
};

extern const std::array<const char*, kFeatureCount> kFeatureNames;

struct FeatureSeries {
    int ap_id = 0;
    double slot_length_s = 15;
    std::vector<FeatureVector> vectors;  // index = slot number

    std::size_t size() const { return vectors.size(); }
    /// T x 7 matrix, one row per slot.
    Eigen::MatrixXd matrix() const;
};

/// Aggregates one AP's sessions into slots of `slot_length_s`. Counters are
/// prorated by the fraction of the session's lifetime inside the slot.
FeatureSeries featurize(const std::vector<sim::SessionEvent>& events, int ap_id, double slot_length_s,
                        double run_duration_s);

/// Stacks several series into one (sum T) x 7 matrix.
Eigen::MatrixXd stack(const std::vector<FeatureSeries>& series);

void write_features(std::ostream& out, const FeatureSeries& series);
FeatureSeries read_features(std::istream& in, int ap_id, double slot_length_s);
void save_features(const std::string& path, const FeatureSeries& series);
FeatureSeries load_features(const std::string& path, int ap_id = 0, double slot_length_s = 15);

/// Writes k projected components per slot (`slot_index,pc1..pck`).
void write_projection(std::ostream& out, const Eigen::MatrixXd& scores);

}  // namespace apwatch::features
