#pragma once

#include "apwatch/config.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace apwatch::sim {

enum class MobilityClass { LinearRoaming, InRoom };

struct TopologySpec {
    int ap_count = 2;
    int sta_count = 16;
    std::vector<int> initial_assignment;      // station id -> ap id
    std::vector<MobilityClass> mobility;      // station id -> class

    /// Splits stations evenly across APs in id order. Stations homed on even
    /// APs roam; stations homed on odd APs stay in their room.
    static TopologySpec standard(int ap_count = 2, int sta_count = 16);

    void validate() const;
};

enum class FlowDirection { Download, Upload, Bidirectional };

/// Which stations a flow reaches: every associated station, or only those
/// currently associated to one AP.
struct StationSelector {
    int ap = -1;  // -1 means all
    bool matches(int current_ap) const { return ap < 0 || ap == current_ap; }
    std::string to_string() const;
    static StationSelector parse(const std::string& text);
};

struct FlowSpec {
    FlowDirection direction = FlowDirection::Bidirectional;
    StationSelector target;
    double mean_bytes_per_message = 200;
    double sd_bytes_per_message = 50;
    double messages_per_second = 5;
};

struct TrafficPlan {
    std::vector<FlowSpec> flows;

    /// Video download to AP 1 clients, FTP upload from AP 0 clients, echo for everyone.
    static TrafficPlan standard();

    void validate() const;
};

struct MobilityParams {
    double roam_handover_p = 0.01;
    double roam_blind_p = 0.005;
    double roam_reconnect_mean_s = 5.0;
    double inroom_reassoc_p = 0.002;
    double inroom_reconnect_mean_s = 1.0;

    void validate() const;
};

enum class AnomalyKind { None, ApHalt, Noise, Overload, FlashCrowd };
enum class CrowdDirection { Arrival, Departure };
enum class NoiseScope { Field, TargetAp };

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::None;
    int target_ap = 1;
    double window_start_s = 0;
    double window_end_s = 0;
    // ap_halt
    double halt_period_s = 15;
    double halt_gap_s = 0;  // 0: a single halt at window start
    // noise
    double noise_dbm = -110;
    NoiseScope noise_scope = NoiseScope::Field;
    // overload
    double burst_duration_s = 30;
    double sleep_duration_s = 30;
    // flash crowd
    CrowdDirection direction = CrowdDirection::Arrival;
    int node_count = 7;
};

/// Maps background noise power to the probability that a downlink message
/// is delivered. Linear between (-110 dBm, 1) and (-90 dBm, floor_p).
struct NoiseModel {
    double floor_p = 0.3;
    double churn_gain = 3.0;

    double delivery_probability(double noise_dbm) const;
    /// Uplink suffers less: (1 + p) / 2.
    double upload_probability(double noise_dbm) const;
    double churn_multiplier(double noise_dbm) const;
};

struct OverloadModel {
    FlowSpec burst_flow{FlowDirection::Download, {}, 1200, 200, 50};
    double churn_multiplier = 5.0;
};

struct ScenarioSpec {
    TopologySpec topology = TopologySpec::standard();
    TrafficPlan traffic = TrafficPlan::standard();
    MobilityParams mobility;
    AnomalySpec anomaly;
    NoiseModel noise;
    OverloadModel overload;
    double run_duration_s = 600;
    double slot_length_s = 15;
    std::uint64_t seed = 1;

    int slot_count() const;

    /// Throws ValidationError naming the violated invariant.
    void validate() const;

    static ScenarioSpec from_config(const FlatConfig& cfg);
};

const char* to_string(AnomalyKind kind);
const char* to_string(FlowDirection dir);
const char* to_string(MobilityClass cls);

struct SessionEvent {
    int ap_id = 0;
    int station_id = 0;
    double start_s = 0;
    double end_s = 0;
    std::uint64_t input_octets = 0;   // client -> network
    std::uint64_t output_octets = 0;  // network -> client
    std::uint64_t input_packets = 0;
    std::uint64_t output_packets = 0;

    friend bool operator==(const SessionEvent&, const SessionEvent&) = default;
};

}  // namespace apwatch::sim
