#include "apwatch/sim/scenario.hpp"

#include "apwatch/error.hpp"

#include <cmath>
#include <string>

namespace apwatch::sim {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw ValidationError(what);
    }
}

bool is_integer_multiple(double value, double unit) {
    double q = value / unit;
    return std::fabs(q - std::round(q)) < 1e-9;
}

}  // namespace

TopologySpec TopologySpec::standard(int ap_count, int sta_count) {
    TopologySpec t;
    t.ap_count = ap_count;
    t.sta_count = sta_count;
    for (int s = 0; s < sta_count; ++s) {
        int ap = ap_count > 0 ? static_cast<int>(static_cast<long long>(s) * ap_count / sta_count) : 0;
        t.initial_assignment.push_back(ap);
        t.mobility.push_back(ap % 2 == 0 ? MobilityClass::LinearRoaming : MobilityClass::InRoom);
    }
    return t;
}

void TopologySpec::validate() const {
    require(ap_count > 0, "topology.ap_count must be positive");
    require(sta_count >= 0, "topology.sta_count must be non-negative");
    require(static_cast<int>(initial_assignment.size()) == sta_count,
            "topology.assignment: every station must appear exactly once");
    require(static_cast<int>(mobility.size()) == sta_count,
            "topology.mobility: every station needs a mobility class");
    for (int ap : initial_assignment) {
        require(ap >= 0 && ap < ap_count, "topology.assignment: ap id " + std::to_string(ap) + " >= ap_count");
    }
}

std::string StationSelector::to_string() const { return ap < 0 ? "all" : "ap:" + std::to_string(ap); }

StationSelector StationSelector::parse(const std::string& text) {
    if (text == "all") {
        return {};
    }
    if (text.rfind("ap:", 0) == 0) {
        try {
            return {std::stoi(text.substr(3))};
        } catch (const std::logic_error&) {
        }
    }
    throw ValidationError("station selector '" + text + "': expected 'all' or 'ap:<id>'");
}

TrafficPlan TrafficPlan::standard() {
    TrafficPlan plan;
    plan.flows.push_back({FlowDirection::Download, {1}, 600, 150, 10});
    plan.flows.push_back({FlowDirection::Upload, {0}, 500, 100, 10});
    plan.flows.push_back({FlowDirection::Bidirectional, {}, 200, 50, 5});
    return plan;
}

void TrafficPlan::validate() const {
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto& f = flows[i];
        std::string key = "traffic.flow." + std::to_string(i);
        require(f.mean_bytes_per_message > 0, key + ".mean_bytes must be > 0");
        require(f.sd_bytes_per_message >= 0, key + ".sd_bytes must be >= 0");
        require(f.messages_per_second > 0, key + ".rate must be > 0");
    }
}

void MobilityParams::validate() const {
    auto prob = [](double p) { return p >= 0 && p <= 1; };
    require(prob(roam_handover_p), "mobility.roam_handover_p must be in [0, 1]");
    require(prob(roam_blind_p), "mobility.roam_blind_p must be in [0, 1]");
    require(prob(inroom_reassoc_p), "mobility.inroom_reassoc_p must be in [0, 1]");
    require(roam_reconnect_mean_s > 0, "mobility.roam_reconnect_mean_s must be > 0");
    require(inroom_reconnect_mean_s > 0, "mobility.inroom_reconnect_mean_s must be > 0");
}

double NoiseModel::delivery_probability(double noise_dbm) const {
    if (noise_dbm <= -110.0) {
        return 1.0;
    }
    double frac = std::min(1.0, (noise_dbm + 110.0) / 20.0);
    return 1.0 - (1.0 - floor_p) * frac;
}

double NoiseModel::upload_probability(double noise_dbm) const {
    return 0.5 * (1.0 + delivery_probability(noise_dbm));
}

double NoiseModel::churn_multiplier(double noise_dbm) const {
    return 1.0 + churn_gain * (1.0 - delivery_probability(noise_dbm));
}

int ScenarioSpec::slot_count() const { return static_cast<int>(std::lround(run_duration_s / slot_length_s)); }

void ScenarioSpec::validate() const {
    require(slot_length_s > 0, "run.slot_s must be > 0");
    require(run_duration_s > 0, "run.duration_s must be > 0");
    require(is_integer_multiple(run_duration_s, slot_length_s),
            "run.duration_s must be an integer multiple of run.slot_s");
    require(is_integer_multiple(run_duration_s, 0.001) && is_integer_multiple(slot_length_s, 0.001),
            "run.duration_s and run.slot_s must be whole milliseconds");
    topology.validate();
    traffic.validate();
    mobility.validate();
    for (std::size_t i = 0; i < traffic.flows.size(); ++i) {
        int ap = traffic.flows[i].target.ap;
        require(ap < topology.ap_count,
                "traffic.flow." + std::to_string(i) + ".target references ap " + std::to_string(ap) + " >= ap_count");
    }
    require(noise.floor_p >= 0 && noise.floor_p <= 1, "noise.floor_p must be in [0, 1]");
    require(noise.churn_gain >= 0, "noise.churn_gain must be >= 0");
    require(overload.churn_multiplier >= 1, "overload.churn_multiplier must be >= 1");
    require(overload.burst_flow.mean_bytes_per_message > 0 && overload.burst_flow.sd_bytes_per_message >= 0 &&
                overload.burst_flow.messages_per_second > 0,
            "overload burst flow parameters must be positive");

    const auto& a = anomaly;
    if (a.kind == AnomalyKind::None) {
        return;
    }
    require(a.target_ap >= 0 && a.target_ap < topology.ap_count, "anomaly.target_ap must be < topology.ap_count");
    require(a.window_start_s >= 0 && a.window_end_s <= run_duration_s && a.window_start_s < a.window_end_s,
            "anomaly window must satisfy 0 <= window_start_s < window_end_s <= run.duration_s");
    switch (a.kind) {
        case AnomalyKind::ApHalt:
            require(a.halt_period_s > 0, "anomaly.halt_period_s must be > 0");
            require(a.halt_gap_s >= 0, "anomaly.halt_gap_s must be >= 0");
            require(a.window_start_s + a.halt_period_s <= a.window_end_s + 1e-9,
                    "anomaly.halt_period_s must fit inside the anomaly window");
            break;
        case AnomalyKind::Noise:
            require(a.noise_dbm >= -110 && a.noise_dbm <= -90, "anomaly.noise_dbm must be in [-110, -90]");
            break;
        case AnomalyKind::Overload:
            require(a.burst_duration_s > 0, "anomaly.burst_duration_s must be > 0");
            require(a.sleep_duration_s > 0, "anomaly.sleep_duration_s must be > 0");
            break;
        case AnomalyKind::FlashCrowd:
            require(a.node_count >= 1, "anomaly.node_count must be >= 1");
            break;
        case AnomalyKind::None:
            break;
    }
}

const char* to_string(AnomalyKind kind) {
    switch (kind) {
        case AnomalyKind::None: return "none";
        case AnomalyKind::ApHalt: return "ap_halt";
        case AnomalyKind::Noise: return "noise";
        case AnomalyKind::Overload: return "overload";
        case AnomalyKind::FlashCrowd: return "flash_crowd";
    }
    return "?";
}

const char* to_string(FlowDirection dir) {
    switch (dir) {
        case FlowDirection::Download: return "download";
        case FlowDirection::Upload: return "upload";
        case FlowDirection::Bidirectional: return "bidirectional";
    }
    return "?";
}

const char* to_string(MobilityClass cls) {
    return cls == MobilityClass::LinearRoaming ? "linear-roaming" : "in-room";
}

namespace {

AnomalyKind parse_kind(const std::string& s) {
    if (s == "none") return AnomalyKind::None;
    if (s == "ap_halt") return AnomalyKind::ApHalt;
    if (s == "noise") return AnomalyKind::Noise;
    if (s == "overload") return AnomalyKind::Overload;
    if (s == "flash_crowd") return AnomalyKind::FlashCrowd;
    throw ValidationError("anomaly.kind: unknown kind '" + s + "'");
}

FlowDirection parse_direction(const std::string& key, const std::string& s) {
    if (s == "download") return FlowDirection::Download;
    if (s == "upload") return FlowDirection::Upload;
    if (s == "bidirectional") return FlowDirection::Bidirectional;
    throw ValidationError(key + ": unknown direction '" + s + "'");
}

MobilityClass parse_mobility(const std::string& s) {
    if (s == "linear-roaming" || s == "roam") return MobilityClass::LinearRoaming;
    if (s == "in-room" || s == "room") return MobilityClass::InRoom;
    throw ValidationError("topology.mobility: unknown class '" + s + "'");
}

}  // namespace

ScenarioSpec ScenarioSpec::from_config(const FlatConfig& cfg) {
    ScenarioSpec spec;
    spec.run_duration_s = cfg.get_double("run.duration_s");
    spec.slot_length_s = cfg.get_double("run.slot_s");
    spec.seed = cfg.get_uint("run.seed");

    int ap_count = static_cast<int>(cfg.get_int("topology.ap_count"));
    int sta_count = static_cast<int>(cfg.get_int("topology.sta_count"));
    require(ap_count > 0, "topology.ap_count must be positive");
    require(sta_count >= 0, "topology.sta_count must be non-negative");
    spec.topology = TopologySpec::standard(ap_count, sta_count);
    if (cfg.get("topology.assignment") != "auto") {
        spec.topology.initial_assignment.clear();
        for (const auto& item : cfg.get_list("topology.assignment")) {
            try {
                spec.topology.initial_assignment.push_back(std::stoi(item));
            } catch (const std::logic_error&) {
                throw ValidationError("topology.assignment: '" + item + "' is not an ap id");
            }
        }
    }
    if (cfg.get("topology.mobility") != "auto") {
        spec.topology.mobility.clear();
        for (const auto& item : cfg.get_list("topology.mobility")) {
            spec.topology.mobility.push_back(parse_mobility(item));
        }
    }

    spec.mobility.roam_handover_p = cfg.get_double("mobility.roam_handover_p");
    spec.mobility.roam_blind_p = cfg.get_double("mobility.roam_blind_p");
    spec.mobility.roam_reconnect_mean_s = cfg.get_double("mobility.roam_reconnect_mean_s");
    spec.mobility.inroom_reassoc_p = cfg.get_double("mobility.inroom_reassoc_p");
    spec.mobility.inroom_reconnect_mean_s = cfg.get_double("mobility.inroom_reconnect_mean_s");

    auto flow_count = cfg.get_int("traffic.flow_count");
    require(flow_count >= 0, "traffic.flow_count must be >= 0");
    for (const auto& [key, value] : cfg.entries()) {
        if (key.rfind("traffic.flow.", 0) == 0) {
            auto idx = std::stoll(key.substr(13));
            require(idx < flow_count, key + " references a flow beyond traffic.flow_count");
        }
    }
    spec.traffic.flows.clear();
    for (std::int64_t i = 0; i < flow_count; ++i) {
        std::string p = "traffic.flow." + std::to_string(i) + ".";
        FlowSpec f;
        f.direction = parse_direction(p + "direction", cfg.get(p + "direction"));
        f.target = StationSelector::parse(cfg.get(p + "target"));
        f.mean_bytes_per_message = cfg.get_double(p + "mean_bytes");
        f.sd_bytes_per_message = cfg.get_double(p + "sd_bytes");
        f.messages_per_second = cfg.get_double(p + "rate");
        spec.traffic.flows.push_back(f);
    }

    auto& a = spec.anomaly;
    a.kind = parse_kind(cfg.get("anomaly.kind"));
    a.target_ap = static_cast<int>(cfg.get_int("anomaly.target_ap"));
    a.window_start_s = cfg.get_double("anomaly.window_start_s");
    a.window_end_s = cfg.get_double("anomaly.window_end_s");
    a.halt_period_s = cfg.get_double("anomaly.halt_period_s");
    a.halt_gap_s = cfg.get_double("anomaly.halt_gap_s");
    a.noise_dbm = cfg.get_double("anomaly.noise_dbm");
    const auto& scope = cfg.get("anomaly.noise_scope");
    require(scope == "field" || scope == "ap", "anomaly.noise_scope must be 'field' or 'ap'");
    a.noise_scope = scope == "field" ? NoiseScope::Field : NoiseScope::TargetAp;
    a.burst_duration_s = cfg.get_double("anomaly.burst_duration_s");
    a.sleep_duration_s = cfg.get_double("anomaly.sleep_duration_s");
    const auto& dir = cfg.get("anomaly.direction");
    require(dir == "arrival" || dir == "departure", "anomaly.direction must be 'arrival' or 'departure'");
    a.direction = dir == "arrival" ? CrowdDirection::Arrival : CrowdDirection::Departure;
    a.node_count = static_cast<int>(cfg.get_int("anomaly.node_count"));

    spec.noise.floor_p = cfg.get_double("noise.floor_p");
    spec.noise.churn_gain = cfg.get_double("noise.churn_gain");
    spec.overload.burst_flow.mean_bytes_per_message = cfg.get_double("overload.burst_mean_bytes");
    spec.overload.burst_flow.sd_bytes_per_message = cfg.get_double("overload.burst_sd_bytes");
    spec.overload.burst_flow.messages_per_second = cfg.get_double("overload.burst_rate");
    spec.overload.churn_multiplier = cfg.get_double("overload.churn_multiplier");

    spec.validate();
    return spec;
}

}  // namespace apwatch::sim
