#pragma once

#include "apwatch/sim/scenario.hpp"

#include <cstdint>
#include <vector>

namespace apwatch::sim {

/// Half-open interval in integer milliseconds.
struct Interval {
    std::int64_t begin_ms = 0;
    std::int64_t end_ms = 0;
    bool contains(std::int64_t t) const { return t >= begin_ms && t < end_ms; }
    friend bool operator==(const Interval&, const Interval&) = default;
};

std::int64_t to_ms(double seconds);

/// Halt episodes inside the window: `halt_period_s` down, `halt_gap_s` up,
/// repeated while the episode start lies in the window. A zero gap gives a
/// single episode.
std::vector<Interval> halt_intervals(const AnomalySpec& spec);

/// Burst phases of an overload window: burst first, then sleep, alternating,
/// clipped to the window.
std::vector<Interval> burst_phases(const AnomalySpec& spec);

/// The sub-intervals that count as anomalous for labelling.
std::vector<Interval> active_intervals(const AnomalySpec& spec);

/// Answers the per-time questions the simulator asks about the injected
/// anomaly: is an AP powered, how much churn, how likely a delivery.
class AnomalyTimeline {
public:
    AnomalyTimeline(const ScenarioSpec& spec);

    bool ap_down(int ap, std::int64_t t_ms) const;
    /// First instant >= t at which the AP is powered again.
    std::int64_t ap_up_at(int ap, std::int64_t t_ms) const;

    double churn_multiplier(int ap, std::int64_t t_ms) const;
    double download_probability(int ap, double t_s) const;
    double upload_probability(int ap, double t_s) const;
    bool noise_active() const { return noise_; }

    const std::vector<Interval>& halts() const { return halts_; }
    const std::vector<Interval>& bursts() const { return bursts_; }
    int target_ap() const { return target_ap_; }

private:
    bool noise_hits(int ap, double t_s) const;
    bool in_burst(std::int64_t t_ms) const;

    int target_ap_;
    std::vector<Interval> halts_;
    std::vector<Interval> bursts_;
    bool noise_ = false;
    NoiseScope noise_scope_ = NoiseScope::Field;
    double noise_begin_s_ = 0;
    double noise_end_s_ = 0;
    double p_down_ = 1;
    double p_up_ = 1;
    double noise_churn_ = 1;
    double overload_churn_ = 1;
};

/// One label per slot: true iff the slot overlaps the anomaly's active
/// sub-intervals. Flash crowds label only the slot holding the crowd instant.
std::vector<bool> ground_truth(const ScenarioSpec& spec);

}  // namespace apwatch::sim
