#include "apwatch/sim/anomaly.hpp"

#include <algorithm>
#include <cmath>

namespace apwatch::sim {

std::int64_t to_ms(double seconds) { return std::llround(seconds * 1000.0); }

std::vector<Interval> halt_intervals(const AnomalySpec& spec) {
    std::vector<Interval> out;
    if (spec.kind != AnomalyKind::ApHalt) {
        return out;
    }
    const auto end = to_ms(spec.window_end_s);
    const auto period = to_ms(spec.halt_period_s);
    const auto gap = to_ms(spec.halt_gap_s);
    for (auto start = to_ms(spec.window_start_s); start < end; start += period + gap) {
        out.push_back({start, std::min(start + period, end)});
        if (gap <= 0) {
            break;
        }
    }
    return out;
}

std::vector<Interval> burst_phases(const AnomalySpec& spec) {
    std::vector<Interval> out;
    if (spec.kind != AnomalyKind::Overload) {
        return out;
    }
    const auto end = to_ms(spec.window_end_s);
    const auto burst = to_ms(spec.burst_duration_s);
    const auto cycle = burst + to_ms(spec.sleep_duration_s);
    for (auto start = to_ms(spec.window_start_s); start < end; start += cycle) {
        out.push_back({start, std::min(start + burst, end)});
    }
    return out;
}

std::vector<Interval> active_intervals(const AnomalySpec& spec) {
    switch (spec.kind) {
        case AnomalyKind::None:
            return {};
        case AnomalyKind::ApHalt:
            return halt_intervals(spec);
        case AnomalyKind::Noise:
            return {{to_ms(spec.window_start_s), to_ms(spec.window_end_s)}};
        case AnomalyKind::Overload:
            return burst_phases(spec);
        case AnomalyKind::FlashCrowd: {
            auto t0 = to_ms(spec.window_start_s);
            return {{t0, std::min(t0 + 1000, to_ms(spec.window_end_s))}};
        }
    }
    return {};
}

AnomalyTimeline::AnomalyTimeline(const ScenarioSpec& spec)
    : target_ap_(spec.anomaly.target_ap),
      halts_(halt_intervals(spec.anomaly)),
      bursts_(burst_phases(spec.anomaly)) {
    const auto& a = spec.anomaly;
    if (a.kind == AnomalyKind::Noise) {
        noise_ = true;
        noise_scope_ = a.noise_scope;
        noise_begin_s_ = a.window_start_s;
        noise_end_s_ = a.window_end_s;
        p_down_ = spec.noise.delivery_probability(a.noise_dbm);
        p_up_ = spec.noise.upload_probability(a.noise_dbm);
        noise_churn_ = spec.noise.churn_multiplier(a.noise_dbm);
    }
    if (a.kind == AnomalyKind::Overload) {
        overload_churn_ = spec.overload.churn_multiplier;
    }
}

bool AnomalyTimeline::ap_down(int ap, std::int64_t t_ms) const {
    if (ap != target_ap_) {
        return false;
    }
    return std::any_of(halts_.begin(), halts_.end(), [&](const Interval& h) { return h.contains(t_ms); });
}

std::int64_t AnomalyTimeline::ap_up_at(int ap, std::int64_t t_ms) const {
    auto t = t_ms;
    while (ap_down(ap, t)) {
        for (const auto& h : halts_) {
            if (h.contains(t)) {
                t = h.end_ms;
            }
        }
    }
    return t;
}

bool AnomalyTimeline::noise_hits(int ap, double t_s) const {
    if (!noise_ || t_s < noise_begin_s_ || t_s >= noise_end_s_) {
        return false;
    }
    return noise_scope_ == NoiseScope::Field || ap == target_ap_;
}

bool AnomalyTimeline::in_burst(std::int64_t t_ms) const {
    return std::any_of(bursts_.begin(), bursts_.end(), [&](const Interval& b) { return b.contains(t_ms); });
}

double AnomalyTimeline::churn_multiplier(int ap, std::int64_t t_ms) const {
    double m = 1.0;
    if (ap == target_ap_ && in_burst(t_ms)) {
        m *= overload_churn_;
    }
    if (noise_hits(ap, static_cast<double>(t_ms) / 1000.0)) {
        m *= noise_churn_;
    }
    return m;
}

double AnomalyTimeline::download_probability(int ap, double t_s) const {
    return noise_hits(ap, t_s) ? p_down_ : 1.0;
}

double AnomalyTimeline::upload_probability(int ap, double t_s) const {
    return noise_hits(ap, t_s) ? p_up_ : 1.0;
}

std::vector<bool> ground_truth(const ScenarioSpec& spec) {
    const int slots = spec.slot_count();
    const auto slot_ms = to_ms(spec.slot_length_s);
    std::vector<bool> labels(static_cast<std::size_t>(slots), false);
    for (const auto& iv : active_intervals(spec.anomaly)) {
        for (int k = 0; k < slots; ++k) {
            auto lo = k * slot_ms;
            auto hi = lo + slot_ms;
            if (std::min(hi, iv.end_ms) > std::max(lo, iv.begin_ms)) {
                labels[static_cast<std::size_t>(k)] = true;
            }
        }
    }
    return labels;
}

}  // namespace apwatch::sim
