#include "apwatch/sim/simulator.hpp"

#include "apwatch/error.hpp"
#include "apwatch/rng.hpp"
#include "apwatch/sim/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>

namespace apwatch::sim {

namespace {

constexpr std::int64_t kNever = std::numeric_limits<std::int64_t>::max();

struct Session {
    int ap = 0;
    std::int64_t start_ms = 0;
    std::int64_t end_ms = 0;
    SessionEvent counters;
};

struct World {
    const ScenarioSpec& spec;
    const AnomalyTimeline& timeline;
    std::int64_t run_ms;
};

std::int64_t exp_delay_ms(double u, double mean_s) {
    double d = -mean_s * std::log1p(-u);
    return std::max<std::int64_t>(1, std::llround(d * 1000.0));
}

/// One station's association state machine. Stations never interact, so each
/// agent consumes only its own random streams; the simulator advances all of
/// them in lockstep so global events (halts, crowd instants) see a consistent
/// snapshot.
class StationAgent {
public:
    StationAgent(int id, MobilityClass cls, int home_ap, const World& world, std::uint64_t seed,
                 std::int64_t first_wake_ms, bool crowd_member)
        : id_(id),
          cls_(cls),
          world_(world),
          mobility_rng_(make_stream(seed, StreamKind::Mobility, static_cast<std::uint64_t>(id))),
          anomaly_rng_(make_stream(seed, StreamKind::Anomaly, static_cast<std::uint64_t>(id))),
          crowd_member_(crowd_member),
          wake_ms_(first_wake_ms),
          wake_ap_(home_ap) {
        draw_second();
    }

    int id() const { return id_; }
    bool crowd_member() const { return crowd_member_; }
    bool connected_to(int ap) const { return connected_ && ap_ == ap; }
    const std::vector<Session>& sessions() const { return sessions_; }

    void advance_to(std::int64_t limit_ms) {
        for (;;) {
            const std::int64_t t_dec = decision_ms();
            const std::int64_t t_wake = connected_ ? kNever : wake_ms_;
            const std::int64_t t = std::min({t_dec, t_wake, leave_ms_});
            if (t >= limit_ms || t == kNever) {
                return;
            }
            if (t == leave_ms_) {
                do_leave(t);
            } else if (t == t_wake) {
                do_wake(t);
            } else {
                do_decision(t);
            }
        }
    }

    /// AP power loss at `t`. Roaming stations move to another powered AP;
    /// in-room stations wait for the AP to come back.
    void on_halt(int ap, std::int64_t t) {
        if (!connected_to(ap)) {
            return;
        }
        end_session(t);
        if (cls_ == MobilityClass::LinearRoaming) {
            if (int alt = powered_alternative(ap, t); alt >= 0) {
                start_session(alt, t);
                return;
            }
        }
        wait_for(ap, world_.timeline.ap_up_at(ap, t) + jitter_ms());
    }

    /// Forced disassociation inside a crowd instant, with an optional return time.
    void schedule_leave(std::int64_t at_ms, std::int64_t return_ms, int return_ap) {
        leave_ms_ = at_ms;
        return_ms_ = return_ms;
        return_ap_ = return_ap;
    }

    std::int64_t jitter_ms() { return static_cast<std::int64_t>(uniform01(anomaly_rng_) * 1000.0); }

    void close(std::int64_t t) {
        if (connected_) {
            end_session(t);
        }
    }

private:
    void draw_second() {
        u_ = uniform01(mobility_rng_);
        v_ = uniform01(mobility_rng_);
        e_ = uniform01(mobility_rng_);
        w_ = uniform01(mobility_rng_);
    }

    std::int64_t decision_ms() const {
        std::int64_t base = second_ * 1000;
        if (base >= world_.run_ms) {
            return kNever;
        }
        return base + static_cast<std::int64_t>(v_ * 1000.0);
    }

    void start_session(int ap, std::int64_t t) {
        connected_ = true;
        ap_ = ap;
        start_ms_ = t;
    }

    void end_session(std::int64_t t) {
        if (t > start_ms_) {
            Session s;
            s.ap = ap_;
            s.start_ms = start_ms_;
            s.end_ms = t;
            sessions_.push_back(s);
        }
        connected_ = false;
    }

    void wait_for(int ap, std::int64_t when) {
        connected_ = false;
        wake_ap_ = ap;
        wake_ms_ = when;
    }

    int powered_alternative(int ap, std::int64_t t) const {
        const int n = world_.spec.topology.ap_count;
        for (int k = 1; k < n; ++k) {
            int cand = (ap + k) % n;
            if (!world_.timeline.ap_down(cand, t)) {
                return cand;
            }
        }
        return -1;
    }

    void do_leave(std::int64_t t) {
        leave_ms_ = kNever;
        if (connected_) {
            end_session(t);
        }
        wait_for(return_ap_, return_ms_);
    }

    void do_wake(std::int64_t t) {
        const int ap = wake_ap_;
        if (world_.timeline.ap_down(ap, t)) {
            if (cls_ == MobilityClass::LinearRoaming) {
                if (int alt = powered_alternative(ap, t); alt >= 0) {
                    start_session(alt, t);
                    return;
                }
            }
            wait_for(ap, world_.timeline.ap_up_at(ap, t) + jitter_ms());
            return;
        }
        start_session(ap, t);
    }

    void do_decision(std::int64_t t) {
        const double u = u_;
        const double e = e_;
        const double w = w_;
        ++second_;
        draw_second();
        if (!connected_) {
            return;
        }
        const auto& m = world_.spec.mobility;
        const double mult = world_.timeline.churn_multiplier(ap_, t);
        if (cls_ == MobilityClass::LinearRoaming) {
            const double p_hand = std::min(1.0, m.roam_handover_p * mult);
            const double p_blind = std::min(1.0, m.roam_blind_p * mult);
            const int n = world_.spec.topology.ap_count;
            if (u < p_hand) {
                if (n < 2) {
                    return;
                }
                int alt = (ap_ + 1 + static_cast<int>(w * (n - 1))) % n;
                if (world_.timeline.ap_down(alt, t)) {
                    return;
                }
                end_session(t);
                start_session(alt, t);
            } else if (u < p_hand + p_blind) {
                int ap = ap_;
                end_session(t);
                wait_for(ap, t + exp_delay_ms(e, m.roam_reconnect_mean_s));
            }
        } else {
            const double p = std::min(1.0, m.inroom_reassoc_p * mult);
            if (u < p) {
                int ap = ap_;
                end_session(t);
                wait_for(ap, t + exp_delay_ms(e, m.inroom_reconnect_mean_s));
            }
        }
    }

    int id_;
    MobilityClass cls_;
    const World& world_;
    Rng mobility_rng_;
    Rng anomaly_rng_;
    bool crowd_member_;

    std::int64_t second_ = 0;
    double u_ = 0, v_ = 0, e_ = 0, w_ = 0;

    bool connected_ = false;
    int ap_ = -1;
    std::int64_t start_ms_ = 0;
    std::int64_t wake_ms_ = kNever;
    int wake_ap_ = 0;
    std::int64_t leave_ms_ = kNever;
    std::int64_t return_ms_ = kNever;
    int return_ap_ = 0;

    std::vector<Session> sessions_;
};

/// Truncated Gaussian message size, floored at one byte.
class SizeSampler {
public:
    SizeSampler(double mean, double sd) : mean_(mean), sd_(sd), dist_(mean, sd > 0 ? sd : 1.0) {}
    std::uint64_t operator()(Rng& rng) {
        double x = sd_ > 0 ? dist_(rng) : mean_;
        return static_cast<std::uint64_t>(std::max<long long>(1, std::llround(x)));
    }

private:
    double mean_;
    double sd_;
    std::normal_distribution<double> dist_;
};

/// Finds the session that is open at time t; sessions are ordered and disjoint.
Session* session_at(std::vector<Session>& sessions, double t_s) {
    auto it = std::upper_bound(sessions.begin(), sessions.end(), t_s,
                               [](double t, const Session& s) { return t < static_cast<double>(s.start_ms) / 1000.0; });
    if (it == sessions.begin()) {
        return nullptr;
    }
    --it;
    return t_s < static_cast<double>(it->end_ms) / 1000.0 ? &*it : nullptr;
}

struct Accumulator {
    std::vector<std::vector<SlotUsage>>& usage;
    double slot_s;
    int slots;

    SlotUsage& at(int ap, double t_s) {
        int k = std::min(slots - 1, static_cast<int>(t_s / slot_s));
        return usage[static_cast<std::size_t>(ap)][static_cast<std::size_t>(k)];
    }
};

void generate_traffic(StationAgent& agent, std::vector<Session>& sessions, const World& world, std::uint64_t seed,
                      Accumulator& acc) {
    const auto& spec = world.spec;
    const auto& timeline = world.timeline;
    const double run_s = spec.run_duration_s;
    const bool noisy = timeline.noise_active();

    for (std::size_t f = 0; f < spec.traffic.flows.size(); ++f) {
        const auto& flow = spec.traffic.flows[f];
        // Crowd members only run the echo-style bidirectional traffic.
        if (agent.crowd_member() && flow.direction != FlowDirection::Bidirectional) {
            continue;
        }
        Rng rng = make_stream(seed, StreamKind::Traffic, static_cast<std::uint64_t>(agent.id()), f);
        Rng thin = make_stream(seed, StreamKind::Noise, static_cast<std::uint64_t>(agent.id()), f);
        SizeSampler size(flow.mean_bytes_per_message, flow.sd_bytes_per_message);
        std::exponential_distribution<double> gap(flow.messages_per_second);
        const bool down = flow.direction != FlowDirection::Upload;
        const bool up = flow.direction != FlowDirection::Download;
        for (double t = gap(rng); t < run_s; t += gap(rng)) {
            const std::uint64_t bytes = size(rng);
            double u_down = 0, u_up = 0;
            if (noisy) {
                u_down = uniform01(thin);
                u_up = uniform01(thin);
            }
            Session* s = session_at(sessions, t);
            if (s == nullptr || !flow.target.matches(s->ap)) {
                continue;
            }
            auto& c = s->counters;
            if (down && u_down < timeline.download_probability(s->ap, t)) {
                c.output_octets += bytes;
                c.output_packets += 1;
                auto& slot = acc.at(s->ap, t);
                slot.output_octets += bytes;
                slot.output_packets += 1;
            }
            if (up && u_up < timeline.upload_probability(s->ap, t)) {
                c.input_octets += bytes;
                c.input_packets += 1;
                auto& slot = acc.at(s->ap, t);
                slot.input_octets += bytes;
                slot.input_packets += 1;
            }
        }
    }

    if (timeline.bursts().empty()) {
        return;
    }
    const auto& burst = spec.overload.burst_flow;
    Rng rng = make_stream(seed, StreamKind::Burst, static_cast<std::uint64_t>(agent.id()));
    SizeSampler size(burst.mean_bytes_per_message, burst.sd_bytes_per_message);
    std::exponential_distribution<double> gap(burst.messages_per_second);
    for (const auto& phase : timeline.bursts()) {
        const double end = static_cast<double>(phase.end_ms) / 1000.0;
        for (double t = static_cast<double>(phase.begin_ms) / 1000.0 + gap(rng); t < end; t += gap(rng)) {
            const std::uint64_t bytes = size(rng);
            Session* s = session_at(sessions, t);
            if (s == nullptr || s->ap != timeline.target_ap()) {
                continue;
            }
            auto& c = s->counters;
            c.output_octets += bytes;
            c.output_packets += 1;
            auto& slot = acc.at(s->ap, t);
            slot.output_octets += bytes;
            slot.output_packets += 1;
        }
    }
}

}  // namespace

SimulationResult simulate_detailed(const ScenarioSpec& spec) {
    spec.validate();
    const AnomalyTimeline timeline(spec);
    const World world{spec, timeline, to_ms(spec.run_duration_s)};
    const auto& anomaly = spec.anomaly;
    const auto& topo = spec.topology;

    std::vector<std::unique_ptr<StationAgent>> agents;
    for (int s = 0; s < topo.sta_count; ++s) {
        agents.push_back(std::make_unique<StationAgent>(
            s, topo.mobility[static_cast<std::size_t>(s)], topo.initial_assignment[static_cast<std::size_t>(s)], world,
            spec.seed, 0, false));
    }

    const bool crowd = anomaly.kind == AnomalyKind::FlashCrowd;
    const std::int64_t crowd_ms = to_ms(anomaly.window_start_s);
    const std::int64_t window_end_ms = to_ms(anomaly.window_end_s);
    Rng scenario_rng = make_stream(spec.seed, StreamKind::Anomaly, ~0ull);

    if (crowd && anomaly.direction == CrowdDirection::Arrival) {
        for (int k = 0; k < anomaly.node_count; ++k) {
            const int id = topo.sta_count + k;
            const auto offset = static_cast<std::int64_t>(uniform01(scenario_rng) * 1000.0);
            auto agent = std::make_unique<StationAgent>(id, MobilityClass::InRoom, anomaly.target_ap, world, spec.seed,
                                                        std::min(crowd_ms + offset, window_end_ms - 1), true);
            if (window_end_ms < world.run_ms) {
                agent->schedule_leave(window_end_ms, kNever, anomaly.target_ap);
            }
            agents.push_back(std::move(agent));
        }
    }

    struct GlobalEvent {
        std::int64_t t;
        int kind;  // 0 halt start, 1 crowd departure
    };
    std::vector<GlobalEvent> globals;
    for (const auto& h : timeline.halts()) {
        globals.push_back({h.begin_ms, 0});
    }
    if (crowd && anomaly.direction == CrowdDirection::Departure) {
        globals.push_back({crowd_ms, 1});
    }
    std::stable_sort(globals.begin(), globals.end(), [](const auto& a, const auto& b) { return a.t < b.t; });

    for (const auto& ev : globals) {
        for (auto& a : agents) {
            a->advance_to(ev.t);
        }
        if (ev.kind == 0) {
            for (auto& a : agents) {
                a->on_halt(anomaly.target_ap, ev.t);
            }
            continue;
        }
        std::vector<StationAgent*> present;
        for (auto& a : agents) {
            // Count stations still holding a session at the crowd instant.
            a->advance_to(ev.t + 1);
            if (a->connected_to(anomaly.target_ap)) {
                present.push_back(a.get());
            }
        }
        if (static_cast<int>(present.size()) < anomaly.node_count) {
            throw ValidationError("flash_crowd departure: ap " + std::to_string(anomaly.target_ap) + " has only " +
                                  std::to_string(present.size()) + " associated stations at window start, need " +
                                  std::to_string(anomaly.node_count));
        }
        for (std::size_t i = 0; i + 1 < present.size(); ++i) {
            auto j = i + static_cast<std::size_t>(uniform01(scenario_rng) * static_cast<double>(present.size() - i));
            std::swap(present[i], present[j]);
        }
        for (int k = 0; k < anomaly.node_count; ++k) {
            auto* a = present[static_cast<std::size_t>(k)];
            const auto offset = 1 + static_cast<std::int64_t>(uniform01(scenario_rng) * 998.0);
            const std::int64_t back = window_end_ms < world.run_ms ? window_end_ms + a->jitter_ms() : kNever;
            a->schedule_leave(ev.t + offset, back, anomaly.target_ap);
        }
    }

    for (auto& a : agents) {
        a->advance_to(world.run_ms);
        a->close(world.run_ms);
    }

    SimulationResult result;
    const int slots = spec.slot_count();
    result.exact_usage.assign(static_cast<std::size_t>(topo.ap_count),
                              std::vector<SlotUsage>(static_cast<std::size_t>(slots)));
    Accumulator acc{result.exact_usage, spec.slot_length_s, slots};

    for (auto& a : agents) {
        auto sessions = a->sessions();
        generate_traffic(*a, sessions, world, spec.seed, acc);
        for (const auto& s : sessions) {
            SessionEvent ev = s.counters;
            ev.ap_id = s.ap;
            ev.station_id = a->id();
            ev.start_s = static_cast<double>(s.start_ms) / 1000.0;
            ev.end_s = static_cast<double>(s.end_ms) / 1000.0;
            result.events.push_back(ev);
        }
    }
    std::sort(result.events.begin(), result.events.end(), [](const SessionEvent& a, const SessionEvent& b) {
        if (a.start_s != b.start_s) return a.start_s < b.start_s;
        if (a.ap_id != b.ap_id) return a.ap_id < b.ap_id;
        if (a.station_id != b.station_id) return a.station_id < b.station_id;
        return a.end_s < b.end_s;
    });
    return result;
}

std::vector<SessionEvent> simulate(const ScenarioSpec& spec) { return simulate_detailed(spec).events; }

}  // namespace apwatch::sim
