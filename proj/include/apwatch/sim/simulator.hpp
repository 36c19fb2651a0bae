#pragma once

#include "apwatch/sim/scenario.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace apwatch::sim {

/// Exact per-slot traffic counters for one AP, attributed at message time
/// rather than prorated over sessions.
struct SlotUsage {
    std::uint64_t input_octets = 0;
    std::uint64_t output_octets = 0;
    std::uint64_t input_packets = 0;
    std::uint64_t output_packets = 0;
};

struct SimulationResult {
    std::vector<SessionEvent> events;
    std::vector<std::vector<SlotUsage>> exact_usage;  // [ap][slot]
};

/// Runs one scenario. Deterministic in (spec, seed); single-threaded.
SimulationResult simulate_detailed(const ScenarioSpec& spec);

/// Session log only, in chronological order.
std::vector<SessionEvent> simulate(const ScenarioSpec& spec);

}  // namespace apwatch::sim
