#pragma once

#include <cstdint>
#include <random>

namespace apwatch {

/// Concerns that own an independent random stream. Keeping them apart means
/// an anomaly that consumes extra draws never shifts the draws used by
/// normal mobility or traffic.
enum class StreamKind : std::uint32_t {
    Mobility = 1,
    Traffic = 2,
    Burst = 3,
    Noise = 4,
    Anomaly = 5,
    HmmInit = 6,
    Synthetic = 7,
};

using Rng = std::mt19937_64;

/// Derives a named sub-stream from a master seed. `entity` distinguishes
/// stations, flows, restarts and so on within one concern.
inline Rng make_stream(std::uint64_t master_seed, StreamKind kind, std::uint64_t entity = 0,
                       std::uint64_t sub = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed & 0xffffffffu),
                      static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(kind),
                      static_cast<std::uint32_t>(entity & 0xffffffffu),
                      static_cast<std::uint32_t>(entity >> 32),
                      static_cast<std::uint32_t>(sub & 0xffffffffu)};
    return Rng(seq);
}

/// Uniform in [0, 1) with 53 random bits; independent of libstdc++ distribution state.
inline double uniform01(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace apwatch
