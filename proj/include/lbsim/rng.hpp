#pragma once

#include <cstdint>
#include <random>

namespace lbsim {

// SplitMix64 one-round (Steele / Vigna).
inline std::uint64_t splitmix64(std::uint64_t x) {
    static constexpr std::uint64_t PHI = 0x9E3779B97F4A7C15ULL;
    x = (x + PHI);
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Independent sub-stream seed for (base_seed, stream_id). Identical pairs
// reproduce identical streams; distinct ids land in unrelated SplitMix64
// orbits.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream_id) {
    static constexpr std::uint64_t PHI = 0x9E3779B97F4A7C15ULL;
    return splitmix64(splitmix64(base_seed) + stream_id * PHI);
}

/// One named random stream. Every consumer (arrival process, each server's
/// service process, policy tie-breaking) owns its own stream so that runs
/// are reproducible independently of how many draws the others consume.
class RngStream {
public:
    RngStream(std::uint64_t base_seed, std::uint64_t stream_id)
        : engine_(derive_seed(base_seed, stream_id)) {}

    std::mt19937_64& engine() { return engine_; }

    // Uniform integer in [0, n).
    std::int64_t uniform_below(std::int64_t n) {
        return std::uniform_int_distribution<std::int64_t>(0, n - 1)(engine_);
    }

    double uniform01() {
        return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
    }

private:
    std::mt19937_64 engine_;
};

// Stream-id layout used by a single run.
namespace stream_id {
inline constexpr std::uint64_t arrival = 0;
inline constexpr std::uint64_t policy = 1;
inline constexpr std::uint64_t service_base = 2;  // server n uses service_base + n
}  // namespace stream_id

}  // namespace lbsim
