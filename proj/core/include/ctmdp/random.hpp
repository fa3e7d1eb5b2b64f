#pragma once

#include <cstdint>
#include <random>

namespace ctmdp {

/// Purpose tags keep streams used for different kinds of draws disjoint.
enum class StreamDomain : std::uint32_t {
    simulation = 0,
    direction = 1,
    initialisation = 2,
    test = 3,
};

/// Identifies one independent random stream: (master seed, domain, epoch, index).
/// Simulation run i of Q-evaluation e uses {seed, simulation, e, i}, so streams
/// never depend on how runs are distributed over workers.
struct StreamKey {
    std::uint64_t seed = 0;
    StreamDomain domain = StreamDomain::simulation;
    std::uint64_t epoch = 0;
    std::uint64_t index = 0;
};

/// Random stream with platform-independent uniform and exponential variates.
class RandomStream {
public:
    using result_type = std::mt19937_64::result_type;

    explicit RandomStream(const StreamKey& key);
    explicit RandomStream(std::uint64_t seed) : RandomStream(StreamKey{seed}) {}

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on the open interval (0, 1), from 53 random bits.
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Exponential with the given rate via -ln(u) / rate.
    double exponential(double rate);

    /// Standard normal variate.
    double normal() { return normal_(*this); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace ctmdp
