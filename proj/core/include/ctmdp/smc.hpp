#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>

#include "ctmdp/model.hpp"
#include "ctmdp/random.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/simulate.hpp"

namespace ctmdp {

/// Monte Carlo estimate of a satisfaction probability with a Wilson score
/// interval.
struct SMCResult {
    double estimate = 0.0;
    std::uint64_t successes = 0;
    std::uint64_t runs = 0;
    double ci_low = 0.0;
    double ci_high = 1.0;
    double confidence = 0.95;

    friend bool operator==(const SMCResult&, const SMCResult&) = default;
};

struct SMCOptions {
    std::uint64_t runs = 1000;
    double confidence = 0.95;
    /// Worker-count hint; results do not depend on it.
    unsigned workers = 1;
};

/// Wilson score interval for `successes` out of `runs` at the two-sided
/// confidence level, clipped to [0, 1]. Throws ContractError on invalid counts
/// or a confidence outside (0, 1).
std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t runs, double confidence);

SMCResult make_smc_result(std::uint64_t successes, std::uint64_t runs, double confidence);

/// Estimates Q = P(property) under `scheduler` from options.runs independent
/// runs. Run i draws from the stream {key.seed, simulation, key.epoch, i}.
SMCResult estimate_q(const PopulationModel& m, const KernelScheduler& scheduler,
                     const ReachabilityProperty& property, const SMCOptions& options, const StreamKey& key);

}  // namespace ctmdp
