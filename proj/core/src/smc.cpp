#include "ctmdp/smc.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>
#include <tuple>
#include <vector>

#include <boost/math/distributions/normal.hpp>

#include "ctmdp/error.hpp"

namespace ctmdp {

std::pair<double, double> wilson_interval(std::uint64_t successes, std::uint64_t runs, double confidence) {
    if (runs == 0) throw ContractError("Wilson interval needs at least one run");
    if (successes > runs) throw ContractError("successes exceed runs");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ContractError("confidence must lie in (0, 1)");

    const boost::math::normal_distribution<double> standard;
    const double z = boost::math::quantile(standard, 0.5 + 0.5 * confidence);
    const double n = static_cast<double>(runs);
    const double p = static_cast<double>(successes) / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));

    double low = std::clamp(center - half, 0.0, 1.0);
    double high = std::clamp(center + half, 0.0, 1.0);
    if (successes == 0) low = 0.0;
    if (successes == runs) high = 1.0;
    // Rounding may push a bound past the point estimate at the extremes.
    return {std::min(low, p), std::max(high, p)};
}

SMCResult make_smc_result(std::uint64_t successes, std::uint64_t runs, double confidence) {
    SMCResult r;
    r.successes = successes;
    r.runs = runs;
    r.confidence = confidence;
    r.estimate = static_cast<double>(successes) / static_cast<double>(runs);
    std::tie(r.ci_low, r.ci_high) = wilson_interval(successes, runs, confidence);
    return r;
}

SMCResult estimate_q(const PopulationModel& m, const KernelScheduler& scheduler,
                     const ReachabilityProperty& property, const SMCOptions& options, const StreamKey& key) {
    if (options.runs == 0) throw ContractError("SMC needs at least one run");
    const std::uint64_t runs = options.runs;
    const auto workers = static_cast<std::uint64_t>(std::clamp<std::uint64_t>(options.workers, 1, runs));

    auto batch = [&](std::uint64_t begin, std::uint64_t end) {
        TrajectorySampler sampler(m, scheduler);
        std::uint64_t hits = 0;
        for (std::uint64_t i = begin; i < end; ++i) {
            RandomStream rng(StreamKey{key.seed, StreamDomain::simulation, key.epoch, i});
            hits += sampler.sample_and_check(property, rng) ? 1 : 0;
        }
        return hits;
    };

    std::uint64_t successes = 0;
    if (workers == 1) {
        successes = batch(0, runs);
    } else {
        std::vector<std::uint64_t> counts(workers, 0);
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (std::uint64_t w = 0; w < workers; ++w) {
            const std::uint64_t begin = runs * w / workers;
            const std::uint64_t end = runs * (w + 1) / workers;
            threads.emplace_back([&, w, begin, end] {
                try {
                    counts[w] = batch(begin, end);
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (auto c : counts) successes += c;
    }
    return make_smc_result(successes, runs, options.confidence);
}

}  // namespace ctmdp
