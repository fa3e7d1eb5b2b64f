#include "ctmdp/learn.hpp"

#include <chrono>
#include <cmath>

#include "ctmdp/error.hpp"
#include "ctmdp/random.hpp"

namespace ctmdp {

DirectionSource normal_directions(std::uint64_t seed) {
    return [seed](std::uint64_t iteration, std::size_t probe, std::span<double> g) {
        RandomStream rng(StreamKey{seed, StreamDomain::direction, iteration, probe});
        for (double& x : g) x = rng.normal();
    };
}

double learning_rate(double gamma0, std::size_t n) {
    if (n == 0) throw ContractError("learning-rate index starts at 1");
    return gamma0 / std::sqrt(static_cast<double>(n));
}

FlatGradientEstimate estimate_gradient(const Objective& q, std::span<const double> params, double eps,
                                       std::size_t batch_k, std::uint64_t iteration,
                                       const DirectionSource& directions) {
    if (!(eps > 0.0)) throw ContractError("eps must be positive");
    if (batch_k == 0) throw ContractError("batch size must be at least 1");

    FlatGradientEstimate est;
    est.direction.assign(params.size(), 0.0);
    est.base = q(params, iteration, 0);

    std::vector<double> g(params.size());
    std::vector<double> probe(params.size());
    const double inv_k = 1.0 / static_cast<double>(batch_k);
    for (std::size_t j = 1; j <= batch_k; ++j) {
        directions(iteration, j, g);
        for (std::size_t i = 0; i < params.size(); ++i) probe[i] = params[i] + eps * g[i];
        const Evaluation moved = q(probe, iteration, j);
        est.probes.push_back(moved);
        const double slope = (moved.value - est.base.value) / eps;
        const double sign = slope > 0.0 ? inv_k : -inv_k;
        for (std::size_t i = 0; i < params.size(); ++i) est.direction[i] += sign * g[i];
    }
    return est;
}

AscentResult ascend(const Objective& q, std::vector<double> params, const AscentOptions& options,
                    const DirectionSource& directions, const UpdateCallback& on_update) {
    if (options.n_max == 0) throw ContractError("n_max must be at least 1");
    const auto start = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    };

    AscentResult result;
    std::uint64_t runs = 0;
    double previous_gamma = 0.0;
    for (std::size_t n = 1; n <= options.n_max; ++n) {
        const auto est = estimate_gradient(q, params, options.eps, options.batch_k, n, directions);
        runs += est.base.runs;
        for (const auto& p : est.probes) runs += p.runs;
        result.trace.records.push_back({n - 1, est.base, previous_gamma, elapsed(), runs});

        const double gamma = learning_rate(options.gamma0, n);
        for (std::size_t i = 0; i < params.size(); ++i) params[i] += gamma * est.direction[i];
        previous_gamma = gamma;

        if (on_update && !on_update(n, params)) {
            result.trace.complete = n == options.n_max;
            if (!result.trace.complete) {
                result.params = std::move(params);
                return result;
            }
        }
    }
    const Evaluation final_q = q(params, options.n_max + 1, 0);
    runs += final_q.runs;
    result.trace.records.push_back({options.n_max, final_q, previous_gamma, elapsed(), runs});
    result.params = std::move(params);
    return result;
}

void LearnConfig::validate() const {
    if (!(gamma0 >= 0.0) || !std::isfinite(gamma0)) throw ContractError("gamma0 must be a finite value >= 0");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ContractError("eps must be positive");
    if (batch_k == 0) throw ContractError("batch_k must be at least 1");
    if (runs_per_q == 0) throw ContractError("runs_per_q must be at least 1");
    if (n_max == 0) throw ContractError("n_max must be at least 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw ContractError("confidence must lie in (0, 1)");
    if (workers == 0) throw ContractError("workers must be at least 1");
}

std::uint64_t simulation_budget(const LearnConfig& config) {
    return (static_cast<std::uint64_t>(config.batch_k) + 1) * config.runs_per_q * config.n_max + config.runs_per_q;
}

Objective smc_objective(const PopulationModel& m, const KernelScheduler& shape, const ReachabilityProperty& property,
                        const LearnConfig& config) {
    SMCOptions options{config.runs_per_q, config.confidence, config.workers};
    const auto stride = static_cast<std::uint64_t>(config.batch_k) + 1;
    return [&m, &property, options, stride, actions = shape.actions(), basis = shape.shared_basis(),
            seed = config.seed, crn = config.common_random_numbers](std::span<const double> params,
                                                                    std::uint64_t iteration, std::size_t probe) {
        const KernelScheduler sch(actions, basis, std::vector<double>(params.begin(), params.end()));
        const std::uint64_t epoch = iteration * stride + (crn ? 0 : probe);
        return Evaluation::from(estimate_q(m, sch, property, options, StreamKey{seed, StreamDomain::simulation, epoch}));
    };
}

GradientEstimate estimate_gradient(const PopulationModel& m, const KernelScheduler& scheduler,
                                   const ReachabilityProperty& property, const LearnConfig& config,
                                   std::uint64_t iteration) {
    config.validate();
    std::vector<SMCResult> results;
    SMCOptions options{config.runs_per_q, config.confidence, config.workers};
    const auto stride = static_cast<std::uint64_t>(config.batch_k) + 1;
    const Objective recording = [&](std::span<const double> params, std::uint64_t it, std::size_t probe) {
        const KernelScheduler sch(scheduler.actions(), scheduler.shared_basis(),
                                  std::vector<double>(params.begin(), params.end()));
        const std::uint64_t epoch = it * stride + (config.common_random_numbers ? 0 : probe);
        results.push_back(estimate_q(m, sch, property, options, StreamKey{config.seed, StreamDomain::simulation, epoch}));
        return Evaluation::from(results.back());
    };
    const auto flat = estimate_gradient(recording, scheduler.parameters(), config.eps, config.batch_k, iteration,
                                        normal_directions(config.seed));
    GradientEstimate est;
    est.direction.values = flat.direction;
    est.base_q = results.front();
    est.probe_qs.assign(results.begin() + 1, results.end());
    est.batch = config.batch_k;
    return est;
}

LearnResult gradient_ascent(const PopulationModel& m, const ReachabilityProperty& property,
                            const KernelScheduler& initial, const LearnConfig& config,
                            const UpdateCallback& on_update) {
    config.validate();
    if (initial.basis().horizon < property.t2)
        throw ContractError("scheduler horizon is shorter than the property bound t2");
    const AscentOptions options{config.gamma0, config.eps, config.batch_k, config.n_max};
    auto result = ascend(smc_objective(m, initial, property, config),
                         std::vector<double>(initial.parameters().begin(), initial.parameters().end()), options,
                         normal_directions(config.seed), on_update);
    const std::uint64_t runs = result.trace.records.empty() ? 0 : result.trace.records.back().cumulative_runs;
    return {KernelScheduler(initial.actions(), initial.shared_basis(), std::move(result.params)),
            std::move(result.trace), runs};
}

KernelScheduler initial_scheduler(const PopulationModel& m, std::shared_ptr<const KernelBasis> basis,
                                  const LearnConfig& config) {
    RandomStream rng(StreamKey{config.seed, StreamDomain::initialisation, 0, 0});
    return make_preset(config.initial, m.actions(), std::move(basis), rng);
}

LearnResult gradient_ascent(const PopulationModel& m, const ReachabilityProperty& property,
                            std::shared_ptr<const KernelBasis> basis, const LearnConfig& config,
                            const UpdateCallback& on_update) {
    return gradient_ascent(m, property, initial_scheduler(m, std::move(basis), config), config, on_update);
}

}  // namespace ctmdp
