#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/simulate.hpp"
#include "ctmdp/smc.hpp"

namespace ctmdp {

/// Value of the objective at one parameter vector. For SMC objectives this
/// carries the Wilson interval and the number of runs spent; exact surrogate
/// objectives report a degenerate interval and zero runs.
struct Evaluation {
    double value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::uint64_t runs = 0;

    static Evaluation exact(double v) { return {v, v, v, 0}; }
    static Evaluation from(const SMCResult& r) { return {r.estimate, r.ci_low, r.ci_high, r.runs}; }
};

/// Objective over a flat parameter vector. `iteration` counts from 1; `probe`
/// is 0 for the unperturbed point and j = 1..k for the j-th perturbation.
using Objective =
    std::function<Evaluation(std::span<const double> params, std::uint64_t iteration, std::size_t probe)>;

/// Fills `g` with the random direction used by (iteration, probe).
using DirectionSource = std::function<void(std::uint64_t iteration, std::size_t probe, std::span<double> g)>;

/// i.i.d. standard normal entries from the stream {seed, direction, iteration, probe}.
DirectionSource normal_directions(std::uint64_t seed);

/// gamma_n = gamma0 / sqrt(n), n >= 1.
double learning_rate(double gamma0, std::size_t n);

struct FlatGradientEstimate {
    std::vector<double> direction;
    Evaluation base;
    std::vector<Evaluation> probes;
};

/// Sign-flip gradient estimate. Evaluates Q at `params` once, then for each
/// of k random directions g evaluates Q at params + eps g and accumulates
/// +g/k when (Q(params + eps g) - Q(params)) / eps > 0, -g/k otherwise.
FlatGradientEstimate estimate_gradient(const Objective& q, std::span<const double> params, double eps,
                                       std::size_t batch_k, std::uint64_t iteration,
                                       const DirectionSource& directions);

struct QRecord {
    std::size_t iteration = 0;  ///< n: the value belongs to the n-th iterate f_n
    Evaluation q;
    double gamma = 0.0;         ///< step size that produced f_n (0 for f_0)
    double elapsed_ms = 0.0;
    std::uint64_t cumulative_runs = 0;
};

struct QTrace {
    std::vector<QRecord> records;
    /// False when the run was stopped before n_max iterations.
    bool complete = true;
};

struct AscentOptions {
    double gamma0 = 5.0;
    double eps = 0.1;
    std::size_t batch_k = 5;
    std::size_t n_max = 100;
};

/// Called after the n-th update with the new parameters; returning false
/// stops the ascent and yields a partial trace.
using UpdateCallback = std::function<bool(std::size_t n, std::span<const double> params)>;

struct AscentResult {
    std::vector<double> params;
    QTrace trace;
};

/// Stochastic gradient ascent f_n = f_{n-1} + gamma_n * estimate_gradient(f_{n-1})
/// for n = 1..n_max. The trace holds Q(f_0) .. Q(f_{n_max}); Q(f_{n-1}) is the
/// base evaluation of iteration n and Q(f_{n_max}) is one extra evaluation.
AscentResult ascend(const Objective& q, std::vector<double> params, const AscentOptions& options,
                    const DirectionSource& directions, const UpdateCallback& on_update = {});

/// Hyperparameters of a learning run. Defaults are the SIS case-study values.
struct LearnConfig {
    double gamma0 = 5.0;
    double eps = 0.1;
    std::size_t batch_k = 5;
    std::uint64_t runs_per_q = 1000;
    std::size_t n_max = 100;
    /// Initial scheduler preset (see make_preset).
    std::string initial = "uniform";
    std::uint64_t seed = 1;
    double confidence = 0.95;
    unsigned workers = 1;
    /// Reuse the base evaluation's streams for every probe of an iteration.
    bool common_random_numbers = false;

    /// Throws ContractError naming the offending field.
    void validate() const;
};

/// Total simulation runs of gradient_ascent: (k + 1) * runs * n_max + runs.
std::uint64_t simulation_budget(const LearnConfig& config);

struct GradientEstimate {
    Direction direction;
    SMCResult base_q;
    std::vector<SMCResult> probe_qs;
    std::size_t batch = 0;
};

/// SMC objective over the scheduler's parameters; `m` and `property` must
/// outlive it. Evaluation (iteration, probe) uses simulation epoch
/// iteration * (k + 1) + probe, or iteration * (k + 1) with common random
/// numbers.
Objective smc_objective(const PopulationModel& m, const KernelScheduler& shape, const ReachabilityProperty& property,
                        const LearnConfig& config);

GradientEstimate estimate_gradient(const PopulationModel& m, const KernelScheduler& scheduler,
                                   const ReachabilityProperty& property, const LearnConfig& config,
                                   std::uint64_t iteration = 1);

struct LearnResult {
    KernelScheduler scheduler;
    QTrace trace;
    std::uint64_t runs_used = 0;
};

LearnResult gradient_ascent(const PopulationModel& m, const ReachabilityProperty& property,
                            const KernelScheduler& initial, const LearnConfig& config,
                            const UpdateCallback& on_update = {});

/// Builds the initial scheduler from config.initial over `basis`, then runs
/// gradient_ascent.
LearnResult gradient_ascent(const PopulationModel& m, const ReachabilityProperty& property,
                            std::shared_ptr<const KernelBasis> basis, const LearnConfig& config,
                            const UpdateCallback& on_update = {});

KernelScheduler initial_scheduler(const PopulationModel& m, std::shared_ptr<const KernelBasis> basis,
                                  const LearnConfig& config);

}  // namespace ctmdp
