#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctmdp/expression.hpp"
#include "ctmdp/model.hpp"
#include "ctmdp/random.hpp"
#include "ctmdp/scheduler.hpp"

namespace ctmdp {

enum class TemporalMode { eventually, globally };

TemporalMode parse_temporal_mode(std::string_view text);
std::string_view to_string(TemporalMode mode);

/// eventually: the run occupies a goal state at some time in [t1, t2].
/// globally: every state occupied during [t1, t2] is a goal state.
struct ReachabilityProperty {
    TemporalMode mode = TemporalMode::eventually;
    double t1 = 0.0;
    double t2 = 0.0;
    Expression goal;

    /// Validates 0 <= t1 <= t2 and parses `goal` as a predicate over the
    /// model variables.
    static ReachabilityProperty make(TemporalMode mode, double t1, double t2, std::string_view goal,
                                     const PopulationModel& m);
};

struct TrajectoryStep {
    State state;
    std::size_t action = 0;
    double entry_time = 0.0;
    /// Time spent in the state; empty for an absorbing state or one whose
    /// sojourn runs past the horizon.
    std::optional<double> sojourn;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    double horizon = 0.0;
};

/// Samples runs of the CTMC induced by an early scheduler: on entering s at
/// time t an action is drawn from the scheduler and kept for the whole
/// sojourn. Per state entry the stream supplies one uniform for the action,
/// then (for a positive exit rate) one for the sojourn and, if the horizon is
/// not crossed, one for the successor. Holds scratch buffers; use one per
/// worker thread.
class TrajectorySampler {
public:
    TrajectorySampler(const PopulationModel& model, const KernelScheduler& scheduler);

    Trajectory sample(double horizon, RandomStream& rng);

    /// One Bernoulli sample of the property indicator, stopping as soon as
    /// the verdict is fixed. Agrees exactly with check_property(sample(h))
    /// for any h >= t2 and the same stream.
    bool sample_and_check(const ReachabilityProperty& property, RandomStream& rng);

private:
    // Calls visit(state, action, entry, exit) for every state entered before
    // the horizon; exit is +inf when the sojourn is open. Stops early when
    // visit returns false.
    template <class Visit>
    void run(double horizon, RandomStream& rng, Visit&& visit);

    const PopulationModel& model_;
    const KernelScheduler& scheduler_;
    PolicyEvaluator evaluator_;
    std::vector<double> probabilities_;
    std::vector<double> rates_;
    State state_;
};

Trajectory simulate(const PopulationModel& m, const KernelScheduler& scheduler, double horizon, RandomStream& rng);

/// Occupancy semantics: state i occupies [entry_i, entry_{i+1}), the last one
/// occupies through the horizon. Throws ContractError when the trajectory
/// horizon is shorter than t2.
bool check_property(const Trajectory& trajectory, const ReachabilityProperty& property);

bool simulate_and_check(const PopulationModel& m, const KernelScheduler& scheduler,
                        const ReachabilityProperty& property, RandomStream& rng);

/// CSV rows `run_id,step,time,action,<variables...>` (header included when
/// `header` is set).
void write_trajectory_csv(std::ostream& out, const PopulationModel& m, const Trajectory& trajectory,
                          std::size_t run_id, bool header);

}  // namespace ctmdp
