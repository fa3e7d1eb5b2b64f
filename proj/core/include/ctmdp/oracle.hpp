#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ctmdp/model.hpp"
#include "ctmdp/scheduler.hpp"
#include "ctmdp/simulate.hpp"

namespace ctmdp {

/// Writes the action distribution used at state s and time t.
using Policy = std::function<void(std::span<const Count> s, double t, std::span<double> probabilities)>;

/// Softmax probabilities of a kernel scheduler (copied). Passing the model
/// enables tabulated kernel factors.
Policy softmax_policy(const KernelScheduler& scheduler, const PopulationModel* model = nullptr);

/// Deterministic rounding of a kernel scheduler: all mass on the action with
/// the largest logit (first one on ties).
Policy greedy_policy(const KernelScheduler& scheduler, const PopulationModel* model = nullptr);

/// Always the given action.
Policy constant_policy(std::size_t action, std::size_t action_count);

inline constexpr std::size_t default_state_cap = 20000;

/// All integer points of E in lexicographic order (first variable most
/// significant). Throws CapacityError when more than `cap` states exist and
/// ModelError when E has no integer point.
std::vector<State> enumerate_states(const PopulationModel& m, std::size_t cap = default_state_cap);

struct ExactOptions {
    double time_step = 0.01;
    std::size_t state_cap = default_state_cap;
    /// Poisson tail mass dropped per uniformisation step.
    double truncation = 1e-10;
    /// Called after each backward segment with the segment start time and the
    /// value of entering each state then, in enumerate_states order.
    std::function<void(double t, std::span<const double> values)> on_segment;
};

/// P(property) from the initial state under early semantics: on entering a
/// state at time t an action is drawn from policy(s, t) and kept for the whole
/// sojourn. Computed backward over (state, committed action) pairs on time
/// segments of width time_step, with the policy frozen at each segment
/// midpoint and every segment applied by uniformisation. Goal states
/// (eventually) or non-goal states (globally) are absorbing inside [t1, t2].
///
/// Exact for policies that are constant on each segment; a policy varying
/// inside a segment gives a first-order error in time_step.
double exact_value(const PopulationModel& m, const Policy& policy, const ReachabilityProperty& property,
                   const ExactOptions& options);

double exact_value(const PopulationModel& m, const Policy& policy, const ReachabilityProperty& property,
                   double time_step);

double exact_value(const PopulationModel& m, const KernelScheduler& scheduler, const ReachabilityProperty& property,
                   double time_step);

enum class AssignmentScope {
    global,     ///< one action for every state
    per_state,  ///< an independent action per state (|S| <= 3 only)
};

struct ConstantAssignment {
    /// Action per state in enumerate_states order.
    std::vector<std::size_t> actions;
    double value = 0.0;
};

/// Exact value of every constant deterministic scheduler in `scope`, sorted
/// by value (descending). Throws CapacityError when the enumeration is too
/// large.
std::vector<ConstantAssignment> brute_force_constant(const PopulationModel& m, const ReachabilityProperty& property,
                                                     double time_step,
                                                     AssignmentScope scope = AssignmentScope::global);

}  // namespace ctmdp
