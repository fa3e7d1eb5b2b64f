#include "ctmdp/simulate.hpp"

#include <cmath>
#include <limits>

#include "ctmdp/error.hpp"

namespace ctmdp {
namespace {

constexpr double open_end = std::numeric_limits<double>::infinity();

bool overlaps(double entry, double exit, const ReachabilityProperty& p) { return entry <= p.t2 && exit > p.t1; }

}  // namespace

TemporalMode parse_temporal_mode(std::string_view text) {
    if (text == "eventually" || text == "F" || text == "reach") return TemporalMode::eventually;
    if (text == "globally" || text == "G" || text == "safety") return TemporalMode::globally;
    throw ParseError("unknown temporal mode '" + std::string(text) + "' (expected eventually or globally)");
}

std::string_view to_string(TemporalMode mode) {
    return mode == TemporalMode::eventually ? "eventually" : "globally";
}

ReachabilityProperty ReachabilityProperty::make(TemporalMode mode, double t1, double t2, std::string_view goal,
                                                const PopulationModel& m) {
    if (!(t1 >= 0.0) || !(t2 >= t1) || !std::isfinite(t2))
        throw ContractError("property interval must satisfy 0 <= t1 <= t2 < inf");
    ReachabilityProperty p;
    p.mode = mode;
    p.t1 = t1;
    p.t2 = t2;
    p.goal = Expression::parse(goal, m.symbols(), Expression::Kind::boolean);
    return p;
}

TrajectorySampler::TrajectorySampler(const PopulationModel& model, const KernelScheduler& scheduler)
    : model_(model), scheduler_(scheduler), evaluator_(scheduler, &model) {
    if (scheduler.action_count() != model.actions().size())
        throw ContractError("scheduler and model disagree on the number of actions");
    if (scheduler.basis().dimension != model.dimension() + 1)
        throw ContractError("scheduler basis dimension does not match the model");
    probabilities_.resize(scheduler.action_count());
    std::size_t widest = 0;
    for (std::size_t a = 0; a < model.actions().size(); ++a)
        widest = std::max(widest, model.transitions_for(a).size());
    rates_.resize(widest);
}

template <class Visit>
void TrajectorySampler::run(double horizon, RandomStream& rng, Visit&& visit) {
    if (!(horizon > 0.0)) throw ContractError("simulation horizon must be positive");
    if (scheduler_.basis().horizon < horizon)
        throw ContractError("scheduler horizon is shorter than the simulation horizon");
    state_ = model_.initial_state();
    double t = 0.0;
    for (;;) {
        evaluator_.probabilities(state_, t, probabilities_);
        const std::size_t action = select_action(probabilities_, rng.uniform_open());
        double total = 0.0;
        try {
            total = model_.guarded_rates(state_, action, rates_);
        } catch (const RateError& e) {
            std::string where;
            for (std::size_t i = 0; i < state_.size(); ++i) where += (i ? "," : "") + std::to_string(state_[i]);
            throw RateError(std::string(e.what()) + " in state (" + where + ") at time " + std::to_string(t));
        }
        if (total <= 0.0) {
            visit(std::span<const Count>(state_), action, t, open_end);
            return;
        }
        const double sojourn = rng.exponential(total);
        if (t + sojourn > horizon) {
            visit(std::span<const Count>(state_), action, t, open_end);
            return;
        }
        if (!visit(std::span<const Count>(state_), action, t, t + sojourn)) return;

        const auto guarded = model_.transitions_for(action);
        const double u = rng.uniform_open() * total;
        double cumulative = 0.0;
        std::size_t pick = guarded.size();
        for (std::size_t k = 0; k < guarded.size(); ++k) {
            if (rates_[k] <= 0.0) continue;
            pick = k;
            cumulative += rates_[k];
            if (u < cumulative) break;
        }
        const auto& update = model_.transitions()[guarded[pick]].update;
        for (std::size_t i = 0; i < state_.size(); ++i) state_[i] += update[i];
        t += sojourn;
    }
}

Trajectory TrajectorySampler::sample(double horizon, RandomStream& rng) {
    Trajectory tr;
    tr.horizon = horizon;
    run(horizon, rng, [&](std::span<const Count> s, std::size_t action, double entry, double exit) {
        TrajectoryStep step{State(s.begin(), s.end()), action, entry, std::nullopt};
        if (std::isfinite(exit)) step.sojourn = exit - entry;
        tr.steps.push_back(std::move(step));
        return true;
    });
    return tr;
}

bool TrajectorySampler::sample_and_check(const ReachabilityProperty& p, RandomStream& rng) {
    const bool eventually = p.mode == TemporalMode::eventually;
    bool verdict = !eventually;
    // A horizon of t2 suffices; a zero-length interval at time 0 still needs
    // the initial state, so keep the horizon positive.
    const double horizon = p.t2 > 0.0 ? p.t2 : std::numeric_limits<double>::min();
    run(horizon, rng, [&](std::span<const Count> s, std::size_t, double entry, double exit) {
        if (overlaps(entry, exit, p)) {
            const bool goal = p.goal.holds(s);
            if (eventually && goal) {
                verdict = true;
                return false;
            }
            if (!eventually && !goal) {
                verdict = false;
                return false;
            }
        }
        return exit <= p.t2;
    });
    return verdict;
}

Trajectory simulate(const PopulationModel& m, const KernelScheduler& scheduler, double horizon, RandomStream& rng) {
    TrajectorySampler sampler(m, scheduler);
    return sampler.sample(horizon, rng);
}

bool check_property(const Trajectory& trajectory, const ReachabilityProperty& p) {
    if (trajectory.horizon < p.t2) throw ContractError("trajectory horizon is shorter than the property bound t2");
    const bool eventually = p.mode == TemporalMode::eventually;
    for (const auto& step : trajectory.steps) {
        const double exit = step.sojourn ? step.entry_time + *step.sojourn : open_end;
        if (!overlaps(step.entry_time, exit, p)) continue;
        const bool goal = p.goal.holds(std::span<const Count>(step.state));
        if (eventually && goal) return true;
        if (!eventually && !goal) return false;
    }
    return !eventually;
}

bool simulate_and_check(const PopulationModel& m, const KernelScheduler& scheduler, const ReachabilityProperty& p,
                        RandomStream& rng) {
    TrajectorySampler sampler(m, scheduler);
    return sampler.sample_and_check(p, rng);
}

void write_trajectory_csv(std::ostream& out, const PopulationModel& m, const Trajectory& trajectory,
                          std::size_t run_id, bool header) {
    if (header) {
        out << "run_id,step,time,action";
        for (const auto& v : m.variables()) out << ',' << v.name;
        out << '\n';
    }
    const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const auto& step = trajectory.steps[i];
        out << run_id << ',' << i << ',' << step.entry_time << ',' << m.actions()[step.action];
        for (Count x : step.state) out << ',' << x;
        out << '\n';
    }
    out.precision(precision);
}

}  // namespace ctmdp
