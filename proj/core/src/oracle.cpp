#include "ctmdp/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "ctmdp/error.hpp"

namespace ctmdp {
namespace {

constexpr std::size_t max_assignments = 4096;
constexpr std::size_t max_per_state_states = 3;
// Largest uniformisation parameter per sub-step; keeps exp(-lambda) normal.
constexpr double max_lambda = 30.0;

class StateIndex {
public:
    StateIndex(const PopulationModel& m, const std::vector<State>& states) : model_(m) {
        for (std::size_t i = 0; i < states.size(); ++i) index_.emplace(key(states[i]), i);
    }

    std::size_t find(std::span<const Count> s) const {
        const auto it = index_.find(key(s));
        return it == index_.end() ? npos : it->second;
    }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
    std::uint64_t key(std::span<const Count> s) const {
        std::uint64_t k = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            const auto& v = model_.variables()[i];
            k = k * static_cast<std::uint64_t>(v.upper - v.lower + 1) + static_cast<std::uint64_t>(s[i] - v.lower);
        }
        return k;
    }

    const PopulationModel& model_;
    std::unordered_map<std::uint64_t, std::size_t> index_;
};

struct Edge {
    std::size_t target;
    double rate;
};

// Per state, per action: aggregated outgoing edges.
struct ExplicitChain {
    std::vector<State> states;
    std::vector<std::vector<std::vector<Edge>>> edges;  // [state][action]
};

ExplicitChain build_chain(const PopulationModel& m, std::size_t cap) {
    ExplicitChain chain;
    chain.states = enumerate_states(m, cap);
    const StateIndex index(m, chain.states);
    const std::size_t actions = m.actions().size();
    chain.edges.resize(chain.states.size(), std::vector<std::vector<Edge>>(actions));
    std::vector<double> rates;
    State target;
    for (std::size_t i = 0; i < chain.states.size(); ++i) {
        const State& s = chain.states[i];
        for (std::size_t a = 0; a < actions; ++a) {
            const auto guarded = m.transitions_for(a);
            rates.resize(guarded.size());
            m.guarded_rates(s, a, rates);
            auto& out = chain.edges[i][a];
            for (std::size_t k = 0; k < guarded.size(); ++k) {
                if (rates[k] <= 0.0) continue;
                target = s;
                const auto& update = m.transitions()[guarded[k]].update;
                for (std::size_t d = 0; d < target.size(); ++d) target[d] += update[d];
                const std::size_t j = index.find(target);
                if (j == StateIndex::npos) throw ContractError("successor outside the enumerated state space");
                auto it = std::find_if(out.begin(), out.end(), [j](const Edge& e) { return e.target == j; });
                if (it == out.end())
                    out.push_back({j, rates[k]});
                else
                    it->rate += rates[k];
            }
        }
    }
    return chain;
}

// Backward generator over (state, committed action) pairs for one time
// segment. A pair (i, a) jumps along the edges of action a; on entering j the
// next action a' is drawn with probability sigma(j, a'). Frozen states keep
// their value.
struct Segment {
    const ExplicitChain* chain = nullptr;
    std::size_t actions = 0;
    std::vector<double> sigma;  // [state * actions + action]
    std::vector<char> frozen;
    double max_exit = 0.0;
};

// Entry value of every state: sum_a sigma(i, a) u(i, a).
void entry_values(const Segment& g, const std::vector<double>& u, std::vector<double>& w) {
    const std::size_t n = g.frozen.size();
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t a = 0; a < g.actions; ++a) acc += g.sigma[i * g.actions + a] * u[i * g.actions + a];
        w[i] = acc;
    }
}

// u <- exp(Q * width) u by uniformisation.
void propagate(const Segment& g, double width, double truncation, std::vector<double>& u) {
    if (!std::isfinite(g.max_exit)) throw NumericError("non-finite exit rate in the generator");
    if (g.max_exit <= 0.0 || width <= 0.0) return;
    const double q = 1.02 * g.max_exit;
    const double total = q * width;
    if (!std::isfinite(total)) throw NumericError("uniformisation rate overflow");
    const auto substeps = static_cast<std::size_t>(std::ceil(total / max_lambda));
    const double lambda = total / static_cast<double>(substeps);

    const std::size_t n = g.frozen.size();
    const std::size_t rows = u.size();
    std::vector<double> term(rows), next(rows), acc(rows), w(n);
    for (std::size_t step = 0; step < substeps; ++step) {
        term = u;
        double weight = std::exp(-lambda);
        double mass = weight;
        for (std::size_t r = 0; r < rows; ++r) acc[r] = weight * term[r];
        for (std::size_t k = 1; mass < 1.0 - truncation; ++k) {
            if (k > 100000) throw NumericError("uniformisation series did not converge");
            entry_values(g, term, w);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t a = 0; a < g.actions; ++a) {
                    const std::size_t r = i * g.actions + a;
                    double flow = 0.0;
                    if (!g.frozen[i])
                        for (const Edge& e : g.chain->edges[i][a]) flow += e.rate * (w[e.target] - term[r]);
                    next[r] = term[r] + flow / q;
                }
            }
            term.swap(next);
            weight *= lambda / static_cast<double>(k);
            mass += weight;
            for (std::size_t r = 0; r < rows; ++r) acc[r] += weight * term[r];
        }
        u = acc;
    }
}

}  // namespace

namespace {

struct OwnedEvaluator {
    OwnedEvaluator(const KernelScheduler& s, const PopulationModel* m) : scheduler(s), evaluator(scheduler, m) {}
    KernelScheduler scheduler;
    PolicyEvaluator evaluator;
};

}  // namespace

Policy softmax_policy(const KernelScheduler& scheduler, const PopulationModel* model) {
    auto owned = std::make_shared<OwnedEvaluator>(scheduler, model);
    return [owned](std::span<const Count> s, double t, std::span<double> p) { owned->evaluator.probabilities(s, t, p); };
}

Policy greedy_policy(const KernelScheduler& scheduler, const PopulationModel* model) {
    auto owned = std::make_shared<OwnedEvaluator>(scheduler, model);
    return [owned](std::span<const Count> s, double t, std::span<double> p) {
        owned->evaluator.logits(s, t, p);
        const auto best = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
        std::fill(p.begin(), p.end(), 0.0);
        p[best] = 1.0;
    };
}

Policy constant_policy(std::size_t action, std::size_t action_count) {
    if (action >= action_count) throw ContractError("constant policy action out of range");
    return [action](std::span<const Count>, double, std::span<double> p) {
        std::fill(p.begin(), p.end(), 0.0);
        p[action] = 1.0;
    };
}

std::vector<State> enumerate_states(const PopulationModel& m, std::size_t cap) {
    const std::size_t n = m.dimension();
    State s(n);
    for (std::size_t i = 0; i < n; ++i) s[i] = m.variables()[i].lower;
    std::vector<State> out;
    std::size_t count = 0;
    for (;;) {
        if (m.contains(s)) {
            ++count;
            if (count <= cap) out.push_back(s);
        }
        std::size_t d = n;
        while (d-- > 0) {
            if (s[d] < m.variables()[d].upper) {
                ++s[d];
                break;
            }
            s[d] = m.variables()[d].lower;
        }
        if (d == static_cast<std::size_t>(-1)) break;
    }
    if (count > cap)
        throw CapacityError("state space has " + std::to_string(count) + " states, above the cap of " +
                            std::to_string(cap));
    if (count == 0) throw ModelError("state region contains no integer points");
    return out;
}

double exact_value(const PopulationModel& m, const Policy& policy, const ReachabilityProperty& property,
                   const ExactOptions& options) {
    if (!(options.time_step > 0.0)) throw ContractError("time step must be positive");
    const ExplicitChain chain = build_chain(m, options.state_cap);
    const StateIndex index(m, chain.states);
    const std::size_t n = chain.states.size();
    const std::size_t actions = m.actions().size();
    const bool eventually = property.mode == TemporalMode::eventually;

    std::vector<char> goal(n);
    for (std::size_t i = 0; i < n; ++i) goal[i] = property.goal.holds(std::span<const Count>(chain.states[i]));

    // Segment boundaries: multiples of the step plus t1 and t2.
    std::vector<double> cuts;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * options.time_step;
        if (t >= property.t2) break;
        cuts.push_back(t);
    }
    cuts.push_back(property.t1);
    cuts.push_back(property.t2);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               cuts.end());

    std::vector<double> exits(n * actions, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t a = 0; a < actions; ++a)
            for (const Edge& e : chain.edges[i][a]) exits[i * actions + a] += e.rate;

    Segment g;
    g.chain = &chain;
    g.actions = actions;
    g.sigma.assign(n * actions, 0.0);
    g.frozen.assign(n, 0);
    std::vector<double> u(n * actions);
    for (std::size_t i = 0; i < n; ++i)
        std::fill_n(u.begin() + static_cast<std::ptrdiff_t>(i * actions), actions, goal[i] ? 1.0 : 0.0);
    std::vector<double> w(n);
    for (std::size_t c = cuts.size(); c-- > 1;) {
        const double a = cuts[c - 1];
        const double b = cuts[c];
        const double mid = 0.5 * (a + b);
        const bool inside = a >= property.t1 - 1e-12;

        g.max_exit = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            g.frozen[i] = inside && (eventually ? goal[i] != 0 : goal[i] == 0);
            const std::span<double> p(g.sigma.data() + i * actions, actions);
            policy(chain.states[i], mid, p);
            if (g.frozen[i]) continue;
            for (std::size_t act = 0; act < actions; ++act)
                g.max_exit = std::max(g.max_exit, exits[i * actions + act]);
        }
        propagate(g, b - a, options.truncation, u);
        if (options.on_segment) {
            entry_values(g, u, w);
            options.on_segment(a, w);
        }
    }
    // The initial state is entered at time 0.
    const std::size_t start = index.find(m.initial_state());
    std::vector<double> p(actions);
    policy(m.initial_state(), 0.0, p);
    double value = 0.0;
    for (std::size_t act = 0; act < actions; ++act) value += p[act] * u[start * actions + act];
    return std::clamp(value, 0.0, 1.0);
}

double exact_value(const PopulationModel& m, const Policy& policy, const ReachabilityProperty& property,
                   double time_step) {
    ExactOptions options;
    options.time_step = time_step;
    return exact_value(m, policy, property, options);
}

double exact_value(const PopulationModel& m, const KernelScheduler& scheduler, const ReachabilityProperty& property,
                   double time_step) {
    if (scheduler.action_count() != m.actions().size())
        throw ContractError("scheduler and model disagree on the number of actions");
    return exact_value(m, softmax_policy(scheduler, &m), property, time_step);
}

std::vector<ConstantAssignment> brute_force_constant(const PopulationModel& m, const ReachabilityProperty& property,
                                                     double time_step, AssignmentScope scope) {
    const std::size_t actions = m.actions().size();
    const auto states = enumerate_states(m);
    std::vector<ConstantAssignment> out;

    if (scope == AssignmentScope::global) {
        if (actions > max_assignments) throw CapacityError("too many constant assignments");
        for (std::size_t a = 0; a < actions; ++a) {
            ConstantAssignment c;
            c.actions.assign(states.size(), a);
            c.value = exact_value(m, constant_policy(a, actions), property, time_step);
            out.push_back(std::move(c));
        }
    } else {
        if (states.size() > max_per_state_states)
            throw CapacityError("per-state enumeration needs at most " + std::to_string(max_per_state_states) +
                                " states, model has " + std::to_string(states.size()));
        std::size_t total = 1;
        for (std::size_t i = 0; i < states.size(); ++i) {
            total *= actions;
            if (total > max_assignments) throw CapacityError("too many per-state assignments");
        }
        for (std::size_t code = 0; code < total; ++code) {
            ConstantAssignment c;
            c.actions.resize(states.size());
            std::size_t rest = code;
            for (std::size_t i = 0; i < states.size(); ++i) {
                c.actions[i] = rest % actions;
                rest /= actions;
            }
            const Policy policy = [&states, &c](std::span<const Count> s, double, std::span<double> p) {
                std::fill(p.begin(), p.end(), 0.0);
                for (std::size_t i = 0; i < states.size(); ++i)
                    if (std::equal(s.begin(), s.end(), states[i].begin(), states[i].end())) {
                        p[c.actions[i]] = 1.0;
                        return;
                    }
            };
            c.value = exact_value(m, policy, property, time_step);
            out.push_back(std::move(c));
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const ConstantAssignment& a, const ConstantAssignment& b) { return a.value > b.value; });
    return out;
}

}  // namespace ctmdp
