#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctmdp/expression.hpp"

namespace ctmdp {

using Count = std::int64_t;

/// A point of the population lattice, one count per model variable.
using State = std::vector<Count>;

struct Variable {
    std::string name;
    Count lower = 0;
    Count upper = 0;

    friend bool operator==(const Variable&, const Variable&) = default;
};

/// sum_i coefficients[i] * x_i <= bound
struct LinearConstraint {
    std::vector<double> coefficients;
    double bound = 0.0;

    friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

/// Guarded update `s -> s + update` firing at rate `rate(s)`. A transition
/// without an action is a wildcard and fires under every action.
struct Transition {
    std::string name;
    std::optional<std::size_t> action;
    std::vector<Count> update;
    Expression rate;

    bool is_wildcard() const noexcept { return !action.has_value(); }

    friend bool operator==(const Transition&, const Transition&) = default;
};

/// One aggregated successor of a state under an action.
struct Jump {
    State target;
    double rate = 0.0;
    double probability = 0.0;
};

/// Population CTMDP: integer variables confined to the region E (box bounds
/// intersected with linear constraints), a finite action set, and guarded
/// transitions with state-dependent rates. Immutable once constructed.
class PopulationModel {
public:
    /// Validates every invariant; throws ModelError on violation.
    PopulationModel(std::string name, std::vector<Variable> variables, std::vector<LinearConstraint> constraints,
                    std::vector<std::string> actions, std::vector<Transition> transitions, State initial_state);

    const std::string& name() const noexcept { return name_; }
    std::size_t dimension() const noexcept { return variables_.size(); }
    const std::vector<Variable>& variables() const noexcept { return variables_; }
    const std::vector<LinearConstraint>& constraints() const noexcept { return constraints_; }
    const std::vector<std::string>& actions() const noexcept { return actions_; }
    const std::vector<Transition>& transitions() const noexcept { return transitions_; }
    const State& initial_state() const noexcept { return initial_state_; }

    /// Index of the action called `name`; throws ModelError when undeclared.
    std::size_t action_index(std::string_view name) const;

    /// Symbols (variable names) for parsing predicates over this model.
    SymbolTable symbols() const;

    bool contains(std::span<const Count> s) const;

    /// True when s + update lies in E.
    bool target_in_region(std::span<const Count> s, std::span<const Count> update) const;

    /// Indices of transitions that fire under `action` (its own and wildcards).
    std::span<const std::size_t> transitions_for(std::size_t action) const;

    /// Writes the effective rate of every transition in transitions_for(action)
    /// into `rates` (targets outside E contribute 0) and returns their sum.
    /// Throws RateError for negative or non-finite rates.
    double guarded_rates(std::span<const Count> s, std::size_t action, std::span<double> rates) const;

    friend bool operator==(const PopulationModel&, const PopulationModel&);

private:
    std::string name_;
    std::vector<Variable> variables_;
    std::vector<LinearConstraint> constraints_;
    std::vector<std::string> actions_;
    std::vector<Transition> transitions_;
    State initial_state_;
    std::vector<std::vector<std::size_t>> by_action_;
};

/// Rate of a single transition at s. Throws RateError naming the transition
/// when the value is negative or not finite.
double eval_rate(const Transition& t, std::span<const Count> s);

/// E(s,a): total rate of transitions guarded by a (or wildcard) whose target
/// stays inside E.
double exit_rate(const PopulationModel& m, std::span<const Count> s, std::size_t action);

/// P(s,a,.): successors with transitions sharing a target merged. Throws
/// ContractError when the exit rate is zero.
std::vector<Jump> jump_distribution(const PopulationModel& m, std::span<const Count> s, std::size_t action);

/// Actions with positive exit rate at s, in declaration order.
std::vector<std::size_t> enabled_actions(const PopulationModel& m, std::span<const Count> s);

/// Parses the JSON model document. Syntax errors raise ParseError with a
/// byte offset; semantic errors raise ModelError.
PopulationModel parse_model(std::string_view text);

PopulationModel load_model(const std::filesystem::path& path);

/// Canonical document: parameters are inlined into rate expressions, so
/// parse_model(serialize_model(m)) == m.
std::string serialize_model(const PopulationModel& m);

}  // namespace ctmdp
