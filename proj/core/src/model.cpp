#include "ctmdp/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "ctmdp/error.hpp"
#include "text_io.hpp"

namespace ctmdp {
namespace {

using json = nlohmann::json;

bool is_identifier(std::string_view s) {
    if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

std::string describe(const Transition& t, std::size_t index) {
    return t.name.empty() ? "transition #" + std::to_string(index) : "transition '" + t.name + "'";
}

}  // namespace

PopulationModel::PopulationModel(std::string name, std::vector<Variable> variables,
                                 std::vector<LinearConstraint> constraints, std::vector<std::string> actions,
                                 std::vector<Transition> transitions, State initial_state)
    : name_(std::move(name)),
      variables_(std::move(variables)),
      constraints_(std::move(constraints)),
      actions_(std::move(actions)),
      transitions_(std::move(transitions)),
      initial_state_(std::move(initial_state)) {
    if (variables_.empty()) throw ModelError("model needs at least one variable");
    std::set<std::string, std::less<>> seen;
    for (const auto& v : variables_) {
        if (!is_identifier(v.name)) throw ModelError("invalid variable name '" + v.name + "'");
        if (!seen.insert(v.name).second) throw ModelError("duplicate variable '" + v.name + "'");
        if (v.lower < 0) throw ModelError("variable '" + v.name + "' has a negative lower bound");
        if (v.lower > v.upper) throw ModelError("variable '" + v.name + "' has lower > upper");
    }
    for (const auto& c : constraints_) {
        if (c.coefficients.size() != variables_.size())
            throw ModelError("constraint has " + std::to_string(c.coefficients.size()) + " coefficients, expected " +
                             std::to_string(variables_.size()));
        if (!std::isfinite(c.bound) ||
            !std::all_of(c.coefficients.begin(), c.coefficients.end(), [](double x) { return std::isfinite(x); }))
            throw ModelError("constraint coefficients and bound must be finite");
    }
    if (actions_.empty()) throw ModelError("model needs at least one action");
    std::set<std::string, std::less<>> action_names;
    for (const auto& a : actions_) {
        if (a.empty() || a == "*") throw ModelError("invalid action name '" + a + "'");
        if (!action_names.insert(a).second) throw ModelError("duplicate action '" + a + "'");
    }
    by_action_.assign(actions_.size(), {});
    for (std::size_t i = 0; i < transitions_.size(); ++i) {
        const auto& t = transitions_[i];
        if (t.update.size() != variables_.size())
            throw ModelError(describe(t, i) + ": update vector has length " + std::to_string(t.update.size()) +
                             ", expected " + std::to_string(variables_.size()));
        if (t.action && *t.action >= actions_.size()) throw ModelError(describe(t, i) + ": undeclared action");
        if (t.rate.kind() != Expression::Kind::arithmetic)
            throw ModelError(describe(t, i) + ": rate must be an arithmetic expression");
        if (t.rate.max_variable() >= static_cast<int>(variables_.size()))
            throw ModelError(describe(t, i) + ": rate references an unknown variable");
        for (std::size_t a = 0; a < actions_.size(); ++a)
            if (!t.action || *t.action == a) by_action_[a].push_back(i);
    }
    if (initial_state_.size() != variables_.size())
        throw ModelError("initial state has dimension " + std::to_string(initial_state_.size()) + ", expected " +
                         std::to_string(variables_.size()));
    if (!contains(initial_state_)) throw ModelError("initial state lies outside the state region");
}

std::size_t PopulationModel::action_index(std::string_view name) const {
    for (std::size_t i = 0; i < actions_.size(); ++i)
        if (actions_[i] == name) return i;
    throw ModelError("undeclared action '" + std::string(name) + "'");
}

SymbolTable PopulationModel::symbols() const {
    SymbolTable table;
    for (const auto& v : variables_) table.variables.push_back(v.name);
    return table;
}

bool PopulationModel::contains(std::span<const Count> s) const {
    if (s.size() != variables_.size()) return false;
    for (std::size_t i = 0; i < s.size(); ++i)
        if (s[i] < variables_[i].lower || s[i] > variables_[i].upper) return false;
    for (const auto& c : constraints_) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < s.size(); ++i) lhs += c.coefficients[i] * static_cast<double>(s[i]);
        if (lhs > c.bound) return false;
    }
    return true;
}

bool PopulationModel::target_in_region(std::span<const Count> s, std::span<const Count> update) const {
    const std::size_t n = variables_.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Count x = s[i] + update[i];
        if (x < variables_[i].lower || x > variables_[i].upper) return false;
    }
    for (const auto& c : constraints_) {
        double lhs = 0.0;
        for (std::size_t i = 0; i < n; ++i) lhs += c.coefficients[i] * static_cast<double>(s[i] + update[i]);
        if (lhs > c.bound) return false;
    }
    return true;
}

std::span<const std::size_t> PopulationModel::transitions_for(std::size_t action) const {
    if (action >= by_action_.size()) throw ContractError("action index out of range");
    return by_action_[action];
}

double PopulationModel::guarded_rates(std::span<const Count> s, std::size_t action, std::span<double> rates) const {
    const auto guarded = transitions_for(action);
    if (rates.size() < guarded.size()) throw ContractError("rate buffer too small");
    double total = 0.0;
    for (std::size_t k = 0; k < guarded.size(); ++k) {
        const Transition& t = transitions_[guarded[k]];
        double r = 0.0;
        if (target_in_region(s, t.update)) {
            r = t.rate.evaluate(s);
            if (!(r >= 0.0) || !std::isfinite(r)) {
                std::string where = t.name.empty() ? "transition #" + std::to_string(guarded[k])
                                                   : "transition '" + t.name + "'";
                throw RateError(where + " evaluated to " + std::to_string(r));
            }
        }
        rates[k] = r;
        total += r;
    }
    return total;
}

bool operator==(const PopulationModel& a, const PopulationModel& b) {
    return a.name_ == b.name_ && a.variables_ == b.variables_ && a.constraints_ == b.constraints_ &&
           a.actions_ == b.actions_ && a.transitions_ == b.transitions_ && a.initial_state_ == b.initial_state_;
}

double eval_rate(const Transition& t, std::span<const Count> s) {
    const double r = t.rate.evaluate(s);
    if (!(r >= 0.0) || !std::isfinite(r))
        throw RateError((t.name.empty() ? std::string("transition") : "transition '" + t.name + "'") +
                        " evaluated to " + std::to_string(r));
    return r;
}

double exit_rate(const PopulationModel& m, std::span<const Count> s, std::size_t action) {
    if (!m.contains(s)) throw ContractError("state outside the model region");
    std::vector<double> rates(m.transitions_for(action).size());
    return m.guarded_rates(s, action, rates);
}

std::vector<Jump> jump_distribution(const PopulationModel& m, std::span<const Count> s, std::size_t action) {
    if (!m.contains(s)) throw ContractError("state outside the model region");
    const auto guarded = m.transitions_for(action);
    std::vector<double> rates(guarded.size());
    const double total = m.guarded_rates(s, action, rates);
    if (total <= 0.0) throw ContractError("jump distribution requested at a state with zero exit rate");

    std::map<State, double> merged;
    for (std::size_t k = 0; k < guarded.size(); ++k) {
        if (rates[k] <= 0.0) continue;
        State target(s.begin(), s.end());
        const auto& update = m.transitions()[guarded[k]].update;
        for (std::size_t i = 0; i < target.size(); ++i) target[i] += update[i];
        merged[target] += rates[k];
    }
    std::vector<Jump> out;
    out.reserve(merged.size());
    for (auto& [target, rate] : merged) out.push_back({target, rate, rate / total});
    return out;
}

std::vector<std::size_t> enabled_actions(const PopulationModel& m, std::span<const Count> s) {
    std::vector<std::size_t> out;
    for (std::size_t a = 0; a < m.actions().size(); ++a)
        if (exit_rate(m, s, a) > 0.0) out.push_back(a);
    return out;
}

PopulationModel parse_model(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("model document: ") + e.what(), e.byte == 0 ? 0 : e.byte - 1);
    }
    if (!doc.is_object()) throw ParseError("model document must be a JSON object", 0);

    try {
        const std::string name = doc.value("name", std::string{});

        std::vector<Variable> variables;
        for (const auto& v : doc.at("variables")) {
            variables.push_back({v.at("name").get<std::string>(), v.at("lower").get<Count>(),
                                 v.at("upper").get<Count>()});
        }

        SymbolTable symbols;
        for (const auto& v : variables) symbols.variables.push_back(v.name);
        if (doc.contains("parameters")) {
            for (const auto& [key, value] : doc.at("parameters").items()) {
                if (!is_identifier(key)) throw ModelError("invalid parameter name '" + key + "'");
                if (std::find(symbols.variables.begin(), symbols.variables.end(), key) != symbols.variables.end())
                    throw ModelError("parameter '" + key + "' shadows a variable");
                symbols.parameters.emplace(key, value.get<double>());
            }
        }

        std::vector<LinearConstraint> constraints;
        if (doc.contains("constraints")) {
            for (const auto& c : doc.at("constraints"))
                constraints.push_back({c.at("coefficients").get<std::vector<double>>(), c.at("bound").get<double>()});
        }

        const auto actions = doc.at("actions").get<std::vector<std::string>>();

        std::vector<Transition> transitions;
        std::size_t index = 0;
        for (const auto& t : doc.at("transitions")) {
            Transition tr;
            tr.name = t.value("name", std::string{});
            const std::string label = tr.name.empty() ? "transition #" + std::to_string(index) : "transition '" + tr.name + "'";
            const auto action = t.at("action").get<std::string>();
            if (action != "*") {
                const auto it = std::find(actions.begin(), actions.end(), action);
                if (it == actions.end()) throw ModelError(label + ": undeclared action '" + action + "'");
                tr.action = static_cast<std::size_t>(it - actions.begin());
            }
            tr.update = t.at("update").get<std::vector<Count>>();
            if (tr.update.size() != variables.size())
                throw ModelError(label + ": update vector has length " + std::to_string(tr.update.size()) +
                                 ", expected " + std::to_string(variables.size()));
            const auto source = t.at("rate").get<std::string>();
            try {
                tr.rate = Expression::parse(source, symbols, Expression::Kind::arithmetic);
            } catch (const ParseError& e) {
                throw ParseError(label + " rate: " + e.what(), e.position());
            }
            transitions.push_back(std::move(tr));
            ++index;
        }

        auto initial = doc.at("initial_state").get<State>();
        return PopulationModel(name, std::move(variables), std::move(constraints), actions, std::move(transitions),
                               std::move(initial));
    } catch (const json::exception& e) {
        throw ModelError(std::string("model document: ") + e.what());
    }
}

PopulationModel load_model(const std::filesystem::path& path) {
    return parse_model(detail::read_text_file(path));
}

std::string serialize_model(const PopulationModel& m) {
    json doc;
    doc["name"] = m.name();
    doc["variables"] = json::array();
    for (const auto& v : m.variables())
        doc["variables"].push_back({{"name", v.name}, {"lower", v.lower}, {"upper", v.upper}});
    doc["constraints"] = json::array();
    for (const auto& c : m.constraints())
        doc["constraints"].push_back({{"coefficients", c.coefficients}, {"bound", c.bound}});
    doc["actions"] = m.actions();
    doc["transitions"] = json::array();
    for (const auto& t : m.transitions()) {
        doc["transitions"].push_back({{"name", t.name},
                                      {"action", t.action ? m.actions()[*t.action] : std::string("*")},
                                      {"update", t.update},
                                      {"rate", t.rate.to_string()}});
    }
    doc["initial_state"] = m.initial_state();
    return doc.dump(2) + "\n";
}

}  // namespace ctmdp
