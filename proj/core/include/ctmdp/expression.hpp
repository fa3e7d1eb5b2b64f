#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ctmdp {

/// Names visible inside an expression: population variables (resolved to a
/// state index) and named parameters (inlined as constants at parse time).
struct SymbolTable {
    std::vector<std::string> variables;
    std::map<std::string, double, std::less<>> parameters;
};

/// Arithmetic or boolean expression over population variables.
///
/// Arithmetic: nonnegative numeric literals, variables, unary minus,
/// `+ - * /` and parentheses. Boolean: comparisons between arithmetic terms
/// (`< <= > >= == !=`), `&&`, `||`, `!`, `true`, `false`.
///
/// Expressions are immutable once parsed and evaluate through a compiled
/// postfix program, so a single instance may be shared between threads.
class Expression {
public:
    enum class Kind { arithmetic, boolean };

    Expression() = default;

    /// Throws ParseError (with character offset) on syntax or type errors and
    /// on references to names missing from `symbols`.
    static Expression parse(std::string_view source, const SymbolTable& symbols, Kind expected);

    static Expression constant(double value);

    Kind kind() const noexcept { return kind_; }

    double evaluate(std::span<const std::int64_t> state) const;
    double evaluate(std::span<const double> point) const;

    bool holds(std::span<const std::int64_t> state) const { return evaluate(state) != 0.0; }
    bool holds(std::span<const double> point) const { return evaluate(point) != 0.0; }

    /// Fully parenthesised infix form; parsing it yields an equal expression.
    /// Variables are printed with the names the expression was parsed with.
    std::string to_string() const;

    /// Largest variable index referenced, or -1 when none is.
    int max_variable() const noexcept { return max_variable_; }

    friend bool operator==(const Expression& a, const Expression& b);

    enum class Op : std::uint8_t {
        constant, variable, negate, add, sub, mul, div,
        less, less_equal, greater, greater_equal, equal, not_equal,
        logical_and, logical_or, logical_not
    };

    struct Node {
        Op op;
        double value = 0.0;
        std::uint32_t index = 0;  // variable index; 1 marks a boolean literal
        std::int32_t lhs = -1;
        std::int32_t rhs = -1;
    };

private:
    template <class T>
    double run(std::span<const T> values) const;

    void compile();

    Kind kind_ = Kind::arithmetic;
    std::vector<Node> nodes_;  // postorder; root is the last node
    std::vector<std::string> names_;
    std::size_t stack_depth_ = 1;
    int max_variable_ = -1;
};

}  // namespace ctmdp
