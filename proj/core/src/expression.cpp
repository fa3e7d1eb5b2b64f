#include "ctmdp/expression.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>

#include "ctmdp/error.hpp"

namespace ctmdp {
namespace {

enum class Tok {
    number, ident, plus, minus, star, slash, lparen, rparen,
    lt, le, gt, ge, eq, ne, and_, or_, not_, end
};

struct Token {
    Tok kind;
    std::size_t pos;
    std::string_view text;
    double number = 0.0;
};

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    Token next() {
        while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
        const std::size_t start = pos_;
        if (pos_ >= src_.size()) return {Tok::end, start, {}};
        const char c = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number(start);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (pos_ < src_.size() &&
                   (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
                ++pos_;
            return {Tok::ident, start, src_.substr(start, pos_ - start)};
        }
        auto two = [&](char second) { return pos_ + 1 < src_.size() && src_[pos_ + 1] == second; };
        auto tok = [&](Tok k, std::size_t len) {
            pos_ += len;
            return Token{k, start, src_.substr(start, len)};
        };
        switch (c) {
            case '+': return tok(Tok::plus, 1);
            case '-': return tok(Tok::minus, 1);
            case '*': return tok(Tok::star, 1);
            case '/': return tok(Tok::slash, 1);
            case '(': return tok(Tok::lparen, 1);
            case ')': return tok(Tok::rparen, 1);
            case '<': return two('=') ? tok(Tok::le, 2) : tok(Tok::lt, 1);
            case '>': return two('=') ? tok(Tok::ge, 2) : tok(Tok::gt, 1);
            case '=':
                if (two('=')) return tok(Tok::eq, 2);
                break;
            case '!': return two('=') ? tok(Tok::ne, 2) : tok(Tok::not_, 1);
            case '&':
                if (two('&')) return tok(Tok::and_, 2);
                break;
            case '|':
                if (two('|')) return tok(Tok::or_, 2);
                break;
            default: break;
        }
        throw ParseError(std::string("unexpected character '") + c + "'", start);
    }

private:
    Token number(std::size_t start) {
        // Accepts digits, one fraction and an optional exponent.
        std::size_t end = start;
        while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        if (end < src_.size() && src_[end] == '.') {
            ++end;
            while (end < src_.size() && std::isdigit(static_cast<unsigned char>(src_[end]))) ++end;
        }
        if (end < src_.size() && (src_[end] == 'e' || src_[end] == 'E')) {
            std::size_t e = end + 1;
            if (e < src_.size() && (src_[e] == '+' || src_[e] == '-')) ++e;
            if (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) {
                while (e < src_.size() && std::isdigit(static_cast<unsigned char>(src_[e]))) ++e;
                end = e;
            }
        }
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + end, value);
        if (ec != std::errc() || ptr != src_.data() + end)
            throw ParseError("malformed number '" + std::string(src_.substr(start, end - start)) + "'", start);
        pos_ = end;
        return {Tok::number, start, src_.substr(start, end - start), value};
    }

    std::string_view src_;
    std::size_t pos_ = 0;
};

using Op = Expression::Op;
using Kind = Expression::Kind;

class Parser {
public:
    Parser(std::string_view src, const SymbolTable& symbols) : lex_(src), symbols_(symbols) {
        advance();
    }

    struct Result {
        std::int32_t node;
        Kind kind;
        std::size_t pos;
    };

    Result parse_all() {
        Result r = disjunction();
        if (cur_.kind != Tok::end)
            throw ParseError("unexpected token '" + std::string(cur_.text) + "'", cur_.pos);
        return r;
    }

    std::vector<Expression::Node> nodes;

private:
    void advance() { cur_ = lex_.next(); }

    std::int32_t push(Expression::Node n) {
        nodes.push_back(n);
        return static_cast<std::int32_t>(nodes.size() - 1);
    }

    void require(const Result& r, Kind k, const char* context) {
        if (r.kind != k)
            throw ParseError(std::string(context) +
                                 (k == Kind::boolean ? " expects a boolean operand" : " expects a numeric operand"),
                             r.pos);
    }

    Result disjunction() {
        Result lhs = conjunction();
        while (cur_.kind == Tok::or_) {
            advance();
            Result rhs = conjunction();
            require(lhs, Kind::boolean, "'||'");
            require(rhs, Kind::boolean, "'||'");
            lhs = {push({Op::logical_or, 0.0, 0, lhs.node, rhs.node}), Kind::boolean, lhs.pos};
        }
        return lhs;
    }

    Result conjunction() {
        Result lhs = negation();
        while (cur_.kind == Tok::and_) {
            advance();
            Result rhs = negation();
            require(lhs, Kind::boolean, "'&&'");
            require(rhs, Kind::boolean, "'&&'");
            lhs = {push({Op::logical_and, 0.0, 0, lhs.node, rhs.node}), Kind::boolean, lhs.pos};
        }
        return lhs;
    }

    Result negation() {
        if (cur_.kind == Tok::not_) {
            const std::size_t pos = cur_.pos;
            advance();
            Result operand = negation();
            require(operand, Kind::boolean, "'!'");
            return {push({Op::logical_not, 0.0, 0, operand.node, -1}), Kind::boolean, pos};
        }
        return comparison();
    }

    Result comparison() {
        Result lhs = sum();
        std::optional<Op> op;
        switch (cur_.kind) {
            case Tok::lt: op = Op::less; break;
            case Tok::le: op = Op::less_equal; break;
            case Tok::gt: op = Op::greater; break;
            case Tok::ge: op = Op::greater_equal; break;
            case Tok::eq: op = Op::equal; break;
            case Tok::ne: op = Op::not_equal; break;
            default: return lhs;
        }
        advance();
        Result rhs = sum();
        require(lhs, Kind::arithmetic, "comparison");
        require(rhs, Kind::arithmetic, "comparison");
        return {push({*op, 0.0, 0, lhs.node, rhs.node}), Kind::boolean, lhs.pos};
    }

    Result sum() {
        Result lhs = product();
        while (cur_.kind == Tok::plus || cur_.kind == Tok::minus) {
            const Op op = cur_.kind == Tok::plus ? Op::add : Op::sub;
            advance();
            Result rhs = product();
            require(lhs, Kind::arithmetic, op == Op::add ? "'+'" : "'-'");
            require(rhs, Kind::arithmetic, op == Op::add ? "'+'" : "'-'");
            lhs = {push({op, 0.0, 0, lhs.node, rhs.node}), Kind::arithmetic, lhs.pos};
        }
        return lhs;
    }

    Result product() {
        Result lhs = unary();
        while (cur_.kind == Tok::star || cur_.kind == Tok::slash) {
            const Op op = cur_.kind == Tok::star ? Op::mul : Op::div;
            advance();
            Result rhs = unary();
            require(lhs, Kind::arithmetic, op == Op::mul ? "'*'" : "'/'");
            require(rhs, Kind::arithmetic, op == Op::mul ? "'*'" : "'/'");
            lhs = {push({op, 0.0, 0, lhs.node, rhs.node}), Kind::arithmetic, lhs.pos};
        }
        return lhs;
    }

    Result unary() {
        if (cur_.kind == Tok::minus) {
            const std::size_t pos = cur_.pos;
            advance();
            Result operand = unary();
            require(operand, Kind::arithmetic, "unary '-'");
            return {push({Op::negate, 0.0, 0, operand.node, -1}), Kind::arithmetic, pos};
        }
        return primary();
    }

    Result primary() {
        const Token t = cur_;
        switch (t.kind) {
            case Tok::number:
                advance();
                return {push({Op::constant, t.number}), Kind::arithmetic, t.pos};
            case Tok::ident: {
                advance();
                if (t.text == "true" || t.text == "false")
                    return {push({Op::constant, t.text == "true" ? 1.0 : 0.0, 1}), Kind::boolean, t.pos};
                for (std::size_t i = 0; i < symbols_.variables.size(); ++i)
                    if (symbols_.variables[i] == t.text)
                        return {push({Op::variable, 0.0, static_cast<std::uint32_t>(i)}), Kind::arithmetic,
                                t.pos};
                if (auto it = symbols_.parameters.find(t.text); it != symbols_.parameters.end())
                    return {push({Op::constant, it->second}), Kind::arithmetic, t.pos};
                throw ParseError("undeclared identifier '" + std::string(t.text) + "'", t.pos);
            }
            case Tok::lparen: {
                advance();
                Result inner = disjunction();
                if (cur_.kind != Tok::rparen) throw ParseError("expected ')'", cur_.pos);
                advance();
                inner.pos = t.pos;
                return inner;
            }
            case Tok::end: throw ParseError("unexpected end of expression", t.pos);
            default: throw ParseError("unexpected token '" + std::string(t.text) + "'", t.pos);
        }
    }

    Lexer lex_;
    const SymbolTable& symbols_;
    Token cur_{Tok::end, 0, {}};
};

std::string format_number(double v) {
    std::array<char, 32> buf{};
    const auto ptr = std::to_chars(buf.data(), buf.data() + buf.size(), v).ptr;
    return std::string(buf.data(), ptr);
}

const char* symbol(Op op) {
    switch (op) {
        case Op::add: return " + ";
        case Op::sub: return " - ";
        case Op::mul: return " * ";
        case Op::div: return " / ";
        case Op::less: return " < ";
        case Op::less_equal: return " <= ";
        case Op::greater: return " > ";
        case Op::greater_equal: return " >= ";
        case Op::equal: return " == ";
        case Op::not_equal: return " != ";
        case Op::logical_and: return " && ";
        case Op::logical_or: return " || ";
        default: return "";
    }
}

}  // namespace

Expression Expression::parse(std::string_view source, const SymbolTable& symbols, Kind expected) {
    Parser parser(source, symbols);
    const auto result = parser.parse_all();
    if (result.kind != expected)
        throw ParseError(expected == Kind::boolean ? "expected a boolean expression"
                                                   : "expected an arithmetic expression",
                         0);
    Expression e;
    e.kind_ = expected;
    e.nodes_ = std::move(parser.nodes);
    e.names_ = symbols.variables;
    e.compile();
    return e;
}

Expression Expression::constant(double value) {
    Expression e;
    e.kind_ = Kind::arithmetic;
    e.nodes_.push_back({Op::constant, value});
    e.compile();
    return e;
}

void Expression::compile() {
    std::size_t depth = 0;
    std::size_t max_depth = 0;
    max_variable_ = -1;
    for (const Node& n : nodes_) {
        switch (n.op) {
            case Op::constant:
            case Op::variable: ++depth; break;
            case Op::negate:
            case Op::logical_not: break;
            default: --depth; break;
        }
        max_depth = std::max(max_depth, depth);
        if (n.op == Op::variable) max_variable_ = std::max(max_variable_, static_cast<int>(n.index));
    }
    stack_depth_ = std::max<std::size_t>(max_depth, 1);
}

template <class T>
double Expression::run(std::span<const T> values) const {
    constexpr std::size_t inline_depth = 32;
    std::array<double, inline_depth> small{};
    std::vector<double> large;
    double* stack = small.data();
    if (stack_depth_ > inline_depth) {
        large.resize(stack_depth_);
        stack = large.data();
    }
    std::size_t top = 0;
    for (const Node& n : nodes_) {
        switch (n.op) {
            case Op::constant: stack[top++] = n.value; break;
            case Op::variable: stack[top++] = static_cast<double>(values[n.index]); break;
            case Op::negate: stack[top - 1] = -stack[top - 1]; break;
            case Op::logical_not: stack[top - 1] = stack[top - 1] != 0.0 ? 0.0 : 1.0; break;
            default: {
                const double b = stack[--top];
                double& a = stack[top - 1];
                switch (n.op) {
                    case Op::add: a = a + b; break;
                    case Op::sub: a = a - b; break;
                    case Op::mul: a = a * b; break;
                    case Op::div: a = a / b; break;
                    case Op::less: a = a < b ? 1.0 : 0.0; break;
                    case Op::less_equal: a = a <= b ? 1.0 : 0.0; break;
                    case Op::greater: a = a > b ? 1.0 : 0.0; break;
                    case Op::greater_equal: a = a >= b ? 1.0 : 0.0; break;
                    case Op::equal: a = a == b ? 1.0 : 0.0; break;
                    case Op::not_equal: a = a != b ? 1.0 : 0.0; break;
                    case Op::logical_and: a = (a != 0.0 && b != 0.0) ? 1.0 : 0.0; break;
                    case Op::logical_or: a = (a != 0.0 || b != 0.0) ? 1.0 : 0.0; break;
                    default: break;
                }
            }
        }
    }
    return top == 0 ? 0.0 : stack[top - 1];
}

double Expression::evaluate(std::span<const std::int64_t> state) const {
    if (max_variable_ >= static_cast<int>(state.size()))
        throw ContractError("expression references variable beyond the state dimension");
    return run(state);
}

double Expression::evaluate(std::span<const double> point) const {
    if (max_variable_ >= static_cast<int>(point.size()))
        throw ContractError("expression references variable beyond the state dimension");
    return run(point);
}

std::string Expression::to_string() const {
    if (nodes_.empty()) return "0";
    auto render = [&](auto& self, std::int32_t i) -> std::string {
        const Node& n = nodes_[static_cast<std::size_t>(i)];
        switch (n.op) {
            case Op::constant:
                if (n.index == 1) return n.value != 0.0 ? "true" : "false";
                return format_number(n.value);
            case Op::variable:
                return n.index < names_.size() ? names_[n.index] : "x" + std::to_string(n.index);
            case Op::negate: return "(-" + self(self, n.lhs) + ")";
            case Op::logical_not: return "(!" + self(self, n.lhs) + ")";
            default: return "(" + self(self, n.lhs) + symbol(n.op) + self(self, n.rhs) + ")";
        }
    };
    return render(render, static_cast<std::int32_t>(nodes_.size() - 1));
}

bool operator==(const Expression& a, const Expression& b) {
    return a.kind_ == b.kind_ && a.to_string() == b.to_string();
}

}  // namespace ctmdp
