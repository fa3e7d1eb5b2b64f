#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <string>

#include "ctmdp/error.hpp"
#include "ctmdp/model.hpp"
#include "test_support.hpp"

namespace {

using namespace ctmdp;
using ctmdp::testing::sis_model;

const State sis_start{90, 10};

std::string one_variable_model(const std::string& transitions, const std::string& extra = "") {
    return R"({"name": "m", "variables": [{"name": "x", "lower": 0, "upper": 3}], "actions": ["a", "b"],
               "transitions": [)" +
           transitions + "], " + extra + R"( "initial_state": [0]})";
}

TEST(ParseModel, SisModelShape) {
    const auto m = sis_model();
    EXPECT_EQ(m.dimension(), 2u);
    EXPECT_EQ(m.actions().size(), 2u);
    EXPECT_EQ(m.transitions().size(), 6u);
    EXPECT_EQ(m.initial_state(), sis_start);
    EXPECT_TRUE(m.transitions()[0].is_wildcard());
    EXPECT_EQ(m.action_index("treatment"), 1u);
}

TEST(ParseModel, ZeroTransitionsGivesAbsorbingStates) {
    const auto m = parse_model(R"({"variables": [{"name": "x", "lower": 0, "upper": 2}], "actions": ["only"],
                                   "transitions": [], "initial_state": [1]})");
    EXPECT_EQ(m.transitions().size(), 0u);
    for (Count x = 0; x <= 2; ++x) {
        const State s{x};
        EXPECT_EQ(exit_rate(m, s, 0), 0.0);
        EXPECT_TRUE(enabled_actions(m, s).empty());
    }
}

TEST(ParseModel, UpdateLengthMismatchIsRejected) {
    EXPECT_THROW(parse_model(one_variable_model(R"({"action": "a", "update": [1, 0], "rate": "1"})")), ModelError);
}

TEST(ParseModel, SemanticErrors) {
    EXPECT_THROW(parse_model(one_variable_model(R"({"action": "c", "update": [1], "rate": "1"})")), ModelError);
    EXPECT_THROW(parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "y"})")), ParseError);
    EXPECT_THROW(parse_model(R"({"variables": [{"name": "x", "lower": 0, "upper": 3}], "actions": ["a"],
                                 "transitions": [], "initial_state": [4]})"),
                 ModelError);
    EXPECT_THROW(parse_model(R"({"variables": [{"name": "x", "lower": 3, "upper": 0}], "actions": ["a"],
                                 "transitions": [], "initial_state": [1]})"),
                 ModelError);
    EXPECT_THROW(parse_model(R"({"variables": [], "actions": ["a"], "transitions": [], "initial_state": []})"),
                 ModelError);
    EXPECT_THROW(parse_model(R"({"variables": [{"name": "x", "lower": 0, "upper": 3}], "actions": [],
                                 "transitions": [], "initial_state": [1]})"),
                 ModelError);
    EXPECT_THROW(parse_model(R"({"variables": [{"name": "x", "lower": 0, "upper": 3}, {"name": "x", "lower": 0,
                                 "upper": 1}], "actions": ["a"], "transitions": [], "initial_state": [1, 0]})"),
                 ModelError);
}

TEST(ParseModel, SyntaxErrorReportsOffset) {
    const std::string text = R"({"variables": [ {"name": "x", "lower": 0, })";
    try {
        parse_model(text);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_NE(e.position(), ParseError::npos);
        EXPECT_LE(e.position(), text.size());
    }
}

TEST(EvalRate, SisExamples) {
    const auto m = sis_model();
    EXPECT_NEAR(eval_rate(m.transitions()[0], sis_start), 1.08, 1e-12);
    EXPECT_EQ(eval_rate(m.transitions()[1], State{90, 0}), 0.0);
    EXPECT_NEAR(eval_rate(m.transitions()[2], sis_start), 0.054, 1e-12);
}

TEST(EvalRate, NegativeOrNonFiniteRatesNameTheTransition) {
    const auto m = parse_model(one_variable_model(R"({"name": "bad", "action": "a", "update": [1], "rate": "x - 1"},
                                                     {"name": "div", "action": "b", "update": [1], "rate": "1 / x"})"));
    try {
        eval_rate(m.transitions()[0], State{0});
        FAIL() << "expected a rate error";
    } catch (const RateError& e) {
        EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
    }
    EXPECT_THROW(exit_rate(m, State{0}, 1), RateError);
    EXPECT_NEAR(eval_rate(m.transitions()[0], State{3}), 2.0, 0.0);
}

TEST(ExitRate, SisExamples) {
    const auto m = sis_model();
    EXPECT_NEAR(exit_rate(m, sis_start, 0), 2.134, 1e-12);
    EXPECT_NEAR(exit_rate(m, sis_start, 1), 11.10, 1e-12);
}

TEST(ExitRate, TargetsOutsideRegionAreDisabled) {
    const auto m = sis_model();
    // At (100, 0) infection and recovery have zero rate; no target leaves E.
    EXPECT_NEAR(exit_rate(m, State{100, 0}, 0), 0.0012 * 100 / 2, 1e-15);
    EXPECT_NEAR(exit_rate(m, State{100, 0}, 1), 0.0002 * 100, 1e-15);
    const auto line = parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "5"},
                                                        {"action": "a", "update": [-1], "rate": "2"})"));
    EXPECT_EQ(exit_rate(line, State{3}, 0), 2.0);
    EXPECT_EQ(exit_rate(line, State{0}, 0), 5.0);
    EXPECT_EQ(exit_rate(line, State{1}, 0), 7.0);
}

TEST(JumpDistribution, SisExample) {
    const auto m = sis_model();
    const auto jumps = jump_distribution(m, sis_start, 0);
    ASSERT_EQ(jumps.size(), 2u);
    double total = 0.0;
    for (const auto& j : jumps) {
        total += j.probability;
        if (j.target == State{89, 11}) {
            EXPECT_NEAR(j.probability, (1.08 + 0.054) / 2.134, 1e-12);
        }
        if (j.target == State{91, 9}) {
            EXPECT_NEAR(j.probability, 1.0 / 2.134, 1e-12);
        }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
    EXPECT_NEAR(1.0 / 2.134, 0.4686, 1e-4);
    EXPECT_NEAR(1.08 / 2.134, 0.5061, 1e-4);
    EXPECT_NEAR(0.054 / 2.134, 0.0253, 1e-4);
}

TEST(JumpDistribution, SingleTransition) {
    const auto m = parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "0.25"})"));
    const auto jumps = jump_distribution(m, State{1}, 0);
    ASSERT_EQ(jumps.size(), 1u);
    EXPECT_EQ(jumps[0].target, State{2});
    EXPECT_EQ(jumps[0].probability, 1.0);
    EXPECT_EQ(jumps[0].rate, 0.25);
}

TEST(JumpDistribution, IdenticalTargetsAreAggregated) {
    const auto m = parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "0.5"},
                                                     {"action": "a", "update": [1], "rate": "1.5"})"));
    const auto jumps = jump_distribution(m, State{0}, 0);
    ASSERT_EQ(jumps.size(), 1u);
    EXPECT_EQ(jumps[0].probability, 1.0);
    EXPECT_EQ(jumps[0].rate, 2.0);
}

TEST(JumpDistribution, ZeroExitRateIsAContractError) {
    const auto m = parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "1"})"));
    EXPECT_THROW(jump_distribution(m, State{0}, 1), ContractError);
}

TEST(EnabledActions, Examples) {
    const auto m = sis_model();
    EXPECT_EQ(enabled_actions(m, sis_start), (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(enabled_actions(m, State{100, 0}), (std::vector<std::size_t>{0, 1}));
    const auto idle = parse_model(one_variable_model(R"({"action": "a", "update": [1], "rate": "0 * x"})"));
    EXPECT_TRUE(enabled_actions(idle, State{1}).empty());
}

// Random small models: probabilities sum to one and the exit rate equals the
// sum of aggregated jump rates.
TEST(ModelProperties, RandomModelsAreConsistent) {
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> update(-1, 1);
    std::uniform_int_distribution<int> action(0, 2);
    std::uniform_real_distribution<double> coeff(0.0, 2.0);
    for (int trial = 0; trial < 30; ++trial) {
        std::string transitions;
        for (int k = 0; k < 6; ++k) {
            const int a = action(gen);
            const std::string tag = a == 2 ? "*" : (a == 0 ? "a" : "b");
            if (k > 0) transitions += ",";
            transitions += R"({"action": ")" + tag + R"(", "update": [)" + std::to_string(update(gen)) + "," +
                           std::to_string(update(gen)) + R"(], "rate": ")" + std::to_string(coeff(gen)) + " * x + " +
                           std::to_string(coeff(gen)) + " * y\"}";
        }
        const auto m = parse_model(R"({"variables": [{"name": "x", "lower": 0, "upper": 4},
                                       {"name": "y", "lower": 0, "upper": 4}],
                                       "constraints": [{"coefficients": [1, 1], "bound": 6}],
                                       "actions": ["a", "b"], "transitions": [)" +
                                   transitions + R"(], "initial_state": [1, 1]})");
        for (Count x = 0; x <= 4; ++x)
            for (Count y = 0; y <= 4; ++y) {
                const State s{x, y};
                if (!m.contains(s)) continue;
                for (std::size_t a = 0; a < 2; ++a) {
                    const double e = exit_rate(m, s, a);
                    if (e == 0.0) continue;
                    const auto jumps = jump_distribution(m, s, a);
                    double p = 0.0, r = 0.0;
                    for (const auto& j : jumps) {
                        EXPECT_TRUE(m.contains(j.target));
                        p += j.probability;
                        r += j.rate;
                    }
                    EXPECT_NEAR(p, 1.0, 1e-12);
                    EXPECT_NEAR(r, e, 1e-12 * std::max(1.0, e));
                }
            }
    }
}

TEST(ModelProperties, SerializeRoundTrip) {
    const auto m = sis_model();
    const auto text = serialize_model(m);
    const auto again = parse_model(text);
    EXPECT_EQ(m, again);
    EXPECT_EQ(text, serialize_model(again));
    EXPECT_NEAR(exit_rate(again, sis_start, 1), 11.10, 1e-12);
}

TEST(ModelProperties, ConstraintsShapeTheRegion) {
    const auto m = sis_model();
    EXPECT_TRUE(m.contains(State{100, 0}));
    EXPECT_TRUE(m.contains(State{50, 50}));
    EXPECT_FALSE(m.contains(State{50, 51}));
    EXPECT_FALSE(m.contains(State{-1, 0}));
}

}  // namespace
