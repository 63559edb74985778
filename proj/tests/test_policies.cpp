#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "spaced/policies.hpp"

using namespace spaced;

namespace {

ModelParams params_with(int items) {
    ModelParams p;
    p.alpha = 0.3;
    p.beta = 0.5;
    for (int i = 0; i < items; ++i) p.initial_rates["i" + std::to_string(i)] = 0.1 * (items - i);
    return p;
}

std::vector<std::string> pool_of(int items) {
    std::vector<std::string> pool;
    for (int i = 0; i < items; ++i) pool.push_back("i" + std::to_string(i));
    return pool;
}

} // namespace

TEST(Policies, DifficultyOrdersByRateAndCycles) {
    const auto cursor = make_difficulty_cursor(params_with(5));
    EXPECT_EQ(cursor.ordering, (std::vector<std::string>{"i4", "i3", "i2", "i1", "i0"}));
    auto [first, next] = build_session_difficulty(cursor, 3);
    EXPECT_EQ(first, (std::vector<std::string>{"i4", "i3", "i2"}));
    auto [second, after] = build_session_difficulty(next, 3);
    EXPECT_EQ(second, (std::vector<std::string>{"i1", "i0", "i4"}));
    EXPECT_EQ(after.position, 1u);
    auto [all, same] = build_session_difficulty(cursor, 9);
    EXPECT_EQ(all.size(), 5u);
    EXPECT_EQ(same.position, 0u);
}

TEST(Policies, DifficultyTiesBreakById) {
    ModelParams p;
    p.initial_rates = {{"b", 1.0}, {"a", 1.0}, {"c", 0.5}};
    EXPECT_EQ(make_difficulty_cursor(p).ordering, (std::vector<std::string>{"c", "a", "b"}));
}

TEST(Policies, DifficultyVisitsEveryItemEquallyOften) {
    auto cursor = make_difficulty_cursor(params_with(7));
    std::map<std::string, int> counts;
    for (int s = 0; s < 7; ++s) {
        auto [session, next] = build_session_difficulty(cursor, 3);
        for (const auto& item : session) ++counts[item];
        cursor = next;
    }
    for (const auto& [item, n] : counts) EXPECT_EQ(n, 3) << item;
}

TEST(Policies, RandomSamplesWithoutReplacement) {
    Rng rng(1);
    const auto pool = pool_of(10);
    for (int t = 0; t < 100; ++t) {
        const auto session = build_session_random(pool, 4, rng);
        EXPECT_EQ(std::set<std::string>(session.begin(), session.end()).size(), 4u);
    }
    EXPECT_THROW(build_session_random({}, 1, rng), Error);
    EXPECT_THROW(build_session_random(pool, 11, rng), Error);
}

TEST(Policies, RandomInclusionIsUniform) {
    // Each item appears with probability k/N; chi-square style bound.
    Rng rng(99);
    const auto pool = pool_of(10);
    std::map<std::string, int> counts;
    const int trials = 20000;
    for (int t = 0; t < trials; ++t) {
        for (const auto& item : build_session_random(pool, 3, rng)) ++counts[item];
    }
    const double p = 0.3;
    const double sd = std::sqrt(trials * p * (1 - p));
    for (const auto& [item, n] : counts) EXPECT_LT(std::abs(n - trials * p), 4 * sd) << item;
}

TEST(Policies, SelectInclusionMatchesProbability) {
    // Without truncation, inclusion frequency of each item is its p.
    ModelParams p = params_with(4);
    std::vector<MemoryState> states{{"i0", 1, 0, 0}, {"i1", 0, 1, 0}, {"i2", 2, 0, 0}, {"i3", 0, 0, std::nullopt}};
    const std::int64_t now = 86400;
    PolicySpec spec{PolicyKind::Select, 2.0, 10, 0, ""};
    const auto probs = select_probabilities(states, p, ControlConfig{2.0}, now);
    Rng rng(3);
    std::map<std::string, int> counts;
    const int trials = 20000;
    int fallbacks = 0;
    for (int t = 0; t < trials; ++t) {
        const auto session = build_session_select(states, p, spec, now, rng);
        ASSERT_FALSE(session.empty());
        for (const auto& item : session) ++counts[item];
        if (session.size() == 1) ++fallbacks;
    }
    // Probability that nothing is drawn, when the argmax item is added.
    double none = 1.0;
    for (double q : probs) none *= 1.0 - q;
    std::size_t top = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) if (probs[i] > probs[top]) top = i;
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double expected = probs[i] + (i == top ? none : 0.0);
        const double sd = std::sqrt(trials * expected * (1 - expected)) + 1.0;
        EXPECT_LT(std::abs(counts[states[i].item_id] - trials * expected), 4 * sd) << i;
    }
}

TEST(Policies, SelectTruncatesToSessionSize) {
    ModelParams p = params_with(30);
    std::vector<MemoryState> states;
    for (const auto& [item, rate] : p.initial_rates) states.push_back({item, 0, 0, std::nullopt});
    PolicySpec spec{PolicyKind::Select, 1.0, 5, 0, ""};
    Rng rng(4);
    // q = 1 and unseen items give p = 1: every item is drawn, five survive.
    EXPECT_EQ(build_session_select(states, p, spec, 0, rng).size(), 5u);
}

TEST(Policies, SelectFallsBackToMostForgotten) {
    ModelParams p = params_with(3);
    std::vector<MemoryState> states{{"i0", 0, 0, 0}, {"i1", 0, 0, 0}, {"i2", 0, 0, 0}};
    PolicySpec spec{PolicyKind::Select, 1.0, 5, 0, ""};
    Rng rng(5);
    // Reviewed just now: m = 1, p = 0 for every item.
    const auto session = build_session_select(states, p, spec, 0, rng);
    ASSERT_EQ(session.size(), 1u);
}

TEST(Policies, SpecValidation) {
    PolicySpec spec{PolicyKind::Select, 0.5, 10, 0, ""};
    EXPECT_THROW(spec.validate(), Error);
    EXPECT_EQ(parse_policy_kind("difficulty"), PolicyKind::Difficulty);
    EXPECT_THROW(parse_policy_kind("leitner"), Error);
    EXPECT_EQ((PolicySpec{PolicyKind::Random, 1.0, 10, 0, ""}).label(), "random");
}
