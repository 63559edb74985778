#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>

#include "spaced/simulator.hpp"

using namespace spaced;

namespace {

SimConfig small_config() {
    SimConfig cfg;
    cfg.n_learners = 30;
    cfg.n_items = 20;
    cfg.horizon_days = 10;
    cfg.session_size = 5;
    cfg.ground_truth.alpha = 0.3;
    cfg.ground_truth.beta = 0.5;
    cfg.arms = {PolicySpec{PolicyKind::Select, 1.0, 5, 0, "select"},
                PolicySpec{PolicyKind::Difficulty, 1.0, 5, 0, "difficulty"},
                PolicySpec{PolicyKind::Random, 1.0, 5, 0, "random"}};
    cfg.seed = 17;
    return cfg;
}

} // namespace

TEST(Simulator, SessionCountIsPoisson) {
    SimConfig cfg = small_config();
    cfg.n_learners = 200;
    cfg.horizon_days = 30;
    cfg.mean_sessions_per_day = 1.0;
    cfg.arms = {PolicySpec{PolicyKind::Random, 1.0, 5, 0, "random"}};
    const auto result = run_simulation(cfg);
    const double mean = static_cast<double>(result.arms[0].session_count) / cfg.n_learners;
    // Poisson(30) per learner; standard error of the mean over 200 learners.
    EXPECT_LT(std::abs(mean - 30.0), 3.0 * std::sqrt(30.0 / 200.0));
}

TEST(Simulator, EventsStayInsideHorizonAndNamespaces) {
    const auto cfg = small_config();
    const auto result = run_simulation(cfg);
    ASSERT_EQ(result.arms.size(), 3u);
    std::set<std::string> seen;
    for (const auto& arm : result.arms) {
        std::set<std::string> learners;
        for (const auto& e : arm.events) {
            EXPECT_GE(e.ts, 0);
            EXPECT_LE(e.ts, static_cast<std::int64_t>(cfg.horizon_days * kSecondsPerDay));
            EXPECT_EQ(e.learner_id.rfind(arm.arm + "-", 0), 0u);
            learners.insert(e.learner_id);
        }
        for (const auto& l : learners) EXPECT_TRUE(seen.insert(l).second);
    }
}

TEST(Simulator, FirstExposureIsForgotten) {
    const auto result = run_simulation(small_config());
    for (const auto& arm : result.arms) {
        std::set<std::pair<std::string, std::string>> met;
        for (const auto& e : arm.events) {
            if (met.insert({e.learner_id, e.item_id}).second) EXPECT_EQ(e.recall, 0);
        }
    }
}

TEST(Simulator, SessionsRespectBudgetAndDoNotOverlap) {
    const auto cfg = small_config();
    const auto result = run_simulation(cfg);
    for (const auto& arm : result.arms) {
        const auto sessions = sessionize(arm.events, cfg.answer_seconds + 1);
        std::size_t total = 0;
        for (const auto& s : sessions) {
            EXPECT_LE(s.items.size(), static_cast<std::size_t>(cfg.session_size));
            total += s.items.size();
        }
        EXPECT_EQ(total, arm.events.size());
        // Difficulty and random always fill the session.
        if (arm.arm != "select") EXPECT_EQ(arm.events.size(), arm.session_count * cfg.session_size);
    }
}

TEST(Simulator, DeterministicAcrossThreads) {
    auto cfg = small_config();
    const auto one = run_simulation(cfg);
    cfg.threads = 4;
    const auto four = run_simulation(cfg);
    ASSERT_EQ(one.arms.size(), four.arms.size());
    for (std::size_t a = 0; a < one.arms.size(); ++a) EXPECT_EQ(one.arms[a].events, four.arms[a].events);
    cfg.seed = 18;
    EXPECT_NE(run_simulation(cfg).arms[0].events, one.arms[0].events);
}

TEST(Simulator, RecallFrequencyMatchesGroundTruth) {
    // Replay the log and compare the mean predicted recall with the observed rate.
    auto cfg = small_config();
    cfg.n_learners = 200;
    cfg.initial_rate_log_mean = std::log(0.2);
    cfg.arms = {PolicySpec{PolicyKind::Random, 1.0, 5, 0, "random"}};
    const auto result = run_simulation(cfg);
    std::map<std::pair<std::string, std::string>, MemoryState> states;
    double expected = 0.0, variance = 0.0;
    int observed = 0;
    for (const auto& e : result.arms[0].events) {
        auto [it, fresh] = states.try_emplace({e.learner_id, e.item_id}, MemoryState{e.item_id, 0, 0, std::nullopt});
        const double delta = it->second.last_review_ts ? seconds_to_days(e.ts - *it->second.last_review_ts) : 0.0;
        const double m = ground_truth_recall(it->second, result.ground_truth, delta);
        expected += m;
        variance += m * (1 - m);
        observed += e.recall;
        it->second = update_on_review(it->second, e.recall, e.ts);
    }
    EXPECT_LT(std::abs(observed - expected), 4.0 * std::sqrt(variance));
}

TEST(Simulator, GeneratedItems) {
    const auto truth = with_generated_items(ModelParams{}, 12, 5);
    ASSERT_EQ(truth.initial_rates.size(), 12u);
    EXPECT_TRUE(truth.initial_rates.count("item-00"));
    EXPECT_TRUE(truth.initial_rates.count("item-11"));
    for (const auto& [item, rate] : truth.initial_rates) EXPECT_GT(rate, 0.0);
}

TEST(Simulator, ConfigValidation) {
    auto cfg = small_config();
    cfg.mean_sessions_per_day = 0.0;
    EXPECT_THROW(run_simulation(cfg), Error);
    cfg = small_config();
    cfg.horizon_days = 0.0;
    EXPECT_THROW(run_simulation(cfg), Error);
    cfg = small_config();
    cfg.arms.clear();
    EXPECT_THROW(run_simulation(cfg), Error);
    cfg = small_config();
    cfg.arms.push_back(cfg.arms[0]);
    EXPECT_THROW(run_simulation(cfg), Error);
    cfg = small_config();
    cfg.session_size = 50;
    EXPECT_THROW(run_simulation(cfg), Error);
}
