#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "spaced/metrics.hpp"

using namespace spaced;

namespace {

std::vector<PredictionRecord> random_records(std::mt19937_64& gen, std::size_t n) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PredictionRecord> records(n);
    for (auto& r : records) {
        r.predicted_m = std::round(unit(gen) * 20.0) / 20.0; // coarse grid to force ties
        r.observed_recall = unit(gen) < r.predicted_m ? 1 : 0;
        r.predicted_halflife = unit(gen) * 10.0;
        r.empirical_halflife = r.predicted_halflife + unit(gen);
    }
    return records;
}

} // namespace

TEST(Metrics, MaeExample) {
    const std::vector<PredictionRecord> records{{0.9, 1}, {0.2, 0}, {0.6, 0}};
    EXPECT_NEAR(mae(records), (0.1 + 0.2 + 0.6) / 3.0, 1e-15);
    EXPECT_THROW(mae(std::vector<PredictionRecord>{}), Error);
}

TEST(Metrics, AucEqualsNormalizedU) {
    std::mt19937_64 gen(100);
    for (int rep = 0; rep < 100; ++rep) {
        const auto records = random_records(gen, 5 + gen() % 200);
        std::vector<double> pos, neg;
        for (const auto& r : records) (r.observed_recall ? pos : neg).push_back(r.predicted_m);
        if (pos.empty() || neg.empty()) continue;
        // Pair counting oracle and the rank-sum U of the positives.
        double wins = 0.0;
        for (double a : pos) {
            for (double b : neg) wins += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
        }
        const double n = static_cast<double>(pos.size() * neg.size());
        EXPECT_NEAR(auc(records), wins / n, 1e-12);
        EXPECT_NEAR(auc(records), mann_whitney_u(pos, neg).u / n, 1e-12);
    }
}

TEST(Metrics, AucNeedsBothClasses) {
    const std::vector<PredictionRecord> records{{0.9, 1}, {0.2, 1}};
    try {
        auc(records);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::UndefinedAuc);
    }
}

TEST(Metrics, InvariantToRecordOrder) {
    std::mt19937_64 gen(5);
    auto records = random_records(gen, 300);
    const double m0 = mae(records), a0 = auc(records), c0 = halflife_correlation(records);
    std::shuffle(records.begin(), records.end(), gen);
    EXPECT_NEAR(mae(records), m0, 1e-15);
    EXPECT_EQ(auc(records), a0);
    EXPECT_NEAR(halflife_correlation(records), c0, 1e-12);
}

TEST(Metrics, Halflives) {
    EXPECT_NEAR(predicted_halflife(std::log(2.0), ModelKind::Exponential), 1.0, 1e-15);
    EXPECT_NEAR(predicted_halflife(1.0, ModelKind::PowerLaw), 1.0, 1e-15);
    EXPECT_NEAR(recall_probability(0.7, predicted_halflife(0.7, ModelKind::PowerLaw), ModelKind::PowerLaw), 0.5, 1e-12);
    EXPECT_TRUE(std::isinf(predicted_halflife(0.0, ModelKind::Exponential)));
    EXPECT_NEAR(empirical_halflife(1, 1.0), std::log(2.0) / -std::log(0.99), 1e-12);
    EXPECT_NEAR(empirical_halflife(0, 2.0), 2.0 * std::log(2.0) / -std::log(0.01), 1e-12);
}

TEST(Metrics, HoldoutTakesTheLatestExposures) {
    ModelParams params;
    params.alpha = 0.2;
    params.beta = 0.3;
    params.initial_rates = {{"a", 0.5}, {"b", 1.0}};
    std::vector<ReviewEvent> events;
    for (int k = 0; k < 6; ++k) events.push_back({"l", "a", k * 86400, k % 2});
    for (int k = 0; k < 6; ++k) events.push_back({"l", "b", k * 86400 + 60, (k + 1) % 2});
    events.push_back({"l", "unknown", 0, 1});
    events.push_back({"l", "unknown", 10, 1});
    EvaluationOptions options;
    options.holdout_fraction = 0.2; // 10 exposures -> 2 held out
    std::size_t skipped = 0;
    const auto held = holdout_predictions(events, params, options, &skipped);
    EXPECT_EQ(skipped, 1u);
    ASSERT_EQ(held.size(), 2u);
    // The last two exposures are (a, day 5, recall 1) and (b, day 5, recall 0).
    EXPECT_EQ(held[0].observed_recall, 1);
    EXPECT_EQ(held[1].observed_recall, 0);
    const double rate_a = 0.5 * std::pow(0.8, 2) * std::pow(1.3, 3);
    EXPECT_NEAR(held[0].predicted_m, std::exp(-rate_a), 1e-12);

    options.holdout_fraction = 0.0;
    EXPECT_THROW(holdout_predictions(events, params, options), Error);
}

TEST(Metrics, EvaluateModelReportsAllMetrics) {
    std::mt19937_64 gen(77);
    ModelParams params;
    params.alpha = 0.2;
    params.beta = 0.3;
    std::vector<ReviewEvent> events;
    for (int i = 0; i < 5; ++i) params.initial_rates["i" + std::to_string(i)] = 0.2 + 0.3 * i;
    for (int l = 0; l < 20; ++l) {
        for (int i = 0; i < 5; ++i) {
            std::int64_t ts = 0;
            for (int k = 0; k < 5; ++k) {
                ts += 3600 + static_cast<std::int64_t>(gen() % 300000);
                events.push_back({"l" + std::to_string(l), "i" + std::to_string(i), ts, static_cast<int>(gen() % 2)});
            }
        }
    }
    const auto result = evaluate_model(events, params);
    EXPECT_TRUE(result.mae && result.auc && result.cor_h);
    EXPECT_EQ(result.holdout_size, 20u * 4u); // 20 exposures per learner, 20% held out
    EXPECT_GE(*result.auc, 0.0);
    EXPECT_LE(*result.auc, 1.0);
}

TEST(Metrics, PublishedReference) {
    EXPECT_DOUBLE_EQ(published_reference(ModelKind::Exponential).mae, 0.139);
    EXPECT_DOUBLE_EQ(published_reference(ModelKind::PowerLaw).cor_h, 0.571);
}
