#pragma once

// Predictive quality of a fitted memory model: recall MAE, AUC, and the rank
// correlation between predicted and empirical half-lives.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "spaced/analysis.hpp"
#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/parallel.hpp"
#include "spaced/stats.hpp"

namespace spaced {

struct PredictionRecord {
    double predicted_m = 0.0;
    int observed_recall = 0;
    double predicted_halflife = 0.0;           // days
    std::optional<double> empirical_halflife; // days
};

inline double mae(std::span<const PredictionRecord> records) {
    if (records.empty()) throw Error(ErrorCode::EmptyDataset, "no predictions");
    CompensatedSum total;
    for (const auto& r : records) total.add(std::abs(r.predicted_m - r.observed_recall));
    return total.value() / static_cast<double>(records.size());
}

// Rank-sum AUC; tied scores count one half.
inline double auc(std::span<const PredictionRecord> records) {
    std::vector<double> positives, negatives;
    for (const auto& r : records) (r.observed_recall == 1 ? positives : negatives).push_back(r.predicted_m);
    if (positives.empty() || negatives.empty()) {
        throw Error(ErrorCode::UndefinedAuc, "AUC needs both recalled and forgotten outcomes");
    }
    std::vector<double> pooled = positives;
    pooled.insert(pooled.end(), negatives.begin(), negatives.end());
    const auto ranks = midranks(pooled);
    CompensatedSum rank_sum;
    for (std::size_t i = 0; i < positives.size(); ++i) rank_sum.add(ranks[i]);
    const double np = static_cast<double>(positives.size());
    const double nn = static_cast<double>(negatives.size());
    return (rank_sum.value() - np * (np + 1.0) / 2.0) / (np * nn);
}

enum class CorrelationKind { Spearman, Pearson };

constexpr std::string_view to_string(CorrelationKind kind) {
    return kind == CorrelationKind::Spearman ? "spearman" : "pearson";
}

inline double halflife_correlation(std::span<const PredictionRecord> records,
                                   CorrelationKind kind = CorrelationKind::Spearman) {
    std::vector<double> predicted, empirical;
    for (const auto& r : records) {
        if (!r.empirical_halflife) continue;
        predicted.push_back(r.predicted_halflife);
        empirical.push_back(*r.empirical_halflife);
    }
    if (predicted.size() < 2) throw Error(ErrorCode::UndefinedCorrelation, "fewer than two half-life pairs");
    return kind == CorrelationKind::Spearman ? spearman_correlation(predicted, empirical)
                                             : pearson_correlation(predicted, empirical);
}

// Gap at which recall falls to one half.
inline double predicted_halflife(double rate, ModelKind kind) {
    if (!(rate > 0.0)) return std::numeric_limits<double>::infinity();
    return kind == ModelKind::Exponential ? std::log(2.0) / rate : std::exp2(1.0 / rate) - 1.0;
}

// Half-life implied by one observed outcome after `interval_days`, using the
// same clamped outcome as the empirical forgetting rate.
inline double empirical_halflife(int recall, double interval_days, double epsilon = kDefaultRecallEpsilon) {
    const double m = std::max(epsilon, std::min(1.0 - epsilon, static_cast<double>(recall)));
    return interval_days * std::log(2.0) / -std::log(m);
}

struct EvaluationOptions {
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0; // the split is chronological; kept for the run record
    CorrelationKind correlation = CorrelationKind::Spearman;
    double epsilon = kDefaultRecallEpsilon;
};

struct EvaluationResult {
    ModelKind kind = ModelKind::Exponential;
    std::size_t holdout_size = 0;
    std::size_t skipped_unknown_items = 0;
    std::optional<double> mae;
    std::optional<double> auc;
    std::optional<double> cor_h;
    CorrelationKind correlation = CorrelationKind::Spearman;
    std::vector<PredictionRecord> predictions;
};

// Builds held-out predictions: within each learner, exposures (reviews with a
// previous review of the same item) are ordered by time and the last
// ceil(fraction * count) are held out. Predictions use the supplied
// parameters and the learner's full history before the exposure.
inline std::vector<PredictionRecord> holdout_predictions(std::vector<ReviewEvent> events,
                                                         const ModelParams& params,
                                                         const EvaluationOptions& options,
                                                         std::size_t* skipped_unknown = nullptr) {
    params.validate();
    if (!(options.holdout_fraction > 0.0 && options.holdout_fraction <= 1.0)) {
        throw Error(ErrorCode::EmptyHoldout, "holdout_fraction must lie in (0, 1]");
    }
    canonicalize_events(events);

    struct Timed {
        std::int64_t ts;
        std::string item;
        PredictionRecord record;
    };
    std::map<std::string, std::vector<Timed>> per_learner;
    std::size_t skipped = 0;

    std::size_t begin = 0;
    while (begin < events.size()) {
        std::size_t end = begin + 1;
        while (end < events.size() && events[end].learner_id == events[begin].learner_id &&
               events[end].item_id == events[begin].item_id) {
            ++end;
        }
        const auto rate0 = params.initial_rates.find(events[begin].item_id);
        if (rate0 == params.initial_rates.end()) {
            skipped += end - begin - 1;
            begin = end;
            continue;
        }
        MemoryState state{events[begin].item_id, 0, 0, std::nullopt};
        state = update_on_review(state, events[begin].recall, events[begin].ts);
        for (std::size_t k = begin + 1; k < end; ++k) {
            const double delta = seconds_to_days(events[k].ts - *state.last_review_ts);
            const double rate = scaled_rate(rate0->second, params.alpha, params.beta, state.n_correct,
                                            state.n_incorrect);
            PredictionRecord r;
            r.predicted_m = recall_probability(rate, delta, params.kind);
            r.observed_recall = events[k].recall;
            r.predicted_halflife = predicted_halflife(rate, params.kind);
            r.empirical_halflife = empirical_halflife(events[k].recall, delta, options.epsilon);
            if (!std::isfinite(r.predicted_halflife)) r.empirical_halflife.reset();
            per_learner[events[k].learner_id].push_back({events[k].ts, events[k].item_id, r});
            state = update_on_review(state, events[k].recall, events[k].ts);
        }
        begin = end;
    }

    std::vector<PredictionRecord> held_out;
    for (auto& [learner, exposures] : per_learner) {
        std::stable_sort(exposures.begin(), exposures.end(), [](const Timed& a, const Timed& b) {
            if (a.ts != b.ts) return a.ts < b.ts;
            return a.item < b.item;
        });
        const auto count = static_cast<std::size_t>(
            std::ceil(options.holdout_fraction * static_cast<double>(exposures.size()) - 1e-12));
        for (std::size_t k = exposures.size() - std::min(count, exposures.size()); k < exposures.size(); ++k) {
            held_out.push_back(exposures[k].record);
        }
    }
    if (skipped_unknown) *skipped_unknown = skipped;
    return held_out;
}

inline EvaluationResult evaluate_model(const std::vector<ReviewEvent>& events, const ModelParams& params,
                                       const EvaluationOptions& options = {}) {
    EvaluationResult result;
    result.kind = params.kind;
    result.correlation = options.correlation;
    result.predictions = holdout_predictions(events, params, options, &result.skipped_unknown_items);
    result.holdout_size = result.predictions.size();
    if (result.predictions.empty()) throw Error(ErrorCode::EmptyHoldout, "no held-out exposures");

    result.mae = mae(result.predictions);
    try {
        result.auc = auc(result.predictions);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedAuc) throw;
    }
    try {
        result.cor_h = halflife_correlation(result.predictions, options.correlation);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedCorrelation) throw;
    }
    return result;
}

// Published reference values for the two memory models.
struct ReferenceMetrics {
    double mae;
    double auc;
    double cor_h;
};

inline ReferenceMetrics published_reference(ModelKind kind) {
    return kind == ModelKind::Exponential ? ReferenceMetrics{0.139, 0.887, 0.611}
                                          : ReferenceMetrics{0.282, 0.901, 0.571};
}

inline constexpr double kReferenceTolerance = 0.05;

} // namespace spaced
