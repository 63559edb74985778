#pragma once

// Desk-scale re-run of a multi-arm spaced-repetition trial.
//
// Each simulated learner studies at the arrival times of a homogeneous Poisson
// process. At every session the learner's arm picks the items, each item is
// recalled with the probability given by the ground-truth memory model, and
// the learner's true memory state is updated. The scheduler may use a model
// that differs from the ground truth.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "spaced/control.hpp"
#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/parallel.hpp"
#include "spaced/policies.hpp"
#include "spaced/rng.hpp"

namespace spaced {

struct SimConfig {
    int n_learners = 100; // per arm
    int n_items = 100;    // used when ground_truth carries no initial rates
    double initial_rate_log_mean = 0.0; // log-normal item rates for generated items
    double initial_rate_log_sd = 0.5;
    double horizon_days = 30.0;
    double mean_sessions_per_day = 1.0;
    int session_size = 10;
    std::int64_t answer_seconds = 10; // spacing of answers inside a session
    ModelParams ground_truth;
    std::optional<ModelParams> scheduler; // defaults to ground_truth
    std::vector<PolicySpec> arms;
    std::uint64_t seed = 0;
    unsigned threads = 1;

    void validate() const {
        if (n_learners <= 0) throw Error(ErrorCode::InvalidConfig, "n_learners must be positive");
        if (ground_truth.initial_rates.empty() && n_items <= 0) {
            throw Error(ErrorCode::InvalidConfig, "n_items must be positive");
        }
        if (!(horizon_days > 0.0)) throw Error(ErrorCode::InvalidConfig, "horizon_days must be > 0");
        if (!(mean_sessions_per_day > 0.0)) {
            throw Error(ErrorCode::InvalidConfig, "mean_sessions_per_day must be > 0");
        }
        if (session_size <= 0) throw Error(ErrorCode::InvalidConfig, "session_size must be positive");
        if (!(initial_rate_log_sd >= 0.0) || !std::isfinite(initial_rate_log_mean)) {
            throw Error(ErrorCode::InvalidConfig, "initial rate distribution is invalid");
        }
        if (answer_seconds < 0) throw Error(ErrorCode::InvalidConfig, "answer_seconds must be >= 0");
        if (arms.empty()) throw Error(ErrorCode::InvalidConfig, "at least one arm is required");
        ground_truth.validate();
        if (scheduler) scheduler->validate();
        std::vector<std::string> labels;
        for (const auto& arm : arms) {
            PolicySpec matched = arm;
            matched.session_size = session_size;
            matched.validate();
            labels.push_back(arm.label());
        }
        std::sort(labels.begin(), labels.end());
        if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
            throw Error(ErrorCode::InvalidConfig, "arm labels must be unique");
        }
    }
};

struct ArmLog {
    std::string arm;
    std::vector<ReviewEvent> events; // sorted by (learner_id, ts, item_id)
    std::size_t session_count = 0;
};

struct SimResult {
    std::vector<ArmLog> arms; // in config order
    ModelParams ground_truth; // with the item rates actually used
    std::uint64_t master_seed = 0;
    std::vector<std::string> stream_ids;
};

inline double ground_truth_recall(const MemoryState& state, const ModelParams& ground_truth,
                                  double delta_days) {
    if (!state.last_review_ts) return 0.0;
    const double rate = scaled_rate(ground_truth.initial_rate(state.item_id), ground_truth.alpha,
                                    ground_truth.beta, state.n_correct, state.n_incorrect);
    return recall_probability(rate, delta_days, ground_truth.kind);
}

// Item ids and log-normal initial rates for a ground truth without any.
inline ModelParams with_generated_items(ModelParams truth, int n_items, std::uint64_t seed,
                                        double log_mean = 0.0, double log_sd = 0.5) {
    if (!truth.initial_rates.empty()) return truth;
    Rng rng(derive_seed(seed, {0x6974656dULL}));
    const int width = static_cast<int>(std::to_string(std::max(n_items - 1, 0)).size());
    for (int i = 0; i < n_items; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "item-%0*d", width, i);
        truth.initial_rates.emplace(id, std::exp(log_mean + log_sd * rng.normal()));
    }
    return truth;
}

namespace detail {

struct LearnerRun {
    std::vector<ReviewEvent> events;
    std::size_t sessions = 0;
};

inline LearnerRun simulate_learner(const std::string& learner_id, const PolicySpec& arm,
                                   const SimConfig& cfg, const ModelParams& truth,
                                   const ModelParams& scheduler,
                                   const std::vector<std::string>& items,
                                   const DifficultyCursor& fresh_cursor, Rng& rng) {
    LearnerRun run;
    std::vector<MemoryState> states;
    states.reserve(items.size());
    for (const auto& item : items) states.push_back(MemoryState{item, 0, 0, std::nullopt});
    DifficultyCursor cursor = fresh_cursor;

    const auto horizon_seconds = static_cast<std::int64_t>(std::floor(cfg.horizon_days * kSecondsPerDay));
    const std::int64_t budget_seconds = cfg.answer_seconds * (cfg.session_size - 1);
    const double last_start_day = seconds_to_days(horizon_seconds - budget_seconds);

    double t = 0.0;
    std::int64_t busy_until = 0; // sessions never overlap
    for (;;) {
        t += rng.exponential(cfg.mean_sessions_per_day);
        if (t > last_start_day) break;
        const auto start = std::max(static_cast<std::int64_t>(std::floor(t * kSecondsPerDay)), busy_until);
        if (start > horizon_seconds - budget_seconds) break;

        std::vector<std::string> session;
        switch (arm.kind) {
        case PolicyKind::Select: {
            PolicySpec spec = arm;
            spec.session_size = cfg.session_size;
            session = build_session_select(states, scheduler, spec, start, rng);
            break;
        }
        case PolicyKind::Difficulty: {
            auto [chosen, next] = build_session_difficulty(cursor, cfg.session_size);
            session = std::move(chosen);
            cursor = std::move(next);
            break;
        }
        case PolicyKind::Random:
            session = build_session_random(items, cfg.session_size, rng);
            break;
        }
        ++run.sessions;

        std::int64_t ts = start;
        for (const auto& item : session) {
            const auto pos = static_cast<std::size_t>(
                std::lower_bound(items.begin(), items.end(), item) - items.begin());
            MemoryState& state = states[pos];
            const double delta =
                state.last_review_ts ? seconds_to_days(ts - *state.last_review_ts) : 0.0;
            const int recall = rng.bernoulli(ground_truth_recall(state, truth, delta)) ? 1 : 0;
            state = update_on_review(state, recall, ts);
            run.events.push_back(ReviewEvent{learner_id, item, ts, recall});
            ts += cfg.answer_seconds;
        }
        busy_until = ts;
    }
    return run;
}

} // namespace detail

inline SimResult run_simulation(const SimConfig& cfg) {
    cfg.validate();
    SimResult result;
    result.master_seed = cfg.seed;
    result.ground_truth = with_generated_items(cfg.ground_truth, cfg.n_items, cfg.seed,
                                               cfg.initial_rate_log_mean, cfg.initial_rate_log_sd);
    const ModelParams& truth = result.ground_truth;
    ModelParams scheduler = cfg.scheduler ? *cfg.scheduler : truth;
    for (const auto& [item, rate] : truth.initial_rates) {
        if (!scheduler.initial_rates.count(item)) {
            throw Error(ErrorCode::InvalidConfig, "scheduler model lacks item '" + item + "'");
        }
    }

    std::vector<std::string> items;
    for (const auto& [item, rate] : truth.initial_rates) items.push_back(item);
    const DifficultyCursor fresh_cursor = make_difficulty_cursor(scheduler);
    if (cfg.session_size > static_cast<int>(items.size())) {
        throw Error(ErrorCode::InvalidConfig, "session_size exceeds the number of items");
    }

    const int width = static_cast<int>(std::to_string(cfg.n_learners - 1).size());
    for (std::size_t a = 0; a < cfg.arms.size(); ++a) {
        const PolicySpec& arm = cfg.arms[a];
        const std::string label = arm.label();
        std::vector<detail::LearnerRun> runs(static_cast<std::size_t>(cfg.n_learners));
        parallel_for(runs.size(), cfg.threads, [&](std::size_t i) {
            char id[64];
            std::snprintf(id, sizeof id, "%s-%0*zu", label.c_str(), width, i);
            Rng rng(derive_seed(cfg.seed, {a, i}));
            runs[i] = detail::simulate_learner(id, arm, cfg, truth, scheduler, items, fresh_cursor, rng);
        });

        ArmLog log;
        log.arm = label;
        for (std::size_t i = 0; i < runs.size(); ++i) {
            log.session_count += runs[i].sessions;
            log.events.insert(log.events.end(), std::make_move_iterator(runs[i].events.begin()),
                              std::make_move_iterator(runs[i].events.end()));
            result.stream_ids.push_back("arm" + std::to_string(a) + "/learner" + std::to_string(i));
        }
        std::sort(log.events.begin(), log.events.end(), [](const ReviewEvent& x, const ReviewEvent& y) {
            if (x.learner_id != y.learner_id) return x.learner_id < y.learner_id;
            if (x.ts != y.ts) return x.ts < y.ts;
            return x.item_id < y.item_id;
        });
        result.arms.push_back(std::move(log));
    }
    return result;
}

} // namespace spaced
