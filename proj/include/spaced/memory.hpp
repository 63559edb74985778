#pragma once

// Forgetting-curve memory models.
//
// An item's forgetting rate starts at its initial difficulty n(0) and is
// multiplied by (1 - alpha) after every successful recall and by (1 + beta)
// after every failed one. The recall probability after a gap of delta days is
//
//   exponential: m = exp(-n * delta)
//   power law:   m = (1 + delta)^(-n)
//
// Wire timestamps are integer epoch seconds; every rate in this library is per
// day and every gap is in fractional days.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "spaced/error.hpp"

namespace spaced {

inline constexpr double kSecondsPerDay = 86400.0;
inline constexpr std::int64_t kDefaultSessionGapSeconds = 300;

inline double seconds_to_days(std::int64_t seconds) {
    return static_cast<double>(seconds) / kSecondsPerDay;
}

struct ReviewEvent {
    std::string learner_id;
    std::string item_id;
    std::int64_t ts = 0;
    int recall = 0;

    friend bool operator==(const ReviewEvent&, const ReviewEvent&) = default;
};

struct StudySession {
    std::string learner_id;
    std::int64_t start_ts = 0;
    std::vector<std::string> items;
    std::vector<int> recalls;
};

struct MemoryState {
    std::string item_id;
    int n_correct = 0;
    int n_incorrect = 0;
    std::optional<std::int64_t> last_review_ts;

    friend bool operator==(const MemoryState&, const MemoryState&) = default;
};

enum class ModelKind { Exponential, PowerLaw };

constexpr std::string_view to_string(ModelKind kind) {
    return kind == ModelKind::Exponential ? "exponential" : "power_law";
}

inline ModelKind parse_model_kind(std::string_view text) {
    if (text == "exponential") return ModelKind::Exponential;
    if (text == "power_law" || text == "power-law") return ModelKind::PowerLaw;
    throw Error(ErrorCode::InvalidArgument, "unknown model kind '" + std::string(text) + "'");
}

struct ModelParams {
    ModelKind kind = ModelKind::Exponential;
    double alpha = 0.0;
    double beta = 0.0;
    std::map<std::string, double> initial_rates; // item_id -> n(0), 1/day

    double initial_rate(const std::string& item_id) const {
        auto it = initial_rates.find(item_id);
        if (it == initial_rates.end()) {
            throw Error(ErrorCode::UnknownItem, "item '" + item_id + "' has no initial rate");
        }
        return it->second;
    }

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) {
            throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
        }
        if (!(beta >= 0.0) || !std::isfinite(beta)) {
            throw Error(ErrorCode::InvalidArgument, "beta must be finite and >= 0");
        }
        for (const auto& [item, rate] : initial_rates) {
            if (!(rate > 0.0) || !std::isfinite(rate)) {
                throw Error(ErrorCode::InvalidArgument, "initial rate of '" + item + "' must be > 0");
            }
        }
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// n(0) (1 - alpha)^correct (1 + beta)^incorrect, with no degeneracy check.
inline double scaled_rate(double initial_rate, double alpha, double beta, int n_correct,
                          int n_incorrect) {
    return initial_rate * std::pow(1.0 - alpha, n_correct) * std::pow(1.0 + beta, n_incorrect);
}

// Throws DEGENERATE_RATE when alpha == 1 has collapsed the rate to zero.
inline double forgetting_rate(const MemoryState& state, const ModelParams& params) {
    const double n0 = params.initial_rate(state.item_id);
    if (params.alpha >= 1.0 && state.n_correct > 0) {
        throw Error(ErrorCode::DegenerateRate,
                    "alpha = 1 after a successful recall pins recall probability to 1");
    }
    return scaled_rate(n0, params.alpha, params.beta, state.n_correct, state.n_incorrect);
}

inline double recall_probability(double rate, double delta_days, ModelKind kind) {
    if (!(rate >= 0.0) || !(delta_days >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "rate and delta must be non-negative");
    }
    if (kind == ModelKind::Exponential) return std::exp(-rate * delta_days);
    return std::exp(-rate * std::log1p(delta_days));
}

inline MemoryState update_on_review(const MemoryState& state, int recall, std::int64_t ts) {
    if (recall != 0 && recall != 1) {
        throw Error(ErrorCode::InvalidArgument, "recall must be 0 or 1");
    }
    if (state.last_review_ts && ts < *state.last_review_ts) {
        throw Error(ErrorCode::OutOfOrderEvent, "review at " + std::to_string(ts) +
                                                    " precedes last review at " +
                                                    std::to_string(*state.last_review_ts));
    }
    MemoryState next = state;
    if (recall == 1) {
        ++next.n_correct;
    } else {
        ++next.n_incorrect;
    }
    next.last_review_ts = ts;
    return next;
}

// Stable sort by (learner, item, ts) and drop repeated (learner, item, ts)
// keeping the first. Returns the number of duplicates removed.
inline std::size_t canonicalize_events(std::vector<ReviewEvent>& events) {
    std::stable_sort(events.begin(), events.end(), [](const ReviewEvent& a, const ReviewEvent& b) {
        if (a.learner_id != b.learner_id) return a.learner_id < b.learner_id;
        if (a.item_id != b.item_id) return a.item_id < b.item_id;
        return a.ts < b.ts;
    });
    auto last = std::unique(events.begin(), events.end(), [](const ReviewEvent& a, const ReviewEvent& b) {
        return a.learner_id == b.learner_id && a.item_id == b.item_id && a.ts == b.ts;
    });
    const auto removed = static_cast<std::size_t>(std::distance(last, events.end()));
    events.erase(last, events.end());
    return removed;
}

// Groups a stream into study sessions. Learners may be interleaved, but each
// learner's events must be in nondecreasing ts order. A gap >= gap_seconds
// since that learner's previous event starts a new session; a repeated item
// inside a session is not listed twice.
inline std::vector<StudySession> sessionize(const std::vector<ReviewEvent>& events,
                                            std::int64_t gap_seconds = kDefaultSessionGapSeconds) {
    if (gap_seconds <= 0) throw Error(ErrorCode::InvalidArgument, "gap_seconds must be > 0");

    struct Open {
        std::size_t session_index;
        std::int64_t last_ts;
    };
    std::vector<StudySession> sessions;
    std::unordered_map<std::string, Open> open;

    for (const auto& event : events) {
        auto it = open.find(event.learner_id);
        if (it != open.end() && event.ts < it->second.last_ts) {
            throw Error(ErrorCode::UnsortedInput, "events of learner '" + event.learner_id +
                                                      "' are not sorted by ts");
        }
        if (it == open.end() || event.ts - it->second.last_ts >= gap_seconds) {
            sessions.push_back(StudySession{event.learner_id, event.ts, {}, {}});
            open[event.learner_id] = Open{sessions.size() - 1, event.ts};
            it = open.find(event.learner_id);
        }
        auto& session = sessions[it->second.session_index];
        it->second.last_ts = event.ts;
        if (std::find(session.items.begin(), session.items.end(), event.item_id) == session.items.end()) {
            session.items.push_back(event.item_id);
            session.recalls.push_back(event.recall);
        }
    }
    return sessions;
}

} // namespace spaced
