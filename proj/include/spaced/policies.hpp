#pragma once

// Session construction for the three study arms.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spaced/control.hpp"
#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/rng.hpp"

namespace spaced {

enum class PolicyKind { Select, Difficulty, Random };

constexpr std::string_view to_string(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::Select: return "select";
    case PolicyKind::Difficulty: return "difficulty";
    case PolicyKind::Random: return "random";
    }
    return "unknown";
}

inline PolicyKind parse_policy_kind(std::string_view text) {
    if (text == "select") return PolicyKind::Select;
    if (text == "difficulty") return PolicyKind::Difficulty;
    if (text == "random") return PolicyKind::Random;
    throw Error(ErrorCode::InvalidArgument, "unknown policy '" + std::string(text) + "'");
}

struct PolicySpec {
    PolicyKind kind = PolicyKind::Select;
    double q = 1.0; // SELECT only
    int session_size = 10;
    std::uint64_t seed = 0;
    std::string name; // arm label; defaults to the kind

    std::string label() const { return name.empty() ? std::string(to_string(kind)) : name; }

    void validate() const {
        if (session_size <= 0) throw Error(ErrorCode::InvalidArgument, "session_size must be positive");
        if (kind == PolicyKind::Select) ControlConfig{q}.validate();
    }
};

// Items sorted by ascending initial rate (easiest first), ties by item id.
struct DifficultyCursor {
    std::vector<std::string> ordering;
    std::size_t position = 0;

    friend bool operator==(const DifficultyCursor&, const DifficultyCursor&) = default;
};

inline DifficultyCursor make_difficulty_cursor(const ModelParams& params) {
    std::vector<std::pair<double, std::string>> keyed;
    keyed.reserve(params.initial_rates.size());
    for (const auto& [item, rate] : params.initial_rates) keyed.emplace_back(rate, item);
    std::sort(keyed.begin(), keyed.end());
    DifficultyCursor cursor;
    for (auto& [rate, item] : keyed) cursor.ordering.push_back(std::move(item));
    return cursor;
}

// Takes the next min(session_size, pool) items in circular order.
inline std::pair<std::vector<std::string>, DifficultyCursor>
build_session_difficulty(const DifficultyCursor& cursor, int session_size) {
    if (cursor.ordering.empty()) throw Error(ErrorCode::EmptyPool, "difficulty cursor has no items");
    if (session_size <= 0) throw Error(ErrorCode::InvalidArgument, "session_size must be positive");
    if (cursor.position >= cursor.ordering.size()) {
        throw Error(ErrorCode::InvalidArgument, "cursor position out of range");
    }
    const std::size_t pool = cursor.ordering.size();
    const std::size_t take = std::min(pool, static_cast<std::size_t>(session_size));
    std::vector<std::string> session;
    session.reserve(take);
    for (std::size_t k = 0; k < take; ++k) session.push_back(cursor.ordering[(cursor.position + k) % pool]);
    DifficultyCursor next = cursor;
    next.position = (cursor.position + take) % pool;
    return {std::move(session), std::move(next)};
}

// Uniform sample without replacement (partial Fisher-Yates).
inline std::vector<std::string> build_session_random(const std::vector<std::string>& pool,
                                                     int session_size, Rng& rng) {
    if (pool.empty()) throw Error(ErrorCode::EmptyPool, "item pool is empty");
    if (session_size <= 0 || static_cast<std::size_t>(session_size) > pool.size()) {
        throw Error(ErrorCode::InvalidArgument, "session_size must lie in [1, pool size]");
    }
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<std::string> session;
    session.reserve(static_cast<std::size_t>(session_size));
    for (std::size_t k = 0; k < static_cast<std::size_t>(session_size); ++k) {
        const std::size_t j = k + static_cast<std::size_t>(rng.below(order.size() - k));
        std::swap(order[k], order[j]);
        session.push_back(pool[order[k]]);
    }
    return session;
}

// Each item enters independently with its optimal selection probability. If
// more than session_size items are drawn, the highest-probability ones are
// kept; if none are drawn, the most-forgotten item is studied alone. Ties are
// broken by a random key drawn per item. The result is ordered by
// decreasing probability.
inline std::vector<std::string> build_session_select(const std::vector<MemoryState>& states,
                                                     const ModelParams& params,
                                                     const PolicySpec& spec, std::int64_t now_ts,
                                                     Rng& rng) {
    if (spec.kind != PolicyKind::Select) throw Error(ErrorCode::InvalidArgument, "policy is not SELECT");
    spec.validate();
    if (states.empty()) throw Error(ErrorCode::EmptyPool, "item pool is empty");

    const auto probabilities = select_probabilities(states, params, ControlConfig{spec.q}, now_ts);

    struct Candidate {
        double p;
        std::uint64_t tie;
        std::size_t index;
    };
    std::vector<Candidate> all;
    std::vector<Candidate> drawn;
    all.reserve(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const bool include = rng.bernoulli(probabilities[i]);
        Candidate c{probabilities[i], rng.next(), i};
        all.push_back(c);
        if (include) drawn.push_back(c);
    }
    auto by_priority = [](const Candidate& a, const Candidate& b) {
        if (a.p != b.p) return a.p > b.p;
        if (a.tie != b.tie) return a.tie < b.tie;
        return a.index < b.index;
    };
    if (drawn.empty()) {
        drawn.push_back(*std::min_element(all.begin(), all.end(), by_priority));
    }
    std::sort(drawn.begin(), drawn.end(), by_priority);
    if (drawn.size() > static_cast<std::size_t>(spec.session_size)) drawn.resize(spec.session_size);

    std::vector<std::string> session;
    session.reserve(drawn.size());
    for (const auto& c : drawn) session.push_back(states[c.index].item_id);
    return session;
}

} // namespace spaced
