#pragma once

// Trial evaluation pipeline: activity filter, empirical forgetting rates,
// per-item normalisation, (review count, duration) binning and pairwise
// Mann-Whitney comparison of the arms.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/stats.hpp"

namespace spaced {

inline constexpr double kDefaultRecallEpsilon = 0.01;

// Drops every learner whose first-to-last activity spans less than
// min_active_days. The boundary itself is kept.
inline std::vector<ReviewEvent> preprocess(const std::vector<ReviewEvent>& events,
                                           double min_active_days = 2.0) {
    std::map<std::string, std::pair<std::int64_t, std::int64_t>> span;
    for (const auto& e : events) {
        auto [it, inserted] = span.try_emplace(e.learner_id, e.ts, e.ts);
        if (!inserted) {
            it->second.first = std::min(it->second.first, e.ts);
            it->second.second = std::max(it->second.second, e.ts);
        }
    }
    std::vector<ReviewEvent> kept;
    kept.reserve(events.size());
    for (const auto& e : events) {
        const auto& [first, last] = span.at(e.learner_id);
        if (seconds_to_days(last - first) >= min_active_days) kept.push_back(e);
    }
    return kept;
}

struct TimedRecall {
    std::int64_t ts = 0;
    int recall = 0;
};

// -log(m) / interval with the outcome clamped to {eps, 1 - eps}.
inline double clamped_outcome_rate(int recall, double interval_days, double epsilon) {
    const double m = std::max(epsilon, std::min(1.0 - epsilon, static_cast<double>(recall)));
    return -std::log(m) / interval_days;
}

// Rate implied by the last retention interval of a review sequence.
inline double empirical_forgetting_rate(std::span<const TimedRecall> sequence,
                                        double epsilon = kDefaultRecallEpsilon) {
    if (sequence.size() < 2) throw Error(ErrorCode::InsufficientReviews, "need at least two reviews");
    if (!(epsilon > 0.0 && epsilon < 0.5)) throw Error(ErrorCode::InvalidArgument, "epsilon must lie in (0, 0.5)");
    const auto& last = sequence[sequence.size() - 1];
    const auto& previous = sequence[sequence.size() - 2];
    if (last.ts <= previous.ts) {
        throw Error(last.ts == previous.ts ? ErrorCode::ZeroInterval : ErrorCode::UnsortedInput,
                    "last retention interval must be positive");
    }
    return clamped_outcome_rate(last.recall, seconds_to_days(last.ts - previous.ts), epsilon);
}

struct ForgettingRecord {
    std::string learner_id;
    std::string item_id;
    std::string arm;
    double n_hat = 0.0;
    double n_hat_initial = 0.0; // same estimator on the first interval
    double n_hat_normalized = std::numeric_limits<double>::quiet_NaN();
    int n_reviews = 0;
    double duration_days = 0.0;
};

// One record per (learner, item) pair with at least two reviews.
inline std::vector<ForgettingRecord> forgetting_records(std::vector<ReviewEvent> events,
                                                        const std::string& arm,
                                                        double epsilon = kDefaultRecallEpsilon) {
    canonicalize_events(events);
    std::vector<ForgettingRecord> records;
    std::vector<TimedRecall> sequence;
    std::size_t begin = 0;
    while (begin < events.size()) {
        std::size_t end = begin;
        sequence.clear();
        while (end < events.size() && events[end].learner_id == events[begin].learner_id &&
               events[end].item_id == events[begin].item_id) {
            sequence.push_back({events[end].ts, events[end].recall});
            ++end;
        }
        if (sequence.size() >= 2) {
            ForgettingRecord r;
            r.learner_id = events[begin].learner_id;
            r.item_id = events[begin].item_id;
            r.arm = arm;
            r.n_hat = empirical_forgetting_rate(sequence, epsilon);
            r.n_hat_initial = empirical_forgetting_rate(std::span(sequence).first(2), epsilon);
            r.n_reviews = static_cast<int>(sequence.size());
            r.duration_days = seconds_to_days(sequence.back().ts - sequence.front().ts);
            records.push_back(std::move(r));
        }
        begin = end;
    }
    return records;
}

struct NormalizationResult {
    std::vector<ForgettingRecord> records; // only items that passed the threshold
    std::vector<std::string> excluded_items;
};

// Divides each rate by the mean first-interval rate of its item over all
// learners (of every arm) who studied it.
inline NormalizationResult normalize(std::vector<ForgettingRecord> records,
                                     int min_learners_per_item = 5) {
    struct Accumulator {
        std::vector<double> initial;
        std::set<std::string> learners;
    };
    std::map<std::string, Accumulator> per_item;
    for (const auto& r : records) {
        auto& acc = per_item[r.item_id];
        acc.initial.push_back(r.n_hat_initial);
        acc.learners.insert(r.arm + '\x1f' + r.learner_id);
    }
    NormalizationResult result;
    std::map<std::string, double> normalizer;
    for (auto& [item, acc] : per_item) {
        // Summed in sorted order so the result does not depend on arm labels
        // or input order.
        std::sort(acc.initial.begin(), acc.initial.end());
        double sum = 0.0;
        for (double v : acc.initial) sum += v;
        if (static_cast<int>(acc.learners.size()) < min_learners_per_item) {
            result.excluded_items.push_back(item);
        } else {
            normalizer[item] = sum / static_cast<double>(acc.learners.size());
        }
    }
    for (auto& r : records) {
        auto it = normalizer.find(r.item_id);
        if (it == normalizer.end()) continue;
        r.n_hat_normalized = r.n_hat / it->second;
        result.records.push_back(std::move(r));
    }
    return result;
}

struct BinSpec {
    int n_reviews = 0;
    double duration_center = 0.0;
    double duration_halfwidth = 0.0;

    double lower() const { return duration_center - duration_halfwidth; }
    double upper() const { return duration_center + duration_halfwidth; }
    bool contains(const ForgettingRecord& r) const {
        return r.n_reviews == n_reviews && std::abs(r.duration_days - duration_center) <= duration_halfwidth;
    }
};

// Duration windows of the published comparison: 3 +/- 0.8, 5 +/- 1.2 and
// 9 +/- 2.2 days, each crossed with the given review counts.
inline std::vector<BinSpec> standard_bins(const std::vector<int>& review_counts = {2, 3, 4, 5, 6}) {
    const std::pair<double, double> windows[] = {{3.0, 0.8}, {5.0, 1.2}, {9.0, 2.2}};
    std::vector<BinSpec> bins;
    for (const auto& [center, halfwidth] : windows) {
        for (int reviews : review_counts) bins.push_back({reviews, center, halfwidth});
    }
    return bins;
}

// Windows with the same review count may touch but not overlap.
inline void validate_bins(const std::vector<BinSpec>& bins) {
    for (std::size_t i = 0; i < bins.size(); ++i) {
        if (!(bins[i].duration_halfwidth > 0.0)) throw Error(ErrorCode::InvalidBins, "halfwidth must be > 0");
        if (bins[i].n_reviews < 2) throw Error(ErrorCode::InvalidBins, "a bin needs n_reviews >= 2");
        for (std::size_t j = 0; j < i; ++j) {
            if (bins[i].n_reviews != bins[j].n_reviews) continue;
            if (std::min(bins[i].upper(), bins[j].upper()) > std::max(bins[i].lower(), bins[j].lower())) {
                throw Error(ErrorCode::InvalidBins, "bins with " + std::to_string(bins[i].n_reviews) +
                                                        " reviews overlap");
            }
        }
    }
}

using BinnedRecords = std::vector<std::map<std::string, std::vector<ForgettingRecord>>>;

// A record lands in the first bin that contains it (a record sitting exactly
// on a shared window edge goes to the earlier bin).
inline BinnedRecords bin_records(const std::vector<ForgettingRecord>& records,
                                 const std::vector<BinSpec>& bins) {
    validate_bins(bins);
    BinnedRecords binned(bins.size());
    for (const auto& r : records) {
        for (std::size_t b = 0; b < bins.size(); ++b) {
            if (bins[b].contains(r)) {
                binned[b][r.arm].push_back(r);
                break;
            }
        }
    }
    return binned;
}

struct AnalysisOptions {
    double epsilon = kDefaultRecallEpsilon;
    double min_active_days = 2.0;
    int min_learners_per_item = 5;
    double significance = 0.05;
};

struct ArmSummary {
    std::size_t bin = 0;
    std::string arm;
    std::size_t n = 0; // 0 means NO_DATA; the statistics are then NaN
    double median = std::numeric_limits<double>::quiet_NaN();
    double q25 = std::numeric_limits<double>::quiet_NaN();
    double q75 = std::numeric_limits<double>::quiet_NaN();
};

struct PairTest {
    std::size_t bin = 0;
    std::string arm_a;
    std::string arm_b;
    bool no_data = false;
    std::size_t n_a = 0;
    std::size_t n_b = 0;
    MannWhitneyResult test;
    bool significant = false;
};

struct ComparisonReport {
    std::vector<BinSpec> bins;
    std::vector<std::string> arms; // sorted
    std::vector<ArmSummary> summaries; // bin-major, arms sorted
    std::vector<PairTest> tests;       // bin-major, pairs (a < b)
    std::vector<std::string> excluded_items;
    std::map<std::string, std::size_t> learners_kept;
    std::map<std::string, std::size_t> learners_dropped;

    const ArmSummary& summary(std::size_t bin, const std::string& arm) const {
        for (const auto& s : summaries) {
            if (s.bin == bin && s.arm == arm) return s;
        }
        throw Error(ErrorCode::InvalidArgument, "no summary for arm '" + arm + "'");
    }

    // Test between two arms in a bin; the U statistic is oriented so that it
    // belongs to `first`.
    PairTest test(std::size_t bin, const std::string& first, const std::string& second) const {
        for (const auto& t : tests) {
            if (t.bin != bin) continue;
            if (t.arm_a == first && t.arm_b == second) return t;
            if (t.arm_a == second && t.arm_b == first) {
                PairTest flipped = t;
                std::swap(flipped.arm_a, flipped.arm_b);
                std::swap(flipped.n_a, flipped.n_b);
                flipped.test.u = static_cast<double>(t.n_a * t.n_b) - t.test.u;
                return flipped;
            }
        }
        throw Error(ErrorCode::InvalidArgument, "no test for arms '" + first + "', '" + second + "'");
    }
};

inline std::size_t count_learners(const std::vector<ReviewEvent>& events) {
    std::set<std::string> learners;
    for (const auto& e : events) learners.insert(e.learner_id);
    return learners.size();
}

inline ComparisonReport compare_arms(const std::map<std::string, std::vector<ReviewEvent>>& logs,
                                     const std::vector<BinSpec>& bins,
                                     const AnalysisOptions& options = {}) {
    if (logs.size() < 2) throw Error(ErrorCode::InvalidArgument, "comparison needs at least two arms");
    validate_bins(bins);

    ComparisonReport report;
    report.bins = bins;
    std::vector<ForgettingRecord> records;
    for (const auto& [arm, events] : logs) {
        report.arms.push_back(arm);
        auto kept = preprocess(events, options.min_active_days);
        const std::size_t before = count_learners(events);
        report.learners_kept[arm] = count_learners(kept);
        report.learners_dropped[arm] = before - report.learners_kept[arm];
        auto arm_records = forgetting_records(std::move(kept), arm, options.epsilon);
        records.insert(records.end(), std::make_move_iterator(arm_records.begin()),
                       std::make_move_iterator(arm_records.end()));
    }
    auto normalized = normalize(std::move(records), options.min_learners_per_item);
    report.excluded_items = std::move(normalized.excluded_items);
    const auto binned = bin_records(normalized.records, bins);

    auto values_of = [&](std::size_t b, const std::string& arm) {
        std::vector<double> values;
        auto it = binned[b].find(arm);
        if (it != binned[b].end()) {
            for (const auto& r : it->second) values.push_back(r.n_hat_normalized);
        }
        return values;
    };

    for (std::size_t b = 0; b < bins.size(); ++b) {
        for (const auto& arm : report.arms) {
            const auto values = values_of(b, arm);
            ArmSummary s;
            s.bin = b;
            s.arm = arm;
            s.n = values.size();
            if (!values.empty()) {
                s.median = quantile(values, 0.5);
                s.q25 = quantile(values, 0.25);
                s.q75 = quantile(values, 0.75);
            }
            report.summaries.push_back(s);
        }
        for (std::size_t i = 0; i < report.arms.size(); ++i) {
            for (std::size_t j = i + 1; j < report.arms.size(); ++j) {
                PairTest t;
                t.bin = b;
                t.arm_a = report.arms[i];
                t.arm_b = report.arms[j];
                const auto xa = values_of(b, t.arm_a);
                const auto xb = values_of(b, t.arm_b);
                t.n_a = xa.size();
                t.n_b = xb.size();
                if (xa.empty() || xb.empty()) {
                    t.no_data = true;
                } else {
                    t.test = mann_whitney_u(xa, xb);
                    t.significant = t.test.p_value < options.significance;
                }
                report.tests.push_back(t);
            }
        }
    }
    return report;
}

} // namespace spaced
