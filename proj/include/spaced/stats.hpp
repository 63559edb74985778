#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "spaced/error.hpp"

namespace spaced {

// 1-based ranks with ties sharing their mean rank.
inline std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        i = j + 1;
    }
    return ranks;
}

struct MannWhitneyResult {
    double u = 0.0;         // U statistic of the first sample
    double p_value = 1.0;   // two-sided
    bool exact = false;     // permutation distribution rather than normal approximation
    bool degenerate = false; // every value identical; p forced to 1
};

inline constexpr std::size_t kMannWhitneyExactLimit = 20;

namespace detail {

// Two-sided permutation p-value of U over all ways to choose |x| of the pooled
// (mid)ranks. Works on doubled ranks so that sums stay integral.
inline double exact_mann_whitney_p(const std::vector<double>& ranks, std::size_t nx, double u) {
    const std::size_t total = ranks.size();
    std::vector<int> doubled(total);
    int max_sum = 0;
    for (std::size_t i = 0; i < total; ++i) {
        doubled[i] = static_cast<int>(std::lround(2.0 * ranks[i]));
        max_sum += doubled[i];
    }
    // ways[k][s]: number of k-subsets of the ranks seen so far with doubled sum s
    std::vector<std::vector<double>> ways(nx + 1, std::vector<double>(static_cast<std::size_t>(max_sum) + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < total; ++i) {
        for (std::size_t k = std::min(nx, i + 1); k >= 1; --k) {
            auto& row = ways[k];
            const auto& prev = ways[k - 1];
            for (int s = max_sum; s >= doubled[i]; --s) row[static_cast<std::size_t>(s)] += prev[static_cast<std::size_t>(s - doubled[i])];
        }
    }
    const auto ny = static_cast<std::int64_t>(total - nx);
    const auto nxi = static_cast<std::int64_t>(nx);
    // 2U = 2R - nx(nx+1); distance from the mean nx*ny/2, doubled.
    const std::int64_t observed = std::llabs(std::llround(2.0 * u) - nxi * ny);
    double extreme = 0.0;
    double all = 0.0;
    for (int s = 0; s <= max_sum; ++s) {
        const double count = ways[nx][static_cast<std::size_t>(s)];
        if (count == 0.0) continue;
        all += count;
        const std::int64_t u2 = s - nxi * (nxi + 1);
        if (std::llabs(u2 - nxi * ny) >= observed) extreme += count;
    }
    return std::min(1.0, extreme / all);
}

} // namespace detail

// Normal approximation with tie and continuity corrections.
inline double mann_whitney_normal_p(double u, std::size_t nx, std::size_t ny, double tie_term) {
    const double n = static_cast<double>(nx + ny);
    const double mean = 0.5 * static_cast<double>(nx * ny);
    const double variance = static_cast<double>(nx * ny) / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if (!(variance > 0.0)) return 1.0;
    const double z = std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(variance);
    return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

// Sum of t^3 - t over tie groups of the pooled sample.
inline double tie_correction_term(std::vector<double> pooled) {
    std::sort(pooled.begin(), pooled.end());
    double term = 0.0;
    std::size_t i = 0;
    while (i < pooled.size()) {
        std::size_t j = i;
        while (j + 1 < pooled.size() && pooled[j + 1] == pooled[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        term += t * t * t - t;
        i = j + 1;
    }
    return term;
}

// U from rank sums with midranks. Exact permutation p for |x| + |y| <= 20,
// normal approximation beyond.
inline MannWhitneyResult mann_whitney_u(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw Error(ErrorCode::InvalidArgument, "both samples must be non-empty");
    std::vector<double> pooled(x.begin(), x.end());
    pooled.insert(pooled.end(), y.begin(), y.end());
    const auto ranks = midranks(pooled);

    const double nx = static_cast<double>(x.size());
    const double rank_sum = std::accumulate(ranks.begin(), ranks.begin() + static_cast<std::ptrdiff_t>(x.size()), 0.0);

    MannWhitneyResult result;
    result.u = rank_sum - nx * (nx + 1.0) / 2.0;
    if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled.front(); })) {
        result.degenerate = true;
        result.p_value = 1.0;
        return result;
    }
    if (pooled.size() <= kMannWhitneyExactLimit) {
        result.exact = true;
        result.p_value = detail::exact_mann_whitney_p(ranks, x.size(), result.u);
    } else {
        result.p_value = mann_whitney_normal_p(result.u, x.size(), y.size(), tie_correction_term(pooled));
    }
    return result;
}

// Quantile with linear interpolation between order statistics.
inline double quantile(std::vector<double> values, double prob) {
    if (values.empty()) throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
    std::sort(values.begin(), values.end());
    const double position = prob * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(position));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = position - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

inline double pearson_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorCode::UndefinedCorrelation, "need at least two paired values");
    }
    const double n = static_cast<double>(a.size());
    const double mean_a = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mean_b = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - mean_a) * (b[i] - mean_b);
        saa += (a[i] - mean_a) * (a[i] - mean_a);
        sbb += (b[i] - mean_b) * (b[i] - mean_b);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) throw Error(ErrorCode::UndefinedCorrelation, "zero variance");
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double spearman_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) {
        throw Error(ErrorCode::UndefinedCorrelation, "need at least two paired values");
    }
    const auto ra = midranks(a);
    const auto rb = midranks(b);
    return pearson_correlation(ra, rb);
}

} // namespace spaced
