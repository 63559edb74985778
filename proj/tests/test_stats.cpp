#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "spaced/stats.hpp"

using namespace spaced;

namespace {

// U by direct pair counting: pairs with x > y, ties count one half.
double pair_count_u(const std::vector<double>& x, const std::vector<double>& y) {
    double u = 0.0;
    for (double a : x) {
        for (double b : y) u += a > b ? 1.0 : (a == b ? 0.5 : 0.0);
    }
    return u;
}

// Two-sided permutation p by enumerating every split of the pooled sample.
double enumerate_p(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> pooled(x);
    pooled.insert(pooled.end(), y.begin(), y.end());
    const std::size_t n = pooled.size(), nx = x.size();
    const double mean = 0.5 * static_cast<double>(x.size() * y.size());
    const double observed = std::abs(pair_count_u(x, y) - mean);
    int extreme = 0, total = 0;
    for (unsigned mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != nx) continue;
        std::vector<double> a, b;
        for (std::size_t i = 0; i < n; ++i) ((mask >> i) & 1u ? a : b).push_back(pooled[i]);
        ++total;
        if (std::abs(pair_count_u(a, b) - mean) >= observed - 1e-9) ++extreme;
    }
    return static_cast<double>(extreme) / total;
}

std::vector<double> draw(std::mt19937_64& gen, std::size_t n, int levels) {
    std::vector<double> v(n);
    for (auto& x : v) x = static_cast<double>(gen() % static_cast<unsigned>(levels));
    return v;
}

} // namespace

TEST(Stats, Midranks) {
    const std::vector<double> v{3.0, 1.0, 3.0, 2.0};
    EXPECT_EQ(midranks(v), (std::vector<double>{3.5, 1.0, 3.5, 2.0}));
}

TEST(Stats, SimpleExactCase) {
    const std::vector<double> x{1, 2}, y{3, 4};
    const auto r = mann_whitney_u(x, y);
    EXPECT_EQ(r.u, 0.0);
    EXPECT_TRUE(r.exact);
    EXPECT_NEAR(r.p_value, 1.0 / 3.0, 1e-15);
}

TEST(Stats, MatchesEnumerationExhaustively) {
    std::mt19937_64 gen(2024);
    for (std::size_t nx = 1; nx <= 7; ++nx) {
        for (std::size_t ny = 1; nx + ny <= 8; ++ny) {
            for (int levels : {3, 100}) {
                for (int rep = 0; rep < 20; ++rep) {
                    const auto x = draw(gen, nx, levels), y = draw(gen, ny, levels);
                    const auto r = mann_whitney_u(x, y);
                    EXPECT_DOUBLE_EQ(r.u, pair_count_u(x, y));
                    EXPECT_NEAR(r.p_value, enumerate_p(x, y), 1e-12) << nx << ' ' << ny;
                    const auto flipped = mann_whitney_u(y, x);
                    EXPECT_DOUBLE_EQ(r.u + flipped.u, static_cast<double>(nx * ny));
                    EXPECT_NEAR(r.p_value, flipped.p_value, 1e-12);
                }
            }
        }
    }
}

TEST(Stats, ExactPathUpToLimit) {
    std::mt19937_64 gen(3);
    const auto x = draw(gen, 9, 50), y = draw(gen, 11, 50);
    const auto r = mann_whitney_u(x, y);
    EXPECT_TRUE(r.exact);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    const auto big = mann_whitney_u(draw(gen, 15, 50), draw(gen, 15, 50));
    EXPECT_FALSE(big.exact);
}

TEST(Stats, NormalApproximationCloseToExactForLargerSamples) {
    // Around the exact/normal boundary the two agree closely.
    std::mt19937_64 gen(8);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const auto x = draw(gen, 10, 1000), y = draw(gen, 10, 1000);
        std::vector<double> pooled(x);
        pooled.insert(pooled.end(), y.begin(), y.end());
        const auto r = mann_whitney_u(x, y);
        const double normal = mann_whitney_normal_p(r.u, 10, 10, tie_correction_term(pooled));
        worst = std::max(worst, std::abs(normal - r.p_value));
    }
    EXPECT_LT(worst, 0.02);
}

TEST(Stats, NormalApproximationForTinySamples) {
    // For total size <= 8 the exact path is authoritative; the approximation
    // is only loosely close to it.
    std::mt19937_64 gen(9);
    double worst = 0.0;
    for (std::size_t nx = 1; nx <= 7; ++nx) {
        for (std::size_t ny = 1; nx + ny <= 8; ++ny) {
            for (int rep = 0; rep < 30; ++rep) {
                const auto x = draw(gen, nx, 100), y = draw(gen, ny, 100);
                std::vector<double> pooled(x);
                pooled.insert(pooled.end(), y.begin(), y.end());
                const auto r = mann_whitney_u(x, y);
                if (r.degenerate) continue;
                worst = std::max(worst, std::abs(mann_whitney_normal_p(r.u, nx, ny, tie_correction_term(pooled)) -
                                                 r.p_value));
            }
        }
    }
    EXPECT_LT(worst, 0.2);
}

TEST(Stats, DegenerateAndEmpty) {
    const std::vector<double> same{2, 2, 2};
    const auto r = mann_whitney_u(same, same);
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.p_value, 1.0);
    EXPECT_THROW(mann_whitney_u(std::vector<double>{}, same), Error);
}

TEST(Stats, Quantile) {
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.5), 2.5);
    EXPECT_DOUBLE_EQ(quantile({5}, 0.25), 5.0);
    EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4, 5}, 0.25), 2.0);
}

TEST(Stats, Correlations) {
    const std::vector<double> a{1, 2, 3, 4}, b{1, 4, 9, 16}, c{4, 3, 2, 1};
    EXPECT_NEAR(spearman_correlation(a, b), 1.0, 1e-15);
    EXPECT_NEAR(spearman_correlation(a, c), -1.0, 1e-15);
    EXPECT_LT(pearson_correlation(a, b), 1.0);
    EXPECT_THROW(pearson_correlation(a, std::vector<double>{1, 1, 1, 1}), Error);
}
