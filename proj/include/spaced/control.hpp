#pragma once

// Optimal item selection for a single learner.
//
// With a quadratic penalty on the probability of failing an item upon review
// and on the selection probability itself, the optimal probability of putting
// item i into the next session is
//
//   p_i = (1 - m_i) / sqrt(q),   q >= 1
//
// The rest of this header checks the stochastic-control derivation behind that
// formula numerically: the closed-form cost-to-go J_d of the parameterised
// loss family satisfies the HJB equation at every non-singular state, and the
// family's optimal policy tends to the formula above as d -> 1.

#include <cmath>
#include <cstdint>
#include <vector>

#include "spaced/error.hpp"
#include "spaced/memory.hpp"

namespace spaced {

struct ControlConfig {
    double q = 1.0;

    void validate() const {
        if (!(q >= 1.0) || !std::isfinite(q)) {
            throw Error(ErrorCode::InvalidArgument, "q must be finite and >= 1");
        }
    }
};

inline double optimal_selection_probability(double recall, const ControlConfig& cfg) {
    cfg.validate();
    if (!(recall >= 0.0 && recall <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "recall probability must lie in [0, 1]");
    }
    return (1.0 - recall) / std::sqrt(cfg.q);
}

// Current recall estimate for an item. Items never reviewed count as fully
// forgotten (m = 0). A rate collapsed to zero by alpha = 1 gives m = 1.
inline double estimated_recall(const MemoryState& state, const ModelParams& params,
                               std::int64_t now_ts) {
    if (!state.last_review_ts) {
        params.initial_rate(state.item_id); // still reject unknown items
        return 0.0;
    }
    if (now_ts < *state.last_review_ts) {
        throw Error(ErrorCode::OutOfOrderEvent, "now precedes the last review of '" +
                                                    state.item_id + "'");
    }
    const double rate = scaled_rate(params.initial_rate(state.item_id), params.alpha, params.beta,
                                    state.n_correct, state.n_incorrect);
    return recall_probability(rate, seconds_to_days(now_ts - *state.last_review_ts), params.kind);
}

inline std::vector<double> select_probabilities(const std::vector<MemoryState>& states,
                                                const ModelParams& params,
                                                const ControlConfig& cfg, std::int64_t now_ts) {
    cfg.validate();
    std::vector<double> probabilities;
    probabilities.reserve(states.size());
    for (const auto& state : states) {
        probabilities.push_back(
            optimal_selection_probability(estimated_recall(state, params, now_ts), cfg));
    }
    return probabilities;
}

// State and loss-family parameters at which the HJB equation is evaluated.
struct HjbPoint {
    double m = 0.5;     // recall probability, (0, 1)
    double n = 1.0;     // forgetting rate, > 0
    double delta = 0.0; // days since last review
    double u = 1.0;     // study intensity, > 0
    double d = 2.0;     // loss-family parameter, > 0 and != 1
    double c1 = 1.0;
    double c2 = 1.0;
};

namespace detail {

// -m^2 + 2m - d; J_d has a pole where this vanishes.
inline double pole_term(double m, double d) { return -m * m + 2.0 * m - d; }

inline void require_regular(double m, double d) {
    if (!(d > 0.0) || d == 1.0) {
        throw Error(ErrorCode::SingularPoint, "loss-family parameter d must be > 0 and != 1");
    }
    if (pole_term(m, d) == 0.0) {
        throw Error(ErrorCode::SingularPoint, "-m^2 + 2m - d vanishes");
    }
}

inline double cost_to_go_at(double m, double n, double d, double c1, double c2, double q) {
    return std::sqrt(q) * (c1 * std::log(n) + c2 * std::log(d) / pole_term(m, d));
}

} // namespace detail

// J_d = sqrt(q) (c1 log n + c2 log d / (-m^2 + 2m - d)); independent of t and delta.
inline double cost_to_go(const HjbPoint& point, const ControlConfig& cfg) {
    cfg.validate();
    detail::require_regular(point.m, point.d);
    if (!(point.n > 0.0)) throw Error(ErrorCode::InvalidArgument, "forgetting rate must be > 0");
    return detail::cost_to_go_at(point.m, point.n, point.d, point.c1, point.c2, cfg.q);
}

// Analytic dJ_d/dm.
inline double cost_to_go_dm(const HjbPoint& point, const ControlConfig& cfg) {
    cfg.validate();
    detail::require_regular(point.m, point.d);
    const double pole = detail::pole_term(point.m, point.d);
    return -std::sqrt(cfg.q) * point.c2 * (2.0 - 2.0 * point.m) * std::log(point.d) / (pole * pole);
}

// Loss-family components at a point.
struct LossFamilyTerms {
    double g_inner = 0.0; // bracket inside g_d, before the positive part
    double g_squared = 0.0;
    double h = 0.0;
};

inline LossFamilyTerms loss_family_terms(const HjbPoint& point, double alpha, double beta,
                                         const ControlConfig& cfg) {
    detail::require_regular(point.m, point.d);
    const double m = point.m;
    const double log_d = std::log(point.d);
    const double pole = detail::pole_term(m, point.d);

    LossFamilyTerms terms;
    terms.g_inner = point.c2 * log_d / pole - point.c2 * log_d / (1.0 - point.d) +
                    point.c1 * m * std::log((1.0 + beta) / (1.0 - alpha)) -
                    point.c1 * std::log1p(beta);
    const double positive = std::max(terms.g_inner, 0.0);
    terms.g_squared = 0.5 * point.u * positive * positive;
    terms.h = -std::sqrt(cfg.q) * (m * point.n / (1.0 + point.delta)) * point.c2 *
              (2.0 - 2.0 * m) * log_d / (pole * pole);
    return terms;
}

// Optimal selection probability for loss family member d, in its closed form.
inline double family_selection_probability(double m, double d, double c1, double c2, double alpha,
                                           double beta, const ControlConfig& cfg) {
    cfg.validate();
    HjbPoint point;
    point.m = m;
    point.d = d;
    point.c1 = c1;
    point.c2 = c2;
    const auto terms = loss_family_terms(point, alpha, beta, cfg);
    return std::max(terms.g_inner, 0.0) / std::sqrt(cfg.q);
}

// Left-hand side of the HJB equation for J = J_d and loss l_d, with the
// minimising selection probability substituted. The minimiser is derived from
// the jump of J (J evaluated before and after a review), not from the closed
// form above, so the two routes check each other.
inline double hjb_residual(const HjbPoint& point, double alpha, double beta,
                           const ControlConfig& cfg) {
    cfg.validate();
    if (!(alpha >= 0.0 && alpha < 1.0) || !(beta >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need 0 <= alpha < 1 and beta >= 0");
    }
    if (!(point.n > 0.0) || !(point.u > 0.0) || !(point.delta >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need n > 0, u > 0, delta >= 0");
    }
    detail::require_regular(point.m, point.d);

    const double q = cfg.q;
    const double m = point.m;
    const double j_now = detail::cost_to_go_at(m, point.n, point.d, point.c1, point.c2, q);
    const double j_recalled =
        detail::cost_to_go_at(1.0, (1.0 - alpha) * point.n, point.d, point.c1, point.c2, q);
    const double j_forgot =
        detail::cost_to_go_at(1.0, (1.0 + beta) * point.n, point.d, point.c1, point.c2, q);

    // E[J after review] - J = -gain
    const double gain = j_now - j_recalled * m - j_forgot * (1.0 - m);
    const double p = std::max(gain / q, 0.0);

    const double dj_dt = 0.0;
    const double dj_ddelta = 0.0;
    const double dj_dm = cost_to_go_dm(point, cfg);
    const double drift = -(m * point.n / (1.0 + point.delta)) * dj_dm;

    const auto terms = loss_family_terms(point, alpha, beta, cfg);
    const double loss = terms.h + terms.g_squared + 0.5 * q * p * p * point.u;
    return dj_dt + drift + dj_ddelta + loss - gain * p * point.u;
}

// Constants that turn the d -> 1 limit of the family into (1 - m)/sqrt(q).
struct LimitConstants {
    double c1 = 0.0;
    double c2 = 0.0;
};

inline LimitConstants limit_constants(double alpha, double beta) {
    if (!(alpha >= 0.0 && alpha < 1.0) || !(beta >= 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "need 0 <= alpha < 1 and beta >= 0");
    }
    const double log_ratio = std::log((1.0 - alpha) / (1.0 + beta));
    if (log_ratio == 0.0) {
        throw Error(ErrorCode::UndefinedConstants, "alpha = beta = 0 leaves c1, c2 undefined");
    }
    return {1.0 / log_ratio, std::log1p(-alpha) / log_ratio};
}

// |p*_d(m) - (1 - m)/sqrt(q)| with the limit constants.
inline double limit_check(double m, double alpha, double beta, const ControlConfig& cfg,
                          double d_near_one) {
    if (!(m > 0.0 && m < 1.0)) throw Error(ErrorCode::InvalidArgument, "need 0 < m < 1");
    const auto constants = limit_constants(alpha, beta);
    const double family =
        family_selection_probability(m, d_near_one, constants.c1, constants.c2, alpha, beta, cfg);
    return std::abs(family - optimal_selection_probability(m, cfg));
}

struct ResidualSample {
    double m = 0.0;
    double n = 0.0;
    double delta = 0.0;
    double residual = 0.0;
};

struct ResidualGridSpec {
    int points_per_axis = 10;
    double m_lo = 0.05, m_hi = 0.95;
    double n_lo = 0.1, n_hi = 10.0;
    double delta_lo = 0.0, delta_hi = 30.0;
    double singular_band = 1e-3; // skip |-m^2 + 2m - d| below this
    double u = 1.0;
};

// Residuals on a tensor grid strictly inside the (m, n, delta) box.
inline std::vector<ResidualSample> residual_grid(double d, double c1, double c2, double alpha,
                                                 double beta, const ControlConfig& cfg,
                                                 const ResidualGridSpec& grid = {}) {
    if (grid.points_per_axis < 1) throw Error(ErrorCode::InvalidArgument, "grid must be >= 1");
    const int k = grid.points_per_axis;
    auto interior = [k](double lo, double hi, int i) {
        return lo + (hi - lo) * static_cast<double>(i + 1) / static_cast<double>(k + 1);
    };

    std::vector<ResidualSample> samples;
    samples.reserve(static_cast<std::size_t>(k) * k * k);
    for (int i = 0; i < k; ++i) {
        const double m = interior(grid.m_lo, grid.m_hi, i);
        if (std::abs(detail::pole_term(m, d)) < grid.singular_band) continue;
        for (int j = 0; j < k; ++j) {
            const double n = interior(grid.n_lo, grid.n_hi, j);
            for (int l = 0; l < k; ++l) {
                const double delta = interior(grid.delta_lo, grid.delta_hi, l);
                HjbPoint point{m, n, delta, grid.u, d, c1, c2};
                samples.push_back({m, n, delta, hjb_residual(point, alpha, beta, cfg)});
            }
        }
    }
    return samples;
}

} // namespace spaced
