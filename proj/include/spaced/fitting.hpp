#pragma once

// Maximum-likelihood half-life regression.
//
// Each exposure is a review with a known gap since the learner's previous
// review of the same item. The model predicts its recall probability from
// the item's initial rate and the learner's prior success/failure counts, and
// the fit minimises the Bernoulli negative log-likelihood of the observed
// recalls. Parameters are optimised in an unconstrained space:
//
//   n_i(0)    = exp(theta_i)
//   1 - alpha = sigmoid(theta_alpha)
//   1 + beta  = 1 + exp(theta_beta)

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "spaced/error.hpp"
#include "spaced/memory.hpp"
#include "spaced/parallel.hpp"
#include "spaced/rng.hpp"

namespace spaced {

struct Exposure {
    std::size_t item = 0; // index into the item list
    double delta_days = 0.0;
    int n_correct = 0;   // before this review
    int n_incorrect = 0; // before this review
    int recall = 0;
};

struct ExposureSet {
    std::vector<std::string> items; // sorted
    std::vector<Exposure> exposures;
};

// Every review after a learner's first contact with an item becomes an
// exposure; the first contact has no gap and only seeds the counts.
inline ExposureSet extract_exposures(std::vector<ReviewEvent> events) {
    canonicalize_events(events);
    ExposureSet set;
    for (const auto& e : events) set.items.push_back(e.item_id);
    std::sort(set.items.begin(), set.items.end());
    set.items.erase(std::unique(set.items.begin(), set.items.end()), set.items.end());

    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < set.items.size(); ++i) index.emplace(set.items[i], i);

    std::size_t begin = 0;
    while (begin < events.size()) {
        std::size_t end = begin + 1;
        while (end < events.size() && events[end].learner_id == events[begin].learner_id &&
               events[end].item_id == events[begin].item_id) {
            ++end;
        }
        const std::size_t item = index.at(events[begin].item_id);
        int correct = events[begin].recall;
        int incorrect = 1 - events[begin].recall;
        for (std::size_t k = begin + 1; k < end; ++k) {
            set.exposures.push_back(Exposure{item,
                                             seconds_to_days(events[k].ts - events[k - 1].ts),
                                             correct, incorrect, events[k].recall});
            correct += events[k].recall;
            incorrect += 1 - events[k].recall;
        }
        begin = end;
    }
    return set;
}

// Unconstrained parameter vector: [theta_alpha, theta_beta, theta_item_0, ...].
struct FreeParams {
    static constexpr std::size_t kAlpha = 0;
    static constexpr std::size_t kBeta = 1;
    static constexpr std::size_t kFirstItem = 2;

    // Box that keeps exp/sigmoid finite and every rate strictly positive.
    static constexpr double kThetaMin = -30.0;
    static constexpr double kThetaMax = 30.0;
    static constexpr double kItemThetaMin = -16.0; // n(0) >= ~1.1e-7 per day
    static constexpr double kItemThetaMax = 9.0;   // n(0) <= ~8100 per day

    std::vector<double> theta;

    static FreeParams initial(std::size_t item_count) {
        FreeParams p;
        p.theta.assign(kFirstItem + item_count, 0.0);
        p.theta[kAlpha] = std::log(0.8 / 0.2); // alpha = 0.2
        p.theta[kBeta] = std::log(0.2);        // beta = 0.2
        return p;
    }

    std::size_t item_count() const { return theta.size() - kFirstItem; }

    void project() {
        theta[kAlpha] = std::clamp(theta[kAlpha], kThetaMin, kThetaMax);
        theta[kBeta] = std::clamp(theta[kBeta], kThetaMin, kThetaMax);
        for (std::size_t i = kFirstItem; i < theta.size(); ++i) {
            theta[i] = std::clamp(theta[i], kItemThetaMin, kItemThetaMax);
        }
    }

    double one_minus_alpha() const { return 1.0 / (1.0 + std::exp(-theta[kAlpha])); }
    double alpha() const { return 1.0 / (1.0 + std::exp(theta[kAlpha])); }
    double beta() const { return std::exp(theta[kBeta]); }

    ModelParams to_model(const std::vector<std::string>& items, ModelKind kind) const {
        ModelParams params;
        params.kind = kind;
        params.alpha = alpha();
        params.beta = beta();
        for (std::size_t i = 0; i < items.size(); ++i) {
            params.initial_rates.emplace(items[i], std::exp(theta[kFirstItem + i]));
        }
        return params;
    }
};

struct LossGradient {
    double loss = 0.0;
    std::vector<double> gradient;
};

struct LossOptions {
    ModelKind kind = ModelKind::Exponential;
    double l2_item = 0.0;
    double recall_clamp = 0.01;
    unsigned threads = 1;
};

namespace detail {
inline constexpr std::size_t kLossChunk = 4096;
}

// Negative log-likelihood plus l2_item * sum(theta_i^2) and its gradient.
// Chunk partial sums are combined in a fixed order, so the result is
// bit-identical for any thread count.
inline LossGradient loss_and_gradient(const FreeParams& params, const std::vector<Exposure>& batch,
                                      const LossOptions& options) {
    const double clamp = options.recall_clamp;
    if (!(clamp > 0.0 && clamp < 0.5)) {
        throw Error(ErrorCode::InvalidArgument, "recall_clamp must lie in (0, 0.5)");
    }
    const std::size_t dim = params.theta.size();
    for (const auto& e : batch) {
        if (!(e.delta_days >= 0.0)) throw Error(ErrorCode::InvalidArgument, "negative review gap");
        if (e.item >= params.item_count()) throw Error(ErrorCode::UnknownItem, "exposure item out of range");
    }

    const double log_keep = std::log(params.one_minus_alpha());   // log(1 - alpha)
    const double log_grow = std::log1p(params.beta());            // log(1 + beta)
    const double dlogkeep = 1.0 - params.one_minus_alpha();       // d log sigmoid / d theta
    const double dloggrow = params.beta() / (1.0 + params.beta()); // d log(1 + e^t) / d theta

    struct Partial {
        CompensatedSum loss;
        std::vector<CompensatedSum> gradient;
    };
    const std::size_t chunks = (batch.size() + detail::kLossChunk - 1) / detail::kLossChunk;
    std::vector<Partial> partials(chunks);

    parallel_for(chunks, options.threads, [&](std::size_t c) {
        Partial& part = partials[c];
        part.gradient.assign(dim, CompensatedSum{});
        const std::size_t end = std::min(batch.size(), (c + 1) * detail::kLossChunk);
        for (std::size_t k = c * detail::kLossChunk; k < end; ++k) {
            const Exposure& e = batch[k];
            const double log_rate = params.theta[FreeParams::kFirstItem + e.item] +
                                    e.n_correct * log_keep + e.n_incorrect * log_grow;
            const double rate = std::exp(log_rate);
            const double horizon = options.kind == ModelKind::Exponential ? e.delta_days
                                                                          : std::log1p(e.delta_days);
            const double m = std::exp(-rate * horizon);
            const double m_clamped = std::clamp(m, clamp, 1.0 - clamp);
            part.loss.add(e.recall == 1 ? -std::log(m_clamped) : -std::log1p(-m_clamped));
            if (m <= clamp || m >= 1.0 - clamp) continue; // flat outside the clamp

            // dL/dlog_rate = dL/dm * dm/dlog_rate, dm/dlog_rate = -rate * horizon * m
            const double dloss_dm = e.recall == 1 ? -1.0 / m : 1.0 / (1.0 - m);
            const double g = dloss_dm * (-rate * horizon * m);
            part.gradient[FreeParams::kFirstItem + e.item].add(g);
            part.gradient[FreeParams::kAlpha].add(g * e.n_correct * dlogkeep);
            part.gradient[FreeParams::kBeta].add(g * e.n_incorrect * dloggrow);
        }
    });

    CompensatedSum loss;
    std::vector<CompensatedSum> gradient(dim);
    for (const auto& part : partials) {
        loss.add(part.loss);
        for (std::size_t i = 0; i < dim; ++i) gradient[i].add(part.gradient[i]);
    }
    LossGradient out;
    out.gradient.resize(dim);
    for (std::size_t i = 0; i < dim; ++i) out.gradient[i] = gradient[i].value();
    if (options.l2_item > 0.0) {
        for (std::size_t i = FreeParams::kFirstItem; i < dim; ++i) {
            loss.add(options.l2_item * params.theta[i] * params.theta[i]);
            out.gradient[i] += 2.0 * options.l2_item * params.theta[i];
        }
    }
    out.loss = loss.value();
    return out;
}

struct FitConfig {
    ModelKind kind = ModelKind::Exponential;
    double learning_rate = 1.0;
    int epochs = 3000;
    double l2_item = 0.0;
    double recall_clamp = 0.01;
    std::uint64_t seed = 0; // perturbs the starting item rates
    unsigned threads = 1;
    double tolerance = 1e-12; // stop when the relative loss decrease falls below this

    void validate() const {
        if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidConfig, "learning_rate must be > 0");
        if (epochs <= 0) throw Error(ErrorCode::InvalidConfig, "epochs must be positive");
        if (!(l2_item >= 0.0)) throw Error(ErrorCode::InvalidConfig, "l2_item must be >= 0");
        if (!(recall_clamp > 0.0 && recall_clamp < 0.5)) {
            throw Error(ErrorCode::InvalidConfig, "recall_clamp must lie in (0, 0.5)");
        }
    }
};

struct FitReport {
    double final_loss = 0.0; // total negative log-likelihood (+ penalty)
    int epochs_run = 0;
    std::vector<double> loss_trace;
    std::size_t exposures = 0;
};

struct FitResult {
    ModelParams params;
    FitReport report;
};

// Full-batch gradient descent on the mean objective. A step that increases
// the loss is retried at half the step size; accepted steps let the step grow
// back toward learning_rate.
inline FitResult fit(const std::vector<ReviewEvent>& events, const FitConfig& cfg) {
    cfg.validate();
    if (events.empty()) throw Error(ErrorCode::EmptyDataset, "no review events");
    const ExposureSet data = extract_exposures(events);

    FreeParams params = FreeParams::initial(data.items.size());
    Rng rng(derive_seed(cfg.seed, {0x66697474ULL}));
    for (std::size_t i = FreeParams::kFirstItem; i < params.theta.size(); ++i) {
        params.theta[i] += 0.01 * (2.0 * rng.uniform() - 1.0);
    }

    const LossOptions options{cfg.kind, cfg.l2_item, cfg.recall_clamp, cfg.threads};
    const double scale = 1.0 / static_cast<double>(std::max<std::size_t>(data.exposures.size(), 1));

    FitResult result;
    result.report.exposures = data.exposures.size();
    LossGradient current = loss_and_gradient(params, data.exposures, options);
    if (!std::isfinite(current.loss)) {
        throw Error(ErrorCode::Diverged, "non-finite initial loss; try a smaller learning_rate");
    }
    result.report.loss_trace.push_back(current.loss);

    double step = cfg.learning_rate;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (double g : current.gradient) {
            if (!std::isfinite(g)) throw Error(ErrorCode::Diverged, "non-finite gradient");
        }
        bool accepted = false;
        FreeParams candidate;
        LossGradient next;
        while (step > 1e-14) {
            candidate = params;
            for (std::size_t i = 0; i < candidate.theta.size(); ++i) {
                candidate.theta[i] -= step * scale * current.gradient[i];
            }
            candidate.project();
            next = loss_and_gradient(candidate, data.exposures, options);
            if (std::isfinite(next.loss) && next.loss <= current.loss) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;

        const double improvement = current.loss - next.loss;
        params = std::move(candidate);
        current = std::move(next);
        result.report.loss_trace.push_back(current.loss);
        result.report.epochs_run = epoch + 1;
        if (improvement <= cfg.tolerance * std::max(1.0, std::abs(current.loss))) break;
        step = std::min(cfg.learning_rate, step * 1.5);
    }

    result.report.final_loss = current.loss;
    result.params = params.to_model(data.items, cfg.kind);
    return result;
}

} // namespace spaced
