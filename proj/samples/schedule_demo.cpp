// Plans a week of sessions for one learner with the SELECT policy and prints
// what gets studied each day, with the learner's answers drawn from the model.

#include <cstdio>

#include "spaced/policies.hpp"
#include "spaced/simulator.hpp"

using namespace spaced;

int main() {
    ModelParams model;
    model.alpha = 0.4;
    model.beta = 0.6;
    model.initial_rates = {{"der Hund", 0.08}, {"die Katze", 0.05}, {"das Pferd", 0.2},
                           {"der Vogel", 0.12}, {"die Kuh", 0.04}, {"das Schaf", 0.3}};

    std::vector<MemoryState> states;
    for (const auto& [item, rate] : model.initial_rates) states.push_back({item, 0, 0, std::nullopt});

    const PolicySpec policy{PolicyKind::Select, 2.0, 3, 0, ""};
    Rng rng(derive_seed(2024, {1}));
    for (int day = 0; day < 7; ++day) {
        const std::int64_t now = day * 86400;
        const auto session = build_session_select(states, model, policy, now, rng);
        std::printf("day %d:", day);
        for (const auto& item : session) {
            auto& state = *std::find_if(states.begin(), states.end(), [&](const auto& s) { return s.item_id == item; });
            const double delta = state.last_review_ts ? seconds_to_days(now - *state.last_review_ts) : 0.0;
            const int recall = rng.bernoulli(ground_truth_recall(state, model, delta)) ? 1 : 0;
            state = update_on_review(state, recall, now);
            std::printf("  %s%s", item.c_str(), recall ? "" : "(x)");
        }
        std::printf("\n");
    }
}
