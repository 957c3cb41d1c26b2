#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "efce/common.hpp"
#include "efce/game.hpp"
#include "efce/rng.hpp"

namespace efce {

// A weighted collection of scenarios defining the empirical nature law. In
// sampled mode the weights are uniform 1/M_nat; in exhaustive mode they are
// the exact p_nat probabilities and expectations computed against the sample
// are exact.
struct ScenarioSample {
    std::vector<Scenario> scenarios;
    std::vector<double> weights;
    bool exhaustive = false;

    std::size_t size() const { return scenarios.size(); }
};

// M_nat independent scenarios from p_nat. Straightforward because p_nat takes
// a product form over nature's information sets; each scenario is a seeded
// function, so storage is O(1) per scenario.
inline ScenarioSample sample_scenarios(const Game& game, int m_nat, uint64_t seed) {
    (void)game;
    if (m_nat < 1) throw DomainError("sample_scenarios requires M_nat >= 1");
    ScenarioSample out;
    out.scenarios.reserve(m_nat);
    out.weights.assign(m_nat, 1.0 / m_nat);
    for (int k = 0; k < m_nat; ++k) {
        out.scenarios.emplace_back(hash_mix(seed, 0x5ce7a110ULL, uint64_t(k)));
    }
    return out;
}

// Exact enumeration when the game supports it within the cap.
inline std::optional<ScenarioSample> exhaustive_scenarios(const Game& game, std::size_t cap) {
    auto listed = game.enumerate_scenarios(cap);
    if (!listed.has_value()) return std::nullopt;
    ScenarioSample out;
    out.exhaustive = true;
    out.scenarios.reserve(listed->size());
    out.weights.reserve(listed->size());
    for (auto& ws : *listed) {
        out.scenarios.push_back(std::move(ws.scenario));
        out.weights.push_back(ws.weight);
    }
    return out;
}

// Mean of play() over the sample: the empirical expected-utility vector
// ũ(s). Exact when the sample is exhaustive.
template <typename ProfileLike>
UtilityVector expected_utility(const Game& game, const ProfileLike& profile,
                               const ScenarioSample& sample,
                               std::size_t depth_cap = kDefaultDepthCap) {
    if (sample.size() == 0) throw DomainError("expected_utility over an empty scenario sample");
    UtilityVector total(game.num_players(), 0.0);
    UtilityVector leaf;
    for (std::size_t m = 0; m < sample.size(); ++m) {
        play_into(game, profile, sample.scenarios[m], leaf, depth_cap);
        for (std::size_t n = 0; n < total.size(); ++n) total[n] += sample.weights[m] * leaf[n];
    }
    return total;
}

}  // namespace efce
