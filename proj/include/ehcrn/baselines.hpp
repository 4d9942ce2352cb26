#pragma once

#include <cstdint>
#include <vector>

#include "ehcrn/agent.hpp"
#include "ehcrn/environment.hpp"
#include "ehcrn/random.hpp"

namespace ehcrn {

/// Picks harvest or a grid power uniformly at random, ignoring the observation.
class RandomPolicy {
public:
    RandomPolicy(std::size_t action_count, RandomStream stream) : actions_(action_count), stream_(std::move(stream)) {
        detail::require(action_count >= 1, "random policy needs at least one action");
    }

    std::size_t action_count() const { return actions_; }

    template <class Observation>
    std::size_t random_action(const Observation& /*obs*/) {
        return static_cast<std::size_t>(stream_.index(actions_));
    }

private:
    std::size_t actions_;
    RandomStream stream_;
};

/// Roll out the random policy without learning; rows carry epsilon = 1 and no loss.
inline std::vector<EpisodeMetrics> evaluate_policy(RandomPolicy& policy, CognitiveRadioEnv& env, std::size_t episodes,
                                                   std::size_t window = 50) {
    std::vector<EpisodeMetrics> rows;
    rows.reserve(episodes);
    for (std::size_t e = 0; e < episodes; ++e) {
        auto obs = env.reset();
        EpisodeMetrics m;
        m.episode = e + 1;
        m.epsilon = 1.0;
        for (;;) {
            const auto out = env.step(policy.random_action(obs));
            m.episode_return += out.reward;
            obs = out.next_observation;
            if (out.terminal || out.truncated) break;
        }
        rows.push_back(m);
    }
    fill_moving_average(rows, window);
    return rows;
}

inline std::vector<EpisodeMetrics> evaluate_policy(const ScenarioConfig& scenario, std::size_t episodes,
                                                   std::uint64_t seed, std::size_t window = 50) {
    CognitiveRadioEnv env(scenario, seed);
    RandomPolicy policy(scenario.action_count(), RandomStream(seed, "exploration"));
    return evaluate_policy(policy, env, episodes, window);
}

} // namespace ehcrn
