#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ehcrn/environment.hpp"
#include "ehcrn/network.hpp"
#include "ehcrn/random.hpp"

namespace ehcrn {

/// What the DQN loop needs from an environment.
template <class E>
concept QEnvironment = requires(E& env, const E& cenv, const typename E::Observation& obs, std::span<double> out,
                                std::size_t action) {
    { cenv.observation_size() } -> std::convertible_to<std::size_t>;
    { cenv.action_count() } -> std::convertible_to<std::size_t>;
    { env.reset() } -> std::same_as<typename E::Observation>;
    { env.step(action).reward } -> std::convertible_to<double>;
    { env.step(action).next_observation } -> std::convertible_to<typename E::Observation>;
    { env.step(action).terminal } -> std::convertible_to<bool>;
    { env.step(action).truncated } -> std::convertible_to<bool>;
    cenv.encode(obs, out);
};

static_assert(QEnvironment<CognitiveRadioEnv>);

/// epsilon(t) = eps_min + (eps_max - eps_min) * exp(-d_r * t), t counted in slots.
struct EpsilonSchedule {
    double eps_min = 0.01;
    double eps_max = 1.0;
    double decay_rate = 0.001;

    double at(std::uint64_t step) const {
        return eps_min + (eps_max - eps_min) * std::exp(-decay_rate * static_cast<double>(step));
    }
};

inline double epsilon_at(const EpsilonSchedule& schedule, std::uint64_t step) { return schedule.at(step); }

struct AgentConfig {
    double gamma = 0.99;
    double alpha = 0.003;
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 10000;
    std::size_t target_sync = 100;
    std::size_t warmup = 500;
    std::size_t episodes = 2000;
    EpsilonSchedule epsilon;
    std::vector<std::size_t> hidden{64, 64};
    Activation activation = Activation::ReLU;
    WeightInit init = WeightInit::HeUniform;
    bool learning = true;
    /// When set, used instead of the decay schedule.
    std::optional<double> fixed_epsilon;
    /// Advance the epsilon clock once per episode instead of once per slot.
    bool decay_per_episode = false;

    void validate() const {
        using detail::require;
        require(gamma >= 0.0 && gamma <= 1.0, "gamma must lie in [0, 1]");
        require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
        require(batch_size >= 1, "batch_size must be at least 1");
        require(replay_capacity >= batch_size, "replay_capacity must be at least batch_size");
        require(target_sync >= 1, "target_sync must be at least 1");
        require(epsilon.eps_min >= 0.0 && epsilon.eps_min <= epsilon.eps_max && epsilon.eps_max <= 1.0,
                "epsilon bounds must satisfy 0 <= eps_min <= eps_max <= 1");
        require(epsilon.decay_rate >= 0.0, "decay_rate must be non-negative");
        require(!fixed_epsilon || (*fixed_epsilon >= 0.0 && *fixed_epsilon <= 1.0), "fixed epsilon must lie in [0, 1]");
    }
};

/// Fixed-capacity ring of transitions.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        detail::require(capacity > 0, "replay capacity must be positive");
        items_.reserve(capacity);
    }

    std::size_t capacity() const { return capacity_; }
    std::size_t size() const { return items_.size(); }
    bool empty() const { return items_.empty(); }

    /// Storage slot i (not age-ordered once the ring has wrapped).
    const Transition& operator[](std::size_t i) const { return items_.at(i); }

    void store(Transition t) {
        if (items_.size() < capacity_) {
            items_.push_back(std::move(t));
        } else {
            items_[cursor_] = std::move(t);
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    /// `count` distinct entries, uniformly at random.
    std::vector<const Transition*> sample(std::size_t count, RandomStream& stream) const {
        detail::require(count <= items_.size(), "cannot sample more transitions than stored");
        std::vector<std::size_t> picked;
        picked.reserve(count);
        while (picked.size() < count) {
            const auto k = static_cast<std::size_t>(stream.index(items_.size()));
            if (std::find(picked.begin(), picked.end(), k) == picked.end()) picked.push_back(k);
        }
        std::vector<const Transition*> out;
        out.reserve(count);
        for (std::size_t k : picked) out.push_back(&items_[k]);
        return out;
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> items_;
};

/// With probability epsilon a uniformly random action, otherwise the greedy
/// one (lowest index on ties).
inline std::size_t select_action(const QNetwork& net, std::span<const double> features, double epsilon,
                                 RandomStream& stream) {
    if (stream.uniform01() < epsilon) {
        return static_cast<std::size_t>(stream.index(net.output_size()));
    }
    const std::vector<double> q = net.forward(features);
    return argmax(q);
}

struct StepMetrics {
    double reward = 0.0;
    double epsilon = 0.0;
    std::optional<double> loss;
    bool done = false;
};

struct EpisodeMetrics {
    std::size_t episode = 0;  ///< 1-based
    double episode_return = 0.0;
    double moving_avg = 0.0;
    double epsilon = 0.0;     ///< exploration rate at the episode's last slot
    double mean_loss = 0.0;   ///< 0 when no update happened
};

/// Deep Q-learning with replay memory and a periodically synchronized target network.
template <QEnvironment Env>
class DqnAgent {
public:
    DqnAgent(AgentConfig config, std::size_t observation_size, std::size_t action_count, std::uint64_t seed)
        : config_((config.validate(), std::move(config))),
          exploration_(seed, "exploration"),
          replay_stream_(seed, "replay"),
          buffer_(config_.replay_capacity) {
        RandomStream init(seed, "weight_init");
        std::vector<std::size_t> dims{observation_size};
        dims.insert(dims.end(), config_.hidden.begin(), config_.hidden.end());
        dims.push_back(action_count);
        online_ = QNetwork::random(dims, init, config_.activation, config_.init);
        target_ = online_;
        features_.resize(observation_size);
        next_features_.resize(observation_size);
    }

    const AgentConfig& config() const { return config_; }
    const QNetwork& online() const { return online_; }
    QNetwork& online() { return online_; }
    const QNetwork& target() const { return target_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    std::uint64_t steps() const { return steps_; }
    std::size_t updates() const { return updates_; }

    double current_epsilon() const {
        if (config_.fixed_epsilon) return *config_.fixed_epsilon;
        return config_.epsilon.at(config_.decay_per_episode ? episodes_ : steps_);
    }

    void begin_episode(Env& env) {
        const auto obs = env.reset();
        env.encode(obs, features_);
        if (in_episode_started_) ++episodes_;
        in_episode_started_ = true;
        in_episode_ = true;
    }

    bool in_episode() const { return in_episode_; }

    /// One slot: act, observe, remember, and (once warm) learn from a sampled batch.
    StepMetrics train_step(Env& env) {
        if (!in_episode_) begin_episode(env);

        StepMetrics m;
        m.epsilon = current_epsilon();
        const std::size_t action = select_action(online_, features_, m.epsilon, exploration_);
        const auto outcome = env.step(action);
        env.encode(outcome.next_observation, next_features_);
        m.reward = outcome.reward;
        m.done = outcome.terminal || outcome.truncated;

        buffer_.store(Transition{features_, action, outcome.reward, next_features_, outcome.terminal});

        if (config_.learning && buffer_.size() >= std::max(config_.warmup, config_.batch_size)) {
            const auto batch = buffer_.sample(config_.batch_size, replay_stream_);
            LossResult lr = td_loss(online_, target_, batch, config_.gamma);
            sgd_step(online_, lr.grads, config_.alpha);
            m.loss = lr.loss;
            ++updates_;
        }

        ++steps_;
        if (steps_ % config_.target_sync == 0) {
            target_ = clone_parameters(online_);
        }

        features_.swap(next_features_);
        if (m.done) in_episode_ = false;
        return m;
    }

    /// Greedy action for an observation (no exploration, no learning).
    std::size_t greedy(const typename Env::Observation& obs, const Env& env) const {
        std::vector<double> f(online_.input_size());
        env.encode(obs, f);
        return argmax(online_.forward(f));
    }

private:
    AgentConfig config_;
    RandomStream exploration_;
    RandomStream replay_stream_;
    ReplayBuffer buffer_;
    QNetwork online_;
    QNetwork target_;
    std::vector<double> features_;
    std::vector<double> next_features_;
    std::uint64_t steps_ = 0;
    std::size_t updates_ = 0;
    std::uint64_t episodes_ = 0;
    bool in_episode_ = false;
    bool in_episode_started_ = false;
};

/// Trailing mean over at most `window` completed entries.
inline std::vector<double> moving_average(std::span<const double> series, std::size_t window) {
    detail::require(window >= 1, "moving_average window must be at least 1");
    std::vector<double> out(series.size());
    for (std::size_t i = 0; i < series.size(); ++i) {
        const std::size_t lo = i + 1 >= window ? i + 1 - window : 0;
        double s = 0.0;
        for (std::size_t k = lo; k <= i; ++k) s += series[k];
        out[i] = s / static_cast<double>(i + 1 - lo);
    }
    return out;
}

inline void fill_moving_average(std::vector<EpisodeMetrics>& rows, std::size_t window) {
    std::vector<double> r;
    r.reserve(rows.size());
    for (const auto& m : rows) r.push_back(m.episode_return);
    const auto ma = moving_average(r, window);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i].moving_avg = ma[i];
}

template <QEnvironment Env>
struct TrainResult {
    std::vector<EpisodeMetrics> curve;
    QNetwork network;
};

using EpisodeCallback = std::function<void(const EpisodeMetrics&, const QNetwork&)>;

/// Run `config.episodes` episodes of DQN training on `env`.
template <QEnvironment Env>
TrainResult<Env> train_agent(Env& env, const AgentConfig& config, std::uint64_t seed, std::size_t window = 50,
                             const EpisodeCallback& on_episode = {}) {
    DqnAgent<Env> agent(config, env.observation_size(), env.action_count(), seed);
    TrainResult<Env> result;
    result.curve.reserve(config.episodes);
    for (std::size_t e = 0; e < config.episodes; ++e) {
        agent.begin_episode(env);
        EpisodeMetrics em;
        em.episode = e + 1;
        double loss_sum = 0.0;
        std::size_t loss_count = 0;
        StepMetrics m;
        do {
            m = agent.train_step(env);
            em.episode_return += m.reward;
            em.epsilon = m.epsilon;
            if (m.loss) {
                loss_sum += *m.loss;
                ++loss_count;
            }
        } while (!m.done);
        em.mean_loss = loss_count > 0 ? loss_sum / static_cast<double>(loss_count) : 0.0;
        result.curve.push_back(em);
        if (on_episode) on_episode(em, agent.online());
    }
    fill_moving_average(result.curve, window);
    result.network = agent.online();
    return result;
}

/// Train on the cognitive-radio scenario; every stream derives from `seed`.
inline TrainResult<CognitiveRadioEnv> train(const AgentConfig& agent_config, const ScenarioConfig& scenario,
                                            std::uint64_t seed, std::size_t window = 50,
                                            const EpisodeCallback& on_episode = {}) {
    CognitiveRadioEnv env(scenario, seed);
    return train_agent(env, agent_config, seed, window, on_episode);
}

} // namespace ehcrn
