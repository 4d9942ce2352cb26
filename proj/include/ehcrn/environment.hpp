#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ehcrn/error.hpp"
#include "ehcrn/random.hpp"
#include "ehcrn/scenario.hpp"

namespace ehcrn {

class InvalidSlot : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class InvalidAction : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class HarvestSource { PuPlusAmbient, AmbientOnly };

// ---------------------------------------------------------------------------
// Per-slot physics
// ---------------------------------------------------------------------------

/// 1 when PU1 holds the channel in slot t (1-based), 0 when PU2 does.
inline int pu_occupancy(int slot, int pu1_slots, int total_slots) {
    if (slot < 1 || slot > total_slots) {
        throw InvalidSlot("slot " + std::to_string(slot) + " outside 1.." + std::to_string(total_slots));
    }
    return slot <= pu1_slots ? 1 : 0;
}

/// PU harvesting is enabled iff the active PU's power reaches the threshold.
inline HarvestSource harvest_source(double pu_power, double threshold) {
    return pu_power >= threshold ? HarvestSource::PuPlusAmbient : HarvestSource::AmbientOnly;
}

/// Fraction of the slot left for information transfer (mu).
inline double slot_time_share(HarvestSource source, double rho) {
    detail::require(rho > 0.0 && rho < 1.0, "rho must satisfy 0 < rho < 1");
    return source == HarvestSource::PuPlusAmbient ? 1.0 - rho : 1.0;
}

/// Achievable SU rate [bits] while PU1 is active; PU1 interferes at SU-Rx.
inline double rate_pu1_active(double power, double g_s, double g_p1r, double pu1_power, double noise, double mu,
                              double slot_duration) {
    return mu * slot_duration * std::log2(1.0 + power * g_s / (noise + pu1_power * g_p1r));
}

/// Achievable SU rate [bits] while PU2 is active; PU2 interference at SU-Rx is neglected.
inline double rate_pu2_active(double power, double g_s, double noise, double mu, double slot_duration) {
    return mu * slot_duration * std::log2(1.0 + power * g_s / noise);
}

/// Energy harvested from the active PU's signal during the rho fraction of the slot.
inline double ts_harvest_energy(double rho, double slot_duration, double pu_power, double eta, double g_pis,
                                HarvestSource source = HarvestSource::PuPlusAmbient) {
    if (source == HarvestSource::AmbientOnly) {
        return 0.0;
    }
    return rho * slot_duration * pu_power * eta * g_pis;
}

inline double ambient_harvest_energy(RandomStream& stream, double ambient_max) {
    detail::require(ambient_max >= 0.0, "E_max must be non-negative");
    return stream.uniform(0.0, ambient_max);
}

/// Battery content at the start of the next slot. kappa = 1 harvests, 0 transmits.
inline double battery_update(double battery, int kappa, double harvested, double mu, double power,
                             double slot_duration, double battery_max) {
    const double next =
        kappa == 1 ? battery + harvested : battery - (mu * power) * slot_duration;
    if (next < 0.0) {
        throw std::logic_error("battery_update: transmission drove the battery negative");
    }
    return std::min(next, battery_max);
}

// ---------------------------------------------------------------------------
// State, action, outcome
// ---------------------------------------------------------------------------

/// Power gains of all eight links for one slot.
struct ChannelDraw {
    double g_s = 0.0;
    double g_p1r = 0.0;
    double g_p1s = 0.0;
    double g_p2s = 0.0;
    double g_p1 = 0.0;
    double g_p2 = 0.0;
    double g_sp1 = 0.0;
    double g_sp2 = 0.0;

    static ChannelDraw sample(RandomStream& stream, const FadingRates& xi) {
        ChannelDraw d;
        d.g_s = stream.exponential(xi.s);
        d.g_p1r = stream.exponential(xi.p1r);
        d.g_p1s = stream.exponential(xi.p1s);
        d.g_p2s = stream.exponential(xi.p2s);
        d.g_p1 = stream.exponential(xi.p1);
        d.g_p2 = stream.exponential(xi.p2);
        d.g_sp1 = stream.exponential(xi.sp1);
        d.g_sp2 = stream.exponential(xi.sp2);
        return d;
    }

    bool operator==(const ChannelDraw&) const = default;
};

/// What the SU-Tx observes at the start of a slot.
///
/// Flattened order (see `to_array`):
///   0 nu, 1 E_h(t-1), 2 C_t, 3 g_s, 4 g_p1r, 5 g_p1s, 6 g_p2s, 7 g_sp1, 8 g_sp2, 9 g_p1, 10 g_p2
struct EnvObservation {
    static constexpr std::size_t size = 11;

    int nu = 0;
    double harvested_prev = 0.0;
    double battery = 0.0;
    ChannelDraw gains;

    std::array<double, size> to_array() const {
        return {static_cast<double>(nu), harvested_prev, battery, gains.g_s, gains.g_p1r, gains.g_p1s,
                gains.g_p2s, gains.g_sp1, gains.g_sp2, gains.g_p1, gains.g_p2};
    }

    bool operator==(const EnvObservation&) const = default;
};

/// kappa = 1 harvests; kappa = 0 transmits at grid level power_index.
/// Flat index: 0 is harvest, k in 1..K transmits at level k-1.
struct Action {
    int kappa = 1;
    int power_index = 0;

    static Action harvest() { return {1, 0}; }
    static Action transmit(int level) { return {0, level}; }

    static Action from_index(std::size_t index, int power_levels) {
        if (index > static_cast<std::size_t>(power_levels)) {
            throw InvalidAction("action index " + std::to_string(index) + " outside 0.." +
                                std::to_string(power_levels));
        }
        return index == 0 ? harvest() : transmit(static_cast<int>(index) - 1);
    }

    std::size_t index() const { return kappa == 1 ? 0 : static_cast<std::size_t>(power_index) + 1; }

    bool operator==(const Action&) const = default;
};

/// Everything that happened inside one slot.
struct SlotInfo {
    int episode = 0;
    int slot = 0;
    int nu = 0;
    int kappa = 0;
    double power = 0.0;        ///< SU transmit power (0 when harvesting)
    double mu = 1.0;
    double rate = 0.0;         ///< bits delivered (0 unless a feasible transmission)
    double reward = 0.0;
    double battery_before = 0.0;
    double battery_after = 0.0;
    double energy_ts = 0.0;    ///< credited from PU signal
    double energy_ambient = 0.0;
    double energy_spent = 0.0;
    double pu_power = 0.0;
    bool battery_violation = false;
    bool interference_violation = false;

    bool violation() const { return battery_violation || interference_violation; }
};

struct SlotOutcome {
    double reward = 0.0;
    EnvObservation next_observation;
    bool terminal = false;
    bool truncated = false;
    SlotInfo info;
};

/// Running per-episode energy account.
struct EnergyLedger {
    double initial = 0.0;
    double harvested = 0.0;  ///< gross E_h over harvest slots
    double credited = 0.0;   ///< what actually entered the battery after the cap
    double spent = 0.0;      ///< mu * P * T_s over successful transmissions
};

inline constexpr const char* kTraceHeader =
    "episode,slot,nu,kappa,P,mu,reward,C_before,C_after,E_TS,E_ambient,violation_flag";

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

/// Slotted underlay CRN with a time-switching energy-harvesting SU transmitter.
///
/// Randomness is drawn from three streams (channels, PU power, ambient energy)
/// whose consumption does not depend on the actions taken, so runs that differ
/// only in policy or in A / lambda / rho / C_max see the same realizations.
class CognitiveRadioEnv {
public:
    using Observation = EnvObservation;

    CognitiveRadioEnv(ScenarioConfig config, std::uint64_t seed)
        : CognitiveRadioEnv(std::move(config), RandomStream(seed, "channels"), RandomStream(seed, "pu_power"),
                            RandomStream(seed, "ambient")) {}

    CognitiveRadioEnv(ScenarioConfig config, RandomStream channels, RandomStream pu_power, RandomStream ambient)
        : config_(std::move(config)),
          channels_(std::move(channels)),
          pu_power_stream_(std::move(pu_power)),
          ambient_(std::move(ambient)) {
        config_.validate();
    }

    const ScenarioConfig& config() const { return config_; }

    std::size_t observation_size() const { return EnvObservation::size; }
    std::size_t action_count() const { return config_.action_count(); }

    int slot() const { return slot_; }
    int episode() const { return episode_; }
    const EnvObservation& observation() const { return obs_; }
    double pu_power() const { return pu_power_; }
    const EnergyLedger& ledger() const { return ledger_; }
    const std::vector<SlotInfo>& episode_log() const { return log_; }

    /// Optional per-slot CSV trace; writes the header immediately.
    void set_trace(std::ostream* sink) {
        trace_ = sink;
        if (trace_ != nullptr) {
            *trace_ << kTraceHeader << '\n';
        }
    }

    EnvObservation reset() {
        ++episode_;
        slot_ = 1;
        battery_ = config_.battery_init;
        harvested_prev_ = 0.0;
        done_ = false;
        ledger_ = EnergyLedger{config_.battery_init, 0.0, 0.0, 0.0};
        log_.clear();
        draw_slot();
        return obs_;
    }

    SlotOutcome step(std::size_t action_index) { return step(Action::from_index(action_index, config_.power_levels)); }

    SlotOutcome step(const Action& action) {
        if (slot_ == 0 || done_) {
            throw std::logic_error("step() called without an active episode; call reset()");
        }
        if ((action.kappa != 0 && action.kappa != 1) ||
            (action.kappa == 0 && (action.power_index < 0 || action.power_index >= config_.power_levels))) {
            throw InvalidAction("malformed action (kappa=" + std::to_string(action.kappa) +
                                ", power_index=" + std::to_string(action.power_index) + ")");
        }

        const ScenarioConfig& c = config_;
        const bool pu1 = obs_.nu == 1;
        const double threshold = pu1 ? c.lambda1 : c.lambda2;
        const double eta = pu1 ? c.eta1 : c.eta2;
        const double g_pis = pu1 ? obs_.gains.g_p1s : obs_.gains.g_p2s;
        const double g_spi = pu1 ? obs_.gains.g_sp1 : obs_.gains.g_sp2;
        const double interference_cap = pu1 ? c.interference1 : c.interference2;

        const HarvestSource source = harvest_source(pu_power_, threshold);
        const double mu = slot_time_share(source, c.rho);
        // Drawn every slot so stream position is independent of the action.
        const double ambient = ambient_harvest_energy(ambient_, c.ambient_max);

        SlotInfo info;
        info.episode = episode_;
        info.slot = slot_;
        info.nu = obs_.nu;
        info.kappa = action.kappa;
        info.mu = mu;
        info.pu_power = pu_power_;
        info.battery_before = battery_;

        double harvested = 0.0;
        if (action.kappa == 1) {
            info.energy_ts = ts_harvest_energy(c.rho, c.slot_duration, pu_power_, eta, g_pis, source);
            info.energy_ambient = ambient;
            harvested = info.energy_ts + info.energy_ambient;
            battery_ = battery_update(battery_, 1, harvested, mu, 0.0, c.slot_duration, c.battery_max);
            ledger_.harvested += harvested;
            ledger_.credited += battery_ - info.battery_before;
            info.reward = 0.0;
        } else {
            const double power = c.power_level(action.power_index);
            info.power = power;
            info.battery_violation = !(power * c.slot_duration <= battery_);
            info.interference_violation = !(power * g_spi <= interference_cap);
            if (!info.violation()) {
                info.rate = pu1 ? rate_pu1_active(power, obs_.gains.g_s, obs_.gains.g_p1r, pu_power_, c.noise, mu,
                                                  c.slot_duration)
                                : rate_pu2_active(power, obs_.gains.g_s, c.noise, mu, c.slot_duration);
                info.energy_spent = (mu * power) * c.slot_duration;
                battery_ = battery_update(battery_, 0, 0.0, mu, power, c.slot_duration, c.battery_max);
                ledger_.spent += info.energy_spent;
                info.reward = info.rate;
            } else if (!info.interference_violation && !c.penalize_battery_infeasible) {
                info.reward = 0.0;
            } else {
                info.reward = -c.penalty;
            }
        }
        info.battery_after = battery_;
        harvested_prev_ = harvested;

        if (trace_ != nullptr) {
            write_trace_row(info);
        }
        log_.push_back(info);

        ++slot_;
        done_ = slot_ > c.slots;
        draw_slot();

        SlotOutcome out;
        out.reward = info.reward;
        out.next_observation = obs_;
        out.terminal = done_;
        out.info = info;
        return out;
    }

    /// Network-facing view of an observation: gains scaled by their mean,
    /// battery by C_max, last harvest by its typical upper scale.
    void encode(const EnvObservation& obs, std::span<double> out) const {
        if (out.size() != EnvObservation::size) {
            throw ShapeError("encode: expected 11 outputs");
        }
        const ScenarioConfig& c = config_;
        const double mean_ts = c.rho * c.slot_duration * c.pu_power_max * std::max(c.eta1, c.eta2) *
                               (1.0 / std::min(c.xi.p1s, c.xi.p2s));
        out[0] = obs.nu;
        out[1] = obs.harvested_prev / (c.ambient_max + mean_ts);
        out[2] = obs.battery / c.battery_max;
        out[3] = obs.gains.g_s * c.xi.s;
        out[4] = obs.gains.g_p1r * c.xi.p1r;
        out[5] = obs.gains.g_p1s * c.xi.p1s;
        out[6] = obs.gains.g_p2s * c.xi.p2s;
        out[7] = obs.gains.g_sp1 * c.xi.sp1;
        out[8] = obs.gains.g_sp2 * c.xi.sp2;
        out[9] = obs.gains.g_p1 * c.xi.p1;
        out[10] = obs.gains.g_p2 * c.xi.p2;
    }

private:
    void draw_slot() {
        const ChannelDraw gains = ChannelDraw::sample(channels_, config_.xi);
        pu_power_ = pu_power_stream_.uniform(0.0, config_.pu_power_max);
        obs_.nu = slot_ <= config_.pu1_slots ? 1 : 0;
        obs_.harvested_prev = harvested_prev_;
        obs_.battery = battery_;
        obs_.gains = gains;
    }

    void write_trace_row(const SlotInfo& s) {
        *trace_ << s.episode << ',' << s.slot << ',' << s.nu << ',' << s.kappa << ',' << s.power << ',' << s.mu
                << ',' << s.reward << ',' << s.battery_before << ',' << s.battery_after << ',' << s.energy_ts << ','
                << s.energy_ambient << ',' << (s.violation() ? 1 : 0) << '\n';
    }

    ScenarioConfig config_;
    RandomStream channels_;
    RandomStream pu_power_stream_;
    RandomStream ambient_;

    int episode_ = 0;
    int slot_ = 0;
    bool done_ = false;
    double battery_ = 0.0;
    double harvested_prev_ = 0.0;
    double pu_power_ = 0.0;
    EnvObservation obs_;
    EnergyLedger ledger_;
    std::vector<SlotInfo> log_;
    std::ostream* trace_ = nullptr;
};

/// Episode return recomputed from a slot log: rates of feasible transmissions
/// split by occupancy, plus the penalties. Matches the sum of step rewards.
inline double episode_return_from_log(std::span<const SlotInfo> log) {
    double total = 0.0;
    for (const SlotInfo& s : log) {
        const double transmit = 1.0 - s.kappa;
        total += transmit * s.nu * s.rate + transmit * (1 - s.nu) * s.rate;
        total += s.reward < 0.0 ? s.reward : 0.0;
    }
    return total;
}

} // namespace ehcrn
