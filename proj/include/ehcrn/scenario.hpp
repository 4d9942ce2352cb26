#pragma once

#include <array>
#include <cmath>
#include <string>

#include "ehcrn/error.hpp"

namespace ehcrn {

/// Fading parameters (rate of the exponential power-gain law) for every link.
struct FadingRates {
    double s = 0.1;    ///< SU-Tx -> SU-Rx
    double p1r = 0.1;  ///< PU1-Tx -> SU-Rx
    double p1s = 0.1;  ///< PU1-Tx -> SU-Tx
    double p2s = 0.1;  ///< PU2-Tx -> SU-Tx
    double p1 = 0.1;   ///< PU1-Tx -> PU-Rx1
    double p2 = 0.1;   ///< PU2-Tx -> PU-Rx2
    double sp1 = 0.1;  ///< SU-Tx -> PU-Rx1
    double sp2 = 0.1;  ///< SU-Tx -> PU-Rx2

    void set_all(double xi) { s = p1r = p1s = p2s = p1 = p2 = sp1 = sp2 = xi; }
};

/// Physical constants of one scenario. Defaults are the reference parameter set.
struct ScenarioConfig {
    int slots = 20;              ///< N
    int pu1_slots = 10;          ///< A, PU1 holds slots 1..A
    double pu_power_max = 1.0;   ///< P_max [W]
    double lambda1 = 0.1;        ///< harvest threshold for PU1 [W]
    double lambda2 = 0.1;        ///< harvest threshold for PU2 [W]
    double rho = 0.4;            ///< time-switching factor
    double eta1 = 0.9;
    double eta2 = 0.9;
    double slot_duration = 1.0;  ///< T_s [s]
    double noise = 1.0;          ///< N0 [W]
    double interference1 = 0.5;  ///< I_p1 [W]
    double interference2 = 0.5;  ///< I_p2 [W]
    double ambient_max = 0.2;    ///< E_max [J]
    double battery_max = 0.5;    ///< C_max [J]
    double battery_init = 0.1;   ///< C_i [J]
    FadingRates xi;
    double penalty = 1.0;        ///< phi
    int power_levels = 10;       ///< K
    double su_power_max = 1.0;   ///< top of the SU power grid [W]
    /// When false, a transmit attempt that fails only the battery check earns
    /// 0 instead of -phi.
    bool penalize_battery_infeasible = true;

    std::size_t action_count() const { return static_cast<std::size_t>(power_levels) + 1; }

    /// SU transmit power for grid level k in [0, K).
    double power_level(int k) const { return su_power_max * (k + 1) / power_levels; }

    /// Throws InvalidParameter naming the first violated invariant.
    void validate() const {
        using detail::require;
        auto positive = [](double v, const char* name) {
            require(std::isfinite(v) && v > 0.0, std::string(name) + " must be positive");
        };
        require(slots >= 1, "N must be at least 1");
        require(pu1_slots >= 0 && pu1_slots <= slots,
                "A=" + std::to_string(pu1_slots) + " violates 0 <= A <= N (N=" + std::to_string(slots) + ")");
        require(rho > 0.0 && rho < 1.0, "rho=" + std::to_string(rho) + " violates the time-switching bound 0 < rho < 1");
        positive(pu_power_max, "P_max");
        positive(lambda1, "lambda1");
        positive(lambda2, "lambda2");
        positive(eta1, "eta1");
        positive(eta2, "eta2");
        require(eta1 <= 1.0 && eta2 <= 1.0, "harvesting efficiencies must not exceed 1");
        positive(slot_duration, "T_s");
        positive(noise, "N0");
        positive(interference1, "I_p1");
        positive(interference2, "I_p2");
        positive(ambient_max, "E_max");
        positive(battery_max, "C_max");
        require(battery_init >= 0.0 && battery_init <= battery_max, "C_i must satisfy 0 <= C_i <= C_max");
        for (double r : {xi.s, xi.p1r, xi.p1s, xi.p2s, xi.p1, xi.p2, xi.sp1, xi.sp2}) {
            positive(r, "fading parameter xi");
        }
        positive(penalty, "phi");
        require(power_levels >= 1, "power_levels must be at least 1");
        positive(su_power_max, "P_su_max");
    }
};

} // namespace ehcrn
