#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "ehcrn/error.hpp"
#include "ehcrn/experiment.hpp"

namespace ehcrn {

// Config files are flat `key = value` lines. `#` starts a comment. Lists are
// comma separated; seed lists also accept inclusive ranges such as `1..10`.
// Any key left out keeps its default. See README.md for the key set.

namespace config_detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_real(std::string_view v) {
    v = trim(v);
    double d = 0.0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), d);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw std::invalid_argument("expected a number, got '" + std::string(v) + "'");
    }
    return d;
}

inline long long to_int(std::string_view v) {
    v = trim(v);
    long long i = 0;
    const auto r = std::from_chars(v.data(), v.data() + v.size(), i);
    if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
        throw std::invalid_argument("expected an integer, got '" + std::string(v) + "'");
    }
    return i;
}

inline std::size_t to_count(std::string_view v) {
    const long long i = to_int(v);
    if (i < 0) throw std::invalid_argument("expected a non-negative integer");
    return static_cast<std::size_t>(i);
}

inline bool to_bool(std::string_view v) {
    v = trim(v);
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw std::invalid_argument("expected a boolean, got '" + std::string(v) + "'");
}

inline std::vector<double> to_reals(std::string_view v) {
    std::vector<double> out;
    for (auto part : split_view(v, ',')) {
        if (!trim(part).empty()) out.push_back(to_real(part));
    }
    return out;
}

inline std::vector<std::size_t> to_counts(std::string_view v) {
    std::vector<std::size_t> out;
    for (auto part : split_view(v, ',')) {
        if (!trim(part).empty()) out.push_back(to_count(part));
    }
    return out;
}

} // namespace config_detail

/// Parse a seed list such as "1,2,5" or "1..10" (or a mix).
inline std::vector<std::uint64_t> parse_seeds(std::string_view text) {
    using namespace config_detail;
    std::vector<std::uint64_t> out;
    for (auto part : split_view(text, ',')) {
        part = trim(part);
        if (part.empty()) continue;
        const auto dots = part.find("..");
        if (dots == std::string_view::npos) {
            out.push_back(static_cast<std::uint64_t>(to_int(part)));
            continue;
        }
        const long long lo = to_int(part.substr(0, dots));
        const long long hi = to_int(part.substr(dots + 2));
        if (lo < 0 || hi < lo) throw std::invalid_argument("bad seed range '" + std::string(part) + "'");
        for (long long s = lo; s <= hi; ++s) out.push_back(static_cast<std::uint64_t>(s));
    }
    if (out.empty()) throw std::invalid_argument("empty seed list");
    return out;
}

/// Built-in experiment presets, written in the config syntax.
inline const std::map<std::string, std::string>& recipe_presets() {
    static const std::map<std::string, std::string> presets{
        {"convergence-A",
         "sweep = A\nvalues = 5, 15\nrho = 0.5\nlambda = 0.1\nC_max = 0.5\nseeds = 1..10\n"},
        {"vs-random",
         "sweep = none\nA = 10\nrho = 0.4\nlambda = 0.1\nC_max = 0.5\nbaseline = true\nseeds = 1..10\n"},
        {"lambda-sweep",
         "sweep = lambda\nvalues = 0.1, 0.5, 0.9\nA = 10\nrho = 0.4\nC_max = 0.5\nseeds = 1..10\n"},
        {"capacity-rho-sweep",
         "sweep = C_max\nvalues = 0.1, 0.3, 0.5, 0.7\nouter_sweep = rho\nouter_values = 0.4, 0.8\n"
         "A = 10\nlambda = 0.1\nseeds = 1..10\n"},
    };
    return presets;
}

namespace config_detail {

using Setter = std::function<void(ExperimentSpec&, std::string_view)>;

inline const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        auto real = [&t](const char* key, auto member) {
            t[key] = [member](ExperimentSpec& s, std::string_view v) { member(s) = to_real(v); };
        };
        // Scenario
        t["N"] = [](ExperimentSpec& s, std::string_view v) { s.scenario.slots = static_cast<int>(to_int(v)); };
        t["A"] = [](ExperimentSpec& s, std::string_view v) { s.scenario.pu1_slots = static_cast<int>(to_int(v)); };
        real("P_max", [](ExperimentSpec& s) -> double& { return s.scenario.pu_power_max; });
        t["lambda"] = [](ExperimentSpec& s, std::string_view v) { s.scenario.lambda1 = s.scenario.lambda2 = to_real(v); };
        real("lambda1", [](ExperimentSpec& s) -> double& { return s.scenario.lambda1; });
        real("lambda2", [](ExperimentSpec& s) -> double& { return s.scenario.lambda2; });
        real("rho", [](ExperimentSpec& s) -> double& { return s.scenario.rho; });
        t["eta"] = [](ExperimentSpec& s, std::string_view v) { s.scenario.eta1 = s.scenario.eta2 = to_real(v); };
        real("eta1", [](ExperimentSpec& s) -> double& { return s.scenario.eta1; });
        real("eta2", [](ExperimentSpec& s) -> double& { return s.scenario.eta2; });
        real("T_s", [](ExperimentSpec& s) -> double& { return s.scenario.slot_duration; });
        real("N0", [](ExperimentSpec& s) -> double& { return s.scenario.noise; });
        t["I_p"] = [](ExperimentSpec& s, std::string_view v) {
            s.scenario.interference1 = s.scenario.interference2 = to_real(v);
        };
        real("I_p1", [](ExperimentSpec& s) -> double& { return s.scenario.interference1; });
        real("I_p2", [](ExperimentSpec& s) -> double& { return s.scenario.interference2; });
        real("E_max", [](ExperimentSpec& s) -> double& { return s.scenario.ambient_max; });
        real("C_max", [](ExperimentSpec& s) -> double& { return s.scenario.battery_max; });
        real("C_i", [](ExperimentSpec& s) -> double& { return s.scenario.battery_init; });
        t["xi"] = [](ExperimentSpec& s, std::string_view v) { s.scenario.xi.set_all(to_real(v)); };
        real("xi_s", [](ExperimentSpec& s) -> double& { return s.scenario.xi.s; });
        real("xi_p1r", [](ExperimentSpec& s) -> double& { return s.scenario.xi.p1r; });
        real("xi_p1s", [](ExperimentSpec& s) -> double& { return s.scenario.xi.p1s; });
        real("xi_p2s", [](ExperimentSpec& s) -> double& { return s.scenario.xi.p2s; });
        real("xi_p1", [](ExperimentSpec& s) -> double& { return s.scenario.xi.p1; });
        real("xi_p2", [](ExperimentSpec& s) -> double& { return s.scenario.xi.p2; });
        real("xi_sp1", [](ExperimentSpec& s) -> double& { return s.scenario.xi.sp1; });
        real("xi_sp2", [](ExperimentSpec& s) -> double& { return s.scenario.xi.sp2; });
        real("phi", [](ExperimentSpec& s) -> double& { return s.scenario.penalty; });
        t["power_levels"] = [](ExperimentSpec& s, std::string_view v) {
            s.scenario.power_levels = static_cast<int>(to_int(v));
        };
        real("P_su_max", [](ExperimentSpec& s) -> double& { return s.scenario.su_power_max; });
        t["penalize_battery_infeasible"] = [](ExperimentSpec& s, std::string_view v) {
            s.scenario.penalize_battery_infeasible = to_bool(v);
        };
        // Agent
        real("gamma", [](ExperimentSpec& s) -> double& { return s.agent.gamma; });
        real("alpha", [](ExperimentSpec& s) -> double& { return s.agent.alpha; });
        t["batch_size"] = [](ExperimentSpec& s, std::string_view v) { s.agent.batch_size = to_count(v); };
        t["replay_capacity"] = [](ExperimentSpec& s, std::string_view v) { s.agent.replay_capacity = to_count(v); };
        t["target_sync"] = [](ExperimentSpec& s, std::string_view v) { s.agent.target_sync = to_count(v); };
        t["warmup"] = [](ExperimentSpec& s, std::string_view v) { s.agent.warmup = to_count(v); };
        t["episodes"] = [](ExperimentSpec& s, std::string_view v) { s.agent.episodes = to_count(v); };
        real("eps_min", [](ExperimentSpec& s) -> double& { return s.agent.epsilon.eps_min; });
        real("eps_max", [](ExperimentSpec& s) -> double& { return s.agent.epsilon.eps_max; });
        real("decay_rate", [](ExperimentSpec& s) -> double& { return s.agent.epsilon.decay_rate; });
        t["decay_per_episode"] = [](ExperimentSpec& s, std::string_view v) { s.agent.decay_per_episode = to_bool(v); };
        t["hidden"] = [](ExperimentSpec& s, std::string_view v) { s.agent.hidden = to_counts(v); };
        t["activation"] = [](ExperimentSpec& s, std::string_view v) {
            v = trim(v);
            if (v == "relu") s.agent.activation = Activation::ReLU;
            else if (v == "tanh") s.agent.activation = Activation::Tanh;
            else throw std::invalid_argument("activation must be relu or tanh");
        };
        t["init"] = [](ExperimentSpec& s, std::string_view v) {
            v = trim(v);
            if (v == "he") s.agent.init = WeightInit::HeUniform;
            else if (v == "fan_in") s.agent.init = WeightInit::FanInUniform;
            else throw std::invalid_argument("init must be he or fan_in");
        };
        // Experiment
        t["name"] = [](ExperimentSpec& s, std::string_view v) { s.name = std::string(trim(v)); };
        auto sweep_var = [](std::string_view v) {
            const auto var = parse_sweep_variable(trim(v));
            if (!var) throw std::invalid_argument("sweep must be one of none, A, lambda, rho, C_max");
            return *var;
        };
        t["sweep"] = [sweep_var](ExperimentSpec& s, std::string_view v) { s.sweep = sweep_var(v); };
        t["values"] = [](ExperimentSpec& s, std::string_view v) { s.values = to_reals(v); };
        t["outer_sweep"] = [sweep_var](ExperimentSpec& s, std::string_view v) { s.outer_sweep = sweep_var(v); };
        t["outer_values"] = [](ExperimentSpec& s, std::string_view v) { s.outer_values = to_reals(v); };
        t["seeds"] = [](ExperimentSpec& s, std::string_view v) { s.seeds = parse_seeds(v); };
        t["seed"] = [](ExperimentSpec& s, std::string_view v) { s.seeds = parse_seeds(v); };
        t["window"] = [](ExperimentSpec& s, std::string_view v) { s.window = to_count(v); };
        t["output"] = [](ExperimentSpec& s, std::string_view v) { s.output_dir = std::string(trim(v)); };
        t["dqn"] = [](ExperimentSpec& s, std::string_view v) { s.run_dqn = to_bool(v); };
        t["baseline"] = [](ExperimentSpec& s, std::string_view v) { s.run_baseline = to_bool(v); };
        t["trace"] = [](ExperimentSpec& s, std::string_view v) { s.trace = to_bool(v); };
        t["checkpoint_every"] = [](ExperimentSpec& s, std::string_view v) { s.checkpoint_every = to_count(v); };
        t["jobs"] = [](ExperimentSpec& s, std::string_view v) { s.jobs = static_cast<unsigned>(to_count(v)); };
        return t;
    }();
    return table;
}

struct Entry {
    int line;
    std::string key;
    std::string value;
};

inline std::vector<Entry> tokenize(std::string_view text) {
    std::vector<Entry> out;
    int lineno = 0;
    for (auto raw : split_view(text, '\n')) {
        ++lineno;
        const auto hash = raw.find('#');
        const auto line = trim(hash == std::string_view::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError("expected 'key = value', got '" + std::string(line) + "'", lineno);
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("missing key before '='", lineno);
        out.push_back({lineno, std::string(key), std::string(trim(line.substr(eq + 1)))});
    }
    return out;
}

/// Apply every entry except `recipe`, which callers handle first.
inline void apply(ExperimentSpec& spec, const std::vector<Entry>& entries) {
    const auto& table = setters();
    for (const auto& e : entries) {
        if (e.key == "recipe") continue;
        const auto it = table.find(e.key);
        if (it == table.end()) throw ConfigError("unknown key '" + e.key + "'", e.line);
        try {
            it->second(spec, e.value);
        } catch (const std::exception& ex) {
            throw ConfigError(e.key + ": " + ex.what(), e.line);
        }
    }
}

} // namespace config_detail

/// Apply a named preset to `spec`.
inline void apply_recipe(ExperimentSpec& spec, const std::string& name) {
    const auto& presets = recipe_presets();
    const auto it = presets.find(name);
    if (it == presets.end()) throw ConfigError("unknown recipe '" + name + "'");
    config_detail::apply(spec, config_detail::tokenize(it->second));
    spec.name = name;
}

/// Parse config text on top of the reference defaults and validate the result.
/// A `recipe = <name>` line applies that preset first, whatever its position.
inline ExperimentSpec parse_config(std::string_view text) {
    const auto entries = config_detail::tokenize(text);
    ExperimentSpec spec;
    for (const auto& e : entries) {
        if (e.key == "recipe") {
            try {
                apply_recipe(spec, e.value);
            } catch (const ConfigError& ex) {
                throw ConfigError(ex.what(), e.line);
            }
        }
    }
    config_detail::apply(spec, entries);
    try {
        spec.validate();
    } catch (const InvalidParameter& ex) {
        throw ConfigError(std::string("invalid configuration: ") + ex.what());
    }
    return spec;
}

inline ExperimentSpec load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

} // namespace ehcrn
