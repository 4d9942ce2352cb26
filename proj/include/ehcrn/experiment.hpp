#pragma once

#include <atomic>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ehcrn/agent.hpp"
#include "ehcrn/baselines.hpp"
#include "ehcrn/environment.hpp"
#include "ehcrn/network.hpp"
#include "ehcrn/scenario.hpp"
#include "ehcrn/stats.hpp"

namespace ehcrn {

enum class SweepVariable { None, A, Lambda, Rho, CMax };

inline const char* to_string(SweepVariable v) {
    switch (v) {
    case SweepVariable::None: return "none";
    case SweepVariable::A: return "A";
    case SweepVariable::Lambda: return "lambda";
    case SweepVariable::Rho: return "rho";
    case SweepVariable::CMax: return "C_max";
    }
    return "none";
}

inline std::optional<SweepVariable> parse_sweep_variable(std::string_view s) {
    if (s == "none") return SweepVariable::None;
    if (s == "A") return SweepVariable::A;
    if (s == "lambda") return SweepVariable::Lambda;
    if (s == "rho") return SweepVariable::Rho;
    if (s == "C_max") return SweepVariable::CMax;
    return std::nullopt;
}

/// Copy of `base` with the swept quantity set to `value`.
inline ScenarioConfig apply_sweep(ScenarioConfig base, SweepVariable var, double value) {
    switch (var) {
    case SweepVariable::None:
        break;
    case SweepVariable::A:
        if (value != std::floor(value)) throw InvalidParameter("A sweep values must be integers");
        base.pu1_slots = static_cast<int>(value);
        break;
    case SweepVariable::Lambda:
        base.lambda1 = base.lambda2 = value;
        break;
    case SweepVariable::Rho:
        base.rho = value;
        break;
    case SweepVariable::CMax:
        base.battery_max = value;
        break;
    }
    return base;
}

enum class PolicyKind { Dqn, Random };

inline const char* to_string(PolicyKind p) { return p == PolicyKind::Dqn ? "dqn" : "random"; }

struct ExperimentSpec {
    std::string name = "custom";
    ScenarioConfig scenario;
    AgentConfig agent;
    SweepVariable sweep = SweepVariable::None;
    std::vector<double> values;          ///< empty for SweepVariable::None
    SweepVariable outer_sweep = SweepVariable::None;
    std::vector<double> outer_values;
    std::vector<std::uint64_t> seeds{1};
    std::size_t window = 50;
    std::filesystem::path output_dir = "results";
    bool run_dqn = true;
    bool run_baseline = false;
    bool trace = false;
    std::size_t checkpoint_every = 0;    ///< 0: final checkpoint only
    unsigned jobs = 1;

    /// Sweep values, or a single placeholder when nothing is swept.
    std::vector<double> sweep_points() const { return sweep == SweepVariable::None ? std::vector<double>{0.0} : values; }
    std::vector<double> outer_points() const {
        return outer_sweep == SweepVariable::None ? std::vector<double>{0.0} : outer_values;
    }

    ScenarioConfig scenario_for(double outer, double value) const {
        return apply_sweep(apply_sweep(scenario, outer_sweep, outer), sweep, value);
    }

    void validate() const {
        detail::require(!seeds.empty(), "an experiment needs at least one seed");
        detail::require(window >= 1, "window must be at least 1");
        detail::require(run_dqn || run_baseline, "nothing to run: both dqn and baseline are disabled");
        detail::require(sweep == SweepVariable::None || !values.empty(), "sweep variable given without values");
        detail::require(outer_sweep == SweepVariable::None || !outer_values.empty(),
                        "outer sweep variable given without values");
        detail::require(outer_sweep == SweepVariable::None || outer_sweep != sweep,
                        "outer and inner sweep must differ");
        agent.validate();
        for (double o : outer_points()) {
            for (double v : sweep_points()) {
                try {
                    scenario_for(o, v).validate();
                } catch (const InvalidParameter& e) {
                    std::ostringstream where;
                    if (outer_sweep != SweepVariable::None) where << to_string(outer_sweep) << '=' << o << ' ';
                    if (sweep != SweepVariable::None) where << to_string(sweep) << '=' << v << ' ';
                    throw InvalidParameter(where.str() + e.what());
                }
            }
        }
    }
};

struct CellResult {
    PolicyKind policy = PolicyKind::Dqn;
    double outer_value = 0.0;
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    std::vector<EpisodeMetrics> curve;
};

/// One point of a seed-aggregated learning curve.
struct CurvePoint {
    std::size_t episode = 0;
    double mean_return = 0.0;
    double stderr_return = 0.0;
    double moving_avg = 0.0;  ///< trailing mean of mean_return
    std::size_t seeds = 0;
};

struct ResultBundle {
    ExperimentSpec spec;
    std::vector<CellResult> cells;
    bool failed = false;
    std::string failure;

    std::vector<const CellResult*> select(PolicyKind p, double outer, double value) const {
        std::vector<const CellResult*> out;
        for (const auto& c : cells) {
            if (c.policy == p && c.outer_value == outer && c.sweep_value == value) out.push_back(&c);
        }
        return out;
    }
};

/// Mean and standard error across seeds at each episode.
inline std::vector<CurvePoint> aggregate(const std::vector<const CellResult*>& cells, std::size_t window) {
    std::vector<CurvePoint> out;
    if (cells.empty()) return out;
    std::size_t episodes = cells.front()->curve.size();
    for (const auto* c : cells) episodes = std::min(episodes, c->curve.size());
    std::vector<double> across(cells.size());
    std::vector<double> means;
    for (std::size_t e = 0; e < episodes; ++e) {
        for (std::size_t k = 0; k < cells.size(); ++k) across[k] = cells[k]->curve[e].episode_return;
        CurvePoint p;
        p.episode = e + 1;
        p.mean_return = stats::mean(across);
        p.stderr_return = stats::standard_error(across);
        p.seeds = cells.size();
        out.push_back(p);
        means.push_back(p.mean_return);
    }
    const auto ma = moving_average(means, window);
    for (std::size_t e = 0; e < out.size(); ++e) out[e].moving_avg = ma[e];
    return out;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr const char* kRunsHeader = "sweep_value,seed,episode,return,moving_avg,epsilon,mean_loss";
inline constexpr const char* kAggregateHeader = "sweep_value,episode,mean_return,stderr_return,moving_avg,n_seeds";

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("not a number: '" + std::string(s) + "'");
    }
    return v;
}

struct RunRow {
    double sweep_value = 0.0;
    std::uint64_t seed = 0;
    EpisodeMetrics metrics;
};

inline std::vector<std::string_view> split_view(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t p = 0;
    for (;;) {
        const std::size_t q = line.find(sep, p);
        out.push_back(line.substr(p, q == std::string_view::npos ? std::string_view::npos : q - p));
        if (q == std::string_view::npos) break;
        p = q + 1;
    }
    return out;
}

inline void write_runs_csv(std::ostream& os, const std::vector<const CellResult*>& cells, const std::string& comment) {
    os << "# " << comment << '\n' << kRunsHeader << '\n';
    for (const auto* c : cells) {
        for (const auto& m : c->curve) {
            os << format_double(c->sweep_value) << ',' << c->seed << ',' << m.episode << ','
               << format_double(m.episode_return) << ',' << format_double(m.moving_avg) << ','
               << format_double(m.epsilon) << ',' << format_double(m.mean_loss) << '\n';
        }
    }
}

inline void write_aggregate_csv(std::ostream& os, double sweep_value, const std::vector<CurvePoint>& curve) {
    for (const auto& p : curve) {
        os << format_double(sweep_value) << ',' << p.episode << ',' << format_double(p.mean_return) << ','
           << format_double(p.stderr_return) << ',' << format_double(p.moving_avg) << ',' << p.seeds << '\n';
    }
}

inline std::vector<RunRow> read_runs_csv(std::istream& is) {
    std::vector<RunRow> rows;
    std::string line;
    bool header = false;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != kRunsHeader) throw std::runtime_error("unexpected runs header: " + line);
            header = true;
            continue;
        }
        const auto f = split_view(line, ',');
        if (f.size() != 7) throw std::runtime_error("line " + std::to_string(lineno) + ": expected 7 fields");
        RunRow r;
        r.sweep_value = parse_double(f[0]);
        r.seed = std::stoull(std::string(f[1]));
        r.metrics.episode = std::stoull(std::string(f[2]));
        r.metrics.episode_return = parse_double(f[3]);
        r.metrics.moving_avg = parse_double(f[4]);
        r.metrics.epsilon = parse_double(f[5]);
        r.metrics.mean_loss = parse_double(f[6]);
        rows.push_back(r);
    }
    if (!header) throw std::runtime_error("runs file has no header");
    return rows;
}

inline std::string seeds_string(const std::vector<std::uint64_t>& seeds) {
    std::string s;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        if (i) s += ';';
        s += std::to_string(seeds[i]);
    }
    return s;
}

inline std::filesystem::path group_dir(const ResultBundle& b, const std::filesystem::path& root, double outer) {
    if (b.spec.outer_sweep == SweepVariable::None) return root;
    return root / (std::string(to_string(b.spec.outer_sweep)) + "=" + format_double(outer));
}

/// Write `<policy>_runs.csv` and `<policy>_aggregate.csv` for every policy and
/// outer-sweep group (one subdirectory per outer value).
inline void emit_csv(const ResultBundle& b, const std::filesystem::path& root) {
    namespace fs = std::filesystem;
    for (double outer : b.spec.outer_points()) {
        const fs::path dir = group_dir(b, root, outer);
        fs::create_directories(dir);
        for (PolicyKind p : {PolicyKind::Dqn, PolicyKind::Random}) {
            if ((p == PolicyKind::Dqn && !b.spec.run_dqn) || (p == PolicyKind::Random && !b.spec.run_baseline)) {
                continue;
            }
            std::ostringstream comment;
            comment << "experiment=" << b.spec.name << " policy=" << to_string(p)
                    << " root_seeds=" << seeds_string(b.spec.seeds) << " sweep=" << to_string(b.spec.sweep);
            if (b.spec.outer_sweep != SweepVariable::None) {
                comment << ' ' << to_string(b.spec.outer_sweep) << '=' << format_double(outer);
            }
            if (b.failed) comment << " status=partial";

            std::vector<const CellResult*> all;
            std::ofstream agg(dir / (std::string(to_string(p)) + "_aggregate.csv"), std::ios::binary);
            agg << "# " << comment.str() << " window=" << b.spec.window << '\n' << kAggregateHeader << '\n';
            for (double v : b.spec.sweep_points()) {
                const auto cells = b.select(p, outer, v);
                all.insert(all.end(), cells.begin(), cells.end());
                write_aggregate_csv(agg, v, aggregate(cells, b.spec.window));
            }
            std::ofstream runs(dir / (std::string(to_string(p)) + "_runs.csv"), std::ios::binary);
            write_runs_csv(runs, all, comment.str());
            if (!runs || !agg) throw std::runtime_error("failed writing CSV under " + dir.string());
        }
    }
}

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

struct CellTask {
    PolicyKind policy;
    double outer;
    double value;
    std::uint64_t seed;
};

inline std::string cell_stem(const ExperimentSpec& spec, const CellTask& t) {
    std::string s = to_string(t.policy);
    if (spec.sweep != SweepVariable::None) s += "_" + std::string(to_string(spec.sweep)) + "=" + format_double(t.value);
    return s + "_seed" + std::to_string(t.seed);
}

/// Train or evaluate one (policy, sweep value, seed) cell.
inline CellResult run_cell(const ExperimentSpec& spec, const CellTask& t, bool write_files) {
    namespace fs = std::filesystem;
    CellResult r{t.policy, t.outer, t.value, t.seed, {}};
    const ScenarioConfig scenario = spec.scenario_for(t.outer, t.value);
    CognitiveRadioEnv env(scenario, t.seed);

    ResultBundle probe;
    probe.spec = spec;
    const fs::path dir = group_dir(probe, spec.output_dir, t.outer);
    std::ofstream trace;
    if (write_files && spec.trace) {
        fs::create_directories(dir / "traces");
        trace.open(dir / "traces" / (cell_stem(spec, t) + ".csv"), std::ios::binary);
        trace << "# root_seed=" << t.seed << '\n';
        env.set_trace(&trace);
    }

    if (t.policy == PolicyKind::Random) {
        RandomPolicy policy(scenario.action_count(), RandomStream(t.seed, "exploration"));
        r.curve = evaluate_policy(policy, env, spec.agent.episodes, spec.window);
        return r;
    }

    const fs::path ckpt_dir = dir / "checkpoints";
    auto save = [&](const QNetwork& net, const std::string& suffix) {
        fs::create_directories(ckpt_dir);
        std::ofstream os(ckpt_dir / (cell_stem(spec, t) + suffix + ".qnet"), std::ios::binary);
        save_checkpoint(net, os);
    };
    EpisodeCallback cb;
    if (write_files && spec.checkpoint_every > 0) {
        cb = [&](const EpisodeMetrics& m, const QNetwork& net) {
            if (m.episode % spec.checkpoint_every == 0) save(net, "_ep" + std::to_string(m.episode));
        };
    }
    auto trained = train_agent(env, spec.agent, t.seed, spec.window, cb);
    if (write_files) save(trained.network, "");
    r.curve = std::move(trained.curve);
    return r;
}

inline std::vector<CellTask> plan_cells(const ExperimentSpec& spec) {
    std::vector<CellTask> tasks;
    for (double o : spec.outer_points()) {
        for (double v : spec.sweep_points()) {
            for (std::uint64_t s : spec.seeds) {
                if (spec.run_dqn) tasks.push_back({PolicyKind::Dqn, o, v, s});
                if (spec.run_baseline) tasks.push_back({PolicyKind::Random, o, v, s});
            }
        }
    }
    return tasks;
}

/// Run every (outer, value, seed, policy) cell, then aggregate and emit CSV.
/// A failing cell stops further scheduling; finished cells are still written
/// and a FAILED marker names the error.
inline ResultBundle run_experiment(const ExperimentSpec& spec, bool write_files = true) {
    spec.validate();
    ResultBundle bundle;
    bundle.spec = spec;
    const auto tasks = plan_cells(spec);
    std::vector<std::optional<CellResult>> slots(tasks.size());

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            if (stop.load()) return;
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            try {
                slots[i] = run_cell(spec, tasks[i], write_files);
            } catch (const std::exception& e) {
                std::lock_guard lock(failure_mutex);
                if (!bundle.failed) {
                    bundle.failed = true;
                    bundle.failure = cell_stem(spec, tasks[i]) + ": " + e.what();
                }
                stop = true;
            }
        }
    };
    const unsigned jobs = std::max(1u, std::min<unsigned>(spec.jobs, static_cast<unsigned>(tasks.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned j = 0; j < jobs; ++j) pool.emplace_back(worker);
    }

    for (auto& s : slots) {
        if (s) bundle.cells.push_back(std::move(*s));
    }
    if (write_files) {
        emit_csv(bundle, spec.output_dir);
        if (bundle.failed) {
            std::ofstream marker(spec.output_dir / "FAILED");
            marker << bundle.failure << '\n';
        }
    }
    return bundle;
}

} // namespace ehcrn
