// Command-line front end: train / baseline / sweep / report.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <tuple>

#include <CLI11.hpp>

#include "ehcrn/ehcrn.hpp"

namespace fs = std::filesystem;
using namespace ehcrn;

namespace {

enum ExitCode { kOk = 0, kUsage = 1, kConfigError = 2, kRuntimeError = 3 };

struct CommonOptions {
    std::string config;
    std::string recipe;
    std::string seeds;
    std::size_t episodes = 0;
    std::string output;
    bool trace = false;
    std::size_t checkpoint_every = 0;
    unsigned jobs = 0;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("-c,--config", o.config, "config file (key = value lines)");
    cmd->add_option("-r,--recipe", o.recipe, "built-in preset: convergence-A, vs-random, lambda-sweep, capacity-rho-sweep");
    cmd->add_option("-s,--seed,--seeds", o.seeds, "root seed(s), e.g. 7 or 1..10 or 1,4,9");
    cmd->add_option("-e,--episodes", o.episodes, "episodes per run");
    cmd->add_option("-o,--output", o.output, "output directory");
    cmd->add_flag("--trace", o.trace, "write per-slot trace CSVs");
    cmd->add_option("--checkpoint-every", o.checkpoint_every, "save a checkpoint every N episodes");
    cmd->add_option("-j,--jobs", o.jobs, "concurrent cells");
}

ExperimentSpec build_spec(const CommonOptions& o) {
    ExperimentSpec spec = o.config.empty() ? parse_config("") : load_config(o.config);
    if (!o.recipe.empty()) {
        if (!o.config.empty()) throw ConfigError("give either --config or --recipe, not both");
        apply_recipe(spec, o.recipe);
    }
    try {
        if (!o.seeds.empty()) spec.seeds = parse_seeds(o.seeds);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("--seeds: ") + e.what());
    }
    if (o.episodes > 0) spec.agent.episodes = o.episodes;
    if (!o.output.empty()) spec.output_dir = o.output;
    if (o.trace) spec.trace = true;
    if (o.checkpoint_every > 0) spec.checkpoint_every = o.checkpoint_every;
    if (o.jobs > 0) spec.jobs = o.jobs;
    try {
        spec.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return spec;
}

int run(ExperimentSpec spec) {
    std::cerr << "running '" << spec.name << "': " << plan_cells(spec).size() << " cell(s), "
              << spec.agent.episodes << " episodes each -> " << spec.output_dir.string() << '\n';
    const auto bundle = run_experiment(spec);
    if (bundle.failed) {
        std::cerr << "error: " << bundle.failure << " (partial results written)\n";
        return kRuntimeError;
    }
    for (double outer : spec.outer_points()) {
        for (double v : spec.sweep_points()) {
            for (PolicyKind p : {PolicyKind::Dqn, PolicyKind::Random}) {
                const auto cells = bundle.select(p, outer, v);
                if (cells.empty()) continue;
                const auto curve = aggregate(cells, spec.window);
                std::cout << to_string(p);
                if (spec.outer_sweep != SweepVariable::None) std::cout << ' ' << to_string(spec.outer_sweep) << '=' << outer;
                if (spec.sweep != SweepVariable::None) std::cout << ' ' << to_string(spec.sweep) << '=' << v;
                std::cout << "  final moving average " << curve.back().moving_avg << " over " << cells.size()
                          << " seed(s)\n";
            }
        }
    }
    return kOk;
}

/// Summarize every *_runs.csv under a directory: mean of the last K episodes per seed.
int report(const fs::path& input, std::size_t last) {
    if (!fs::exists(input)) {
        std::cerr << "error: no such directory " << input << '\n';
        return kRuntimeError;
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(input)) {
        const auto name = e.path().filename().string();
        if (e.is_regular_file() && name.size() > 9 && name.ends_with("_runs.csv")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "error: no *_runs.csv files under " << input << '\n';
        return kRuntimeError;
    }
    std::ofstream summary(input / "summary.csv", std::ios::binary);
    summary << "file,sweep_value,n_seeds,last_episodes,mean_return,stderr_return\n";
    std::cout << "file  sweep_value  seeds  mean(last " << last << ")  stderr\n";
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        const auto rows = read_runs_csv(in);
        std::map<std::pair<double, std::uint64_t>, std::vector<double>> series;
        for (const auto& r : rows) series[{r.sweep_value, r.seed}].push_back(r.metrics.episode_return);
        std::map<double, std::vector<double>> per_value;
        for (const auto& [key, s] : series) {
            const std::size_t k = std::min(last, s.size());
            per_value[key.first].push_back(stats::mean(std::span(s).last(k)));
        }
        const auto rel = fs::relative(f, input).string();
        for (const auto& [value, finals] : per_value) {
            const double m = stats::mean(finals);
            const double se = stats::standard_error(finals);
            std::cout << rel << "  " << value << "  " << finals.size() << "  " << m << "  " << se << '\n';
            summary << rel << ',' << format_double(value) << ',' << finals.size() << ',' << last << ','
                    << format_double(m) << ',' << format_double(se) << '\n';
        }
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Energy-harvesting underlay cognitive radio: DQN training and experiments"};
    app.require_subcommand(1);

    CommonOptions train_opts, baseline_opts, sweep_opts;
    auto* train = app.add_subcommand("train", "train a DQN agent (one run per seed, no sweep)");
    add_common(train, train_opts);
    auto* baseline = app.add_subcommand("baseline", "evaluate the random policy");
    add_common(baseline, baseline_opts);
    auto* sweep = app.add_subcommand("sweep", "run a full experiment (sweep x seeds), e.g. a recipe");
    add_common(sweep, sweep_opts);
    auto* rep = app.add_subcommand("report", "summarize the CSV outputs of a run directory");
    std::string report_dir = "results";
    std::size_t report_last = 100;
    rep->add_option("-i,--input", report_dir, "run directory");
    rep->add_option("--last", report_last, "episodes at the end of each run to average")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kUsage;
    }

    try {
        if (*train) {
            auto spec = build_spec(train_opts);
            spec.sweep = SweepVariable::None;
            spec.outer_sweep = SweepVariable::None;
            spec.run_dqn = true;
            spec.run_baseline = false;
            return run(spec);
        }
        if (*baseline) {
            auto spec = build_spec(baseline_opts);
            spec.sweep = SweepVariable::None;
            spec.outer_sweep = SweepVariable::None;
            spec.run_dqn = false;
            spec.run_baseline = true;
            return run(spec);
        }
        if (*sweep) return run(build_spec(sweep_opts));
        if (*rep) return report(report_dir, report_last);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kUsage;
}
