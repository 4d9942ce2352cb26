#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ehcrn/config.hpp"
#include "ehcrn/experiment.hpp"

using namespace ehcrn;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("ehcrn_test_" + name);
    fs::remove_all(p);
    return p;
}

} // namespace

TEST(Config, EmptyTextGivesDefaults) {
    const auto spec = parse_config("");
    const ScenarioConfig d;
    EXPECT_EQ(spec.scenario.slots, d.slots);
    EXPECT_EQ(spec.scenario.pu1_slots, d.pu1_slots);
    EXPECT_EQ(spec.scenario.rho, d.rho);
    EXPECT_EQ(spec.scenario.battery_max, d.battery_max);
    EXPECT_EQ(spec.agent.episodes, 2000u);
    EXPECT_EQ(spec.agent.batch_size, 32u);
    EXPECT_EQ(spec.sweep, SweepVariable::None);
}

TEST(Config, ParsesKeysAndComments) {
    const auto spec = parse_config("# sweep over capacity\nsweep = C_max\nvalues = 0.1, 0.3\n"
                                   "rho = 0.8  # trailing comment\nseeds = 3..5\nepisodes = 10\n");
    EXPECT_EQ(spec.sweep, SweepVariable::CMax);
    EXPECT_EQ(spec.values, (std::vector<double>{0.1, 0.3}));
    EXPECT_EQ(spec.scenario.rho, 0.8);
    EXPECT_EQ(spec.seeds, (std::vector<std::uint64_t>{3, 4, 5}));
    EXPECT_EQ(spec.agent.episodes, 10u);
}

TEST(Config, RejectsOutOfRangeValues) {
    try {
        parse_config("rho = 1.3\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("rho"), std::string::npos);
    }
    try {
        parse_config("A = 25\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("A=25"), std::string::npos);
    }
}

TEST(Config, ParseErrorsCarryLineNumbers) {
    try {
        parse_config("rho = 0.5\n\nbogus_key = 3\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 3);
    }
    try {
        parse_config("rho = 0.5\nno equals sign\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 2);
    }
    try {
        parse_config("C_max = abc\n");
        FAIL();
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.line(), 1);
    }
}

TEST(Config, RecipesApplyFirstAndCanBeOverridden) {
    for (const auto& [name, text] : recipe_presets()) {
        EXPECT_NO_THROW(parse_config("recipe = " + name + "\n")) << name;
    }
    const auto spec = parse_config("episodes = 7\nrecipe = lambda-sweep\n");
    EXPECT_EQ(spec.sweep, SweepVariable::Lambda);
    EXPECT_EQ(spec.agent.episodes, 7u);
    EXPECT_EQ(spec.seeds.size(), 10u);
    EXPECT_THROW(parse_config("recipe = nope\n"), ConfigError);
}

TEST(Sweep, AppliesToScenario) {
    ScenarioConfig c;
    EXPECT_EQ(apply_sweep(c, SweepVariable::A, 15).pu1_slots, 15);
    const auto l = apply_sweep(c, SweepVariable::Lambda, 0.9);
    EXPECT_EQ(l.lambda1, 0.9);
    EXPECT_EQ(l.lambda2, 0.9);
    EXPECT_EQ(apply_sweep(c, SweepVariable::Rho, 0.8).rho, 0.8);
    EXPECT_EQ(apply_sweep(c, SweepVariable::CMax, 0.7).battery_max, 0.7);
    EXPECT_EQ(parse_sweep_variable("C_max"), SweepVariable::CMax);
    EXPECT_FALSE(parse_sweep_variable("gamma").has_value());
}

TEST(Experiment, SingleSeedSingleEpisode) {
    ExperimentSpec spec;
    spec.agent.episodes = 1;
    spec.output_dir = scratch("single");
    const auto b = run_experiment(spec);
    ASSERT_FALSE(b.failed);
    ASSERT_EQ(b.cells.size(), 1u);
    const auto agg = aggregate(b.select(PolicyKind::Dqn, 0.0, 0.0), spec.window);
    ASSERT_EQ(agg.size(), 1u);
    EXPECT_EQ(agg[0].seeds, 1u);
    EXPECT_EQ(agg[0].stderr_return, 0.0);
    std::istringstream is(slurp(spec.output_dir / "dqn_aggregate.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line[0] != '#' && line != kAggregateHeader) ++rows;
    }
    EXPECT_EQ(rows, 1);
    EXPECT_TRUE(fs::exists(spec.output_dir / "dqn_runs.csv"));
}

TEST(Experiment, RunsCsvRoundTripsAndAggregatesRecompute) {
    ExperimentSpec spec;
    spec.agent.episodes = 12;
    spec.agent.warmup = 40;
    spec.seeds = {1, 2, 3};
    spec.sweep = SweepVariable::Lambda;
    spec.values = {0.1, 0.9};
    spec.run_baseline = true;
    spec.window = 5;
    spec.output_dir = scratch("roundtrip");
    const auto b = run_experiment(spec);
    ASSERT_FALSE(b.failed);

    const std::string runs = slurp(spec.output_dir / "dqn_runs.csv");
    EXPECT_EQ(runs.substr(0, 2), "# ");
    EXPECT_NE(runs.find(std::string("\n") + kRunsHeader + "\n"), std::string::npos);
    std::istringstream is(runs);
    const auto rows = read_runs_csv(is);
    ASSERT_EQ(rows.size(), 2u * 3u * 12u);

    std::size_t i = 0;
    for (const auto& c : b.cells) {
        if (c.policy != PolicyKind::Dqn) continue;
        for (const auto& m : c.curve) {
            EXPECT_EQ(rows[i].seed, c.seed);
            EXPECT_EQ(rows[i].metrics.episode_return, m.episode_return);
            EXPECT_EQ(rows[i].metrics.moving_avg, m.moving_avg);
            ++i;
        }
    }

    // Recompute the aggregate independently from the runs file.
    for (double v : spec.values) {
        const auto agg = aggregate(b.select(PolicyKind::Dqn, 0.0, v), spec.window);
        for (std::size_t e = 0; e < agg.size(); ++e) {
            std::vector<double> xs;
            for (const auto& r : rows) {
                if (r.sweep_value == v && r.metrics.episode == e + 1) xs.push_back(r.metrics.episode_return);
            }
            ASSERT_EQ(xs.size(), 3u);
            EXPECT_NEAR(agg[e].mean_return, stats::mean(xs), 1e-12);
            EXPECT_NEAR(agg[e].stderr_return, stats::standard_error(xs), 1e-12);
        }
    }
    EXPECT_TRUE(fs::exists(spec.output_dir / "random_aggregate.csv"));
    EXPECT_NE(slurp(spec.output_dir / "dqn_aggregate.csv").find(kAggregateHeader), std::string::npos);
}

TEST(Experiment, RerunIsByteIdentical) {
    ExperimentSpec spec = parse_config("recipe = vs-random\nseeds = 1..2\nepisodes = 15\nwarmup = 40\n");
    spec.trace = true;
    const fs::path a = scratch("det_a");
    const fs::path b = scratch("det_b");
    spec.output_dir = a;
    run_experiment(spec);
    spec.output_dir = b;
    spec.jobs = 2;
    run_experiment(spec);
    std::size_t compared = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), a);
        ASSERT_TRUE(fs::exists(b / rel)) << rel;
        EXPECT_EQ(slurp(entry.path()), slurp(b / rel)) << rel;
        ++compared;
    }
    EXPECT_GE(compared, 4u);
}

TEST(Experiment, OuterSweepWritesSubdirectories) {
    ExperimentSpec spec = parse_config("recipe = capacity-rho-sweep\nseeds = 1\nepisodes = 2\n");
    spec.output_dir = scratch("outer");
    const auto b = run_experiment(spec);
    EXPECT_EQ(b.cells.size(), 8u);
    EXPECT_TRUE(fs::exists(spec.output_dir / "rho=0.4" / "dqn_aggregate.csv"));
    EXPECT_TRUE(fs::exists(spec.output_dir / "rho=0.8" / "dqn_runs.csv"));
}

TEST(Csv, FormatRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, -16.4651234, 1e-300, 0.0}) EXPECT_EQ(parse_double(format_double(v)), v);
    EXPECT_THROW(parse_double("1.5x"), std::runtime_error);
}
