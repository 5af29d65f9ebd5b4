#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "homesim/output.hpp"

using namespace homesim;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny(const std::string& policies = R"(["benchmark", "RD", "EW"])") {
    return config_from_json(json::parse(R"({"cohort": {"n_households": 25, "n_scenarios": 3},
        "dependence": {"model": "gaussian"}, "policies": )" + policies + "}"),
                            ".");
}

const ExperimentResult& tiny_result() {
    static const ExperimentResult r = run_experiment(make_plan(tiny(), 1));
    return r;
}

fs::path fresh_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / "homesim_output_test" / name;
    fs::remove_all(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

} // namespace

TEST(Output, NumberFormat) {
    EXPECT_EQ(fmt(0.0), "0");
    EXPECT_EQ(fmt(1.5), "1.5");
    EXPECT_EQ(fmt(-25.0), "-25");
    EXPECT_EQ(fmt(1.0 / 3.0), "0.3333333333333333");
    EXPECT_EQ(std::stod(fmt(0.1 + 0.2)), 0.1 + 0.2);
}

TEST(Output, TidyLayout) {
    std::ostringstream os;
    write_tidy(os, "abc", {{"supply_constrained", "RD", "K1", "purchase_age", std::nullopt, 2, 3, -1},
                           {"supply_constrained", "RD", "all", "price_ratio", 7, 1.25, 1, 0.25}});
    EXPECT_EQ(os.str(),
              "experiment_hash,market,policy,group,metric,quarter,value,baseline_value,delta\n"
              "abc,supply_constrained,RD,K1,purchase_age,,2,3,-1\n"
              "abc,supply_constrained,RD,all,price_ratio,7,1.25,1,0.25\n");
}

TEST(Output, PlotKinds) {
    const auto& r = tiny_result();
    const auto price = emit_plot_data(r, "price_ratio");
    EXPECT_EQ(price.size(), 2u * 3u * static_cast<std::size_t>(r.horizon));
    const auto bars = emit_plot_data(r, "group_bars");
    EXPECT_EQ(bars.size(), 2u * 3u * kCells * 3u);
    const auto gini = emit_plot_data(r, "gini");
    std::set<std::string> metrics;
    for (const auto& row : gini) metrics.insert(row.metric);
    EXPECT_EQ(metrics, (std::set<std::string>{"gini_purchase", "gini_security"}));
    EXPECT_EQ(emit_plot_data(r, "npv").size(), 2u * 3u * kCells * 3u);
    EXPECT_THROW(emit_plot_data(r, "scatter"), ConfigError);
}

TEST(Output, DeltaColumnIsValueLessBaseline) {
    for (const auto& row : all_rows(tiny_result())) {
        if (row.metric == "retirement_security") continue;  // a mean of ratios, not a difference
        if (row.metric == "price_ratio") {
            EXPECT_EQ(row.delta, row.value - 1.0);
            continue;
        }
        EXPECT_NEAR(row.delta, row.value - row.baseline_value,
                    1e-9 * std::max(1.0, std::abs(row.value)))
            << row.policy << ' ' << row.group << ' ' << row.metric;
    }
}

TEST(Output, BenchmarkOnlyRatiosAreOne) {
    const auto r = run_experiment(make_plan(tiny(R"(["benchmark"])"), 1));
    for (const auto& m : r.markets) {
        ASSERT_EQ(m.price_ratio.size(), 1u);
        for (double x : m.price_ratio[0].mean) EXPECT_EQ(x, 1.0);
        for (double x : m.price_ratio[0].q95) EXPECT_EQ(x, 1.0);
    }
}

TEST(Output, WritesHashedFiles) {
    const auto cfg = tiny();
    const auto dir = fresh_dir("written");
    const auto files = write_outputs(dir, cfg, tiny_result());
    for (const auto* f : {"price_ratio.csv", "metrics_supply_constrained.csv",
                          "metrics_equal_affordability.csv", "diagnostics.csv", "plot_gini.csv",
                          "summary.txt", "resolved_config.json", "manifest.json"})
        EXPECT_NE(std::find(files.begin(), files.end(), f), files.end()) << f;
    const auto hash = experiment_hash(cfg);
    EXPECT_EQ(tiny_result().experiment_hash, hash);
    for (const auto& f : files) {
        if (fs::path(f).extension() != ".csv") continue;
        std::ifstream in(dir / f);
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) EXPECT_EQ(line.substr(0, hash.size()), hash) << f;
    }
    EXPECT_EQ(detail::existing_hash(dir), hash);
    // The echoed config loads back to the same experiment.
    EXPECT_EQ(experiment_hash(load_config(dir / "resolved_config.json")), hash);
}

TEST(Output, RefusesToMixExperiments) {
    const auto dir = fresh_dir("mixed");
    write_outputs(dir, tiny(), tiny_result());
    auto other = tiny_result();
    other.experiment_hash = "0000000000000000";
    EXPECT_THROW(write_outputs(dir, tiny(), other), SimulationError);
    EXPECT_NO_THROW(write_outputs(dir, tiny(), tiny_result()));
}

TEST(Output, ReadBackMatchesPlotData) {
    const auto dir = fresh_dir("readback");
    write_outputs(dir, tiny(), tiny_result());
    const auto rows = read_result_rows(dir);
    for (const auto& kind : plot_kinds()) {
        std::ostringstream from_disk, direct;
        write_tidy(from_disk, tiny_result().experiment_hash, filter_rows(rows, kind));
        write_tidy(direct, tiny_result().experiment_hash, emit_plot_data(tiny_result(), kind));
        EXPECT_EQ(from_disk.str(), direct.str()) << kind;
        EXPECT_EQ(from_disk.str(), slurp(dir / ("plot_" + kind + ".csv"))) << kind;
    }
    EXPECT_THROW(read_result_rows(fresh_dir("empty")), ConfigError);
}

TEST(Output, JobsDoNotChangeBytes) {
    const auto cfg = tiny();
    const auto one = fresh_dir("jobs1"), four = fresh_dir("jobs4");
    write_outputs(one, cfg, run_experiment(make_plan(cfg, 1)));
    write_outputs(four, cfg, run_experiment(make_plan(cfg, 4)), {0.0, 4});
    for (const auto* f : {"price_ratio.csv", "metrics_supply_constrained.csv",
                          "metrics_equal_affordability.csv", "diagnostics.csv", "summary.txt"})
        EXPECT_EQ(slurp(one / f), slurp(four / f)) << f;
}

TEST(Output, CheckpointResume) {
    auto cfg = tiny();
    const auto cp = fresh_dir("checkpoints");
    cfg.outputs.checkpoint_dir = cp.string();
    const auto first = run_experiment(make_plan(cfg, 1));
    int files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(cp)) ++files;
    EXPECT_EQ(files, 2 * 3);

    // A resumed run reads every unit back and reports identical numbers.
    int progress_calls = 0;
    auto plan = make_plan(cfg, 1);
    plan.progress = [&](int, int) { ++progress_calls; };
    const auto resumed = run_experiment(plan);
    EXPECT_EQ(progress_calls, 6);
    const auto a = all_rows(first), b = all_rows(resumed);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].value, b[i].value) << a[i].metric;
        EXPECT_EQ(a[i].delta, b[i].delta) << a[i].metric;
    }

    // Drop one unit: it is recomputed, the others are reused.
    fs::remove(fs::directory_iterator(cp)->path());
    const auto partial = run_experiment(make_plan(cfg, 2));
    const auto c = all_rows(partial);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].value, c[i].value);
}

TEST(Output, SummaryReportsCrn) {
    const auto text = summary_text(tiny_result());
    EXPECT_NE(text.find("common random numbers: verified"), std::string::npos);
    EXPECT_NE(text.find("RD vs benchmark"), std::string::npos);
    EXPECT_EQ(text.find("benchmark vs benchmark"), std::string::npos);
}
