// homesim: command-line front end for the housing-policy simulator.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#ifdef HOMESIM_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "homesim/homesim.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<int> scenarios;
    std::optional<int> households;
    std::optional<std::string> out;
    std::string profile;
};

homesim::ExperimentConfig load(const std::string& path, const Overrides& o) {
    homesim::ExperimentConfig cfg =
        path.empty() ? homesim::config_from_json(homesim::json::object(), std::filesystem::current_path())
                     : homesim::load_config(path);
    if (o.profile == "desk") {
        cfg.cohort.n_households = 1'000;
        cfg.cohort.n_scenarios = 100;
    } else if (!o.profile.empty() && o.profile != "full") {
        throw homesim::ConfigError("unknown profile '" + o.profile + "' (expected desk or full)");
    }
    if (o.seed) cfg.cohort.seed = *o.seed;
    if (o.scenarios) cfg.cohort.n_scenarios = *o.scenarios;
    if (o.households) cfg.cohort.n_households = *o.households;
    if (o.out) cfg.outputs.dir = *o.out;
    if (auto errs = homesim::validate(cfg); !errs.empty())
        throw homesim::ConfigError("invalid configuration:", errs);
    return cfg;
}

int run(const std::string& config, const Overrides& o, int jobs, bool quiet) {
    const auto cfg = load(config, o);
    auto plan = homesim::make_plan(cfg, jobs);
    homesim::check_output_dir(cfg.outputs.dir, plan.experiment_hash);
    if (!quiet) {
        plan.progress = [](int done, int total) {
            if (done == total || done % 10 == 0)
                std::fprintf(stderr, "\r%d/%d scenario units", done, total);
            if (done == total) std::fputc('\n', stderr);
        };
    }
    const auto start = std::chrono::steady_clock::now();
    const auto result = homesim::run_experiment(plan);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    homesim::write_outputs(cfg.outputs.dir, cfg, result, {wall, jobs});
    if (!quiet) std::cout << homesim::summary_text(result);
    std::cout << "results written to " << cfg.outputs.dir << " (experiment " << result.experiment_hash
              << ")\n";
    return kExitOk;
}

void print_presets() {
    std::printf("%-14s %7s %7s %7s %7s %10s  %s\n", "policy", "delta", "eps", "alpha", "beta",
                "f_max", "access");
    for (const auto& p : homesim::policy_presets())
        std::printf("%-14s %7.2f %7.2f %7.2f %7.2f %10s  %s\n", p.name.c_str(), p.deposit, p.buffer,
                    p.min_savings, p.max_pension_share,
                    std::isinf(p.pension_cap) ? "unlimited" : homesim::fmt(p.pension_cap).c_str(),
                    std::string(homesim::to_string(p.access)).c_str());
    homesim::CohortConfig c;
    std::printf("\n%-20s", "market");
    for (int k = 0; k < homesim::kIncomeGroups; ++k) std::printf("  K%d target P(0)", k + 1);
    std::printf("\n");
    for (auto m : c.markets) {
        std::printf("%-20s", std::string(homesim::to_string(m)).c_str());
        for (int k = 0; k < homesim::kIncomeGroups; ++k)
            std::printf("  %14.0f", homesim::assign_target(m, k, c));
        std::printf("\n");
    }
}

int plotdata(const std::string& from, const std::string& kind, const std::string& out) {
    const auto rows = homesim::filter_rows(homesim::read_result_rows(from), kind);
    const auto hash = homesim::detail::existing_hash(from).value_or("");
    if (out.empty() || out == "-") {
        homesim::write_tidy(std::cout, hash, rows);
    } else {
        std::ofstream f(out, std::ios::binary);
        if (!f) throw homesim::SimulationError("cannot write '" + out + "'");
        homesim::write_tidy(f, hash, rows);
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo simulator of housing-deposit policies for a cohort of renters"};
    app.require_subcommand(1);

    std::string config;
    Overrides o;
    int jobs = 1;
    bool quiet = false;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", config, "experiment config (JSON); defaults apply when omitted");
        cmd->add_option("--seed", o.seed, "master seed");
        cmd->add_option("--scenarios", o.scenarios, "number of economic scenarios")->check(CLI::PositiveNumber);
        cmd->add_option("--households", o.households, "cohort size")->check(CLI::PositiveNumber);
        cmd->add_option("--profile", o.profile, "desk: 1,000 households, 100 scenarios");
    };

    auto* run_cmd = app.add_subcommand("run", "run an experiment and write its outputs");
    add_common(run_cmd);
    run_cmd->add_option("--jobs,-j", jobs, "worker threads")->check(CLI::PositiveNumber);
    run_cmd->add_option("--out", o.out, "output directory");
    run_cmd->add_flag("--quiet,-q", quiet, "no progress or summary");

    auto* validate_cmd = app.add_subcommand("validate", "check a config and print its resolved form");
    add_common(validate_cmd);

    app.add_subcommand("presets", "list the built-in policies and market targets");

    std::string from, kind, plot_out;
    auto* plot_cmd = app.add_subcommand("plotdata", "extract plot-ready CSV from a results directory");
    plot_cmd->add_option("--from", from, "results directory")->required();
    plot_cmd->add_option("--kind", kind, "price_ratio, group_bars, gini or npv")->required();
    plot_cmd->add_option("--out", plot_out, "output file (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    auto* active = app.get_subcommands().front();

    try {
        if (active == run_cmd) return run(config, o, jobs, quiet);
        if (active == validate_cmd) {
            const auto cfg = load(config, o);
            std::cout << homesim::config_to_json(cfg).dump(2) << "\nexperiment hash "
                      << homesim::experiment_hash(cfg) << "\n";
            return kExitOk;
        }
        if (active == plot_cmd) return plotdata(from, kind, plot_out);
        print_presets();
        return kExitOk;
    } catch (const homesim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const homesim::SimulationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
}
