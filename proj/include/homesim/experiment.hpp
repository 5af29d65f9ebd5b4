#pragma once

// Runs every (market, scenario) unit across a worker pool, simulating all
// policies of a scenario on the same random inputs, then folds the units in
// scenario order so results do not depend on the worker count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "homesim/cohort.hpp"
#include "homesim/error.hpp"
#include "homesim/metrics.hpp"

namespace homesim {

struct ExperimentPlan {
    SimulationSetup setup;  // market is set per unit
    std::vector<PolicyConfig> policies;  // benchmark first
    MetricsOptions metrics;
    int jobs = 1;
    std::string checkpoint_dir;  // empty: no checkpoints
    std::string experiment_hash;
    std::function<void(int done, int total)> progress;
};

// Per-quarter summary across scenarios of policy / benchmark price index.
struct PriceRatioSeries {
    std::string policy;
    std::vector<double> mean, q05, q50, q95;

    double peak() const { return mean.empty() ? 1.0 : *std::max_element(mean.begin(), mean.end()); }
};

struct PolicyDiagnostics {
    std::string policy;
    ScenarioDiagnostics totals;
    int scenarios_with_defaults = 0;
};

struct MarketResult {
    MarketStructure market = MarketStructure::SupplyConstrained;
    std::vector<PriceRatioSeries> price_ratio;
    MetricsReport report;
    std::vector<PolicyDiagnostics> diagnostics;
    bool common_random_numbers = true;  // every policy consumed the same draws
};

struct ExperimentResult {
    std::string experiment_hash;
    int scenarios = 0;
    int households = 0;
    int horizon = 0;
    std::vector<MarketResult> markets;

    const MarketResult& at(MarketStructure m) const {
        for (const auto& r : markets)
            if (r.market == m) return r;
        throw std::out_of_range("market not simulated: " + std::string(to_string(m)));
    }
};

// Everything one (market, scenario) unit contributes to the experiment.
struct UnitResult {
    std::vector<PolicySums> sums;                 // per policy
    std::vector<std::vector<double>> price_ratio;  // per policy, per quarter
    std::vector<ScenarioDiagnostics> diagnostics;  // per policy
    std::vector<std::uint64_t> digests;            // per policy
};

inline UnitResult run_unit(std::uint64_t scenario_id, const SimulationSetup& setup,
                           const std::vector<PolicyConfig>& policies, const MetricsOptions& opt) {
    const ScenarioInputs inputs = prepare_scenario(scenario_id, setup);
    const ScenarioResult bench = simulate_scenario(inputs, setup, policies.front());
    UnitResult u;
    for (std::size_t k = 0; k < policies.size(); ++k) {
        ScenarioResult other;
        if (k > 0) other = simulate_scenario(inputs, setup, policies[k]);
        const ScenarioResult& r = k == 0 ? bench : other;
        u.sums.push_back(scenario_sums(r.outcomes, bench.outcomes, opt));
        std::vector<double> ratio(r.price_index.size());
        for (std::size_t t = 0; t < ratio.size(); ++t)
            ratio[t] = r.price_index[t] / bench.price_index[t];
        u.price_ratio.push_back(std::move(ratio));
        u.diagnostics.push_back(r.diagnostics);
        u.digests.push_back(r.random_digest);
    }
    return u;
}

// Checkpoint records are JSON; doubles survive the round trip exactly.
namespace checkpoint {

inline nlohmann::json to_json(const CellSums& s) {
    return {s.households,   s.purchased,     s.purchase_age,   s.wealth,
            s.federal,      s.local,         s.ratio,          s.ratio_units,
            s.ratio_excluded, s.gini_purchase, s.gini_purchase_scenarios,
            s.gini_security, s.gini_security_scenarios};
}

inline CellSums cell_from_json(const nlohmann::json& j) {
    CellSums s;
    double* fields[] = {&s.households,   &s.purchased,     &s.purchase_age,   &s.wealth,
                        &s.federal,      &s.local,         &s.ratio,          &s.ratio_units,
                        &s.ratio_excluded, &s.gini_purchase, &s.gini_purchase_scenarios,
                        &s.gini_security, &s.gini_security_scenarios};
    if (!j.is_array() || j.size() != std::size(fields))
        throw SimulationError("malformed checkpoint cell");
    for (std::size_t i = 0; i < std::size(fields); ++i) *fields[i] = j[i].get<double>();
    return s;
}

inline nlohmann::json to_json(const UnitResult& u, const std::string& hash) {
    nlohmann::json j;
    j["experiment_hash"] = hash;
    auto& sums = j["sums"] = nlohmann::json::array();
    for (const auto& p : u.sums) {
        nlohmann::json cells = nlohmann::json::array();
        for (const auto& c : p) cells.push_back(to_json(c));
        sums.push_back(cells);
    }
    j["price_ratio"] = u.price_ratio;
    auto& diag = j["diagnostics"] = nlohmann::json::array();
    for (const auto& d : u.diagnostics)
        diag.push_back({d.defaults, d.liquidations, d.purchases, d.salary_floor_hits});
    j["digests"] = u.digests;
    return j;
}

inline UnitResult from_json(const nlohmann::json& j) {
    UnitResult u;
    for (const auto& p : j.at("sums")) {
        PolicySums s;
        if (p.size() != kCells) throw SimulationError("malformed checkpoint record");
        for (int c = 0; c < kCells; ++c) s[c] = cell_from_json(p[c]);
        u.sums.push_back(s);
    }
    u.price_ratio = j.at("price_ratio").get<std::vector<std::vector<double>>>();
    for (const auto& d : j.at("diagnostics"))
        u.diagnostics.push_back({d[0].get<int>(), d[1].get<int>(), d[2].get<int>(), d[3].get<int>()});
    u.digests = j.at("digests").get<std::vector<std::uint64_t>>();
    return u;
}

inline std::filesystem::path path_for(const std::string& dir, const std::string& hash,
                                      MarketStructure market, std::uint64_t scenario) {
    return std::filesystem::path(dir) /
           (hash + "_" + std::string(to_string(market)) + "_" + std::to_string(scenario) + ".json");
}

inline std::optional<UnitResult> load(const std::filesystem::path& p, const std::string& hash,
                                      std::size_t n_policies) {
    std::ifstream in(p);
    if (!in) return std::nullopt;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("experiment_hash").get<std::string>() != hash) return std::nullopt;
        UnitResult u = from_json(j);
        if (u.sums.size() != n_policies) return std::nullopt;
        return u;
    } catch (const std::exception&) {
        return std::nullopt;  // unreadable record: recompute the unit
    }
}

inline void save(const std::filesystem::path& p, const UnitResult& u, const std::string& hash) {
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw SimulationError("cannot write checkpoint " + tmp);
        out << to_json(u, hash).dump();
    }
    std::filesystem::rename(tmp, p);
}

} // namespace checkpoint

// Linear-interpolation quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline PriceRatioSeries summarize_ratios(const std::string& policy,
                                         const std::vector<const std::vector<double>*>& paths) {
    PriceRatioSeries s;
    s.policy = policy;
    if (paths.empty()) return s;
    const std::size_t T = paths.front()->size();
    std::vector<double> column(paths.size());
    for (std::size_t t = 0; t < T; ++t) {
        double sum = 0.0;
        for (std::size_t m = 0; m < paths.size(); ++m) {
            column[m] = (*paths[m])[t];
            sum += column[m];
        }
        std::sort(column.begin(), column.end());
        s.mean.push_back(sum / static_cast<double>(paths.size()));
        s.q05.push_back(quantile_sorted(column, 0.05));
        s.q50.push_back(quantile_sorted(column, 0.50));
        s.q95.push_back(quantile_sorted(column, 0.95));
    }
    return s;
}

inline ExperimentResult run_experiment(const ExperimentPlan& plan) {
    const auto& cohort = plan.setup.cohort;
    if (plan.policies.empty() || plan.policies.front().name != "benchmark")
        throw ConfigError("the first policy of an experiment must be the benchmark");

    struct Unit {
        MarketStructure market;
        std::uint64_t scenario;
    };
    std::vector<Unit> units;
    for (auto m : cohort.markets)
        for (int s = 0; s < cohort.n_scenarios; ++s) units.push_back({m, static_cast<std::uint64_t>(s)});

    if (!plan.checkpoint_dir.empty()) std::filesystem::create_directories(plan.checkpoint_dir);

    std::vector<UnitResult> results(units.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> done{0};
    std::mutex error_mutex, progress_mutex;
    std::exception_ptr error;

    auto worker = [&] {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= units.size()) return;
            {
                std::lock_guard lock(error_mutex);
                if (error) return;
            }
            try {
                const Unit& u = units[k];
                SimulationSetup setup = plan.setup;
                setup.market = u.market;
                std::optional<UnitResult> cached;
                std::filesystem::path cp;
                if (!plan.checkpoint_dir.empty()) {
                    cp = checkpoint::path_for(plan.checkpoint_dir, plan.experiment_hash, u.market,
                                              u.scenario);
                    cached = checkpoint::load(cp, plan.experiment_hash, plan.policies.size());
                }
                if (cached) {
                    results[k] = std::move(*cached);
                } else {
                    results[k] = run_unit(u.scenario, setup, plan.policies, plan.metrics);
                    if (!cp.empty()) checkpoint::save(cp, results[k], plan.experiment_hash);
                }
                const int n = ++done;
                if (plan.progress) {
                    std::lock_guard lock(progress_mutex);
                    plan.progress(n, static_cast<int>(units.size()));
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };

    const int jobs = std::max(1, std::min<int>(plan.jobs, static_cast<int>(units.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);

    ExperimentResult out;
    out.experiment_hash = plan.experiment_hash;
    out.scenarios = cohort.n_scenarios;
    out.households = cohort.n_households;
    out.horizon = cohort.horizon;
    const std::size_t P = plan.policies.size();
    for (auto market : cohort.markets) {
        MarketResult mr;
        mr.market = market;
        std::vector<std::pair<std::string, PolicySums>> sums;
        for (const auto& p : plan.policies) sums.push_back({p.name, PolicySums{}});
        std::vector<std::vector<const std::vector<double>*>> paths(P);
        for (const auto& p : plan.policies) mr.diagnostics.push_back({p.name, {}, 0});

        for (std::size_t k = 0; k < units.size(); ++k) {
            if (units[k].market != market) continue;
            const UnitResult& u = results[k];
            for (std::size_t p = 0; p < P; ++p) {
                sums[p].second += u.sums[p];
                paths[p].push_back(&u.price_ratio[p]);
                auto& d = mr.diagnostics[p];
                d.totals.defaults += u.diagnostics[p].defaults;
                d.totals.liquidations += u.diagnostics[p].liquidations;
                d.totals.purchases += u.diagnostics[p].purchases;
                d.totals.salary_floor_hits += u.diagnostics[p].salary_floor_hits;
                if (u.diagnostics[p].defaults > 0) ++d.scenarios_with_defaults;
                if (u.digests[p] != u.digests[0]) mr.common_random_numbers = false;
            }
        }
        for (std::size_t p = 0; p < P; ++p)
            mr.price_ratio.push_back(summarize_ratios(plan.policies[p].name, paths[p]));
        mr.report = build_report(market, sums);
        out.markets.push_back(std::move(mr));
    }
    return out;
}

} // namespace homesim
