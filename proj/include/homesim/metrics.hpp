#pragma once

// Evaluation metrics: purchase probability and timing, retirement security,
// Gini inequality of both, and government NPVs. All deltas are policy minus
// benchmark under common random numbers.

#include <algorithm>
#include <array>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homesim/cohort.hpp"

namespace homesim {

// Cell 0 is the whole population, cells 1..5 the income groups.
inline constexpr int kCells = kIncomeGroups + 1;

inline std::string cell_name(int cell) { return "K" + std::to_string(cell); }

struct MetricsOptions {
    bool real_discounting = false;
    int imputed_purchase_quarter = 300;
};

// Sum_i Sum_j |x_i - x_j| / (2 N Sum x), evaluated on sorted values.
inline double gini(std::span<const double> values) {
    if (values.size() < 2) throw std::invalid_argument("gini needs at least two values");
    std::vector<double> x(values.begin(), values.end());
    double total = 0.0;
    for (double v : x) {
        if (!(v >= 0.0)) throw std::invalid_argument("gini values must be non-negative");
        total += v;
    }
    if (!(total > 0.0)) throw std::invalid_argument("gini undefined for a zero total");
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double weighted = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
        weighted += (2.0 * static_cast<double>(i + 1) - n - 1.0) * x[i];
    return weighted / (n * total);
}

// T_p used by the metrics: the ownership spell held at exit, else the horizon.
inline int metric_purchase_quarter(const HouseholdOutcome& o, const MetricsOptions& opt) {
    if (o.purchase_quarter && *o.purchase_quarter < o.death_quarter) return *o.purchase_quarter;
    return opt.imputed_purchase_quarter;
}

inline bool purchased(const HouseholdOutcome& o, const MetricsOptions& opt) {
    return metric_purchase_quarter(o, opt) < opt.imputed_purchase_quarter;
}

inline double retirement_wealth(const HouseholdOutcome& o, const MetricsOptions& opt) {
    return opt.real_discounting ? o.retirement_wealth.real : o.retirement_wealth.nominal;
}

inline double federal_npv(const HouseholdOutcome& o, const MetricsOptions& opt) {
    return opt.real_discounting ? o.federal.real : o.federal.nominal;
}

inline double local_npv(const HouseholdOutcome& o, const MetricsOptions& opt) {
    return opt.real_discounting ? o.local.real : o.local.nominal;
}

// Running sums for one (policy, cell), additive across scenarios.
struct CellSums {
    double households = 0;    // household-scenario units
    double purchased = 0;
    double purchase_age = 0;  // sum of 25 + T_p / 4
    double wealth = 0;
    double federal = 0;
    double local = 0;
    double ratio = 0;         // sum of policy / benchmark retirement wealth
    double ratio_units = 0;
    double ratio_excluded = 0;  // benchmark wealth <= 0
    double gini_purchase = 0;
    double gini_purchase_scenarios = 0;
    double gini_security = 0;
    double gini_security_scenarios = 0;

    CellSums& operator+=(const CellSums& o) {
        households += o.households;
        purchased += o.purchased;
        purchase_age += o.purchase_age;
        wealth += o.wealth;
        federal += o.federal;
        local += o.local;
        ratio += o.ratio;
        ratio_units += o.ratio_units;
        ratio_excluded += o.ratio_excluded;
        gini_purchase += o.gini_purchase;
        gini_purchase_scenarios += o.gini_purchase_scenarios;
        gini_security += o.gini_security;
        gini_security_scenarios += o.gini_security_scenarios;
        return *this;
    }
};

using PolicySums = std::array<CellSums, kCells>;

inline PolicySums& operator+=(PolicySums& a, const PolicySums& b) {
    for (int c = 0; c < kCells; ++c) a[c] += b[c];
    return a;
}

// One scenario's contribution. `benchmark` pairs households for the
// retirement-security ratio and may be the same vector as `outcomes`.
inline PolicySums scenario_sums(const std::vector<HouseholdOutcome>& outcomes,
                                const std::vector<HouseholdOutcome>& benchmark,
                                const MetricsOptions& opt) {
    if (outcomes.size() != benchmark.size())
        throw std::invalid_argument("policy and benchmark outcomes are not paired");
    PolicySums sums;
    std::array<std::vector<double>, kCells> tp, security;
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const auto& o = outcomes[i];
        const int tpq = metric_purchase_quarter(o, opt);
        const double w = retirement_wealth(o, opt);
        const double wb = retirement_wealth(benchmark[i], opt);
        for (const int c : {0, o.group + 1}) {
            auto& s = sums[c];
            s.households += 1;
            s.purchased += tpq < opt.imputed_purchase_quarter ? 1 : 0;
            s.purchase_age += kEntryAge + tpq / 4.0;
            s.wealth += w;
            s.federal += federal_npv(o, opt);
            s.local += local_npv(o, opt);
            if (wb > 0.0) {
                s.ratio += w / wb;
                s.ratio_units += 1;
            } else {
                s.ratio_excluded += 1;
            }
            tp[c].push_back(tpq);
            if (o.reached_retirement) security[c].push_back(std::max(0.0, w));
        }
    }
    auto add_gini = [](const std::vector<double>& v, double& sum, double& count) {
        if (v.size() < 2) return;
        double total = 0.0;
        for (double x : v) total += x;
        if (!(total > 0.0)) return;
        sum += gini(v);
        count += 1;
    };
    for (int c = 0; c < kCells; ++c) {
        add_gini(tp[c], sums[c].gini_purchase, sums[c].gini_purchase_scenarios);
        add_gini(security[c], sums[c].gini_security, sums[c].gini_security_scenarios);
    }
    return sums;
}

struct CellLevels {
    double purchase_probability = 0;
    double purchase_age = 0;  // years, non-purchasers imputed at the horizon
    double retirement_wealth = 0;
    double gini_purchase = 0;
    double gini_security = 0;
    double federal_npv = 0;
    double local_npv = 0;
    double security_ratio = 1;  // mean policy / benchmark retirement wealth
    double security_excluded = 0;
};

inline CellLevels levels(const CellSums& s) {
    if (!(s.households > 0)) throw std::invalid_argument("empty income group");
    CellLevels l;
    l.purchase_probability = s.purchased / s.households;
    l.purchase_age = s.purchase_age / s.households;
    l.retirement_wealth = s.wealth / s.households;
    l.federal_npv = s.federal / s.households;
    l.local_npv = s.local / s.households;
    l.gini_purchase =
        s.gini_purchase_scenarios > 0 ? s.gini_purchase / s.gini_purchase_scenarios : 0.0;
    l.gini_security =
        s.gini_security_scenarios > 0 ? s.gini_security / s.gini_security_scenarios : 0.0;
    l.security_ratio = s.ratio_units > 0 ? s.ratio / s.ratio_units : 1.0;
    l.security_excluded = s.ratio_excluded;
    return l;
}

struct CellDeltas {
    double access = 0;           // Delta_a
    double purchase_age = 0;     // Delta_p, years
    double security = 0;         // Delta_s
    double gini_purchase = 0;
    double gini_security = 0;
    double federal = 0;
    double local = 0;
    double government = 0;
};

inline CellDeltas deltas(const CellLevels& policy, const CellLevels& benchmark) {
    CellDeltas d;
    d.access = policy.purchase_probability - benchmark.purchase_probability;
    d.purchase_age = policy.purchase_age - benchmark.purchase_age;
    d.security = policy.security_ratio - 1.0;
    d.gini_purchase = policy.gini_purchase - benchmark.gini_purchase;
    d.gini_security = policy.gini_security - benchmark.gini_security;
    d.federal = policy.federal_npv - benchmark.federal_npv;
    d.local = policy.local_npv - benchmark.local_npv;
    d.government = d.federal + d.local;
    return d;
}

struct PolicyMetrics {
    std::string policy;
    std::array<CellLevels, kCells> levels;
    std::array<CellDeltas, kCells> deltas;
};

struct MetricsReport {
    MarketStructure market = MarketStructure::SupplyConstrained;
    std::vector<PolicyMetrics> policies;  // benchmark first

    const PolicyMetrics& at(std::string_view name) const {
        for (const auto& p : policies)
            if (p.policy == name) return p;
        throw std::out_of_range("no metrics for policy '" + std::string(name) + "'");
    }
};

// `sums[0]` must belong to the benchmark.
inline MetricsReport build_report(MarketStructure market,
                                  const std::vector<std::pair<std::string, PolicySums>>& sums) {
    if (sums.empty()) throw std::invalid_argument("no policies to report");
    MetricsReport r;
    r.market = market;
    std::array<CellLevels, kCells> bench;
    for (int c = 0; c < kCells; ++c) bench[c] = levels(sums.front().second[c]);
    for (const auto& [name, s] : sums) {
        PolicyMetrics m;
        m.policy = name;
        for (int c = 0; c < kCells; ++c) {
            m.levels[c] = levels(s[c]);
            m.deltas[c] = deltas(m.levels[c], bench[c]);
        }
        r.policies.push_back(std::move(m));
    }
    return r;
}

// Convenience forms over scenario-major outcome sets [scenario][household].
using OutcomeSet = std::vector<std::vector<HouseholdOutcome>>;

inline PolicySums outcome_sums(const OutcomeSet& policy, const OutcomeSet& benchmark,
                               const MetricsOptions& opt) {
    if (policy.size() != benchmark.size())
        throw std::invalid_argument("policy and benchmark scenario counts differ");
    PolicySums total;
    for (std::size_t m = 0; m < policy.size(); ++m)
        total += scenario_sums(policy[m], benchmark[m], opt);
    return total;
}

inline std::pair<double, double> accessibility_deltas(const OutcomeSet& policy,
                                                      const OutcomeSet& benchmark, int cell,
                                                      const MetricsOptions& opt = {}) {
    const auto p = levels(outcome_sums(policy, benchmark, opt)[cell]);
    const auto b = levels(outcome_sums(benchmark, benchmark, opt)[cell]);
    return {p.purchase_probability - b.purchase_probability, p.purchase_age - b.purchase_age};
}

inline double retirement_security_delta(const OutcomeSet& policy, const OutcomeSet& benchmark,
                                        int cell, const MetricsOptions& opt = {}) {
    return levels(outcome_sums(policy, benchmark, opt)[cell]).security_ratio - 1.0;
}

enum class Government { Federal, Local };

inline double government_npv(const OutcomeSet& outcomes, Government side,
                             const MetricsOptions& opt = {}) {
    const auto l = levels(outcome_sums(outcomes, outcomes, opt)[0]);
    return side == Government::Federal ? l.federal_npv : l.local_npv;
}

} // namespace homesim
