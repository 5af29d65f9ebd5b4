#pragma once

// Cohort of renter households simulated jointly with the scenario generator:
// purchases feed back into the price equation as lagged demand growth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "homesim/csv.hpp"
#include "homesim/error.hpp"
#include "homesim/household.hpp"
#include "homesim/random.hpp"
#include "homesim/rules.hpp"
#include "homesim/scenario.hpp"

namespace homesim {

inline constexpr int kIncomeGroups = 5;

enum class MarketStructure { EqualAffordability, SupplyConstrained };

inline std::string_view to_string(MarketStructure m) {
    return m == MarketStructure::EqualAffordability ? "equal_affordability" : "supply_constrained";
}

struct CohortConfig {
    int n_households = 10'000;
    int n_scenarios = 1'000;
    int horizon = 300;
    std::vector<MarketStructure> markets{MarketStructure::EqualAffordability,
                                         MarketStructure::SupplyConstrained};
    std::uint64_t seed = 20250101;
    std::string mortality_csv;  // empty: built-in table
    std::array<double, kIncomeGroups> income_group_weights{0.2, 0.2, 0.2, 0.2, 0.2};
    std::array<double, kIncomeGroups> starting_salaries{3'250, 7'937.5, 12'625, 17'312.5, 22'000};
    double equal_affordability_multiple = 61.5;
    double supply_min_price = 300'000;
    double supply_max_price = 1'000'000;
    bool survival_fixed_across_scenarios = false;

    std::vector<std::string> validate(int retirement_quarter) const {
        std::vector<std::string> errs;
        if (n_households < kIncomeGroups)
            errs.push_back("cohort.n_households must be at least 5 (one per income group)");
        if (n_scenarios < 1) errs.push_back("cohort.n_scenarios must be positive");
        if (horizon < retirement_quarter)
            errs.push_back("cohort.horizon must be at least the retirement quarter");
        if (markets.empty()) errs.push_back("cohort.markets must not be empty");
        double total = 0.0;
        for (double w : income_group_weights) {
            if (!(w > 0.0)) errs.push_back("cohort.income_group_weights must be positive");
            total += w;
        }
        if (std::abs(total - 1.0) > 1e-9)
            errs.push_back("cohort.income_group_weights must sum to 1");
        for (double s : starting_salaries)
            if (!(s > 0.0)) errs.push_back("cohort.starting_salaries must be positive");
        if (!(supply_min_price > 0.0 && supply_min_price <= supply_max_price))
            errs.push_back("cohort supply-constrained price range must be positive and ordered");
        if (!(equal_affordability_multiple > 0.0))
            errs.push_back("cohort.equal_affordability_multiple must be positive");
        return errs;
    }
};

// Target property price P(0) for a 0-based income group.
inline double assign_target(MarketStructure market, int group, const CohortConfig& cfg) {
    if (group < 0 || group >= kIncomeGroups)
        throw std::out_of_range("income group out of range: " + std::to_string(group));
    if (market == MarketStructure::EqualAffordability)
        return cfg.equal_affordability_multiple * cfg.starting_salaries[group];
    const double step = (cfg.supply_max_price - cfg.supply_min_price) / (kIncomeGroups - 1);
    return cfg.supply_min_price + step * group;
}

// Annual death probabilities by integer age; quarterly survival (1 - q)^(1/4).
class MortalityTable {
public:
    MortalityTable(int first_age, std::vector<double> q_male, std::vector<double> q_female)
        : first_age_(first_age), q_male_(std::move(q_male)), q_female_(std::move(q_female)) {
        if (q_male_.empty() || q_male_.size() != q_female_.size())
            throw ConfigError("mortality table needs matching, non-empty male and female columns");
        for (std::size_t i = 0; i < q_male_.size(); ++i)
            if (!(q_male_[i] >= 0 && q_male_[i] <= 1 && q_female_[i] >= 0 && q_female_[i] <= 1))
                throw ConfigError("mortality rates must lie in [0, 1]");
    }

    // Gompertz-Makeham curves shaped on recent Australian life tables
    // (ages 0 to 100, q = 1 at 100).
    static MortalityTable builtin() {
        std::vector<double> m, f;
        for (int age = 0; age <= 100; ++age) {
            m.push_back(std::min(1.0, 0.0006 + 5.86e-6 * std::exp(0.112 * age)));
            f.push_back(std::min(1.0, 0.0003 + 2.57e-6 * std::exp(0.118 * age)));
        }
        m.back() = f.back() = 1.0;
        return MortalityTable(0, std::move(m), std::move(f));
    }

    // CSV columns: age, qx_male, qx_female (consecutive integer ages).
    static MortalityTable from_csv(const std::string& path) {
        const auto t = csv::read_numeric(path);
        const auto ca = t.column("age"), cm = t.column("qx_male"), cf = t.column("qx_female");
        if (t.rows.empty()) throw ConfigError("mortality table '" + path + "' has no rows");
        std::vector<double> m, f;
        const int first = static_cast<int>(t.rows.front()[ca]);
        for (std::size_t i = 0; i < t.rows.size(); ++i) {
            if (static_cast<int>(t.rows[i][ca]) != first + static_cast<int>(i))
                throw ConfigError("mortality table ages must be consecutive integers");
            m.push_back(t.rows[i][cm]);
            f.push_back(t.rows[i][cf]);
        }
        return MortalityTable(first, std::move(m), std::move(f));
    }

    double annual_q(int age, bool female) const {
        const auto& q = female ? q_female_ : q_male_;
        const int idx = std::clamp(age - first_age_, 0, static_cast<int>(q.size()) - 1);
        return q[static_cast<std::size_t>(idx)];
    }

    double quarterly_survival(int age, bool female) const {
        return std::pow(1.0 - annual_q(age, female), 0.25);
    }

private:
    int first_age_;
    std::vector<double> q_male_, q_female_;
};

inline constexpr int kEntryAge = 25;

inline bool is_female(std::uint32_t id) { return id % 2 == 1; }

// Quarter of death T_sigma (alive for t < T_sigma), capped at the horizon.
// Inverse-transform of the per-quarter Bernoulli survival chain.
inline int draw_death_quarter(double u, bool female, int horizon, const MortalityTable& table) {
    double survival = 1.0;
    for (int t = 0; t < horizon; ++t) {
        survival *= table.quarterly_survival(kEntryAge + t / 4, female);
        if (survival < u) return t + 1;
    }
    return horizon;
}

struct DemandSeries {
    std::vector<int> n_owners;    // N_H(t)
    std::vector<int> new_owners;  // eta(t)
    std::vector<double> demand_growth;  // y_d(t)
};

inline double demand_growth(int eta, int eta_prev) {
    return std::log1p(static_cast<double>(eta)) - std::log1p(static_cast<double>(eta_prev));
}

// Nominal and real discounted amounts accumulated side by side.
struct Discounted {
    double nominal = 0.0;
    double real = 0.0;

    void add(double amount, double v_nominal, double v_real) {
        nominal += amount * v_nominal;
        real += amount * v_real;
    }
};

struct HouseholdOutcome {
    int group = 0;
    std::optional<int> purchase_quarter;  // final ownership spell, if owner at exit
    std::optional<int> first_purchase;
    int death_quarter = 0;
    std::optional<int> default_quarter;
    std::optional<int> last_liquidation;
    bool reached_retirement = false;
    double savings_at_retirement = 0.0;
    Discounted retirement_wealth;  // A(T_r) + sum v(T_r,t)(I - H)
    Discounted federal;            // sum v(0,t) federal net revenue
    Discounted local;              // sum v(0,t) duty and council rates
    int purchases = 0;
    int liquidations = 0;
};

struct ScenarioDiagnostics {
    int defaults = 0;
    int liquidations = 0;
    int purchases = 0;
    int salary_floor_hits = 0;
};

struct ScenarioResult {
    std::uint64_t scenario_id = 0;
    std::string policy;
    std::vector<HouseholdOutcome> outcomes;
    std::vector<double> price_index;  // per quarter
    std::vector<int> alive;           // N(t)
    DemandSeries demand;
    ScenarioDiagnostics diagnostics;
    std::uint64_t random_digest = 0;  // hash of every random number consumed
};

struct SimulationSetup {
    CohortConfig cohort;
    EconParams econ;
    RuleSet rules;
    DependenceModel dependence = DependenceModel::zero();
    MortalityTable mortality = MortalityTable::builtin();
    MarketStructure market = MarketStructure::SupplyConstrained;
    PolicyConfig fallback = benchmark_policy();  // terms for households outside a restricted policy
};

// Every random input of one economic scenario. Shared by all policy regimes.
struct ScenarioInputs {
    std::uint64_t scenario_id = 0;
    std::vector<ResidualDraw> draws;  // index t; draws[0] is unused
    std::vector<int> death_quarter;
};

inline std::vector<int> income_groups(const CohortConfig& cfg) {
    std::vector<int> groups(static_cast<std::size_t>(cfg.n_households));
    std::size_t pos = 0;
    double cum = 0.0;
    for (int k = 0; k < kIncomeGroups; ++k) {
        cum += cfg.income_group_weights[k];
        const auto end = k == kIncomeGroups - 1
                             ? groups.size()
                             : static_cast<std::size_t>(std::llround(cum * cfg.n_households));
        for (; pos < std::min(end, groups.size()); ++pos) groups[pos] = k;
    }
    return groups;
}

inline ScenarioInputs prepare_scenario(std::uint64_t scenario_id, const SimulationSetup& setup) {
    const auto& cfg = setup.cohort;
    ScenarioInputs in;
    in.scenario_id = scenario_id;
    in.draws.resize(static_cast<std::size_t>(cfg.horizon));
    in.draws[0].salary_idio.assign(static_cast<std::size_t>(cfg.n_households), 0.0);
    for (int t = 1; t < cfg.horizon; ++t)
        in.draws[t] = draw_residuals(cfg.seed, scenario_id, t,
                                     static_cast<std::size_t>(cfg.n_households), setup.dependence);

    const std::uint64_t survival_key = cfg.survival_fixed_across_scenarios ? 0 : scenario_id + 1;
    RandomStream rng(derive_seed(
        {cfg.seed, static_cast<std::uint64_t>(StreamKind::Survival), survival_key}));
    in.death_quarter.resize(static_cast<std::size_t>(cfg.n_households));
    for (std::uint32_t i = 0; i < in.death_quarter.size(); ++i)
        in.death_quarter[i] =
            draw_death_quarter(rng.uniform(), is_female(i), cfg.horizon, setup.mortality);
    return in;
}

namespace detail {

[[noreturn]] inline void nan_dump(const HouseholdState& hh, const QuarterFlows& f, int t,
                                  std::uint64_t scenario, const std::string& policy) {
    std::ostringstream os;
    os << "non-finite balance in scenario " << scenario << ", policy " << policy << ", household "
       << hh.id << ", quarter " << t << ": A=" << hh.savings << " A_acc=" << hh.savings_acc
       << " F=" << hh.pension << " F_acc=" << hh.pension_acc << " S=" << hh.salary
       << " L=" << hh.loan << " I=" << f.income << " H=" << f.housing
       << " C=" << f.consumption;
    throw SimulationError(os.str());
}

} // namespace detail

inline ScenarioResult simulate_scenario(const ScenarioInputs& in, const SimulationSetup& setup,
                                        const PolicyConfig& policy) {
    const auto& cfg = setup.cohort;
    const auto& rules = setup.rules;
    const auto& p = setup.econ;
    const int T = cfg.horizon;
    const int Tr = rules.retirement_quarter;
    const auto n = static_cast<std::size_t>(cfg.n_households);

    ScenarioResult res;
    res.scenario_id = in.scenario_id;
    res.policy = policy.name;
    res.price_index.resize(static_cast<std::size_t>(T));
    res.alive.resize(static_cast<std::size_t>(T));
    res.demand.n_owners.resize(static_cast<std::size_t>(T));
    res.demand.new_owners.resize(static_cast<std::size_t>(T));
    res.demand.demand_growth.resize(static_cast<std::size_t>(T));

    Fnv1a digest;
    const auto groups = income_groups(cfg);
    std::vector<HouseholdState> hhs(n);
    res.outcomes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& hh = hhs[i];
        hh.id = static_cast<std::uint32_t>(i);
        hh.group = groups[i];
        hh.base_salary = cfg.starting_salaries[hh.group];
        hh.salary = hh.base_salary;
        hh.target_price = assign_target(setup.market, hh.group, cfg);
        hh.death_quarter = in.death_quarter[i];
        digest.add(hh.death_quarter);
        res.outcomes[i].group = hh.group;
        res.outcomes[i].death_quarter = hh.death_quarter;
    }

    EconState prev = init_economy(p);
    EconState now = prev;
    double v_nominal = 1.0;  // v(0, t)
    double v_nominal_retire = 1.0;
    double cpi_retire = 1.0;
    int owners_prev = 0;
    int eta_prev = 0;

    for (int t = 0; t < T; ++t) {
        const ResidualDraw& draw = in.draws[static_cast<std::size_t>(t)];
        if (t > 0) {
            for (double e : draw.macro) digest.add(e);
            digest.add(draw.salary_common);
            now = step_economy(prev, draw.macro, prev.demand_growth, p);
            v_nominal /= 1.0 + prev.nominal_cash;
        }
        if (t == Tr) {
            v_nominal_retire = v_nominal;
            cpi_retire = now.cpi_index;
        }
        // Real factors deflate by CPI growth since the discounting origin.
        const double v_real = v_nominal * now.cpi_index;
        const double vr_nominal = v_nominal / v_nominal_retire;
        const double vr_real = vr_nominal * now.cpi_index / cpi_retire;

        const QuarterContext ctx{prev, now, rules, policy, t};
        const QuarterContext fallback_ctx{prev, now, rules, setup.fallback, t};
        int alive = 0;
        int owners = 0;
        for (std::size_t i = 0; i < n; ++i) {
            auto& hh = hhs[i];
            if (t > 0) digest.add(draw.salary_idio[i]);
            if (t >= hh.death_quarter || hh.defaulted) continue;
            ++alive;

            if (t > 0 && t < Tr) {
                const auto s = salary_step(hh.salary, t, now.awe_expected, draw.salary_common,
                                           draw.salary_idio[i], p);
                hh.salary = s.salary;
                if (s.floored) ++res.diagnostics.salary_floor_hits;
            } else if (t >= Tr) {
                hh.salary = 0.0;
            }
            hh.rent = rules.rent_share * hh.base_salary * now.rent_index;

            bool eligible = true;
            if (policy.access != AccessRule::Universal && !hh.owner)
                eligible = policy_eligible(policy.access, hh.salary / now.awe_index, rules);
            const QuarterOutcome q = advance_quarter(hh, eligible ? ctx : fallback_ctx);
            const QuarterFlows& f = q.flows;
            if (!std::isfinite(hh.savings) || !std::isfinite(hh.pension) || !std::isfinite(hh.loan))
                detail::nan_dump(hh, f, t, in.scenario_id, policy.name);

            auto& out = res.outcomes[i];
            if (q.liquidated) {
                ++res.diagnostics.liquidations;
                out.last_liquidation = t;
            }
            if (f.purchased) {
                ++res.diagnostics.purchases;
                if (!out.first_purchase) out.first_purchase = t;
            }
            if (q.defaulted) {
                ++res.diagnostics.defaults;
                out.default_quarter = t;
            }

            const double federal = f.salary_tax + f.savings_tax + f.super_tax +
                                   f.contribution_tax - f.age_pension;
            const double local =
                (f.purchased ? f.transfer_tax : 0.0) + rules.council_rate_share * f.maintenance;
            out.federal.add(federal, v_nominal, v_real);
            out.local.add(local, v_nominal, v_real);

            if (t == Tr) {
                out.reached_retirement = true;
                out.savings_at_retirement = hh.savings;
                out.retirement_wealth.add(hh.savings, 1.0, 1.0);
            }
            if (t >= Tr) out.retirement_wealth.add(f.income - f.housing, vr_nominal, vr_real);

            if (hh.owner) ++owners;
        }

        res.alive[static_cast<std::size_t>(t)] = alive;
        res.price_index[static_cast<std::size_t>(t)] = now.price_index;
        const int eta = std::max(0, owners - owners_prev);
        const double yd = t == 0 ? 0.0 : demand_growth(eta, eta_prev);
        res.demand.n_owners[static_cast<std::size_t>(t)] = owners;
        res.demand.new_owners[static_cast<std::size_t>(t)] = eta;
        res.demand.demand_growth[static_cast<std::size_t>(t)] = yd;
        now.demand_growth = yd;
        owners_prev = owners;
        eta_prev = eta;
        prev = now;
    }

    for (std::size_t i = 0; i < n; ++i) {
        auto& out = res.outcomes[i];
        const auto& hh = hhs[i];
        out.purchases = hh.purchases;
        out.liquidations = hh.liquidations;
        out.purchase_quarter = hh.owner ? hh.purchase_quarter : std::nullopt;
    }
    res.random_digest = digest.value();
    return res;
}

} // namespace homesim
