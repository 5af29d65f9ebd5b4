#pragma once

// Tax schedules, superannuation and Age Pension rules, and the housing policy
// configurations compared by the simulator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace homesim {

// Piecewise-linear schedule. Segment k applies for x <= upper_k (first match)
// and evaluates base_k + rate_k * (x - anchor_k).
struct PiecewiseLinear {
    struct Segment {
        double upper;
        double base;
        double rate;
        double anchor;
    };
    std::vector<Segment> segments;

    double operator()(double x) const {
        for (const auto& s : segments)
            if (x <= s.upper) return s.base + s.rate * (x - s.anchor);
        const auto& s = segments.back();
        return s.base + s.rate * (x - s.anchor);
    }

    // Same schedule with every threshold and constant divided by `periods`.
    PiecewiseLinear per_period(double periods) const {
        PiecewiseLinear out;
        for (const auto& s : segments)
            out.segments.push_back({s.upper / periods, s.base / periods, s.rate, s.anchor / periods});
        return out;
    }
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Victorian general land transfer duty.
inline PiecewiseLinear default_property_tax() {
    return {{
        {25'000, 0, 0.014, 0},
        {130'000, 350, 0.024, 25'000},
        {960'000, 2'870, 0.06, 130'000},
        {2'000'000, 0, 0.055, 0},
        {kInf, 110'000, 0.065, 2'000'000},
    }};
}

// Annual resident income tax schedule; applied per quarter with thresholds / 4.
inline PiecewiseLinear default_income_tax_annual() {
    return {{
        {18'200, 0, 0.0, 0},
        {45'000, 0, 0.16, 18'200},
        {135'000, 4'288, 0.30, 45'000},
        {190'000, 31'288, 0.37, 135'000},
        {kInf, 51'638, 0.45, 190'000},
    }};
}

// Age Pension thresholds (fortnightly amounts, dollars at t = 0) and rates.
struct AgePensionThresholds {
    double max_base;
    double asset_threshold_renter;
    double asset_threshold_owner;
    double income_threshold;
    double deeming_threshold;
    double supplement_min;
    double supplement_max;
    double rent_min;
    double rent_max;
    double income_taper;
};

struct AgePensionRules {
    AgePensionThresholds single{1'051.3, 566'000, 314'000, 212, 62'600, 59.1, 97.7, 149.6, 432.27, 0.50};
    // Retained for completeness; the cohort is modelled as singles.
    AgePensionThresholds couple{1'585, 722'000, 470'000, 372, 103'800, 89, 147.2, 242.4, 508.8, 0.25};
    double asset_taper = 0.003;
    double rent_taper = 0.75;
    double deeming_low = 0.0025;
    double deeming_high = 0.0225;
    double fortnights_per_quarter = 6.5;
    // Compare fortnightly rent (R / 6.5) against the rent thresholds instead of
    // the quarterly rent.
    bool rent_assistance_fortnightly_rent = false;
};

struct DrawdownBand {
    int from_quarter;
    double rate;  // per quarter
};

struct ConsumptionBand {
    int from_quarter;
    double share;
};

enum class ConsumptionBase { NetOfHousing, Gross };

struct RuleSet {
    PiecewiseLinear property_tax = default_property_tax();
    PiecewiseLinear income_tax_annual = default_income_tax_annual();
    double income_tax_periods = 4.0;

    double super_return_tax = 0.15;
    double contribution_tax = 0.15;
    double contribution_tax_free_annual = 37'000;  // LISTO cut-off
    double gamma = 0.12;

    std::vector<DrawdownBand> drawdown{
        {168, 0.05 / 4}, {200, 0.06 / 4}, {220, 0.07 / 4}, {240, 0.09 / 4}, {260, 0.11 / 4}};
    AgePensionRules age_pension;

    int retirement_quarter = 168;
    int loan_term = 120;

    double maintenance_rate = 0.0025;
    double council_rate_share = 0.4;
    std::vector<ConsumptionBand> consumption{
        {0, 0.611}, {40, 0.593}, {80, 0.582}, {120, 0.605}, {160, 0.844}};
    double consumption_floor = 1'200;
    ConsumptionBase consumption_base = ConsumptionBase::NetOfHousing;

    // Quarterly gross income thresholds for restricted-access policies, in
    // t = 0 dollars; scaled by the AWE index over time.
    double median_income_quarterly = 18'148;
    double quartile_income_quarterly = 10'400;

    double rent_share = 0.30;  // R(0) / S(0)

    PiecewiseLinear income_tax_quarterly_schedule() const {
        return income_tax_annual.per_period(income_tax_periods);
    }

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        auto nondecreasing = [](const PiecewiseLinear& f) {
            for (std::size_t i = 1; i < f.segments.size(); ++i)
                if (!(f.segments[i].upper > f.segments[i - 1].upper)) return false;
            return !f.segments.empty();
        };
        if (!nondecreasing(property_tax))
            errs.push_back("rules.property_tax thresholds must be strictly increasing");
        if (!nondecreasing(income_tax_annual))
            errs.push_back("rules.income_tax thresholds must be strictly increasing");
        if (!(income_tax_periods > 0)) errs.push_back("rules.income_tax_periods must be positive");
        if (drawdown.empty()) errs.push_back("rules.drawdown must not be empty");
        for (std::size_t i = 1; i < drawdown.size(); ++i)
            if (drawdown[i].from_quarter <= drawdown[i - 1].from_quarter)
                errs.push_back("rules.drawdown bands must be increasing in quarter");
        if (consumption.empty() || consumption.front().from_quarter != 0)
            errs.push_back("rules.consumption bands must start at quarter 0");
        if (retirement_quarter <= 0) errs.push_back("rules.retirement_quarter must be positive");
        if (loan_term <= 0) errs.push_back("rules.loan_term must be positive");
        if (!(gamma >= 0 && gamma <= 1)) errs.push_back("rules.gamma must lie in [0, 1]");
        return errs;
    }
};

inline double property_transfer_tax(double price, const RuleSet& rules) {
    return rules.property_tax(price);
}

inline double income_tax_quarterly(double taxable, const RuleSet& rules) {
    return rules.income_tax_annual(taxable * rules.income_tax_periods) / rules.income_tax_periods;
}

struct SuperTaxes {
    double return_tax = 0.0;
    double contribution_tax_rate = 0.0;
};

inline SuperTaxes super_taxes(double prev_balance, double super_return, int t, double salary,
                              const RuleSet& rules) {
    SuperTaxes out;
    if (t < rules.retirement_quarter) {
        out.return_tax = rules.super_return_tax * super_return * prev_balance;
        out.contribution_tax_rate =
            salary <= rules.contribution_tax_free_annual / rules.income_tax_periods
                ? 0.0
                : rules.contribution_tax;
    }
    return out;
}

inline double min_drawdown_rate(int t, const RuleSet& rules) {
    if (t < rules.retirement_quarter || t < rules.drawdown.front().from_quarter)
        throw std::out_of_range("min_drawdown_rate called before retirement (t = " +
                                std::to_string(t) + ")");
    double rate = rules.drawdown.front().rate;
    for (const auto& band : rules.drawdown)
        if (t >= band.from_quarter) rate = band.rate;
    return rate;
}

inline double consumption_share(int t, const RuleSet& rules) {
    double share = rules.consumption.front().share;
    for (const auto& band : rules.consumption)
        if (t >= band.from_quarter) share = band.share;
    return share;
}

struct AgePensionInput {
    int t = 0;
    double savings = 0.0;  // A_acc
    double pension = 0.0;  // F_acc
    double rent = 0.0;     // R(t), quarterly
    bool homeowner = false;
    double cpi_index = 1.0;
};

// Fortnightly components plus the quarterly total G(t).
struct AgePension {
    double asset_test = 0.0;
    double income_test = 0.0;
    double assessed_income = 0.0;
    double base = 0.0;
    double supplement = 0.0;
    double rent_assistance = 0.0;
    double quarterly = 0.0;
};

inline AgePension age_pension(const AgePensionInput& in, const RuleSet& rules) {
    AgePension g;
    if (in.t < rules.retirement_quarter) return g;

    const auto& ap = rules.age_pension;
    const auto& th = ap.single;
    const double k = in.cpi_index;
    const double max_base = th.max_base * k;
    const double asset_threshold =
        (in.homeowner ? th.asset_threshold_owner : th.asset_threshold_renter) * k;
    const double deeming_threshold = th.deeming_threshold * k;

    const double assets = std::max(0.0, in.savings) + std::max(0.0, in.pension);
    g.assessed_income = ap.deeming_low * std::min(assets, deeming_threshold) +
                        ap.deeming_high * std::max(0.0, assets - deeming_threshold);
    g.asset_test = std::max(0.0, max_base - ap.asset_taper * (assets - asset_threshold));
    g.income_test = std::max(
        0.0, max_base - th.income_taper * (g.assessed_income - th.income_threshold * k));
    g.base = std::min({max_base, g.asset_test, g.income_test});
    if (!(g.base > 0.0)) {
        g.base = 0.0;
        return g;
    }

    g.supplement = std::max(th.supplement_min * k, g.base / max_base * th.supplement_max * k);
    if (!in.homeowner) {
        const double rent =
            ap.rent_assistance_fortnightly_rent ? in.rent / ap.fortnights_per_quarter : in.rent;
        g.rent_assistance = std::min(std::max(0.0, ap.rent_taper * (rent - th.rent_min * k)),
                                     th.rent_max * k);
    }
    g.quarterly = ap.fortnights_per_quarter * (g.base + g.supplement + g.rent_assistance);
    return g;
}

enum class AccessRule { Universal, BelowMedianIncome, BelowQuartileIncome };

inline std::string_view to_string(AccessRule r) {
    switch (r) {
    case AccessRule::Universal: return "universal";
    case AccessRule::BelowMedianIncome: return "below_all_ages_median_income";
    case AccessRule::BelowQuartileIncome: return "below_25th_percentile";
    }
    return "?";
}

struct PolicyConfig {
    std::string name = "benchmark";
    double deposit = 0.20;           // delta
    double buffer = 0.01;            // epsilon
    double min_savings = 0.0;        // alpha
    double max_pension_share = 0.0;  // beta
    double pension_cap = 0.0;        // F^max
    AccessRule access = AccessRule::Universal;

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        const std::string p = "policy '" + name + "': ";
        if (!(0.0 <= min_savings && min_savings <= deposit && deposit <= 1.0))
            errs.push_back(p + "requires 0 <= alpha <= delta <= 1");
        if (!(0.0 <= max_pension_share && max_pension_share <= 1.0))
            errs.push_back(p + "requires 0 <= beta <= 1");
        if (!(buffer >= 0.0)) errs.push_back(p + "requires epsilon >= 0");
        if (!(pension_cap >= 0.0)) errs.push_back(p + "requires f_max >= 0");
        return errs;
    }

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

struct Withdrawal {
    double savings = 0.0;  // D_A
    double pension = 0.0;  // D_F

    double total() const { return savings + pension; }
};

// Full permissible pension withdrawal; savings cover the rest of deposit,
// buffer and transfer duty.
inline Withdrawal withdrawal_amounts(const PolicyConfig& policy, double price, double pension_acc,
                                     double transfer_tax) {
    Withdrawal w;
    const double share = policy.max_pension_share * std::max(0.0, pension_acc);
    w.pension = std::max(0.0, std::min({share, policy.pension_cap,
                                        (policy.deposit - policy.min_savings) * price}));
    w.savings = (policy.deposit + policy.buffer) * price + transfer_tax - w.pension;
    return w;
}

inline PolicyConfig benchmark_policy() { return {}; }

inline std::vector<PolicyConfig> policy_presets() {
    PolicyConfig benchmark = benchmark_policy();

    PolicyConfig rd;
    rd.name = "RD";
    rd.deposit = 0.05;

    PolicyConfig ew;
    ew.name = "EW";
    ew.min_savings = 0.05;
    ew.max_pension_share = 0.40;
    ew.pension_cap = 50'000;

    PolicyConfig ew_full = ew;
    ew_full.name = "EW-full";
    ew_full.max_pension_share = 1.0;
    ew_full.pension_cap = kInf;

    PolicyConfig ew_no_savings = ew;
    ew_no_savings.name = "EW-no-savings";
    ew_no_savings.min_savings = 0.0;

    return {benchmark, rd, ew, ew_full, ew_no_savings};
}

// Restricted policies apply only to eligible households; everyone else buys
// under the benchmark terms. Income is gross quarterly income deflated by the
// AWE index.
inline bool policy_eligible(AccessRule rule, double real_income, const RuleSet& rules) {
    switch (rule) {
    case AccessRule::Universal: return true;
    case AccessRule::BelowMedianIncome: return real_income < rules.median_income_quarterly;
    case AccessRule::BelowQuartileIncome: return real_income < rules.quartile_income_quarterly;
    }
    return true;
}

} // namespace homesim
