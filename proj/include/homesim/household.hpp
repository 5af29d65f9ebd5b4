#pragma once

// One household, one quarter: accrual, income, purchase, loan, consumption,
// liquidation and default.

#include <cmath>
#include <cstdint>
#include <optional>

#include "homesim/rules.hpp"
#include "homesim/scenario.hpp"

namespace homesim {

struct HouseholdState {
    std::uint32_t id = 0;
    int group = 0;  // 0-based income group
    bool alive = true;
    bool defaulted = false;

    double savings = 0.0;      // A(t-1) going into the quarter, A(t) after it
    double savings_acc = 0.0;  // A_acc(t)
    double pension = 0.0;      // F
    double pension_acc = 0.0;  // F_acc
    double salary = 0.0;       // S(t)
    double rent = 0.0;         // R(t)

    double base_salary = 0.0;   // S(0)
    double target_price = 0.0;  // P(0); P(t) = target_price * price_index(t)

    bool owner = false;
    std::optional<int> purchase_quarter;  // T_p of the current ownership spell
    double loan = 0.0;                    // L(t)
    int death_quarter = 0;                // T_sigma: alive for t < death_quarter

    int purchases = 0;
    int liquidations = 0;
};

struct QuarterFlows {
    double income = 0.0;        // I
    double housing = 0.0;       // H
    double consumption = 0.0;   // C
    double contribution = 0.0;  // M
    double benefit = 0.0;       // B
    double age_pension = 0.0;   // G
    double repayment = 0.0;     // pi
    double maintenance = 0.0;   // mu_p

    double salary_tax = 0.0;        // tau_S
    double savings_tax = 0.0;       // tau_A
    double super_tax = 0.0;         // tau_F
    double contribution_tax = 0.0;  // tau_gamma * gamma * S

    bool purchased = false;
    double transfer_tax = 0.0;  // tau_P at purchase
    Withdrawal withdrawal;
};

inline double target_price_at(const HouseholdState& hh, const EconState& econ) {
    return hh.target_price * econ.price_index;
}

struct AccrualTaxes {
    double savings_tax = 0.0;
    double super_tax = 0.0;
};

// A_acc = A(t-1)(1 + r_A(t-1)) - tau_A(t); F_acc = F(t-1)(1 + r_F(t-1)) - tau_F(t).
// Expects hh.salary to hold S(t) already.
inline AccrualTaxes accrue(HouseholdState& hh, double prev_cash_rate, double prev_super_return,
                           const RuleSet& rules, int t) {
    AccrualTaxes tx;
    if (t == 0) {
        hh.savings_acc = hh.savings;
        hh.pension_acc = hh.pension;
        return tx;
    }
    const double interest = std::max(0.0, prev_cash_rate * hh.savings);
    if (t < rules.retirement_quarter) {
        tx.savings_tax = income_tax_quarterly(hh.salary + interest, rules) -
                         income_tax_quarterly(hh.salary, rules);
    } else {
        tx.savings_tax = income_tax_quarterly(interest, rules);
    }
    tx.super_tax = super_taxes(hh.pension, prev_super_return, t, hh.salary, rules).return_tax;
    hh.savings_acc = hh.savings * (1.0 + prev_cash_rate) - tx.savings_tax;
    hh.pension_acc = hh.pension * (1.0 + prev_super_return) - tx.super_tax;
    return tx;
}

// Income side of the quarter: I, tau_S, M, contribution tax, B and G.
inline QuarterFlows compute_income(const HouseholdState& hh, const EconState& econ,
                                   const RuleSet& rules, int t) {
    QuarterFlows f;
    if (t < rules.retirement_quarter) {
        f.salary_tax = income_tax_quarterly(hh.salary, rules);
        f.income = hh.salary - f.salary_tax;
        const double gross = rules.gamma * hh.salary;
        const double rate = super_taxes(hh.pension, 0.0, t, hh.salary, rules).contribution_tax_rate;
        f.contribution_tax = rate * gross;
        f.contribution = gross - f.contribution_tax;
    } else {
        f.benefit = min_drawdown_rate(t, rules) * std::max(0.0, hh.pension_acc);
        f.age_pension = age_pension({t, hh.savings_acc, hh.pension_acc, hh.rent, hh.owner,
                                     econ.cpi_index},
                                    rules)
                            .quarterly;
        f.income = f.benefit + f.age_pension;
    }
    return f;
}

// First repayment of a fresh loan of `principal` over `term` quarters.
inline double annuity_payment(double principal, double rate, int term) {
    if (principal <= 0.0 || term <= 0) return 0.0;
    if (rate == 0.0) return principal / term;
    return principal * rate / (1.0 - std::pow(1.0 + rate, -term));
}

// Repayment affordability reference: full (1 - delta) leverage at r_B(t).
inline double reference_repayment(double price, double borrow_rate, const PolicyConfig& policy,
                                  const RuleSet& rules) {
    return annuity_payment((1.0 - policy.deposit) * price, borrow_rate, rules.loan_term);
}

// Purchase test and settlement. Weak inequalities on both conditions.
inline bool try_purchase(HouseholdState& hh, const EconState& econ, QuarterFlows& flows,
                         const RuleSet& rules, const PolicyConfig& policy, int t) {
    if (hh.owner) return false;
    const double price = target_price_at(hh, econ);
    const double duty = property_transfer_tax(price, rules);
    const Withdrawal w = withdrawal_amounts(policy, price, hh.pension_acc, duty);
    if (!(flows.income >= reference_repayment(price, econ.borrow_rate, policy, rules))) return false;
    if (!(hh.savings_acc >= w.savings)) return false;

    hh.savings_acc -= w.savings;
    hh.pension_acc -= w.pension;
    hh.loan = (1.0 - policy.deposit) * price;
    hh.purchase_quarter = t;
    hh.owner = true;
    ++hh.purchases;

    flows.purchased = true;
    flows.transfer_tax = duty;
    flows.withdrawal = w;
    return true;
}

// Repayment for quarter t from the remaining-term annuity; the balance then
// rolls forward as L(t+1) = L(t)(1 + r_B(t)) - pi(t).
inline double amortize(HouseholdState& hh, double borrow_rate, int t, const RuleSet& rules) {
    if (!hh.owner || !hh.purchase_quarter || hh.loan <= 0.0) {
        hh.loan = 0.0;
        return 0.0;
    }
    const int remaining = rules.loan_term + *hh.purchase_quarter - t;
    if (remaining <= 0) {
        hh.loan = 0.0;
        return 0.0;
    }
    const double payment = annuity_payment(hh.loan, borrow_rate, remaining);
    hh.loan = hh.loan * (1.0 + borrow_rate) - payment;
    return payment;
}

inline double consumption(double income, double housing, int t, double cpi_index,
                          const RuleSet& rules) {
    const double base = rules.consumption_base == ConsumptionBase::NetOfHousing
                            ? std::max(0.0, income - housing)
                            : income;
    return std::max(consumption_share(t, rules) * base, rules.consumption_floor * cpi_index);
}

// Housing cost and consumption for the quarter, after any purchase.
inline void complete_flows(HouseholdState& hh, const EconState& econ, QuarterFlows& f,
                           const RuleSet& rules, int t) {
    if (hh.owner) {
        f.maintenance = rules.maintenance_rate * target_price_at(hh, econ);
        f.repayment = amortize(hh, econ.borrow_rate, t, rules);
        f.housing = f.maintenance + f.repayment;
    } else {
        f.housing = hh.rent;
    }
    f.consumption = consumption(f.income, f.housing, t, econ.cpi_index, rules);
}

// Flows for a quarter without a purchase decision (state already accrued).
inline QuarterFlows compute_flows(HouseholdState hh, const EconState& econ, const RuleSet& rules,
                                  int t) {
    QuarterFlows f = compute_income(hh, econ, rules, t);
    complete_flows(hh, econ, f, rules, t);
    return f;
}

// Owner with A_acc <= 0 sells at P(t) and returns to renting.
inline bool liquidate_if_broke(HouseholdState& hh, const EconState& econ) {
    if (!hh.owner || hh.savings_acc > 0.0) return false;
    hh.savings_acc += target_price_at(hh, econ) - hh.loan;
    hh.owner = false;
    hh.purchase_quarter.reset();
    hh.loan = 0.0;
    ++hh.liquidations;
    return true;
}

// Renter with A(t) <= 0 defaults and leaves the cohort.
inline bool check_default(HouseholdState& hh) {
    if (hh.owner || hh.defaulted || hh.savings > 0.0) return false;
    hh.defaulted = true;
    return true;
}

struct QuarterContext {
    const EconState& prev;  // quarter t-1 (equal to `now` at t = 0)
    const EconState& now;
    const RuleSet& rules;
    const PolicyConfig& policy;  // terms available to this household this quarter
    int t;
};

struct QuarterOutcome {
    QuarterFlows flows;
    bool liquidated = false;
    bool defaulted = false;
};

// Quarter update in the order: accrue, liquidate, income, purchase, housing
// and consumption, balances, default. hh.salary and hh.rent must already hold
// S(t) and R(t).
inline QuarterOutcome advance_quarter(HouseholdState& hh, const QuarterContext& ctx) {
    QuarterOutcome out;
    const AccrualTaxes tx =
        accrue(hh, ctx.prev.nominal_cash, ctx.prev.super_return, ctx.rules, ctx.t);
    out.liquidated = liquidate_if_broke(hh, ctx.now);

    out.flows = compute_income(hh, ctx.now, ctx.rules, ctx.t);
    out.flows.savings_tax = tx.savings_tax;
    out.flows.super_tax = tx.super_tax;

    try_purchase(hh, ctx.now, out.flows, ctx.rules, ctx.policy, ctx.t);
    complete_flows(hh, ctx.now, out.flows, ctx.rules, ctx.t);

    const auto& f = out.flows;
    hh.savings = hh.savings_acc + f.income - f.consumption - f.housing;
    hh.pension = hh.pension_acc + f.contribution - f.benefit;
    out.defaulted = check_default(hh);
    return out;
}

} // namespace homesim
