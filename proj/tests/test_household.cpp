#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "homesim/household.hpp"

using namespace homesim;

namespace {

EconState flat_economy(double price_index = 1.0, double borrow = 0.015) {
    EconState e = init_economy(EconParams{});
    e.price_index = price_index;
    e.borrow_rate = borrow;
    return e;
}

HouseholdState renter(double target, double salary) {
    HouseholdState hh;
    hh.target_price = target;
    hh.salary = salary;
    hh.base_salary = salary;
    hh.rent = 0.3 * salary;
    hh.death_quarter = 300;
    return hh;
}

// Balance after paying `payment` at the end of each quarter, written as a
// plain loop over the schedule.
double schedule_residual(double loan, double rate, int term) {
    const double payment = rate == 0 ? loan / term : loan * rate / (1 - std::pow(1 + rate, -term));
    double l = loan;
    for (int k = 0; k < term; ++k) l = l * (1 + rate) - payment;
    return l;
}

} // namespace

TEST(Accrue, ZeroBalancesStayZero) {
    RuleSet r;
    HouseholdState hh = renter(500'000, 10'000);
    accrue(hh, 0.01, 0.02, r, 1);
    EXPECT_EQ(hh.savings_acc, 0.0);
    EXPECT_EQ(hh.pension_acc, 0.0);
}

TEST(Accrue, InterestBelowTaxFreeThreshold) {
    RuleSet r;
    HouseholdState hh = renter(500'000, 3'000);
    hh.savings = 10'000;
    const auto tx = accrue(hh, 0.01, 0.0, r, 5);
    EXPECT_EQ(tx.savings_tax, 0.0);
    EXPECT_NEAR(hh.savings_acc, 10'100, 1e-9);
}

TEST(Accrue, InterestTaxedAtMarginalRate) {
    RuleSet r;
    HouseholdState hh = renter(500'000, 20'000);
    hh.savings = 10'000;
    const auto tx = accrue(hh, 0.01, 0.0, r, 5);
    EXPECT_NEAR(tx.savings_tax, 0.30 * 100, 1e-9);
    EXPECT_NEAR(hh.savings_acc, 10'100 - 30, 1e-9);
}

TEST(Accrue, PensionReturnTax) {
    RuleSet r;
    HouseholdState hh = renter(500'000, 10'000);
    hh.pension = 100'000;
    accrue(hh, 0.0, 0.02, r, 10);
    EXPECT_NEAR(hh.pension_acc, 101'700, 1e-9);
    hh.pension = 100'000;
    hh.salary = 0;
    accrue(hh, 0.0, 0.02, r, 170);
    EXPECT_NEAR(hh.pension_acc, 102'000, 1e-9);
}

TEST(Flows, RenterAtStart) {
    RuleSet r;
    HouseholdState hh = renter(650'000, 12'625);
    EXPECT_NEAR(hh.rent, 3'787.5, 1e-9);
    const auto f = compute_flows(hh, flat_economy(), r, 0);
    EXPECT_NEAR(f.housing, 3'787.5, 1e-9);
    EXPECT_NEAR(f.salary_tax, income_tax_quarterly(12'625, r), 1e-12);
    EXPECT_NEAR(f.income, 12'625 - f.salary_tax, 1e-9);
    EXPECT_NEAR(f.contribution, 0.85 * 0.12 * 12'625, 1e-9);
    EXPECT_NEAR(f.consumption, 0.611 * (f.income - f.housing), 1e-9);
}

TEST(Flows, ConsumptionShareLateInLife) {
    RuleSet r;
    EXPECT_EQ(consumption_share(160, r), 0.844);
    EXPECT_EQ(consumption_share(159, r), 0.605);
    EXPECT_EQ(consumption_share(0, r), 0.611);
}

TEST(Flows, ConsumptionFloorScalesWithCpi) {
    RuleSet r;
    EXPECT_NEAR(consumption(1'000, 900, 10, 1.5, r), 1'800, 1e-9);
    r.consumption_base = ConsumptionBase::Gross;
    EXPECT_NEAR(consumption(10'000, 9'000, 10, 1.0, r), 6'110, 1e-9);
}

TEST(Flows, RetiredRenterDrawdown) {
    RuleSet r;
    HouseholdState hh = renter(650'000, 0);
    hh.pension_acc = 200'000;
    hh.savings_acc = 5'000;
    const auto f = compute_flows(hh, flat_economy(), r, 170);
    EXPECT_NEAR(f.benefit, 2'500, 1e-9);
    EXPECT_EQ(f.contribution, 0.0);
    EXPECT_EQ(f.salary_tax, 0.0);
    EXPECT_NEAR(f.income, f.benefit + f.age_pension, 1e-9);
}

TEST(Flows, AllNonNegative) {
    RuleSet r;
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (int i = 0; i < 2'000; ++i) {
        HouseholdState hh = renter(300'000 + 700'000 * u(rng), 25'000 * u(rng));
        hh.savings_acc = 2e5 * (u(rng) - 0.3);
        hh.pension_acc = 5e5 * u(rng);
        const int t = static_cast<int>(299 * u(rng));
        if (t >= r.retirement_quarter) hh.salary = 0;
        const auto f = compute_flows(hh, flat_economy(1 + u(rng)), r, t);
        for (double x : {f.income, f.housing, f.consumption, f.contribution, f.benefit,
                         f.age_pension, f.repayment, f.maintenance, f.salary_tax, f.savings_tax,
                         f.super_tax, f.contribution_tax})
            ASSERT_GE(x, 0.0);
    }
}

TEST(Purchase, WeakInequalitiesAtThreshold) {
    RuleSet r;
    const auto econ = flat_economy();
    const auto policy = benchmark_policy();
    HouseholdState hh = renter(500'000, 0);
    const double duty = property_transfer_tax(500'000, r);
    hh.savings_acc = (policy.deposit + policy.buffer) * 500'000 + duty;
    QuarterFlows f;
    f.income = reference_repayment(500'000, econ.borrow_rate, policy, r);
    ASSERT_TRUE(try_purchase(hh, econ, f, r, policy, 12));
    EXPECT_TRUE(hh.owner);
    EXPECT_EQ(*hh.purchase_quarter, 12);
    EXPECT_NEAR(hh.savings_acc, 0.0, 1e-9);
    EXPECT_NEAR(hh.loan, 400'000, 1e-9);
    EXPECT_EQ(f.withdrawal.pension, 0.0);
    EXPECT_NEAR(f.transfer_tax, 25'070, 1e-9);
}

TEST(Purchase, DepositShortfallBlocks) {
    RuleSet r;
    const auto econ = flat_economy();
    HouseholdState hh = renter(500'000, 0);
    hh.savings_acc = 0.21 * 500'000 + property_transfer_tax(500'000, r) - 0.01;
    hh.pension_acc = 1e6;
    QuarterFlows f;
    f.income = 1e6;
    EXPECT_FALSE(try_purchase(hh, econ, f, r, benchmark_policy(), 3));
    EXPECT_FALSE(hh.owner);
    EXPECT_EQ(hh.pension_acc, 1e6);
}

TEST(Purchase, IncomeShortfallBlocks) {
    RuleSet r;
    const auto econ = flat_economy();
    HouseholdState hh = renter(500'000, 0);
    hh.savings_acc = 1e7;
    QuarterFlows f;
    f.income = reference_repayment(500'000, econ.borrow_rate, benchmark_policy(), r) - 0.01;
    EXPECT_FALSE(try_purchase(hh, econ, f, r, benchmark_policy(), 3));
}

TEST(Purchase, EarlyWithdrawalCoversResidualDeposit) {
    RuleSet r;
    const auto econ = flat_economy();
    auto ew = policy_presets()[3];  // EW-full: beta = 1, no cap
    HouseholdState hh = renter(500'000, 0);
    const double duty = property_transfer_tax(500'000, r);
    hh.savings_acc = 0.05 * 500'000 + 0.01 * 500'000 + duty;
    hh.pension_acc = 1e7;
    QuarterFlows f;
    f.income = 1e6;
    ASSERT_TRUE(try_purchase(hh, econ, f, r, ew, 20));
    EXPECT_NEAR(f.withdrawal.pension, 0.15 * 500'000, 1e-9);
    EXPECT_NEAR(hh.savings_acc, 0.0, 1e-9);
    EXPECT_NEAR(hh.pension_acc, 1e7 - 75'000, 1e-6);
    EXPECT_NEAR(f.withdrawal.total(), 0.21 * 500'000 + duty, 1e-9);
    // Loan is sized on the full (1 - delta) leverage.
    EXPECT_NEAR(hh.loan, 400'000, 1e-9);
}

TEST(Purchase, PriceTracksIndex) {
    RuleSet r;
    HouseholdState hh = renter(400'000, 0);
    EXPECT_NEAR(target_price_at(hh, flat_economy(1.25)), 500'000, 1e-9);
}

TEST(Amortize, FirstRepayment) {
    EXPECT_NEAR(annuity_payment(480'000, 0.015, 120), 8'649, 0.5);
    EXPECT_EQ(annuity_payment(0, 0.015, 120), 0.0);
    EXPECT_NEAR(annuity_payment(120'000, 0.0, 120), 1'000, 1e-12);
}

TEST(Amortize, ScheduleClosesUnderConstantRate) {
    RuleSet r;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> loan(1e4, 2e6), rate(0.0, 0.03);
    std::uniform_int_distribution<int> term(1, 160);
    for (int i = 0; i < 1'000; ++i) {
        const double l0 = loan(rng), rb = rate(rng);
        r.loan_term = term(rng);
        HouseholdState hh;
        hh.owner = true;
        hh.purchase_quarter = 7;
        hh.loan = l0;
        int payments = 0;
        for (int t = 7; t < 7 + r.loan_term; ++t) {
            const double pi = amortize(hh, rb, t, r);
            ASSERT_GT(pi, 0.0);
            ++payments;
        }
        EXPECT_EQ(payments, r.loan_term);
        EXPECT_LT(std::abs(hh.loan), 1e-4) << l0 << " " << rb << " " << r.loan_term;
        EXPECT_LT(std::abs(schedule_residual(l0, rb, r.loan_term)), 1e-4);
        EXPECT_EQ(amortize(hh, rb, 7 + r.loan_term, r), 0.0);
        EXPECT_EQ(hh.loan, 0.0);
    }
}

TEST(Amortize, VaryingRatesStillTerminate) {
    RuleSet r;
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> rate(0.005, 0.025);
    HouseholdState hh;
    hh.owner = true;
    hh.purchase_quarter = 0;
    hh.loan = 600'000;
    for (int t = 0; t < r.loan_term; ++t) amortize(hh, rate(rng), t, r);
    EXPECT_LT(std::abs(hh.loan), 1e-4);
}

TEST(Amortize, NoLoanNoRepayment) {
    RuleSet r;
    HouseholdState hh;
    EXPECT_EQ(amortize(hh, 0.02, 5, r), 0.0);
}

TEST(Liquidation, SellsAndReturnsToRenting) {
    HouseholdState hh;
    hh.owner = true;
    hh.purchase_quarter = 10;
    hh.target_price = 700'000;
    hh.loan = 400'000;
    hh.savings_acc = -5'000;
    ASSERT_TRUE(liquidate_if_broke(hh, flat_economy(1.0)));
    EXPECT_NEAR(hh.savings_acc, 295'000, 1e-9);
    EXPECT_FALSE(hh.owner);
    EXPECT_FALSE(hh.purchase_quarter);
    EXPECT_EQ(hh.loan, 0.0);
    EXPECT_EQ(hh.liquidations, 1);
}

TEST(Liquidation, PositiveSavingsKeepHouse) {
    HouseholdState hh;
    hh.owner = true;
    hh.purchase_quarter = 10;
    hh.savings_acc = 1;
    EXPECT_FALSE(liquidate_if_broke(hh, flat_economy()));
    EXPECT_TRUE(hh.owner);
}

TEST(Liquidation, RenterIsNotLiquidated) {
    HouseholdState hh;
    hh.savings_acc = -10;
    EXPECT_FALSE(liquidate_if_broke(hh, flat_economy()));
}

TEST(Default, RenterWithNoSavings) {
    HouseholdState hh;
    hh.savings = 0.0;
    EXPECT_TRUE(check_default(hh));
    EXPECT_TRUE(hh.defaulted);
    HouseholdState ok;
    ok.savings = 0.01;
    EXPECT_FALSE(check_default(ok));
    HouseholdState owner;
    owner.owner = true;
    owner.savings = -100;
    EXPECT_FALSE(check_default(owner));
}

namespace {

struct Run {
    HouseholdState hh;
    std::vector<QuarterOutcome> q;
    std::vector<double> price_index;
};

Run run_household(const PolicyConfig& policy, double target, double salary, int quarters) {
    RuleSet r;
    EconParams p;
    Run run{renter(target, salary), {}, {}};
    EconState prev = init_economy(p), now = prev;
    for (int t = 0; t < quarters; ++t) {
        if (t > 0) {
            now = step_economy(prev, MacroShocks{}, 0.0, p);
            if (t < r.retirement_quarter)
                run.hh.salary = salary_step(run.hh.salary, t, now.awe_expected, 0, 0, p).salary;
            else
                run.hh.salary = 0;
        }
        run.hh.rent = r.rent_share * run.hh.base_salary * now.rent_index;
        run.q.push_back(advance_quarter(run.hh, {prev, now, r, policy, t}));
        run.price_index.push_back(now.price_index);
        prev = now;
    }
    return run;
}

} // namespace

TEST(Quarter, DeterministicAndBalanced) {
    for (const auto& policy : policy_presets()) {
        const auto a = run_household(policy, 650'000, 12'625, 300);
        const auto b = run_household(policy, 650'000, 12'625, 300);
        EXPECT_EQ(a.hh.savings, b.hh.savings);
        EXPECT_EQ(a.hh.pension, b.hh.pension);
        EXPECT_EQ(a.hh.purchase_quarter, b.hh.purchase_quarter);
        for (const auto& q : a.q) {
            if (q.flows.purchased) {
                const double price_total = q.flows.withdrawal.total();
                EXPECT_GT(price_total, 0.0);
                if (policy.max_pension_share == 0.0) { EXPECT_EQ(q.flows.withdrawal.pension, 0.0); }
            }
        }
    }
}

TEST(Quarter, RenterPensionOnlyDebitedAtPurchase) {
    RuleSet r;
    EconParams p;
    const auto ew = policy_presets()[2];
    HouseholdState hh = renter(825'000, 17'312.5);
    EconState prev = init_economy(p), now = prev;
    for (int t = 0; t < 160; ++t) {
        if (t > 0) {
            now = step_economy(prev, MacroShocks{}, 0.0, p);
            hh.salary = salary_step(hh.salary, t, now.awe_expected, 0, 0, p).salary;
        }
        hh.rent = r.rent_share * hh.base_salary * now.rent_index;
        const bool was_owner = hh.owner;
        const auto q = advance_quarter(hh, {prev, now, r, ew, t});
        if (!was_owner) {
            // F(t) = F_acc + M - B, with a debit only in the purchase quarter.
            EXPECT_NEAR(hh.pension, hh.pension_acc + q.flows.contribution - q.flows.benefit, 1e-6);
            if (!q.flows.purchased) { EXPECT_EQ(q.flows.withdrawal.pension, 0.0); }
        }
        prev = now;
    }
}

TEST(Quarter, PurchaseConservation) {
    RuleSet r;
    for (const auto& policy : policy_presets()) {
        const auto run = run_household(policy, 475'000, 7'937.5, 200);
        int purchases = 0;
        for (std::size_t t = 0; t < run.q.size(); ++t) {
            const auto& f = run.q[t].flows;
            if (!f.purchased) continue;
            ++purchases;
            const double price = 475'000 * run.price_index[t];
            const double required =
                (policy.deposit + policy.buffer) * price + property_transfer_tax(price, r);
            EXPECT_NEAR(f.withdrawal.savings + f.withdrawal.pension, required, 1e-6);
        }
        EXPECT_GE(purchases, 1) << policy.name;
    }
}
