#pragma once

// Quarterly macro-financial scenario generator (cascade model) and the
// residual dependence models that drive it.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "homesim/csv.hpp"
#include "homesim/error.hpp"
#include "homesim/random.hpp"

namespace homesim {

enum Shock : std::size_t { kCpi = 0, kAwe, kCash, kSpread, kSuper, kRent, kPrice, kShockCount };

inline constexpr std::array<std::string_view, kShockCount> kShockNames{
    "cpi", "awe", "r", "s", "f", "rent", "price"};

using MacroShocks = std::array<double, kShockCount>;

// How the rent error-correction term reads the rent and price indices.
enum class RentEcmSpace { Level, Log };

struct EconParams {
    double cpi_mean = 0.0065;
    double cpi_ar1 = 0.2897;

    double awe_const = 0.0021;
    double awe_ar1 = 0.5716;
    double awe_cpi_coef = 0.2500;

    double rcash_ar1 = 0.6080;

    double spread_floor = 0.0034;
    double spread_cap = 0.011;

    double super_premium = 0.01;

    double rent_mean = 0.007;
    double rent_ar1 = 0.6533;
    double rent_ar2 = 0.2832;
    double rent_ecm_coef = 0.0117;
    double ecm_const = 0.1386;
    double ecm_price_coef = 0.2336;
    double ecm_awe_coef = 1.0943;
    RentEcmSpace ecm_space = RentEcmSpace::Log;

    double price_mean = 0.01;
    double price_ar1 = 0.6988;
    double price_demand_coef = 0.1293;

    // Salary age profile x_s(t) = exp(a0 - a1 * t / 4) - 1.
    double age_a0 = 0.033091;
    double age_a1 = 0.001462;

    double salary_floor = 1.0;

    // Annual rates at t = 0.
    double initial_cash_rate_annual = 0.0435;
    double initial_borrow_rate_annual = 0.0599;
    double initial_price_growth = 0.01;

    // Unconditional mean of AWE growth implied by the AR(1) with the CPI term.
    double awe_mean() const { return (awe_const + awe_cpi_coef * cpi_mean) / (1.0 - awe_ar1); }

    std::vector<std::string> validate() const {
        std::vector<std::string> errs;
        if (!(std::abs(cpi_ar1) < 1.0)) errs.push_back("econ.cpi_ar1 must satisfy |cpi_ar1| < 1");
        if (!(std::abs(rcash_ar1) < 1.0))
            errs.push_back("econ.rcash_ar1 must satisfy |rcash_ar1| < 1");
        if (!(std::abs(awe_ar1) < 1.0)) errs.push_back("econ.awe_ar1 must satisfy |awe_ar1| < 1");
        if (!(std::abs(price_ar1) < 1.0))
            errs.push_back("econ.price_ar1 must satisfy |price_ar1| < 1");
        if (!(spread_floor <= spread_cap))
            errs.push_back("econ.spread_floor must not exceed econ.spread_cap");
        if (!(salary_floor > 0.0)) errs.push_back("econ.salary_floor must be positive");
        if (!(initial_cash_rate_annual > -1.0) || !(initial_borrow_rate_annual > -1.0))
            errs.push_back("econ initial rates must exceed -100%");
        return errs;
    }
};

struct EconState {
    int t = 0;

    double cpi_growth = 0.0;
    double awe_growth = 0.0;
    // AWE growth before its own shock; salaries add their split shocks to this.
    double awe_expected = 0.0;
    double cpi_index = 1.0;
    double awe_index = 1.0;

    double real_cash = 0.0;     // rr_A
    double nominal_cash = 0.0;  // r_A
    double spread = 0.0;        // s_B
    double borrow_rate = 0.0;   // r_B
    double super_return = 0.0;  // r_F

    double rent_ecm = 0.0;
    double rent_index = 1.0;
    double rent_growth = 0.0;      // y_R(t)
    double rent_growth_lag = 0.0;  // y_R(t-1)

    double price_index = 1.0;
    double price_growth = 0.0;  // y_P(t)

    double demand_growth = 0.0;  // y_d(t), filled in by the cohort simulator
};

inline bool all_finite(const MacroShocks& s) {
    for (double v : s)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double rent_ecm_term(double rent_index, double price_index, double awe_growth,
                            const EconParams& p) {
    const double r = p.ecm_space == RentEcmSpace::Log ? std::log(rent_index) : rent_index;
    const double q = p.ecm_space == RentEcmSpace::Log ? std::log(price_index) : price_index;
    return r - p.ecm_const + p.ecm_price_coef * q - p.ecm_awe_coef * awe_growth;
}

inline EconState init_economy(const EconParams& p) {
    EconState s;
    s.t = 0;
    s.cpi_growth = p.cpi_mean;
    s.awe_growth = p.awe_mean();
    s.awe_expected = s.awe_growth;
    s.nominal_cash = std::pow(1.0 + p.initial_cash_rate_annual, 0.25) - 1.0;
    s.borrow_rate = std::pow(1.0 + p.initial_borrow_rate_annual, 0.25) - 1.0;
    s.real_cash = std::log1p(s.nominal_cash) - s.cpi_growth;
    s.spread = std::log1p(s.borrow_rate) - s.nominal_cash;
    s.super_return = s.nominal_cash + p.super_premium;
    s.rent_growth = p.rent_mean;
    s.rent_growth_lag = p.rent_mean;
    s.rent_ecm = rent_ecm_term(1.0, 1.0, s.awe_growth, p);
    s.price_growth = p.initial_price_growth;
    s.demand_growth = 0.0;
    return s;
}

// One cascade step from quarter t-1 to t. demand_growth_lag is y_d(t-1).
inline EconState step_economy(const EconState& prev, const MacroShocks& eps,
                              double demand_growth_lag, const EconParams& p) {
    if (!all_finite(eps) || !std::isfinite(demand_growth_lag))
        throw SimulationError("non-finite shock at quarter " + std::to_string(prev.t + 1));

    EconState s;
    s.t = prev.t + 1;

    s.cpi_growth = p.cpi_mean + p.cpi_ar1 * (prev.cpi_growth - p.cpi_mean) + eps[kCpi];
    s.awe_expected = p.awe_const + p.awe_ar1 * prev.awe_growth + p.awe_cpi_coef * prev.cpi_growth;
    s.awe_growth = s.awe_expected + eps[kAwe];

    s.real_cash = p.rcash_ar1 * prev.real_cash + eps[kCash];
    s.nominal_cash = std::max(0.0, std::exp(s.real_cash + s.cpi_growth) - 1.0);
    s.spread = std::max(p.spread_floor, std::min(p.spread_cap, prev.spread + eps[kSpread]));
    s.borrow_rate = std::max(0.0, std::exp(s.spread + s.nominal_cash) - 1.0);
    s.super_return = s.nominal_cash + p.super_premium + eps[kSuper];

    s.rent_ecm = rent_ecm_term(prev.rent_index, prev.price_index, prev.awe_growth, p);
    s.rent_growth_lag = prev.rent_growth;
    s.rent_growth = p.rent_mean + p.rent_ar1 * (prev.rent_growth - p.rent_mean) +
                    p.rent_ar2 * (prev.rent_growth_lag - p.rent_mean) -
                    p.rent_ecm_coef * s.rent_ecm + eps[kRent];

    s.price_growth = p.price_mean + p.price_ar1 * (prev.price_growth - p.price_mean) +
                     p.price_demand_coef * demand_growth_lag + eps[kPrice];

    s.cpi_index = prev.cpi_index * std::exp(s.cpi_growth);
    s.awe_index = prev.awe_index * std::exp(s.awe_growth);
    s.rent_index = prev.rent_index * std::exp(s.rent_growth);
    s.price_index = prev.price_index * std::exp(s.price_growth);
    s.demand_growth = 0.0;
    return s;
}

inline double age_profile(int t, const EconParams& p) {
    return std::exp(p.age_a0 - p.age_a1 * t / 4.0) - 1.0;
}

struct SalaryStep {
    double salary = 0.0;
    bool floored = false;
};

// S(t) = S(t-1) (1 + x_s(t)) (1 + awe + common + idio), floored at p.salary_floor.
inline SalaryStep salary_step(double prev_salary, int t, double awe_growth, double common_shock,
                              double idio_shock, const EconParams& p) {
    const double s =
        prev_salary * (1.0 + age_profile(t, p)) * (1.0 + awe_growth + common_shock + idio_shock);
    if (!(s >= p.salary_floor)) return {p.salary_floor, true};
    return {s, false};
}

struct ResidualDraw {
    MacroShocks macro{};
    double salary_common = 0.0;
    std::vector<double> salary_idio;
};

enum class DependenceKind { Zero, Gaussian, Empirical };

inline std::string_view to_string(DependenceKind k) {
    switch (k) {
    case DependenceKind::Zero: return "zero";
    case DependenceKind::Gaussian: return "gaussian";
    case DependenceKind::Empirical: return "empirical";
    }
    return "?";
}

using ShockMatrix = Eigen::Matrix<double, kShockCount, kShockCount>;

// Contemporaneous dependence across the seven macro shocks. Salary shocks are
// derived from the AWE residual distribution: the common part carries half of
// its variance, the household-specific part the other half.
class DependenceModel {
public:
    static DependenceModel zero() { return DependenceModel(DependenceKind::Zero); }

    // salary_sd < 0 means "use the AWE residual sd".
    static DependenceModel gaussian(const MacroShocks& sd, const ShockMatrix& correlation,
                                    double salary_sd = -1.0) {
        for (std::size_t i = 0; i < kShockCount; ++i)
            if (!(sd[i] >= 0.0) || !std::isfinite(sd[i]))
                throw ConfigError("dependence.sd." + std::string(kShockNames[i]) +
                                  " must be finite and non-negative");
        for (std::size_t i = 0; i < kShockCount; ++i) {
            if (std::abs(correlation(i, i) - 1.0) > 1e-12)
                throw ConfigError("dependence.correlation must have a unit diagonal");
            for (std::size_t j = 0; j < kShockCount; ++j)
                if (std::abs(correlation(i, j) - correlation(j, i)) > 1e-12)
                    throw ConfigError("dependence.correlation must be symmetric");
        }
        Eigen::LLT<ShockMatrix> llt(correlation);
        if (llt.info() != Eigen::Success)
            throw ConfigError("dependence.correlation is not positive definite");

        DependenceModel m(DependenceKind::Gaussian);
        m.sd_ = sd;
        m.chol_ = llt.matrixL();
        m.salary_sd_ = salary_sd < 0.0 ? sd[kAwe] : salary_sd;
        return m;
    }

    static DependenceModel empirical(std::vector<MacroShocks> rows) {
        if (rows.empty()) throw ConfigError("empirical residual table has no rows");
        for (const auto& r : rows)
            if (!all_finite(r)) throw ConfigError("empirical residual table has non-finite values");
        DependenceModel m(DependenceKind::Empirical);
        m.rows_ = std::move(rows);
        return m;
    }

    // CSV with header and the seven named columns in any order.
    static DependenceModel empirical_from_csv(const std::string& path) {
        if (path.empty()) throw ConfigError("empirical dependence model requires a residual file");
        const auto table = csv::read_numeric(path);
        std::array<std::size_t, kShockCount> cols{};
        for (std::size_t i = 0; i < kShockCount; ++i)
            cols[i] = table.column(std::string(kShockNames[i]));
        std::vector<MacroShocks> rows;
        rows.reserve(table.rows.size());
        for (const auto& r : table.rows) {
            MacroShocks s{};
            for (std::size_t i = 0; i < kShockCount; ++i) s[i] = r[cols[i]];
            rows.push_back(s);
        }
        return empirical(std::move(rows));
    }

    DependenceKind kind() const noexcept { return kind_; }
    const std::vector<MacroShocks>& rows() const noexcept { return rows_; }

    void draw_into(RandomStream& rng, std::size_t n_households, ResidualDraw& out) const {
        out.salary_idio.assign(n_households, 0.0);
        out.macro.fill(0.0);
        out.salary_common = 0.0;
        constexpr double half = 0.70710678118654752440;  // sqrt(1/2)
        switch (kind_) {
        case DependenceKind::Zero: return;
        case DependenceKind::Gaussian: {
            Eigen::Matrix<double, kShockCount, 1> z;
            for (std::size_t i = 0; i < kShockCount; ++i) z(i) = rng.normal();
            const Eigen::Matrix<double, kShockCount, 1> c = chol_ * z;
            for (std::size_t i = 0; i < kShockCount; ++i) out.macro[i] = sd_[i] * c(i);
            out.salary_common = salary_sd_ * half * c(kAwe);
            for (auto& e : out.salary_idio) e = salary_sd_ * half * rng.normal();
            return;
        }
        case DependenceKind::Empirical: {
            out.macro = rows_[rng.index(rows_.size())];
            out.salary_common = half * out.macro[kAwe];
            for (auto& e : out.salary_idio) e = half * rows_[rng.index(rows_.size())][kAwe];
            return;
        }
        }
    }

private:
    explicit DependenceModel(DependenceKind k) : kind_(k) {}

    DependenceKind kind_;
    MacroShocks sd_{};
    ShockMatrix chol_ = ShockMatrix::Identity();
    double salary_sd_ = 0.0;
    std::vector<MacroShocks> rows_;
};

// Residuals for (seed, scenario, quarter). Independent of the policy regime, so
// every regime simulated for a scenario consumes the same numbers.
inline ResidualDraw draw_residuals(std::uint64_t seed, std::uint64_t scenario_id, int quarter,
                                   std::size_t n_households, const DependenceModel& model) {
    RandomStream rng(derive_seed({seed, static_cast<std::uint64_t>(StreamKind::Shocks),
                                  scenario_id, static_cast<std::uint64_t>(quarter)}));
    ResidualDraw d;
    model.draw_into(rng, n_households, d);
    return d;
}

} // namespace homesim
