#pragma once

// Experiment configuration: strict JSON reader (unknown keys are errors),
// canonical echo, and the experiment hash used to tag every output file.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homesim/cohort.hpp"
#include "homesim/error.hpp"
#include "homesim/experiment.hpp"
#include "homesim/metrics.hpp"
#include "homesim/rules.hpp"
#include "homesim/scenario.hpp"

namespace homesim {

using json = nlohmann::ordered_json;

struct Correlation {
    Shock a;
    Shock b;
    double rho;

    friend bool operator==(const Correlation&, const Correlation&) = default;
};

struct DependenceConfig {
    DependenceKind kind = DependenceKind::Zero;
    MacroShocks sd{};
    std::vector<Correlation> correlations;
    double salary_sd = -1.0;  // < 0: use the AWE residual sd
    std::string residual_csv;
};

struct OutputConfig {
    std::string dir = "out";
    std::string checkpoint_dir;
};

struct SensitivityConfig {
    double demand_coef_multiplier = 1.0;
    bool super_return_match_property = false;
};

struct ExperimentConfig {
    CohortConfig cohort;
    EconParams econ;
    DependenceConfig dependence;
    RuleSet rules;
    std::vector<PolicyConfig> policies;  // benchmark first
    OutputConfig outputs;
    SensitivityConfig sensitivity;
    MetricsOptions metrics;
};

inline std::vector<PolicyConfig> default_policies() {
    const auto p = policy_presets();
    return {p[0], p[1], p[2]};
}

inline std::optional<PolicyConfig> find_preset(const std::string& name) {
    for (const auto& p : policy_presets())
        if (p.name == name) return p;
    return std::nullopt;
}

namespace detail {

// Reads one JSON object, remembering which keys were consumed so leftovers
// can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path, std::vector<std::string>& errs)
        : j_(j), path_(std::move(path)), errs_(errs) {
        if (!j_.is_object()) {
            errs_.push_back(where() + " must be an object");
            ok_ = false;
        }
    }

    ~ObjectReader() {
        if (!ok_) return;
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) errs_.push_back("unknown key '" + key_path(it.key()) + "'");
    }

    bool has(const std::string& key) {
        if (!ok_ || !j_.contains(key)) return false;
        seen_.insert(key);
        return true;
    }

    const json& at(const std::string& key) const { return j_.at(key); }

    std::string key_path(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    template <class T>
    void get(const std::string& key, T& out) {
        if (!has(key)) return;
        try {
            out = j_.at(key).get<T>();
        } catch (const std::exception&) {
            errs_.push_back("'" + key_path(key) + "' has the wrong type");
        }
    }

    // Number, or null for +infinity.
    void get_extended(const std::string& key, double& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (v.is_null()) out = kInf;
        else if (v.is_number()) out = v.get<double>();
        else errs_.push_back("'" + key_path(key) + "' must be a number or null");
    }

    template <std::size_t N>
    void get_array(const std::string& key, std::array<double, N>& out) {
        if (!has(key)) return;
        const auto& v = j_.at(key);
        if (!v.is_array() || v.size() != N) {
            errs_.push_back("'" + key_path(key) + "' must be an array of " + std::to_string(N) +
                            " numbers");
            return;
        }
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_number()) {
                errs_.push_back("'" + key_path(key) + "' must contain numbers");
                return;
            }
            out[i] = v[i].get<double>();
        }
    }

    std::vector<std::string>& errors() { return errs_; }

private:
    std::string where() const { return path_.empty() ? "config" : "'" + path_ + "'"; }

    const json& j_;
    std::string path_;
    std::vector<std::string>& errs_;
    std::set<std::string> seen_;
    bool ok_ = true;
};

inline json extended(double x) { return std::isinf(x) ? json(nullptr) : json(x); }

inline std::optional<Shock> shock_from_name(const std::string& s) {
    for (std::size_t i = 0; i < kShockCount; ++i)
        if (kShockNames[i] == s) return static_cast<Shock>(i);
    return std::nullopt;
}

inline std::optional<MarketStructure> market_from_name(const std::string& s) {
    if (s == "equal_affordability") return MarketStructure::EqualAffordability;
    if (s == "supply_constrained") return MarketStructure::SupplyConstrained;
    return std::nullopt;
}

inline std::optional<AccessRule> access_from_name(const std::string& s) {
    for (auto r : {AccessRule::Universal, AccessRule::BelowMedianIncome,
                   AccessRule::BelowQuartileIncome})
        if (to_string(r) == s) return r;
    return std::nullopt;
}

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    if (p.empty()) return p;
    std::filesystem::path path(p);
    if (path.is_relative()) path = base / path;
    return path.lexically_normal().string();
}

inline void read_schedule(ObjectReader& r, const std::string& key, PiecewiseLinear& out) {
    if (!r.has(key)) return;
    const auto& v = r.at(key);
    if (!v.is_array() || v.empty()) {
        r.errors().push_back("'" + r.key_path(key) + "' must be a non-empty array of segments");
        return;
    }
    PiecewiseLinear f;
    for (std::size_t i = 0; i < v.size(); ++i) {
        ObjectReader s(v[i], r.key_path(key) + "[" + std::to_string(i) + "]", r.errors());
        PiecewiseLinear::Segment seg{kInf, 0, 0, 0};
        s.get_extended("upper", seg.upper);
        s.get("base", seg.base);
        s.get("rate", seg.rate);
        s.get("anchor", seg.anchor);
        f.segments.push_back(seg);
    }
    out = f;
}

inline json schedule_json(const PiecewiseLinear& f) {
    json a = json::array();
    for (const auto& s : f.segments)
        a.push_back({{"upper", extended(s.upper)}, {"base", s.base}, {"rate", s.rate}, {"anchor", s.anchor}});
    return a;
}

inline void read_thresholds(ObjectReader& r, const std::string& key, AgePensionThresholds& t) {
    if (!r.has(key)) return;
    ObjectReader o(r.at(key), r.key_path(key), r.errors());
    o.get("max_base", t.max_base);
    o.get("asset_threshold_renter", t.asset_threshold_renter);
    o.get("asset_threshold_owner", t.asset_threshold_owner);
    o.get("income_threshold", t.income_threshold);
    o.get("deeming_threshold", t.deeming_threshold);
    o.get("supplement_min", t.supplement_min);
    o.get("supplement_max", t.supplement_max);
    o.get("rent_min", t.rent_min);
    o.get("rent_max", t.rent_max);
    o.get("income_taper", t.income_taper);
}

inline json thresholds_json(const AgePensionThresholds& t) {
    return {{"max_base", t.max_base},
            {"asset_threshold_renter", t.asset_threshold_renter},
            {"asset_threshold_owner", t.asset_threshold_owner},
            {"income_threshold", t.income_threshold},
            {"deeming_threshold", t.deeming_threshold},
            {"supplement_min", t.supplement_min},
            {"supplement_max", t.supplement_max},
            {"rent_min", t.rent_min},
            {"rent_max", t.rent_max},
            {"income_taper", t.income_taper}};
}

inline void read_rules(const json& j, const std::string& path, RuleSet& rules,
                       std::vector<std::string>& errs) {
    ObjectReader r(j, path, errs);
    read_schedule(r, "property_tax", rules.property_tax);
    read_schedule(r, "income_tax_annual", rules.income_tax_annual);
    r.get("income_tax_periods", rules.income_tax_periods);
    r.get("super_return_tax", rules.super_return_tax);
    r.get("contribution_tax", rules.contribution_tax);
    r.get("contribution_tax_free_annual", rules.contribution_tax_free_annual);
    r.get("gamma", rules.gamma);
    if (r.has("drawdown")) {
        const auto& v = r.at("drawdown");
        rules.drawdown.clear();
        if (!v.is_array()) errs.push_back("'" + r.key_path("drawdown") + "' must be an array");
        else
            for (std::size_t i = 0; i < v.size(); ++i) {
                ObjectReader b(v[i], r.key_path("drawdown") + "[" + std::to_string(i) + "]", errs);
                DrawdownBand band{0, 0};
                b.get("from_quarter", band.from_quarter);
                b.get("rate", band.rate);
                rules.drawdown.push_back(band);
            }
    }
    if (r.has("age_pension")) {
        ObjectReader a(r.at("age_pension"), r.key_path("age_pension"), errs);
        auto& ap = rules.age_pension;
        read_thresholds(a, "single", ap.single);
        read_thresholds(a, "couple", ap.couple);
        a.get("asset_taper", ap.asset_taper);
        a.get("rent_taper", ap.rent_taper);
        a.get("deeming_low", ap.deeming_low);
        a.get("deeming_high", ap.deeming_high);
        a.get("fortnights_per_quarter", ap.fortnights_per_quarter);
        a.get("rent_assistance_fortnightly_rent", ap.rent_assistance_fortnightly_rent);
    }
    r.get("retirement_quarter", rules.retirement_quarter);
    r.get("loan_term", rules.loan_term);
    r.get("maintenance_rate", rules.maintenance_rate);
    r.get("council_rate_share", rules.council_rate_share);
    if (r.has("consumption")) {
        const auto& v = r.at("consumption");
        rules.consumption.clear();
        if (!v.is_array()) errs.push_back("'" + r.key_path("consumption") + "' must be an array");
        else
            for (std::size_t i = 0; i < v.size(); ++i) {
                ObjectReader b(v[i], r.key_path("consumption") + "[" + std::to_string(i) + "]", errs);
                ConsumptionBand band{0, 0};
                b.get("from_quarter", band.from_quarter);
                b.get("share", band.share);
                rules.consumption.push_back(band);
            }
    }
    r.get("consumption_floor", rules.consumption_floor);
    if (r.has("consumption_base")) {
        const auto& v = r.at("consumption_base");
        if (v == "net_of_housing") rules.consumption_base = ConsumptionBase::NetOfHousing;
        else if (v == "gross") rules.consumption_base = ConsumptionBase::Gross;
        else errs.push_back("'" + r.key_path("consumption_base") + "' must be net_of_housing or gross");
    }
    r.get("median_income_quarterly", rules.median_income_quarterly);
    r.get("quartile_income_quarterly", rules.quartile_income_quarterly);
    r.get("rent_share", rules.rent_share);
}

inline json rules_json(const RuleSet& rules) {
    json d = json::array();
    for (const auto& b : rules.drawdown) d.push_back({{"from_quarter", b.from_quarter}, {"rate", b.rate}});
    json c = json::array();
    for (const auto& b : rules.consumption) c.push_back({{"from_quarter", b.from_quarter}, {"share", b.share}});
    const auto& ap = rules.age_pension;
    return {{"property_tax", schedule_json(rules.property_tax)},
            {"income_tax_annual", schedule_json(rules.income_tax_annual)},
            {"income_tax_periods", rules.income_tax_periods},
            {"super_return_tax", rules.super_return_tax},
            {"contribution_tax", rules.contribution_tax},
            {"contribution_tax_free_annual", rules.contribution_tax_free_annual},
            {"gamma", rules.gamma},
            {"drawdown", d},
            {"age_pension",
             {{"single", thresholds_json(ap.single)},
              {"couple", thresholds_json(ap.couple)},
              {"asset_taper", ap.asset_taper},
              {"rent_taper", ap.rent_taper},
              {"deeming_low", ap.deeming_low},
              {"deeming_high", ap.deeming_high},
              {"fortnights_per_quarter", ap.fortnights_per_quarter},
              {"rent_assistance_fortnightly_rent", ap.rent_assistance_fortnightly_rent}}},
            {"retirement_quarter", rules.retirement_quarter},
            {"loan_term", rules.loan_term},
            {"maintenance_rate", rules.maintenance_rate},
            {"council_rate_share", rules.council_rate_share},
            {"consumption", c},
            {"consumption_floor", rules.consumption_floor},
            {"consumption_base",
             rules.consumption_base == ConsumptionBase::NetOfHousing ? "net_of_housing" : "gross"},
            {"median_income_quarterly", rules.median_income_quarterly},
            {"quartile_income_quarterly", rules.quartile_income_quarterly},
            {"rent_share", rules.rent_share}};
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string text = ss.str();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return json::object();
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse '" + path.string() + "': " + e.what());
    }
}

inline void read_policy(const json& v, const std::string& path, std::vector<PolicyConfig>& out,
                        std::vector<std::string>& errs) {
    if (v.is_string()) {
        const auto p = find_preset(v.get<std::string>());
        if (!p) errs.push_back("'" + path + "': unknown policy preset '" + v.get<std::string>() + "'");
        else out.push_back(*p);
        return;
    }
    ObjectReader r(v, path, errs);
    PolicyConfig p = benchmark_policy();
    if (r.has("preset")) {
        const auto& name = r.at("preset");
        const auto preset = name.is_string() ? find_preset(name.get<std::string>()) : std::nullopt;
        if (!preset) errs.push_back("'" + r.key_path("preset") + "' names no known preset");
        else p = *preset;
    }
    r.get("name", p.name);
    r.get("deposit", p.deposit);
    r.get("buffer", p.buffer);
    r.get("min_savings", p.min_savings);
    r.get("max_pension_share", p.max_pension_share);
    r.get_extended("pension_cap", p.pension_cap);
    if (r.has("access")) {
        const auto& a = r.at("access");
        const auto rule = a.is_string() ? access_from_name(a.get<std::string>()) : std::nullopt;
        if (!rule) errs.push_back("'" + r.key_path("access") + "' must be universal, "
                                  "below_all_ages_median_income or below_25th_percentile");
        else p.access = *rule;
    }
    out.push_back(p);
}

inline json policy_json(const PolicyConfig& p) {
    return {{"name", p.name},
            {"deposit", p.deposit},
            {"buffer", p.buffer},
            {"min_savings", p.min_savings},
            {"max_pension_share", p.max_pension_share},
            {"pension_cap", extended(p.pension_cap)},
            {"access", std::string(to_string(p.access))}};
}

} // namespace detail

inline std::vector<std::string> validate(const ExperimentConfig& cfg) {
    std::vector<std::string> errs = cfg.cohort.validate(cfg.rules.retirement_quarter);
    for (auto& e : cfg.econ.validate()) errs.push_back(std::move(e));
    for (auto& e : cfg.rules.validate()) errs.push_back(std::move(e));
    int benchmarks = 0;
    std::set<std::string> names;
    for (const auto& p : cfg.policies) {
        for (auto& e : p.validate()) errs.push_back(std::move(e));
        if (p.name == "benchmark") {
            ++benchmarks;
            if (!(p == benchmark_policy()))
                errs.push_back("policy 'benchmark' must keep the benchmark terms");
        }
        if (!names.insert(p.name).second) errs.push_back("duplicate policy name '" + p.name + "'");
    }
    if (benchmarks != 1) errs.push_back("policies must include exactly one 'benchmark'");
    const double m = cfg.sensitivity.demand_coef_multiplier;
    if (m != 0.5 && m != 1.0 && m != 2.0)
        errs.push_back("sensitivity.demand_coef_multiplier must be 0.5, 1 or 2");
    const auto& d = cfg.dependence;
    if (d.kind == DependenceKind::Empirical) {
        if (d.residual_csv.empty())
            errs.push_back("dependence.residual_csv is required by the empirical model");
        else if (!std::filesystem::exists(d.residual_csv))
            errs.push_back("dependence.residual_csv '" + d.residual_csv + "' does not exist");
    }
    for (const auto& c : d.correlations)
        if (c.a == c.b || !(std::abs(c.rho) < 1.0))
            errs.push_back("dependence.correlations entries need distinct shocks and |rho| < 1");
    if (!cfg.cohort.mortality_csv.empty() && !std::filesystem::exists(cfg.cohort.mortality_csv))
        errs.push_back("cohort.mortality_csv '" + cfg.cohort.mortality_csv + "' does not exist");
    if (cfg.outputs.dir.empty()) errs.push_back("outputs.dir must not be empty");
    return errs;
}

// `base` resolves relative file paths (normally the config file's directory).
inline ExperimentConfig config_from_json(const json& j, const std::filesystem::path& base) {
    using detail::ObjectReader;
    std::vector<std::string> errs;
    ExperimentConfig cfg;
    {
        ObjectReader top(j, "", errs);

        if (top.has("cohort")) {
            ObjectReader r(top.at("cohort"), "cohort", errs);
            auto& c = cfg.cohort;
            r.get("n_households", c.n_households);
            r.get("n_scenarios", c.n_scenarios);
            r.get("horizon", c.horizon);
            if (r.has("markets")) {
                c.markets.clear();
                const auto& v = r.at("markets");
                if (!v.is_array()) errs.push_back("'cohort.markets' must be an array");
                else
                    for (const auto& m : v) {
                        const auto mk = m.is_string() ? detail::market_from_name(m.get<std::string>())
                                                      : std::nullopt;
                        if (!mk) errs.push_back("'cohort.markets' entries must be equal_affordability "
                                                "or supply_constrained");
                        else if (std::find(c.markets.begin(), c.markets.end(), *mk) == c.markets.end())
                            c.markets.push_back(*mk);
                    }
            }
            r.get("seed", c.seed);
            r.get("mortality_csv", c.mortality_csv);
            c.mortality_csv = detail::resolve_path(c.mortality_csv, base);
            r.get_array("income_group_weights", c.income_group_weights);
            r.get_array("starting_salaries", c.starting_salaries);
            r.get("equal_affordability_multiple", c.equal_affordability_multiple);
            r.get("supply_min_price", c.supply_min_price);
            r.get("supply_max_price", c.supply_max_price);
            r.get("survival_fixed_across_scenarios", c.survival_fixed_across_scenarios);
        }

        if (top.has("econ")) {
            ObjectReader r(top.at("econ"), "econ", errs);
            auto& e = cfg.econ;
            r.get("cpi_mean", e.cpi_mean);
            r.get("cpi_ar1", e.cpi_ar1);
            r.get("awe_const", e.awe_const);
            r.get("awe_ar1", e.awe_ar1);
            r.get("awe_cpi_coef", e.awe_cpi_coef);
            r.get("rcash_ar1", e.rcash_ar1);
            r.get("spread_floor", e.spread_floor);
            r.get("spread_cap", e.spread_cap);
            r.get("super_premium", e.super_premium);
            r.get("rent_mean", e.rent_mean);
            r.get("rent_ar1", e.rent_ar1);
            r.get("rent_ar2", e.rent_ar2);
            r.get("rent_ecm_coef", e.rent_ecm_coef);
            r.get("ecm_const", e.ecm_const);
            r.get("ecm_price_coef", e.ecm_price_coef);
            r.get("ecm_awe_coef", e.ecm_awe_coef);
            if (r.has("ecm_space")) {
                const auto& v = r.at("ecm_space");
                if (v == "log") e.ecm_space = RentEcmSpace::Log;
                else if (v == "level") e.ecm_space = RentEcmSpace::Level;
                else errs.push_back("'econ.ecm_space' must be log or level");
            }
            r.get("price_mean", e.price_mean);
            r.get("price_ar1", e.price_ar1);
            r.get("price_demand_coef", e.price_demand_coef);
            r.get("age_a0", e.age_a0);
            r.get("age_a1", e.age_a1);
            r.get("salary_floor", e.salary_floor);
            r.get("initial_cash_rate_annual", e.initial_cash_rate_annual);
            r.get("initial_borrow_rate_annual", e.initial_borrow_rate_annual);
            r.get("initial_price_growth", e.initial_price_growth);
        }

        if (top.has("dependence")) {
            ObjectReader r(top.at("dependence"), "dependence", errs);
            auto& d = cfg.dependence;
            if (r.has("model")) {
                const auto& v = r.at("model");
                if (v == "zero") d.kind = DependenceKind::Zero;
                else if (v == "gaussian") d.kind = DependenceKind::Gaussian;
                else if (v == "empirical") d.kind = DependenceKind::Empirical;
                else errs.push_back("'dependence.model' must be zero, gaussian or empirical");
            }
            if (r.has("sd")) {
                ObjectReader s(r.at("sd"), "dependence.sd", errs);
                for (std::size_t i = 0; i < kShockCount; ++i)
                    s.get(std::string(kShockNames[i]), d.sd[i]);
            }
            if (r.has("correlations")) {
                const auto& v = r.at("correlations");
                if (!v.is_array()) errs.push_back("'dependence.correlations' must be an array");
                else
                    for (std::size_t i = 0; i < v.size(); ++i) {
                        ObjectReader c(v[i], "dependence.correlations[" + std::to_string(i) + "]", errs);
                        std::string a, b;
                        double rho = 0.0;
                        c.get("a", a);
                        c.get("b", b);
                        c.get("rho", rho);
                        const auto sa = detail::shock_from_name(a), sb = detail::shock_from_name(b);
                        if (!sa || !sb)
                            errs.push_back("dependence.correlations[" + std::to_string(i) +
                                           "] must name two of cpi, awe, r, s, f, rent, price");
                        else d.correlations.push_back({*sa, *sb, rho});
                    }
            }
            r.get("salary_sd", d.salary_sd);
            r.get("residual_csv", d.residual_csv);
            d.residual_csv = detail::resolve_path(d.residual_csv, base);
        }

        if (top.has("rules") && top.has("rules_file"))
            errs.push_back("give either 'rules' or 'rules_file', not both");
        if (top.has("rules")) detail::read_rules(top.at("rules"), "rules", cfg.rules, errs);
        if (top.has("rules_file")) {
            std::string file;
            top.get("rules_file", file);
            file = detail::resolve_path(file, base);
            try {
                detail::read_rules(detail::read_json_file(file), "rules_file", cfg.rules, errs);
            } catch (const ConfigError& e) {
                errs.push_back(e.what());
            }
        }

        if (top.has("policies")) {
            const auto& v = top.at("policies");
            if (!v.is_array()) errs.push_back("'policies' must be an array");
            else
                for (std::size_t i = 0; i < v.size(); ++i)
                    detail::read_policy(v[i], "policies[" + std::to_string(i) + "]", cfg.policies, errs);
        } else {
            cfg.policies = default_policies();
        }

        if (top.has("outputs")) {
            ObjectReader r(top.at("outputs"), "outputs", errs);
            r.get("dir", cfg.outputs.dir);
            r.get("checkpoint_dir", cfg.outputs.checkpoint_dir);
        }

        if (top.has("sensitivity")) {
            ObjectReader r(top.at("sensitivity"), "sensitivity", errs);
            r.get("demand_coef_multiplier", cfg.sensitivity.demand_coef_multiplier);
            r.get("super_return_match_property", cfg.sensitivity.super_return_match_property);
        }

        if (top.has("discounting")) {
            const auto& v = top.at("discounting");
            if (v == "nominal") cfg.metrics.real_discounting = false;
            else if (v == "real") cfg.metrics.real_discounting = true;
            else errs.push_back("'discounting' must be nominal or real");
        }
    }

    // Benchmark goes first; the relative order of the others is kept.
    std::stable_partition(cfg.policies.begin(), cfg.policies.end(),
                          [](const PolicyConfig& p) { return p.name == "benchmark"; });
    cfg.metrics.imputed_purchase_quarter = cfg.cohort.horizon;

    if (errs.empty()) errs = validate(cfg);
    if (!errs.empty()) throw ConfigError("invalid configuration:", errs);
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    const auto base = std::filesystem::absolute(path).parent_path();
    return config_from_json(detail::read_json_file(path), base);
}

// Canonical, fully resolved form; loading it again yields the same config.
inline json config_to_json(const ExperimentConfig& cfg, bool include_outputs = true) {
    const auto& c = cfg.cohort;
    json markets = json::array();
    for (auto m : c.markets) markets.push_back(std::string(to_string(m)));
    const auto& e = cfg.econ;
    json sd = json::object();
    for (std::size_t i = 0; i < kShockCount; ++i) sd[std::string(kShockNames[i])] = cfg.dependence.sd[i];
    json corr = json::array();
    for (const auto& x : cfg.dependence.correlations)
        corr.push_back({{"a", std::string(kShockNames[x.a])}, {"b", std::string(kShockNames[x.b])}, {"rho", x.rho}});
    json policies = json::array();
    for (const auto& p : cfg.policies) policies.push_back(detail::policy_json(p));

    json j = {
        {"cohort",
         {{"n_households", c.n_households},
          {"n_scenarios", c.n_scenarios},
          {"horizon", c.horizon},
          {"markets", markets},
          {"seed", c.seed},
          {"mortality_csv", c.mortality_csv},
          {"income_group_weights", c.income_group_weights},
          {"starting_salaries", c.starting_salaries},
          {"equal_affordability_multiple", c.equal_affordability_multiple},
          {"supply_min_price", c.supply_min_price},
          {"supply_max_price", c.supply_max_price},
          {"survival_fixed_across_scenarios", c.survival_fixed_across_scenarios}}},
        {"econ",
         {{"cpi_mean", e.cpi_mean},
          {"cpi_ar1", e.cpi_ar1},
          {"awe_const", e.awe_const},
          {"awe_ar1", e.awe_ar1},
          {"awe_cpi_coef", e.awe_cpi_coef},
          {"rcash_ar1", e.rcash_ar1},
          {"spread_floor", e.spread_floor},
          {"spread_cap", e.spread_cap},
          {"super_premium", e.super_premium},
          {"rent_mean", e.rent_mean},
          {"rent_ar1", e.rent_ar1},
          {"rent_ar2", e.rent_ar2},
          {"rent_ecm_coef", e.rent_ecm_coef},
          {"ecm_const", e.ecm_const},
          {"ecm_price_coef", e.ecm_price_coef},
          {"ecm_awe_coef", e.ecm_awe_coef},
          {"ecm_space", e.ecm_space == RentEcmSpace::Log ? "log" : "level"},
          {"price_mean", e.price_mean},
          {"price_ar1", e.price_ar1},
          {"price_demand_coef", e.price_demand_coef},
          {"age_a0", e.age_a0},
          {"age_a1", e.age_a1},
          {"salary_floor", e.salary_floor},
          {"initial_cash_rate_annual", e.initial_cash_rate_annual},
          {"initial_borrow_rate_annual", e.initial_borrow_rate_annual},
          {"initial_price_growth", e.initial_price_growth}}},
        {"dependence",
         {{"model", std::string(to_string(cfg.dependence.kind))},
          {"sd", sd},
          {"correlations", corr},
          {"salary_sd", cfg.dependence.salary_sd},
          {"residual_csv", cfg.dependence.residual_csv}}},
        {"rules", detail::rules_json(cfg.rules)},
        {"policies", policies},
        {"sensitivity",
         {{"demand_coef_multiplier", cfg.sensitivity.demand_coef_multiplier},
          {"super_return_match_property", cfg.sensitivity.super_return_match_property}}},
        {"discounting", cfg.metrics.real_discounting ? "real" : "nominal"},
    };
    if (include_outputs)
        j["outputs"] = {{"dir", cfg.outputs.dir}, {"checkpoint_dir", cfg.outputs.checkpoint_dir}};
    return j;
}

// Hash of everything that affects results (outputs excluded).
inline std::string experiment_hash(const ExperimentConfig& cfg) {
    const std::string text = config_to_json(cfg, false).dump();
    Fnv1a h;
    h.add_bytes(text.data(), text.size());
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
    return buf;
}

// Coefficients after the sensitivity switches.
inline EconParams resolved_econ(const ExperimentConfig& cfg) {
    EconParams e = cfg.econ;
    e.price_demand_coef *= cfg.sensitivity.demand_coef_multiplier;
    if (cfg.sensitivity.super_return_match_property)
        e.super_premium = std::exp(e.price_mean) - std::exp(e.cpi_mean);
    return e;
}

inline DependenceModel dependence_model(const DependenceConfig& d) {
    switch (d.kind) {
    case DependenceKind::Zero: return DependenceModel::zero();
    case DependenceKind::Gaussian: {
        ShockMatrix c = ShockMatrix::Identity();
        for (const auto& x : d.correlations) c(x.a, x.b) = c(x.b, x.a) = x.rho;
        return DependenceModel::gaussian(d.sd, c, d.salary_sd);
    }
    case DependenceKind::Empirical: return DependenceModel::empirical_from_csv(d.residual_csv);
    }
    return DependenceModel::zero();
}

inline ExperimentPlan make_plan(const ExperimentConfig& cfg, int jobs) {
    ExperimentPlan plan;
    plan.setup.cohort = cfg.cohort;
    plan.setup.econ = resolved_econ(cfg);
    plan.setup.rules = cfg.rules;
    plan.setup.dependence = dependence_model(cfg.dependence);
    plan.setup.mortality = cfg.cohort.mortality_csv.empty()
                               ? MortalityTable::builtin()
                               : MortalityTable::from_csv(cfg.cohort.mortality_csv);
    plan.setup.fallback = benchmark_policy();
    plan.policies = cfg.policies;
    plan.metrics = cfg.metrics;
    plan.jobs = jobs;
    plan.checkpoint_dir = cfg.outputs.checkpoint_dir;
    plan.experiment_hash = experiment_hash(cfg);
    return plan;
}

} // namespace homesim
