#pragma once

// Result files. Every CSV carries the experiment hash; a directory that
// already holds results of another experiment is refused.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "homesim/config.hpp"
#include "homesim/csv.hpp"
#include "homesim/error.hpp"
#include "homesim/experiment.hpp"
#include "homesim/metrics.hpp"

namespace homesim {

// Shortest text that reads back to the same double.
inline std::string fmt(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

// Long-format row shared by the metric tables and plot data.
struct TidyRow {
    std::string market;
    std::string policy;
    std::string group;
    std::string metric;
    std::optional<int> quarter;
    double value = 0;
    double baseline_value = 0;
    double delta = 0;
};

inline constexpr const char* kTidyHeader =
    "experiment_hash,market,policy,group,metric,quarter,value,baseline_value,delta";

inline void write_tidy(std::ostream& os, const std::string& hash, const std::vector<TidyRow>& rows) {
    os << kTidyHeader << '\n';
    for (const auto& r : rows)
        os << hash << ',' << r.market << ',' << r.policy << ',' << r.group << ',' << r.metric << ','
           << (r.quarter ? std::to_string(*r.quarter) : "") << ',' << fmt(r.value) << ','
           << fmt(r.baseline_value) << ',' << fmt(r.delta) << '\n';
}

inline std::vector<TidyRow> metric_rows(const MetricsReport& report) {
    std::vector<TidyRow> rows;
    const std::string market(to_string(report.market));
    const auto& bench = report.policies.front();
    for (const auto& p : report.policies) {
        for (int c = 0; c < kCells; ++c) {
            const auto& l = p.levels[c];
            const auto& b = bench.levels[c];
            const auto& d = p.deltas[c];
            auto add = [&](const char* metric, double v, double bv, double dv) {
                rows.push_back({market, p.policy, cell_name(c), metric, std::nullopt, v, bv, dv});
            };
            add("purchase_probability", l.purchase_probability, b.purchase_probability, d.access);
            add("purchase_age", l.purchase_age, b.purchase_age, d.purchase_age);
            add("retirement_security", l.retirement_wealth, b.retirement_wealth, d.security);
            add("gini_purchase", l.gini_purchase, b.gini_purchase, d.gini_purchase);
            add("gini_security", l.gini_security, b.gini_security, d.gini_security);
            add("federal_npv", l.federal_npv, b.federal_npv, d.federal);
            add("local_npv", l.local_npv, b.local_npv, d.local);
            add("government_npv", l.federal_npv + l.local_npv, b.federal_npv + b.local_npv,
                d.government);
        }
    }
    return rows;
}

inline std::vector<TidyRow> price_ratio_rows(const MarketResult& m) {
    std::vector<TidyRow> rows;
    const std::string market(to_string(m.market));
    for (const auto& s : m.price_ratio)
        for (std::size_t t = 0; t < s.mean.size(); ++t)
            rows.push_back({market, s.policy, cell_name(0), "price_ratio", static_cast<int>(t),
                            s.mean[t], 1.0, s.mean[t] - 1.0});
    return rows;
}

inline const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> kinds{"price_ratio", "group_bars", "gini", "npv"};
    return kinds;
}

inline std::set<std::string> plot_metrics(const std::string& kind) {
    if (kind == "price_ratio") return {"price_ratio"};
    if (kind == "group_bars") return {"purchase_probability", "purchase_age", "retirement_security"};
    if (kind == "gini") return {"gini_purchase", "gini_security"};
    if (kind == "npv") return {"federal_npv", "local_npv", "government_npv"};
    throw ConfigError("unknown plot kind '" + kind + "' (expected price_ratio, group_bars, gini or npv)");
}

inline std::vector<TidyRow> filter_rows(const std::vector<TidyRow>& rows, const std::string& kind) {
    const auto keep = plot_metrics(kind);
    std::vector<TidyRow> out;
    for (const auto& r : rows)
        if (keep.count(r.metric)) out.push_back(r);
    return out;
}

inline std::vector<TidyRow> all_rows(const ExperimentResult& result) {
    std::vector<TidyRow> rows;
    for (const auto& m : result.markets) {
        for (auto& r : price_ratio_rows(m)) rows.push_back(std::move(r));
        for (auto& r : metric_rows(m.report)) rows.push_back(std::move(r));
    }
    return rows;
}

inline std::vector<TidyRow> emit_plot_data(const ExperimentResult& result, const std::string& kind) {
    return filter_rows(all_rows(result), kind);
}

namespace detail {

inline void write_file(const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw SimulationError("cannot write '" + p.string() + "'");
    out << text;
    if (!out) throw SimulationError("write failed for '" + p.string() + "'");
}

inline std::optional<std::string> existing_hash(const std::filesystem::path& dir) {
    const auto manifest = dir / "manifest.json";
    if (!std::filesystem::exists(manifest)) return std::nullopt;
    std::ifstream in(manifest);
    try {
        return nlohmann::json::parse(in).at("experiment_hash").get<std::string>();
    } catch (const std::exception&) {
        throw SimulationError("unreadable manifest in '" + dir.string() + "'");
    }
}

} // namespace detail

inline void check_output_dir(const std::filesystem::path& dir, const std::string& hash) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw SimulationError("output directory '" + dir.string() + "' is not writable");
    if (const auto h = detail::existing_hash(dir); h && *h != hash)
        throw SimulationError("output directory '" + dir.string() + "' holds results of experiment " +
                              *h + "; refusing to mix with " + hash);
}

inline std::string summary_text(const ExperimentResult& r) {
    std::ostringstream os;
    os << "experiment " << r.experiment_hash << ": " << r.households << " households, "
       << r.scenarios << " scenarios, " << r.horizon << " quarters\n";
    char line[256];
    for (const auto& m : r.markets) {
        os << "\n[" << to_string(m.market) << "]\n";
        os << "peak mean price ratio:";
        for (const auto& s : m.price_ratio) os << ' ' << s.policy << '=' << fmt(s.peak());
        os << '\n';
        for (const auto& p : m.report.policies) {
            if (p.policy == m.report.policies.front().policy) continue;
            os << "\n" << p.policy << " vs benchmark\n";
            std::snprintf(line, sizeof line, "  %-5s %10s %10s %10s %10s %10s %12s %12s\n", "group",
                          "d_access", "d_age", "d_secur", "d_gini_p", "d_gini_s", "d_federal",
                          "d_local");
            os << line;
            for (int c = 0; c < kCells; ++c) {
                const auto& d = p.deltas[c];
                std::snprintf(line, sizeof line,
                              "  %-5s %10.4f %10.3f %10.4f %10.4f %10.4f %12.1f %12.1f\n",
                              cell_name(c).c_str(), d.access, d.purchase_age, d.security,
                              d.gini_purchase, d.gini_security, d.federal, d.local);
                os << line;
            }
        }
        os << "\ndiagnostics:";
        for (const auto& d : m.diagnostics)
            os << "\n  " << d.policy << ": defaults=" << d.totals.defaults
               << " liquidations=" << d.totals.liquidations << " purchases=" << d.totals.purchases
               << " salary_floor_hits=" << d.totals.salary_floor_hits;
        os << "\n  common random numbers: " << (m.common_random_numbers ? "verified" : "VIOLATED")
           << '\n';
    }
    return os.str();
}

struct WriteOptions {
    double wall_seconds = 0.0;
    int jobs = 1;
};

// Writes the complete result set; returns the list of files written.
inline std::vector<std::string> write_outputs(const std::filesystem::path& dir,
                                              const ExperimentConfig& cfg,
                                              const ExperimentResult& result,
                                              const WriteOptions& opt = {}) {
    const std::string& hash = result.experiment_hash;
    check_output_dir(dir, hash);
    std::vector<std::string> files;
    auto put = [&](const std::string& name, const std::string& text) {
        detail::write_file(dir / name, text);
        files.push_back(name);
    };

    {
        std::ostringstream os;
        os << "experiment_hash,market,policy,quarter,mean,q05,q50,q95\n";
        for (const auto& m : result.markets)
            for (const auto& s : m.price_ratio)
                for (std::size_t t = 0; t < s.mean.size(); ++t)
                    os << hash << ',' << to_string(m.market) << ',' << s.policy << ',' << t << ','
                       << fmt(s.mean[t]) << ',' << fmt(s.q05[t]) << ',' << fmt(s.q50[t]) << ','
                       << fmt(s.q95[t]) << '\n';
        put("price_ratio.csv", os.str());
    }
    for (const auto& m : result.markets) {
        std::ostringstream os;
        write_tidy(os, hash, metric_rows(m.report));
        put("metrics_" + std::string(to_string(m.market)) + ".csv", os.str());
    }
    {
        std::ostringstream os;
        os << "experiment_hash,market,policy,defaults,scenarios_with_defaults,liquidations,"
              "purchases,salary_floor_hits,security_units_excluded,common_random_numbers\n";
        for (const auto& m : result.markets)
            for (std::size_t p = 0; p < m.diagnostics.size(); ++p) {
                const auto& d = m.diagnostics[p];
                os << hash << ',' << to_string(m.market) << ',' << d.policy << ','
                   << d.totals.defaults << ',' << d.scenarios_with_defaults << ','
                   << d.totals.liquidations << ',' << d.totals.purchases << ','
                   << d.totals.salary_floor_hits << ','
                   << fmt(m.report.policies[p].levels[0].security_excluded) << ','
                   << (m.common_random_numbers ? 1 : 0) << '\n';
            }
        put("diagnostics.csv", os.str());
    }
    const auto rows = all_rows(result);
    for (const auto& kind : plot_kinds()) {
        std::ostringstream os;
        write_tidy(os, hash, filter_rows(rows, kind));
        put("plot_" + kind + ".csv", os.str());
    }
    put("summary.txt", summary_text(result));
    put("resolved_config.json", config_to_json(cfg).dump(2) + "\n");

    nlohmann::ordered_json manifest = {
        {"experiment_hash", hash},
        {"seed", cfg.cohort.seed},
        {"households", result.households},
        {"scenarios", result.scenarios},
        {"horizon", result.horizon},
        {"jobs", opt.jobs},
        {"wall_time_seconds", opt.wall_seconds},
        {"files", files},
    };
    detail::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    files.push_back("manifest.json");
    return files;
}

// Reads the tidy rows back from a results directory (for `plotdata --from`).
inline std::vector<TidyRow> read_result_rows(const std::filesystem::path& dir) {
    const auto hash = detail::existing_hash(dir);
    if (!hash) throw ConfigError("'" + dir.string() + "' has no manifest.json");
    std::vector<TidyRow> rows;
    auto check_hash = [&](const std::string& h, const std::filesystem::path& file) {
        if (h != *hash)
            throw ConfigError("'" + file.string() + "' belongs to experiment " + h +
                              ", not " + *hash);
    };

    const auto pr = dir / "price_ratio.csv";
    {
        std::ifstream in(pr);
        if (!in) throw ConfigError("missing '" + pr.string() + "'");
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = csv::split(line);
            if (f.size() != 8) throw ConfigError("malformed row in '" + pr.string() + "'");
            check_hash(f[0], pr);
            const double mean = std::stod(f[4]);
            rows.push_back({f[1], f[2], cell_name(0), "price_ratio", std::stoi(f[3]), mean, 1.0,
                            mean - 1.0});
        }
    }
    std::vector<std::filesystem::path> tables;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.rfind("metrics_", 0) == 0 && entry.path().extension() == ".csv")
            tables.push_back(entry.path());
    }
    std::sort(tables.begin(), tables.end());
    for (const auto& path : tables) {
        const auto name = path.filename().string();
        std::ifstream in(path);
        std::string line;
        std::getline(in, line);
        if (line != kTidyHeader) throw ConfigError("unexpected header in '" + name + "'");
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            const auto f = csv::split(line);
            if (f.size() != 9) throw ConfigError("malformed row in '" + name + "'");
            check_hash(f[0], path);
            rows.push_back({f[1], f[2], f[3], f[4], std::nullopt, std::stod(f[6]), std::stod(f[7]),
                            std::stod(f[8])});
        }
    }
    return rows;
}

} // namespace homesim
