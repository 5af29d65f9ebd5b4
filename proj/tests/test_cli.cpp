#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace fs = std::filesystem;

namespace {

struct Ran {
    int code;
    std::string out;
};

Ran cli(const std::string& args) {
    const std::string cmd = std::string("\"") + HOMESIM_CLI + "\" " + args + " 2>&1";
    FILE* p = popen(cmd.c_str(), "r");
    Ran r{-1, ""};
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const auto d = fs::temp_directory_path() / "homesim_cli_test" / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path tiny_config(const fs::path& dir) {
    const auto p = dir / "tiny.json";
    std::ofstream(p) << R"({"cohort": {"n_households": 20, "n_scenarios": 2,
        "markets": ["supply_constrained"]}, "dependence": {"model": "gaussian"}})";
    return p;
}

} // namespace

TEST(Cli, Presets) {
    const auto r = cli("presets");
    EXPECT_EQ(r.code, 0);
    for (const auto* name : {"benchmark", "RD", "EW", "EW-full", "K1", "K5"})
        EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(Cli, ValidateDefaults) {
    const auto r = cli("validate");
    EXPECT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("\"n_households\": 10000"), std::string::npos);
    EXPECT_NE(r.out.find("experiment hash"), std::string::npos);
}

TEST(Cli, BadConfigExitsTwo) {
    const auto d = scratch("bad");
    std::ofstream(d / "bad.json") << R"({"policies": ["benchmark", {"preset": "EW", "max_pension_share": 1.2}]})";
    const auto r = cli("validate --config " + (d / "bad.json").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.out.find("beta"), std::string::npos) << r.out;
    EXPECT_EQ(cli("validate --config " + (d / "missing.json").string()).code, 2);
    EXPECT_EQ(cli("run --profile bogus").code, 2);
    EXPECT_EQ(cli("frobnicate").code, 2);
    EXPECT_EQ(cli("plotdata --from " + d.string() + " --kind gini").code, 2);
}

TEST(Cli, RunThenPlotdata) {
    const auto d = scratch("run");
    const auto cfg = tiny_config(d);
    const auto out = d / "results";
    const auto r = cli("run --config " + cfg.string() + " --out " + out.string() + " -j 2");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find("results written to"), std::string::npos);
    EXPECT_TRUE(fs::exists(out / "manifest.json"));

    const auto p = cli("plotdata --from " + out.string() + " --kind price_ratio");
    EXPECT_EQ(p.code, 0) << p.out;
    EXPECT_EQ(p.out.rfind("experiment_hash,market,policy,group,metric,quarter", 0), 0u);
    EXPECT_EQ(p.out, slurp(out / "plot_price_ratio.csv"));
    EXPECT_EQ(cli("plotdata --from " + out.string() + " --kind scatter").code, 2);

    // Same configuration, fresh directory, one job: identical tables.
    const auto again = d / "again";
    ASSERT_EQ(cli("run -q --config " + cfg.string() + " --out " + again.string() + " -j 1").code, 0);
    for (const auto* f : {"price_ratio.csv", "metrics_supply_constrained.csv", "diagnostics.csv"})
        EXPECT_EQ(slurp(out / f), slurp(again / f)) << f;

    // A different seed may not reuse the directory.
    const auto clash = cli("run -q --config " + cfg.string() + " --out " + out.string() + " --seed 7");
    EXPECT_EQ(clash.code, 3);
    EXPECT_NE(clash.out.find("refusing to mix"), std::string::npos) << clash.out;
}

TEST(Cli, UnwritableOutputExitsThree) {
    const auto d = scratch("unwritable");
    const auto cfg = tiny_config(d);
    std::ofstream(d / "file") << "x";
    const auto r = cli("run -q --config " + cfg.string() + " --out " + (d / "file" / "sub").string());
    EXPECT_EQ(r.code, 3) << r.out;
    EXPECT_NE(r.out.find("not writable"), std::string::npos) << r.out;
}
