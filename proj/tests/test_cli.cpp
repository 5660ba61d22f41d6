#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>

#include "da3/cli.hpp"

using namespace da3;
using namespace da3::cli;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

// Runs the da3 binary through the shell with an optional environment prefix.
CliRun run_cli(const std::string& args, const std::string& env = "")
{
    const std::string cmd = env + (env.empty() ? "" : " ") + DA3_CLI_PATH + " " + args + " 2>/dev/null";
    CliRun r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[4096];
    std::size_t got;
    while ((got = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, got);
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::filesystem::path temp_path(const std::string& name)
{
    return std::filesystem::temp_directory_path() / ("da3_test_cli_" + std::to_string(::getpid()) + "_" + name);
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

long count_lines(const std::string& s) { return static_cast<long>(std::count(s.begin(), s.end(), '\n')); }

ErrorKind kind_of(const std::function<void()>& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorKind::domain;
}

} // namespace

// --- configuration ---------------------------------------------------------------

TEST(Config, KRangeParsing)
{
    EXPECT_EQ(parse_k_range("20").lo, 20);
    EXPECT_TRUE(parse_k_range("20").single());
    const auto r = parse_k_range("16..64");
    EXPECT_EQ(r.lo, 16);
    EXPECT_EQ(r.hi, 64);
    EXPECT_EQ(kind_of([] { parse_k_range("x"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_k_range("9..3"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([] { parse_k_range("5.."); }), ErrorKind::config);
}

TEST(Config, KeyValueText)
{
    const auto kv = parse_config_text("# comment\n k = 6 \nsamples=1000 # trailing\n\nburn-in=10\n");
    ASSERT_EQ(kv.size(), 3u);
    EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"k", "6"}));
    EXPECT_EQ(kv[1].second, "1000");
    RunConfig c;
    for (const auto& [key, value] : kv) set_field(c, key, value);
    EXPECT_EQ(c.k, "6");
    EXPECT_EQ(c.samples, 1000);
    EXPECT_EQ(c.burn_in, 10);
    EXPECT_EQ(kind_of([] { parse_config_text("k 6\n"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([&] { set_field(c, "colour", "red"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([&] { set_field(c, "samples", "ten"); }), ErrorKind::config);
    EXPECT_EQ(kind_of([&] { set_field(c, "orbits", "2.5"); }), ErrorKind::config);
}

TEST(Config, ResolvedDefaultsAreCommandSpecific)
{
    EXPECT_EQ(resolve("verify", {}).samples, 100000);
    EXPECT_EQ(resolve("usection", {}).samples, 1000);
    EXPECT_EQ(resolve("lyapunov", {}).n, 1000000);
    EXPECT_EQ(resolve("hyptimes", {}).n, 100000);
    EXPECT_EQ(resolve("leaf", {}).grid, 64);
    EXPECT_EQ(resolve("lattice", {}).grid, 0);
    RunConfig bad;
    bad.format = "xml";
    EXPECT_EQ(kind_of([&] { resolve("spectrum", bad); }), ErrorKind::config);
    RunConfig neg;
    neg.samples = -4;
    EXPECT_EQ(kind_of([&] { resolve("verify", neg); }), ErrorKind::config);
}

// --- reports ---------------------------------------------------------------------

TEST(Report, SpectrumSweep)
{
    RunConfig c;
    c.k = "5..64";
    const Report r = run_command("spectrum", c);
    EXPECT_EQ(r.exit_code, exit_pass);
    EXPECT_EQ(r.json["results"].size(), 60u);
    for (const auto& row : r.json["results"]) EXPECT_TRUE(row["brackets_pass"].get<bool>());
    EXPECT_EQ(r.csv.substr(0, r.csv.find('\n')), "k,lambda_s,lambda_c,lambda_u,product_err");
    EXPECT_EQ(count_lines(r.csv), 61);
}

TEST(Report, EnvelopeFields)
{
    RunConfig c;
    c.k = "6";
    const Report r = run_command("lattice", c);
    EXPECT_EQ(r.json["schema_version"], "da3/report/v1");
    EXPECT_EQ(r.json["command"], "lattice");
    EXPECT_FALSE(r.json["paper_anchor"].get<std::string>().empty());
    EXPECT_EQ(r.json["config"], resolve("lattice", c).to_json());
    EXPECT_FALSE(r.json.contains("timing"));
    c.seed = 2;
    EXPECT_NE(run_command("lattice", c).json["param_hash"], r.json["param_hash"]);
}

TEST(Report, LatticeK20)
{
    RunConfig c;
    const Report r = run_command("lattice", c);
    EXPECT_EQ(r.exit_code, exit_pass);
    const auto& row = r.json["results"][0];
    EXPECT_GT(row["min_gap"].get<double>(), row["two_d"].get<double>());
    EXPECT_LE(row["density"]["epsilon"].get<double>(), row["density"]["bound"].get<double>());
}

TEST(Report, VerifyRangeReportsSmallestFeasible)
{
    RunConfig c;
    c.k = "5..7";
    c.samples = 2000;
    const Report r = run_command("verify", c);
    EXPECT_EQ(r.exit_code, exit_pass);
    EXPECT_EQ(r.json["smallest_feasible_k"], 6);
    EXPECT_FALSE(r.json["results"][0]["feasible"].get<bool>());
    EXPECT_TRUE(r.json["results"][1]["pass"].get<bool>());
    EXPECT_EQ(count_lines(r.csv), 4);
}

TEST(Report, SmallRunsOfEveryProbe)
{
    RunConfig c;
    c.orbits = 2;
    c.n = 20000;
    const Report ly = run_command("lyapunov", c);
    EXPECT_EQ(ly.exit_code, exit_pass);
    EXPECT_LT(ly.json["results"][0]["max_lam_u_error"].get<double>(), 1e-3);

    RunConfig h;
    h.n = 5000;
    const Report ht = run_command("hyptimes", h);
    EXPECT_EQ(ht.exit_code, exit_pass);
    EXPECT_GT(ht.json["results"][0]["density"].get<double>(), 0);

    RunConfig l;
    l.L = 10;
    l.grid = 16;
    l.pairs = 20;
    const Report lf = run_command("leaf", l);
    EXPECT_EQ(lf.exit_code, exit_pass);
    EXPECT_EQ(lf.csv.substr(0, lf.csv.find('\n')), "k,L,epsilon");
    EXPECT_EQ(count_lines(lf.csv), 3);

    RunConfig u;
    u.samples = 20;
    const Report us = run_command("usection", u);
    EXPECT_EQ(us.exit_code, exit_pass);
    EXPECT_EQ(us.json["results"][0]["inside_landing_window"], 20);
}

// --- binary ----------------------------------------------------------------------

TEST(Binary, ExitCodes)
{
    EXPECT_EQ(run_cli("spectrum --k 5..8").code, 0);
    EXPECT_EQ(run_cli("spectrum --k 4").code, 2);
    const CliRun v = run_cli("verify --k 5");
    EXPECT_EQ(v.code, 2);
    EXPECT_NE(v.out.find("\"feasible\": false"), std::string::npos);
    EXPECT_EQ(run_cli("spectrum --k 20 --bogus 1").code, 2);
    EXPECT_EQ(run_cli("").code, 2);
    EXPECT_EQ(run_cli("spectrum", "DA3_THREADS=zero").code, 2);
    EXPECT_EQ(run_cli("usection --k 20 --samples 2 --margin 1.5").code, 2);
}

TEST(Binary, CsvFormatHeader)
{
    const CliRun r = run_cli("spectrum --k 5 --format csv");
    EXPECT_EQ(r.code, 0);
    EXPECT_EQ(r.out.substr(0, r.out.find('\n')), "k,lambda_s,lambda_c,lambda_u,product_err");
    EXPECT_EQ(count_lines(r.out), 2);
}

TEST(Binary, ConfigFileWithFlagOverride)
{
    const auto cfg = temp_path("run.cfg");
    std::ofstream(cfg) << "# lattice run\nk = 6\nseed = 9\ngrid = 40\n";
    const CliRun r = run_cli("lattice --config " + cfg.string() + " --seed 3");
    EXPECT_EQ(r.code, 0);
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["config"]["k"], "6");
    EXPECT_EQ(j["config"]["seed"], 3);
    EXPECT_EQ(j["config"]["grid"], 40);
    std::ofstream(cfg) << "nonsense = 1\n";
    EXPECT_EQ(run_cli("lattice --config " + cfg.string()).code, 2);
    std::filesystem::remove(cfg);
}

TEST(Binary, OutputFiles)
{
    const auto json_path = temp_path("report.json"), csv_path = temp_path("report.csv"),
               leaf_path = temp_path("leaf.csv");
    const CliRun r = run_cli("leaf --k 20 --L 2 --grid 8 --pairs 5 --out " + json_path.string() + " --csv-out "
                          + csv_path.string() + " --leaf-out " + leaf_path.string());
    EXPECT_EQ(r.code, 0);
    EXPECT_TRUE(r.out.empty());
    EXPECT_EQ(nlohmann::json::parse(read_file(json_path))["command"], "leaf");
    EXPECT_EQ(read_file(csv_path).substr(0, 12), "k,L,epsilon\n");
    const std::string leaf = read_file(leaf_path);
    EXPECT_EQ(leaf.substr(0, leaf.find('\n')), "n,x,y,z,arclength");
    for (const auto& p : {json_path, csv_path, leaf_path}) std::filesystem::remove(p);
}

TEST(Binary, ByteIdenticalAcrossRunsAndThreadCounts)
{
    for (const std::string args : {"lyapunov --k 20 --orbits 5 --n 20000 --seed 4", "usection --k 20 --samples 30",
                                   "verify --k 5..8 --samples 3000", "lattice --k 6..12"}) {
        const CliRun a = run_cli(args, "DA3_THREADS=1");
        const CliRun b = run_cli(args, "DA3_THREADS=3");
        const CliRun c = run_cli(args, "DA3_THREADS=3");
        EXPECT_EQ(a.code, 0) << args;
        EXPECT_FALSE(a.out.empty());
        EXPECT_EQ(a.out, b.out) << args;
        EXPECT_EQ(b.out, c.out) << args;
    }
}
