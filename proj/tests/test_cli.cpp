#include "aimc/cli.hpp"
#include "aimc/io_formats.hpp"
#include "aimc/report.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace aimc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "aimc");
    std::vector<const char*> argv;
    for (const auto& a : args) {
        argv.push_back(a.c_str());
    }
    std::ostringstream out;
    std::ostringstream err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

class Cli : public ::testing::Test {
  protected:
    void SetUp() override
    {
        dir = fs::temp_directory_path() /
              ("aimc_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string path(const std::string& name) const { return (dir / name).string(); }
    fs::path dir;
};

const std::vector<std::string> kSmallSvdd{"--count", "60", "--hidden", "16", "16", "16",
                                          "--calibration-count", "40"};

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b)
{
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_F(Cli, UsageErrors)
{
    EXPECT_EQ(cli({}).code, kExitUsage);
    EXPECT_EQ(cli({"nqs", "--bogus"}).code, kExitUsage);
    EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
    EXPECT_EQ(cli({"nqs", "--quant-preset", "extreme"}).code, kExitUsage);
    EXPECT_EQ(cli({"--format", "yaml", "nqs"}).code, kExitUsage);
    EXPECT_EQ(cli({"bench-host", "--probe", "rapl"}).code, kExitUsage);
    const auto r = cli({"nqs", "--alpha", "two"});
    EXPECT_EQ(r.code, kExitUsage);
    EXPECT_FALSE(r.err.empty());
    EXPECT_TRUE(r.out.empty());
}

TEST_F(Cli, Help)
{
    const auto r = cli({"--help"});
    EXPECT_EQ(r.code, kExitOk);
    EXPECT_NE(r.out.find("bench-host"), std::string::npos);
}

TEST_F(Cli, RuntimeErrors)
{
    EXPECT_EQ(cli({"nqs", "--weights", path("missing.json")}).code, kExitRuntime);
    EXPECT_EQ(cli({"nqs", "--alpha", "40"}).code, kExitRuntime);  // does not fit a tile
    EXPECT_EQ(cli({"nqs", "--lx", "3", "--ly", "3"}).code, kExitRuntime);  // odd site count
}

TEST_F(Cli, NqsExample)
{
    const auto r = cli({"nqs", "--alpha", "2", "--seed", "7", "--out", path("r.report")});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rep = parse_report(r.out);
    ASSERT_TRUE(rep.perf);
    EXPECT_EQ(rep.perf->throughput, 2e7);
    EXPECT_EQ(rep.seed, 7u);
    EXPECT_EQ(rep.config.at("alpha"), 2);
    EXPECT_LE(rep.fidelity.at("median_abs_error").get<double>(), 0.1);
    EXPECT_EQ(read_file(path("r.report")), r.out);
}

TEST_F(Cli, TextAndStructuredAgree)
{
    const auto s = cli({"--format", "structured", "nqs", "--lx", "2", "--ly", "4", "--seed", "3"});
    const auto t = cli({"--format", "text", "nqs", "--lx", "2", "--ly", "4", "--seed", "3"});
    ASSERT_EQ(s.code, kExitOk);
    ASSERT_EQ(t.code, kExitOk);
    EXPECT_EQ(s.out.front(), '{');
    EXPECT_NE(t.out.front(), '{');
    EXPECT_EQ(to_json(parse_report(s.out)), to_json(parse_report(t.out)));
}

TEST_F(Cli, ByteIdenticalAcrossThreads)
{
    const std::vector<std::string> args{"nqs", "--seed", "11", "--quant-preset", "noisy"};
    const auto a = cli(cat({"--threads", "1"}, args));
    const auto b = cli(cat({"--threads", "8"}, args));
    const auto c = cli(cat({"--threads", "8"}, args));
    ASSERT_EQ(a.code, kExitOk);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(b.out, c.out);
}

TEST_F(Cli, SvddZeroWeights)
{
    const auto r = cli(cat({"svdd", "--z", "5", "--n", "0", "--init", "zero"}, kSmallSvdd));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rep = parse_report(r.out);
    ASSERT_EQ(rep.members.size(), 1u);
    EXPECT_NEAR(rep.members[0].at("mean_score_ref").get<double>(), 0.0, 1e-12);
    EXPECT_NEAR(rep.members[0].at("mean_score_aimc").get<double>(), 0.0, 1e-12);
    EXPECT_EQ(rep.perf->latency, 250e-9);
}

TEST_F(Cli, EnsembleMembersAndCustomWidths)
{
    auto r = cli(cat({"ensemble", "--z", "5", "8", "--n", "0", "1"}, kSmallSvdd));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(parse_report(r.out).members.size(), 4u);
    EXPECT_EQ(cli(cat({"ensemble", "--z", "7"}, kSmallSvdd)).code, kExitUsage);
    EXPECT_EQ(cli(cat({"svdd", "--z", "7"}, kSmallSvdd)).code, kExitUsage);
    r = cli(cat({"ensemble", "--z", "7", "--n", "2", "--allow-custom"}, kSmallSvdd));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(parse_report(r.out).members[0].at("z"), 7);
}

TEST_F(Cli, FullEnsembleHas63Members)
{
    const auto r = cli({"ensemble", "--count", "20", "--hidden", "8", "8", "8", "--calibration-count", "20"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rep = parse_report(r.out);
    EXPECT_EQ(rep.members.size(), 63u);
    EXPECT_EQ(rep.fidelity.at("ensemble_size"), 63);
}

TEST_F(Cli, SweepSyntheticProbe)
{
    const auto r = cli({"sweep", "--probe", "synthetic:100", "--candidates", "64", "1024", "12870"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto rep = parse_report(r.out);
    ASSERT_EQ(rep.bench.size(), 3u);
    std::size_t argmax = 0;
    for (std::size_t i = 0; i < rep.bench.size(); ++i) {
        const auto& b = rep.bench[i];
        EXPECT_EQ(b.throughput * b.elapsed, static_cast<double>(b.samples));
        EXPECT_EQ(*b.e_sample * static_cast<double>(b.samples), *b.energy);
        EXPECT_NEAR(*b.e_sample * b.throughput, 100.0, 1e-7);
        EXPECT_GE(b.compute_fraction, 0.99);
        if (b.throughput > rep.bench[argmax].throughput) {
            argmax = i;
        }
    }
    EXPECT_EQ(rep.extra.at("best_batch"), rep.bench[argmax].batch);
    EXPECT_EQ(rep.extra.at("probe"), "synthetic:100");
}

TEST_F(Cli, BenchHostPathsAndEnvironmentProbe)
{
    ::setenv("AIMC_BENCH_PROBE", "synthetic:5", 1);
    auto r = cli({"bench-host", "--batch", "4096", "--path", "aimc", "--alpha", "1"});
    ::unsetenv("AIMC_BENCH_PROBE");
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto rep = parse_report(r.out);
    EXPECT_EQ(rep.extra.at("probe"), "synthetic:5");
    EXPECT_EQ(rep.extra.at("path"), "aimc");
    ASSERT_EQ(rep.bench.size(), 1u);
    EXPECT_TRUE(rep.bench[0].energy);

    r = cli(cat({"bench-host", "--workload", "svdd", "--batch", "30"}, kSmallSvdd));
    ASSERT_EQ(r.code, kExitOk) << r.err;
    rep = parse_report(r.out);
    EXPECT_FALSE(rep.bench[0].energy);
    EXPECT_EQ(rep.bench[0].samples % 60, 0u);
    EXPECT_EQ(rep.extra.at("workload"), "svdd");
}

TEST_F(Cli, ConfigFileAndOverrides)
{
    atomic_write(path("run.toml"), "seed = 5\nformat = \"text\"\n[nqs]\nalpha = 1\nlx = 2\nly = 4\n");
    auto r = cli({"--config", path("run.toml"), "nqs"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    auto rep = parse_report(r.out);
    EXPECT_NE(r.out.front(), '{');
    EXPECT_EQ(rep.seed, 5u);
    EXPECT_EQ(rep.config.at("alpha"), 1);
    EXPECT_EQ(rep.physics.at("n_spins"), 8);

    r = cli({"--config", path("run.toml"), "--seed", "6", "nqs", "--alpha", "3"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    rep = parse_report(r.out);
    EXPECT_EQ(rep.seed, 6u);
    EXPECT_EQ(rep.config.at("alpha"), 3);

    atomic_write(path("bad.toml"), "[nqs]\nalphaa = 1\n");
    EXPECT_EQ(cli({"--config", path("bad.toml"), "nqs"}).code, kExitUsage);
    EXPECT_EQ(cli({"--config", path("absent.toml"), "nqs"}).code, kExitUsage);
}

TEST_F(Cli, ReportReemit)
{
    auto r = cli({"--out", path("a.json"), "nqs", "--lx", "2", "--ly", "2"});
    ASSERT_EQ(r.code, kExitOk);
    const auto t = cli({"--format", "text", "report", "--in", path("a.json")});
    ASSERT_EQ(t.code, kExitOk) << t.err;
    EXPECT_EQ(to_json(parse_report(t.out)), to_json(parse_report(r.out)));
    const auto s = cli({"report", "--in", path("a.json")});
    EXPECT_EQ(s.out, r.out);
    EXPECT_EQ(cli({"report", "--in", path("nope.json")}).code, kExitUsage);
    atomic_write(path("junk.json"), "{\"format_version\": 99, \"command\": \"x\", \"seed\": 0}");
    EXPECT_EQ(cli({"report", "--in", path("junk.json")}).code, kExitRuntime);
}
