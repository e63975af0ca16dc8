#include "aimc/io_formats.hpp"
#include "aimc/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <limits>

using namespace aimc;
using nlohmann::json;

namespace {

RunReport sample_report()
{
    RunReport r;
    r.command = "sweep";
    r.seed = 18446744073709551615ull;
    r.config = {{"alpha", 2}, {"J", 0.1}, {"name", "a = b"}, {"nested", {{"x", -1e-300}, {"flag", true}}},
                {"list", {1.5, 2.25, 1.0 / 3.0}}, {"weights", nullptr}};
    r.fidelity = {{"median_abs_error", 7.7e-4}, {"max_abs_error", std::numeric_limits<double>::denorm_min()}};
    r.physics = {{"energy_ref", -8.743829312345678}};
    PerfReport p;
    p.throughput = 2e7;
    p.latency = 1e-7;
    p.power = 0.64;
    p.energy_per_inference = 3.2e-8;
    p.stages = 2;
    r.perf = p;
    BenchResult a;
    a.samples = 128700;
    a.elapsed = 0.012345678901234567;
    a.throughput = 128700 / a.elapsed;
    a.effective_latency = 1.0 / a.throughput;
    a.batch = 64;
    a.repetitions = 10;
    a.compute_fraction = 0.9934;
    BenchResult b = a;
    b.batch = 12870;
    b.energy = 1.2345;
    b.e_sample = 1.2345 / 128700;
    r.bench = {a, b};
    r.members = json::array({{{"z", 5}, {"n", 0.0}, {"spearman", 0.99}}});
    r.extra = {{"best_batch", 12870}};
    return r;
}

}  // namespace

TEST(Report, StructuredRoundTripIsExact)
{
    const auto r = sample_report();
    const auto back = parse_report(format_report(r, ReportFormat::structured));
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_EQ(back.bench[1].elapsed, r.bench[1].elapsed);
    EXPECT_FALSE(back.bench[0].energy);
    EXPECT_EQ(*back.bench[1].e_sample, *r.bench[1].e_sample);
}

TEST(Report, TextRoundTripIsExact)
{
    const auto r = sample_report();
    const std::string text = format_report(r, ReportFormat::text);
    const auto back = parse_report(text);
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_EQ(format_report(back, ReportFormat::text), text);
    EXPECT_NE(text.find("/perf/throughput = 20000000.0\n"), std::string::npos);
}

TEST(Report, FormatsCarryTheSameValues)
{
    const auto r = sample_report();
    const json flat = json::parse(format_report(r, ReportFormat::structured)).flatten();
    const std::string text = format_report(r, ReportFormat::text);
    std::size_t lines = 0;
    for (char c : text) {
        lines += c == '\n';
    }
    EXPECT_EQ(lines, flat.size());
    for (const auto& [key, value] : flat.items()) {
        const std::string line = key + " = " + value.dump() + "\n";
        EXPECT_NE(text.find(line), std::string::npos) << line;
    }
}

TEST(Report, EmptySectionsSurviveText)
{
    RunReport r;
    r.command = "nqs";
    const auto back = parse_report(format_report(r, ReportFormat::text));
    EXPECT_EQ(to_json(back), to_json(r));
    EXPECT_TRUE(back.members.is_array());
    EXPECT_FALSE(back.perf);
}

TEST(Report, VersionGate)
{
    auto doc = to_json(sample_report());
    doc["format_version"] = kReportFormatVersion + 1;
    EXPECT_THROW(report_from_json(doc), FormatError);
    EXPECT_THROW(parse_report(doc.dump()), FormatError);
    std::string text = format_report(sample_report(), ReportFormat::text);
    const auto at = text.find("/format_version = 1");
    ASSERT_NE(at, std::string::npos);
    text.replace(at, 19, "/format_version = 9");
    EXPECT_THROW(parse_report(text), FormatError);
}

TEST(Report, MalformedInput)
{
    EXPECT_THROW(parse_report(""), FormatError);
    EXPECT_THROW(parse_report("{\"format_version\": 1"), FormatError);
    EXPECT_THROW(parse_report("/command \"nqs\"\n"), FormatError);
    EXPECT_THROW(parse_report("/format_version = 1\n"), FormatError);
    EXPECT_THROW(report_format_from_string("yaml"), FormatError);
}

TEST(Report, FileRoundTrip)
{
    const auto path = std::filesystem::temp_directory_path() / "aimc_report_test.txt";
    const auto r = sample_report();
    for (auto fmt : {ReportFormat::text, ReportFormat::structured}) {
        write_report(r, path, fmt);
        EXPECT_EQ(to_json(read_report(path)), to_json(r));
    }
    std::filesystem::remove(path);
}

TEST(Report, NqsReportContents)
{
    NqsWorkloadConfig cfg;
    cfg.lx = 2;
    cfg.ly = 2;
    cfg.periodic = false;
    const auto rep = make_nqs_report(cfg, run_nqs_workload(cfg));
    EXPECT_EQ(rep.command, "nqs");
    EXPECT_EQ(rep.physics.at("states"), 6);
    EXPECT_EQ(rep.config.at("quant").at("adc_bits"), 10);
    ASSERT_TRUE(rep.perf);
    EXPECT_EQ(rep.perf->throughput, 2e7);
    EXPECT_TRUE(rep.fidelity.contains("median_abs_error"));
    EXPECT_EQ(to_json(parse_report(format_report(rep, ReportFormat::text))), to_json(rep));
}
