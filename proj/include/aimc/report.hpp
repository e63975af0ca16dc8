#pragma once

// Run reports: a versioned key-value tree written either as JSON
// ("structured") or as one "<json-pointer> = <value>" line per leaf ("text").

#include "aimc/bench.hpp"
#include "aimc/perf_model.hpp"
#include "aimc/workloads.hpp"

#include "json.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aimc {

inline constexpr int kReportFormatVersion = 1;

enum class ReportFormat { text, structured };

ReportFormat report_format_from_string(std::string_view s);

struct RunReport {
    int format_version = kReportFormatVersion;
    std::string command;
    std::uint64_t seed = 0;
    nlohmann::json config = nlohmann::json::object();
    nlohmann::json fidelity = nlohmann::json::object();
    nlohmann::json physics = nlohmann::json::object();
    std::optional<PerfReport> perf;
    std::vector<BenchResult> bench;
    nlohmann::json members = nlohmann::json::array();
    nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const PerfReport& p);
PerfReport perf_from_json(const nlohmann::json& j);
nlohmann::json to_json(const BenchResult& b);
BenchResult bench_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FidelityStats& f);
nlohmann::json to_json(const QuantConfig& q);
nlohmann::json to_json(const ArchConfig& a);

nlohmann::json to_json(const RunReport& r);
// Rejects unknown format versions.
RunReport report_from_json(const nlohmann::json& j);

std::string format_report(const RunReport& r, ReportFormat fmt);
// Accepts either format.
RunReport parse_report(std::string_view text);

void write_report(const RunReport& r, const std::filesystem::path& path,
                  ReportFormat fmt = ReportFormat::structured);
RunReport read_report(const std::filesystem::path& path);

// Report fragments for the workload drivers.
RunReport make_nqs_report(const NqsWorkloadConfig& cfg, const NqsReport& r);
RunReport make_svdd_report(const std::string& command, const SvddWorkloadConfig& cfg,
                           const SvddReport& r);

}  // namespace aimc
