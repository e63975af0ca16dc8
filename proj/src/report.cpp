#include "aimc/report.hpp"

#include "aimc/io_formats.hpp"

#include <sstream>

namespace aimc {

using nlohmann::json;

ReportFormat report_format_from_string(std::string_view s)
{
    if (s == "text") {
        return ReportFormat::text;
    }
    if (s == "structured") {
        return ReportFormat::structured;
    }
    throw FormatError("unknown report format '" + std::string(s) + "'");
}

json to_json(const PerfReport& p)
{
    return {{"throughput", p.throughput},
            {"latency", p.latency},
            {"power", p.power},
            {"energy_per_inference", p.energy_per_inference},
            {"stages", p.stages}};
}

PerfReport perf_from_json(const json& j)
{
    PerfReport p;
    p.throughput = j.at("throughput").get<double>();
    p.latency = j.at("latency").get<double>();
    p.power = j.at("power").get<double>();
    p.energy_per_inference = j.at("energy_per_inference").get<double>();
    p.stages = j.at("stages").get<std::size_t>();
    return p;
}

json to_json(const BenchResult& b)
{
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    return {{"samples", b.samples},
            {"elapsed", b.elapsed},
            {"energy", opt(b.energy)},
            {"e_sample", opt(b.e_sample)},
            {"throughput", b.throughput},
            {"effective_latency", b.effective_latency},
            {"batch", b.batch},
            {"repetitions", b.repetitions},
            {"compute_fraction", b.compute_fraction}};
}

BenchResult bench_from_json(const json& j)
{
    auto opt = [&](const char* key) -> std::optional<double> {
        if (!j.contains(key) || j.at(key).is_null()) {
            return std::nullopt;
        }
        return j.at(key).get<double>();
    };
    BenchResult b;
    b.samples = j.at("samples").get<std::size_t>();
    b.elapsed = j.at("elapsed").get<double>();
    b.energy = opt("energy");
    b.e_sample = opt("e_sample");
    b.throughput = j.at("throughput").get<double>();
    b.effective_latency = j.at("effective_latency").get<double>();
    b.batch = j.at("batch").get<std::size_t>();
    b.repetitions = j.at("repetitions").get<std::size_t>();
    b.compute_fraction = j.at("compute_fraction").get<double>();
    return b;
}

json to_json(const FidelityStats& f)
{
    return {{"median_abs_error", f.median_abs_error},
            {"p95_abs_error", f.p95_abs_error},
            {"max_abs_error", f.max_abs_error}};
}

json to_json(const QuantConfig& q)
{
    return {{"dac_bits", q.dac_bits},
            {"adc_bits", q.adc_bits},
            {"weight_levels", q.weight_levels},
            {"prog_noise_sigma", q.prog_noise_sigma},
            {"read_noise_sigma", q.read_noise_sigma},
            {"rng_seed", q.rng_seed},
            {"lut_entries", q.lut_entries}};
}

json to_json(const ArchConfig& a)
{
    return {{"n_tiles", a.n_tiles},
            {"rows", a.rows},
            {"cols", a.cols},
            {"t_analog", a.t_analog},
            {"t_stage", a.t_stage},
            {"p_xbar", a.p_xbar},
            {"p_ldpu", a.p_ldpu},
            {"p_dpu", a.p_dpu},
            {"peripheral_fraction", a.peripheral_fraction},
            {"utilization_scaling", a.utilization_scaling}};
}

json to_json(const RunReport& r)
{
    json bench = json::array();
    for (const auto& b : r.bench) {
        bench.push_back(to_json(b));
    }
    return {{"format_version", r.format_version},
            {"command", r.command},
            {"seed", r.seed},
            {"config", r.config},
            {"fidelity", r.fidelity},
            {"physics", r.physics},
            {"perf", r.perf ? to_json(*r.perf) : json(nullptr)},
            {"bench", std::move(bench)},
            {"members", r.members},
            {"extra", r.extra}};
}

namespace {

// Flattening turns empty containers into null; map them back.
json or_default(const json& j, const char* key, json fallback)
{
    if (!j.contains(key) || j.at(key).is_null()) {
        return fallback;
    }
    return j.at(key);
}

}  // namespace

RunReport report_from_json(const json& j)
{
    try {
        RunReport r;
        r.format_version = j.at("format_version").get<int>();
        if (r.format_version != kReportFormatVersion) {
            throw FormatError("unsupported report format_version " + std::to_string(r.format_version));
        }
        r.command = j.at("command").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.config = or_default(j, "config", json::object());
        r.fidelity = or_default(j, "fidelity", json::object());
        r.physics = or_default(j, "physics", json::object());
        if (j.contains("perf") && !j.at("perf").is_null()) {
            r.perf = perf_from_json(j.at("perf"));
        }
        for (const auto& b : or_default(j, "bench", json::array())) {
            r.bench.push_back(bench_from_json(b));
        }
        r.members = or_default(j, "members", json::array());
        r.extra = or_default(j, "extra", json::object());
        return r;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed run report: ") + e.what());
    }
}

std::string format_report(const RunReport& r, ReportFormat fmt)
{
    const json doc = to_json(r);
    if (fmt == ReportFormat::structured) {
        return doc.dump(2) + "\n";
    }
    const json flat = doc.flatten();
    std::string out;
    for (const auto& [key, value] : flat.items()) {
        out += key;
        out += " = ";
        out += value.dump();
        out += '\n';
    }
    return out;
}

RunReport parse_report(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        throw FormatError("empty run report");
    }
    try {
        if (text[first] == '{') {
            return report_from_json(json::parse(text));
        }
        json flat = json::object();
        std::istringstream in{std::string(text)};
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') {
                continue;
            }
            const auto sep = line.find(" = ");
            if (sep == std::string::npos) {
                throw FormatError("malformed report line: " + line);
            }
            flat[line.substr(0, sep)] = json::parse(line.substr(sep + 3));
        }
        return report_from_json(flat.unflatten());
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed run report: ") + e.what());
    }
}

void write_report(const RunReport& r, const std::filesystem::path& path, ReportFormat fmt)
{
    atomic_write(path, format_report(r, fmt));
}

RunReport read_report(const std::filesystem::path& path)
{
    return parse_report(read_file(path));
}

namespace {

json members_json(const SvddReport& r)
{
    json out = json::array();
    for (const auto& m : r.members) {
        out.push_back({{"z", m.target.z},
                       {"n", m.target.n},
                       {"spearman", m.spearman},
                       {"mean_score_ref", m.mean_score_ref},
                       {"mean_score_aimc", m.mean_score_aimc},
                       {"max_abs_score_diff", m.max_abs_score_diff},
                       {"perf", to_json(m.perf)}});
    }
    return out;
}

}  // namespace

RunReport make_nqs_report(const NqsWorkloadConfig& cfg, const NqsReport& r)
{
    RunReport rep;
    rep.command = "nqs";
    rep.seed = cfg.seed;
    rep.config = {{"lx", cfg.lx},
                  {"ly", cfg.ly},
                  {"periodic", cfg.periodic},
                  {"alpha", r.alpha},
                  {"J", cfg.J},
                  {"marshall", cfg.marshall},
                  {"weights", cfg.weights_path ? json(*cfg.weights_path) : json(nullptr)},
                  {"init", cfg.init == WeightInit::zero ? "zero" : "random"},
                  {"init_scale", cfg.init_scale},
                  {"quant", to_json(cfg.quant)},
                  {"calibration",
                   {{"input_percentile", cfg.calibration.input_percentile},
                    {"adc_percentile", cfg.calibration.adc_percentile},
                    {"adc_margin", cfg.calibration.adc_margin}}},
                  {"arch", to_json(cfg.arch)}};
    rep.fidelity = to_json(r.log_psi_error);
    rep.fidelity["lut_error_bound_per_unit"] = r.lut_error_bound;
    rep.physics = {{"n_spins", r.n_spins},
                   {"states", r.states},
                   {"energy_ref", r.energy_ref},
                   {"energy_aimc", r.energy_aimc},
                   {"energy_per_site_ref", r.energy_ref / static_cast<double>(r.n_spins)}};
    rep.perf = r.perf;
    return rep;
}

RunReport make_svdd_report(const std::string& command, const SvddWorkloadConfig& cfg,
                           const SvddReport& r)
{
    RunReport rep;
    rep.command = command;
    rep.seed = cfg.seed;
    json targets = json::array();
    for (const auto& t : cfg.targets) {
        targets.push_back({{"z", t.z}, {"n", t.n}});
    }
    rep.config = {{"hidden_dims", cfg.hidden_dims},
                  {"targets", std::move(targets)},
                  {"events", cfg.events_path ? json(*cfg.events_path) : json(nullptr)},
                  {"weights_dir", cfg.weights_dir ? json(*cfg.weights_dir) : json(nullptr)},
                  {"event_count", cfg.event_count},
                  {"anomaly_fraction", cfg.anomaly_fraction},
                  {"calibration_count", cfg.calibration_count},
                  {"init", cfg.init == WeightInit::zero ? "zero" : "random"},
                  {"rule", std::string(to_string(cfg.rule))},
                  {"quant", to_json(cfg.quant)},
                  {"calibration",
                   {{"input_percentile", cfg.calibration.input_percentile},
                    {"adc_percentile", cfg.calibration.adc_percentile},
                    {"adc_margin", cfg.calibration.adc_margin}}},
                  {"arch", to_json(cfg.arch)}};
    rep.fidelity = {{"ensemble_spearman", r.ensemble_spearman}, {"ensemble_size", r.members.size()}};
    rep.physics = {{"events", r.events},
                   {"anomalies", r.anomalies},
                   {"mean_ensemble_score_ref", r.mean_ensemble_ref},
                   {"mean_ensemble_score_aimc", r.mean_ensemble_aimc},
                   {"min_score", r.min_score}};
    rep.members = members_json(r);
    rep.perf = r.perf;
    return rep;
}

}  // namespace aimc
