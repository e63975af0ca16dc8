#include "aimc/cli.hpp"

#include "aimc/bench.hpp"
#include "aimc/common.hpp"
#include "aimc/io_formats.hpp"
#include "aimc/report.hpp"
#include "aimc/workloads.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Common {
    std::uint64_t seed = 0;
    std::string out;
    std::string format = "structured";
    unsigned threads = 0;
};

struct QuantOpts {
    std::string preset = "default";
    std::optional<std::size_t> lut_entries;
    std::optional<double> prog_noise;
    std::optional<double> read_noise;
    CalibrationOptions calibration;
};

struct NqsOpts {
    std::size_t lx = 4;
    std::size_t ly = 4;
    bool open = false;
    std::size_t alpha = 2;
    double J = 1.0;
    bool no_marshall = false;
    std::string weights;
    double init_scale = 0.1;
};

struct SvddOpts {
    std::vector<std::size_t> z;
    std::vector<double> n;
    bool allow_custom = false;
    std::string events;
    std::size_t count = 10000;
    double anomaly_fraction = 0.1;
    std::vector<std::size_t> hidden{512, 512, 512};
    std::string weights_dir;
    std::string rule = "mean";
    std::size_t calibration_count = 1000;
};

struct BenchOpts {
    std::string workload = "nqs";
    std::string path = "ref";
    std::size_t batch = 12870;
    std::string probe = "null";
    std::vector<std::size_t> candidates;
    double min_fraction = 0.99;
};

void add_quant(CLI::App* app, QuantOpts& q)
{
    app->add_option("--quant-preset", q.preset, "Quantization preset")
        ->check(CLI::IsMember({"ideal", "default", "noisy"}))
        ->capture_default_str();
    app->add_option("--lut-entries", q.lut_entries, "DPU look-up table size")->check(CLI::Range(2, 1 << 24));
    app->add_option("--prog-noise", q.prog_noise, "Programming noise, fraction of max level")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--read-noise", q.read_noise, "Read noise, fraction of ADC full scale")
        ->check(CLI::NonNegativeNumber);
    app->add_option("--input-percentile", q.calibration.input_percentile, "DAC clip percentile")
        ->check(CLI::Range(0.0, 100.0))
        ->capture_default_str();
    app->add_option("--adc-percentile", q.calibration.adc_percentile, "ADC range percentile")
        ->check(CLI::Range(0.0, 100.0))
        ->capture_default_str();
    app->add_option("--adc-margin", q.calibration.adc_margin, "ADC headroom fraction")
        ->check(CLI::Range(0.0, 0.99))
        ->capture_default_str();
}

void add_nqs(CLI::App* app, NqsOpts& o)
{
    app->add_option("--lx", o.lx, "Lattice width")->capture_default_str();
    app->add_option("--ly", o.ly, "Lattice height")->capture_default_str();
    app->add_flag("--open", o.open, "Open boundary conditions");
    app->add_option("--alpha", o.alpha, "Hidden-unit density")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--J", o.J, "Exchange coupling")->capture_default_str();
    app->add_flag("--no-marshall", o.no_marshall, "Use the unrotated basis");
    app->add_option("--weights", o.weights, "RBM weight manifest");
    app->add_option("--init-scale", o.init_scale, "Uniform init half-width")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

void add_init(CLI::App* app, std::string& init)
{
    app->add_option("--init", init, "Initialization when no weights are given")
        ->check(CLI::IsMember({"random", "zero"}))
        ->capture_default_str();
}

void add_svdd(CLI::App* app, SvddOpts& o, bool single)
{
    if (single) {
        o.z = {5};
        o.n = {0.0};
        app->add_option("--z", o.z, "Output width")->expected(1)->capture_default_str();
        app->add_option("--n", o.n, "Target coordinate")->expected(1)->capture_default_str();
    } else {
        app->add_option("--z", o.z, "Output widths (default: full ensemble)");
        app->add_option("--n", o.n, "Target coordinates (default: full ensemble)");
        app->add_option("--rule", o.rule, "Ensemble aggregation")
            ->check(CLI::IsMember({"mean", "sum", "max"}))
            ->capture_default_str();
    }
    app->add_flag("--allow-custom", o.allow_custom, "Accept output widths outside the standard set");
    app->add_option("--events", o.events, "Event table");
    app->add_option("--count", o.count, "Synthetic event count")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--anomaly-fraction", o.anomaly_fraction, "Synthetic anomaly fraction")
        ->check(CLI::Range(0.0, 1.0))
        ->capture_default_str();
    app->add_option("--hidden", o.hidden, "Hidden layer widths")->capture_default_str();
    app->add_option("--weights-dir", o.weights_dir, "Directory of member weight manifests");
    app->add_option("--calibration-count", o.calibration_count, "Calibration events")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
}

void add_bench(CLI::App* app, BenchOpts& o, bool sweep)
{
    app->add_option("--workload", o.workload, "Model to benchmark")
        ->check(CLI::IsMember({"nqs", "svdd"}))
        ->capture_default_str();
    app->add_option("--path", o.path, "Reference model or AIMC simulator")
        ->check(CLI::IsMember({"ref", "aimc"}))
        ->capture_default_str();
    app->add_option("--probe", o.probe, "null, synthetic:<watts> or platform")
        ->envname("AIMC_BENCH_PROBE")
        ->capture_default_str();
    app->add_option("--min-fraction", o.min_fraction, "Minimum compute fraction")
        ->check(CLI::Range(0.5, 0.999999))
        ->capture_default_str();
    if (sweep) {
        app->add_option("--candidates", o.candidates, "Batch sizes (default: powers of two and the reference sizes)");
    } else {
        app->add_option("--batch", o.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
    }
}

QuantConfig quant_config(const QuantOpts& o, std::uint64_t seed)
{
    QuantConfig q = make_quant_config(quant_preset_from_string(o.preset), seed);
    if (o.lut_entries) {
        q.lut_entries = *o.lut_entries;
    }
    if (o.prog_noise) {
        q.prog_noise_sigma = *o.prog_noise;
    }
    if (o.read_noise) {
        q.read_noise_sigma = *o.read_noise;
    }
    q.validate();
    return q;
}

WeightInit init_from(const std::string& s)
{
    return s == "zero" ? WeightInit::zero : WeightInit::random;
}

NqsWorkloadConfig nqs_config(const Common& c, const NqsOpts& o, const std::string& init,
                             const QuantOpts& q)
{
    NqsWorkloadConfig cfg;
    cfg.lx = o.lx;
    cfg.ly = o.ly;
    cfg.periodic = !o.open;
    cfg.alpha = o.alpha;
    cfg.J = o.J;
    cfg.marshall = !o.no_marshall;
    if (!o.weights.empty()) {
        cfg.weights_path = o.weights;
    }
    cfg.seed = c.seed;
    cfg.init = init_from(init);
    cfg.init_scale = o.init_scale;
    cfg.quant = quant_config(q, c.seed);
    cfg.calibration = q.calibration;
    return cfg;
}

SvddWorkloadConfig svdd_config(const Common& c, const SvddOpts& o, const std::string& init,
                               const QuantOpts& q)
{
    SvddWorkloadConfig cfg;
    cfg.hidden_dims = o.hidden;
    if (!o.allow_custom) {
        for (auto z : o.z) {
            if (!is_standard_ensemble_z(z)) {
                throw UsageError("z = " + std::to_string(z) +
                                 " is not a standard ensemble width (pass --allow-custom)");
            }
        }
    }
    for (auto z : o.z) {
        if (z == 0) {
            throw UsageError("z must be positive");
        }
    }
    const std::vector<std::size_t> zs =
        o.z.empty() ? std::vector<std::size_t>(kEnsembleZ.begin(), kEnsembleZ.end()) : o.z;
    const std::vector<double> ns =
        o.n.empty() ? std::vector<double>(kEnsembleN.begin(), kEnsembleN.end()) : o.n;
    cfg.targets.clear();
    for (auto z : zs) {
        for (auto n : ns) {
            cfg.targets.push_back({z, n});
        }
    }
    if (!o.events.empty()) {
        cfg.events_path = o.events;
    }
    if (!o.weights_dir.empty()) {
        cfg.weights_dir = o.weights_dir;
    }
    cfg.seed = c.seed;
    cfg.event_count = o.count;
    cfg.anomaly_fraction = o.anomaly_fraction;
    cfg.calibration_count = o.calibration_count;
    cfg.init = init_from(init);
    cfg.rule = ensemble_rule_from_string(o.rule);
    cfg.quant = quant_config(q, c.seed);
    cfg.calibration = q.calibration;
    return cfg;
}

// A batch evaluator over a fixed data set, with a sink so the work is kept.
struct BenchTarget {
    std::size_t size = 0;
    BatchRunner runner;
    nlohmann::json description;
};

BenchTarget nqs_bench_target(const NqsWorkloadConfig& cfg, const std::string& path)
{
    const LatticeSpec lat = build_lattice(cfg.lx, cfg.ly, cfg.periodic);
    const std::size_t n = lat.sites();
    auto p = std::make_shared<RbmParams>(nqs_workload_params(cfg, n));
    auto states = std::make_shared<std::vector<SpinConfiguration>>(enumerate_zero_mag_states(n));
    auto sink = std::make_shared<std::vector<double>>(states->size());
    BenchTarget t;
    t.size = states->size();
    t.description = {{"workload", "nqs"}, {"path", path}, {"samples_per_pass", t.size}};
    if (path == "aimc") {
        auto model = std::make_shared<AimcNqsModel>(map_rbm(*p, cfg.quant, *states, cfg.calibration));
        const ArchConfig arch = cfg.arch;
        t.runner = [=](std::size_t off, std::size_t count) {
            const auto r = aimc_forward_nqs_batch(
                arch, *model, std::span<const SpinConfiguration>(*states).subspan(off, count), off);
            std::copy(r.begin(), r.end(), sink->begin() + static_cast<std::ptrdiff_t>(off));
        };
        return t;
    }
    auto spins = std::make_shared<Matrix>(n, states->size());
    for (std::size_t k = 0; k < states->size(); ++k) {
        for (std::size_t i = 0; i < n; ++i) {
            (*spins)(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = (*states)[k][i];
        }
    }
    t.runner = [=](std::size_t off, std::size_t count) {
        Matrix theta = p->weights * spins->middleCols(static_cast<Eigen::Index>(off),
                                                      static_cast<Eigen::Index>(count));
        theta.colwise() += p->bias;
        for (Eigen::Index c = 0; c < theta.cols(); ++c) {
            double acc = 0.0;
            for (Eigen::Index h = 0; h < theta.rows(); ++h) {
                acc += log2cosh(theta(h, c));
            }
            (*sink)[off + static_cast<std::size_t>(c)] = acc;
        }
    };
    return t;
}

BenchTarget svdd_bench_target(const SvddWorkloadConfig& cfg, const std::string& path)
{
    const SvddTarget target = cfg.targets.front();
    auto p = std::make_shared<MlpParams>(svdd_member_params(cfg, target));
    auto events = std::make_shared<std::vector<EventRecord>>(svdd_workload_events(cfg));
    auto sink = std::make_shared<std::vector<double>>(events->size());
    BenchTarget t;
    t.size = events->size();
    t.description = {{"workload", "svdd"},
                     {"path", path},
                     {"samples_per_pass", t.size},
                     {"z", target.z},
                     {"n", target.n}};
    if (path == "aimc") {
        const auto calib = svdd_calibration_events(cfg);
        auto model = std::make_shared<AimcSvddModel>(map_svdd(*p, target, cfg.quant, calib, cfg.calibration));
        const ArchConfig arch = cfg.arch;
        t.runner = [=](std::size_t off, std::size_t count) {
            const auto r = aimc_forward_svdd_batch(
                arch, *model, std::span<const EventRecord>(*events).subspan(off, count), off);
            std::copy(r.begin(), r.end(), sink->begin() + static_cast<std::ptrdiff_t>(off));
        };
        return t;
    }
    auto x = std::make_shared<Matrix>(static_cast<Eigen::Index>(kEventFeatures),
                                      static_cast<Eigen::Index>(events->size()));
    for (std::size_t k = 0; k < events->size(); ++k) {
        x->col(static_cast<Eigen::Index>(k)) = (*events)[k].as_vector();
    }
    t.runner = [=](std::size_t off, std::size_t count) {
        const Matrix y = mlp_forward_batch(
            *p, x->middleCols(static_cast<Eigen::Index>(off), static_cast<Eigen::Index>(count)));
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
            (*sink)[off + static_cast<std::size_t>(c)] = svdd_score(y.col(c), target);
        }
    };
    return t;
}

std::unique_ptr<EnergyProbe> probe_for(const std::string& selector)
{
    try {
        return make_probe(selector);
    } catch (const FormatError& e) {
        throw UsageError(e.what());
    }
}

void emit(const RunReport& rep, const Common& c, std::ostream& out)
{
    const ReportFormat fmt = report_format_from_string(c.format);
    const std::string text = format_report(rep, fmt);
    if (!c.out.empty()) {
        atomic_write(c.out, text);
    }
    out << text;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Analog in-memory computing simulator and host benchmark harness", "aimc"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "Configuration file (TOML/INI; [subcommand] sections)");
    app.allow_config_extras(CLI::config_extras_mode::error);

    Common common;
    app.add_option("--seed", common.seed, "Random seed")->capture_default_str();
    app.add_option("--out", common.out, "Also write the report to this path");
    app.add_option("--format", common.format, "Report format")
        ->check(CLI::IsMember({"text", "structured"}))
        ->capture_default_str();
    app.add_option("--threads", common.threads, "Worker threads (0 = all cores)");

    QuantOpts quant;
    NqsOpts nqs;
    SvddOpts svdd_one;
    SvddOpts svdd_ens;
    SvddOpts svdd_bench;
    BenchOpts bench;
    std::string report_in;
    std::string init = "random";

    auto* c_nqs = app.add_subcommand("nqs", "RBM wavefunction on the AIMC datapath");
    add_nqs(c_nqs, nqs);
    add_quant(c_nqs, quant);
    add_init(c_nqs, init);

    auto* c_svdd = app.add_subcommand("svdd", "One Deep-SVDD ensemble member");
    add_svdd(c_svdd, svdd_one, true);
    add_quant(c_svdd, quant);
    add_init(c_svdd, init);

    auto* c_ens = app.add_subcommand("ensemble", "Deep-SVDD ensemble");
    add_svdd(c_ens, svdd_ens, false);
    add_quant(c_ens, quant);
    add_init(c_ens, init);

    auto* c_bench = app.add_subcommand("bench-host", "Host benchmark at one batch size");
    add_bench(c_bench, bench, false);
    add_nqs(c_bench, nqs);
    add_svdd(c_bench, svdd_bench, true);
    add_quant(c_bench, quant);
    add_init(c_bench, init);

    auto* c_sweep = app.add_subcommand("sweep", "Host benchmark batch-size sweep");
    add_bench(c_sweep, bench, true);
    add_nqs(c_sweep, nqs);
    add_svdd(c_sweep, svdd_bench, true);
    add_quant(c_sweep, quant);
    add_init(c_sweep, init);

    auto* c_report = app.add_subcommand("report", "Re-emit a stored report");
    c_report->add_option("--in", report_in, "Report file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        set_worker_count(common.threads);
        RunReport rep;
        if (c_nqs->parsed()) {
            const auto cfg = nqs_config(common, nqs, init, quant);
            rep = make_nqs_report(cfg, run_nqs_workload(cfg));
        } else if (c_svdd->parsed() || c_ens->parsed()) {
            const auto cfg = svdd_config(common, c_svdd->parsed() ? svdd_one : svdd_ens, init, quant);
            rep = make_svdd_report(c_svdd->parsed() ? "svdd" : "ensemble", cfg, run_svdd_workload(cfg));
        } else if (c_bench->parsed() || c_sweep->parsed()) {
            const bool sweep = c_sweep->parsed();
            auto probe = probe_for(bench.probe);
            BenchTarget target;
            if (bench.workload == "nqs") {
                const auto cfg = nqs_config(common, nqs, init, quant);
                target = nqs_bench_target(cfg, bench.path);
                rep.config = make_nqs_report(cfg, {}).config;
            } else {
                const auto cfg = svdd_config(common, svdd_bench, init, quant);
                target = svdd_bench_target(cfg, bench.path);
                rep.config = make_svdd_report("svdd", cfg, {}).config;
            }
            rep.command = sweep ? "sweep" : "bench-host";
            rep.seed = common.seed;
            HostBenchOptions opts;
            opts.min_fraction = bench.min_fraction;
            rep.extra = target.description;
            rep.extra["probe"] = probe->name();
            rep.extra["probe_available"] = probe->available();
            if (sweep) {
                const auto cands = bench.candidates.empty() ? default_batch_candidates() : bench.candidates;
                if (std::find(cands.begin(), cands.end(), std::size_t{0}) != cands.end()) {
                    throw UsageError("batch candidates must be positive");
                }
                const auto s = sweep_batch(target.runner, target.size, cands, *probe, opts);
                rep.bench = s.results;
                rep.extra["best_batch"] = s.best_batch;
            } else {
                rep.bench = {run_host_bench(target.runner, target.size, bench.batch, *probe, opts)};
            }
        } else if (c_report->parsed()) {
            rep = read_report(report_in);
        }
        emit(rep, common, out);
        return kExitOk;
    } catch (const UsageError& e) {
        err << "aimc: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "aimc: " << e.what() << "\n";
        return kExitRuntime;
    }
}

}  // namespace aimc
