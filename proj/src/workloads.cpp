#include "aimc/workloads.hpp"

#include "aimc/io_formats.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <variant>

namespace aimc {

std::vector<SpinConfiguration> enumerate_zero_mag_states(std::size_t n)
{
    if (n % 2 != 0) {
        throw DomainError("zero magnetization needs an even number of spins");
    }
    if (n == 0 || n > 62) {
        throw DomainError("sector enumeration supports 2 <= N <= 62");
    }
    std::vector<SpinConfiguration> out;
    std::vector<std::int8_t> spins(n);
    const std::uint64_t limit = std::uint64_t{1} << n;
    for (std::uint64_t code = 0; code < limit; ++code) {
        if (static_cast<std::size_t>(std::popcount(code)) != n / 2) {
            continue;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const bool down = (code >> (n - 1 - i)) & 1U;
            spins[i] = down ? -1 : 1;
        }
        out.emplace_back(spins);
    }
    return out;
}

namespace {

constexpr std::uint64_t kEventSalt = 0x65766e74;
constexpr std::uint64_t kAnomalySalt = 0x616e6f6d;
constexpr std::uint64_t kCalibSalt = 0x63616c69;
constexpr std::uint64_t kMemberSalt = 0x6d656d62;

struct ObjectKind {
    std::size_t slots;
    double presence;  // per-slot binomial probability
    double log_pt_mu;
    double log_pt_sigma;
    double eta_limit;
};

// met, electrons, muons, jets
constexpr std::array<ObjectKind, 4> kKinds{{
    {1, 1.0, 3.0, 0.6, 4.5},
    {4, 0.2, 3.2, 0.5, 2.5},
    {4, 0.2, 3.2, 0.5, 2.5},
    {10, 0.4, 3.5, 0.6, 4.5},
}};

EventRecord make_event(std::uint64_t seed, std::size_t index, bool anomaly)
{
    std::mt19937_64 rng(stream_seed(seed, index, kEventSalt));
    std::normal_distribution<double> eta(0.0, 2.0);
    std::uniform_real_distribution<double> phi(-std::numbers::pi, std::numbers::pi);
    EventRecord ev;
    ev.is_anomaly = anomaly;
    const double pt_factor = anomaly ? 3.0 : 1.0;
    std::size_t slot = 0;
    for (const auto& kind : kKinds) {
        std::binomial_distribution<std::size_t> count(kind.slots, kind.presence);
        std::lognormal_distribution<double> pt(kind.log_pt_mu, kind.log_pt_sigma);
        const std::size_t present = count(rng);
        std::vector<std::array<double, 3>> objs(present);
        for (auto& o : objs) {
            o[0] = pt_factor * pt(rng);
            o[1] = std::clamp(eta(rng), -kind.eta_limit, kind.eta_limit);
            o[2] = phi(rng);
        }
        std::sort(objs.begin(), objs.end(), [](const auto& a, const auto& b) { return a[0] > b[0]; });
        for (std::size_t k = 0; k < kind.slots; ++k, ++slot) {
            if (k < objs.size()) {
                for (std::size_t c = 0; c < 3; ++c) {
                    ev.features[3 * slot + c] = objs[k][c];
                }
            }
        }
    }
    return ev;
}

}  // namespace

std::vector<EventRecord> synth_events(std::size_t count, std::uint64_t seed, double anomaly_fraction)
{
    if (count == 0) {
        throw DomainError("event count must be at least 1");
    }
    if (!(anomaly_fraction >= 0.0 && anomaly_fraction <= 1.0)) {
        throw DomainError("anomaly fraction must lie in [0, 1]");
    }
    const auto n_anom = static_cast<std::size_t>(std::llround(static_cast<double>(count) * anomaly_fraction));
    std::vector<std::size_t> idx(count);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(stream_seed(seed, 0, kAnomalySalt));
    // Partial Fisher-Yates: the first n_anom positions are the anomalies.
    for (std::size_t i = 0; i < n_anom; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, count - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    std::vector<char> is_anom(count, 0);
    for (std::size_t i = 0; i < n_anom; ++i) {
        is_anom[idx[i]] = 1;
    }
    std::vector<EventRecord> out(count);
    parallel_for(count, 1024, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            out[i] = make_event(seed, i, is_anom[i] != 0);
        }
    });
    return out;
}

namespace {

FidelityStats error_stats(std::span<const double> a, std::span<const double> b)
{
    std::vector<double> err(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        err[i] = std::fabs(a[i] - b[i]);
    }
    FidelityStats s;
    s.max_abs_error = *std::max_element(err.begin(), err.end());
    s.p95_abs_error = percentile(err, 95.0);
    s.median_abs_error = median(std::move(err));
    return s;
}


}  // namespace

RbmParams nqs_workload_params(const NqsWorkloadConfig& cfg, std::size_t n_spins)
{
    if (cfg.weights_path) {
        auto params = load_weights(*cfg.weights_path);
        if (!std::holds_alternative<RbmParams>(params)) {
            throw FormatError("weights manifest does not describe an RBM");
        }
        auto rbm = std::get<RbmParams>(std::move(params));
        require_dims(rbm.n_spins == n_spins, "RBM weights do not match the lattice size");
        return rbm;
    }
    if (cfg.init == WeightInit::zero) {
        return RbmParams::zeros(n_spins, cfg.alpha);
    }
    return RbmParams::random_uniform(n_spins, cfg.alpha, cfg.init_scale, cfg.seed);
}

NqsReport run_nqs_workload(const NqsWorkloadConfig& cfg)
{
    const LatticeSpec lat = build_lattice(cfg.lx, cfg.ly, cfg.periodic);
    const std::size_t n = lat.sites();
    const RbmParams p = nqs_workload_params(cfg, n);
    if (p.hidden() > kCrossbarCols || n > kCrossbarRows) {
        throw MappingError("RBM does not fit a single tile");
    }
    const auto mapping = map_network({{n, p.hidden()}}, cfg.arch, "nqs");

    const auto sector = enumerate_zero_mag_states(n);
    std::vector<double> ref(sector.size());
    parallel_for(sector.size(), 512, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            ref[i] = rbm_log_psi(p, sector[i]);
        }
    });
    const AimcNqsModel model = map_rbm(p, cfg.quant, sector, cfg.calibration);
    const auto aimc = aimc_forward_nqs_batch(cfg.arch, model, sector);

    NqsReport r;
    r.n_spins = n;
    r.alpha = p.alpha;
    r.states = sector.size();
    r.log_psi_error = error_stats(aimc, ref);
    r.energy_ref = energy_expectation_fullsum(p, sector, lat, cfg.J, cfg.marshall);
    r.energy_aimc = energy_expectation_table(sector, aimc, lat, cfg.J, cfg.marshall);
    r.lut_error_bound = model.lut.error_bound();
    r.perf = estimate_performance(mapping, cfg.arch);
    return r;
}

std::string member_weights_filename(const SvddTarget& t)
{
    return "svdd_z" + std::to_string(t.z) + "_n" + std::to_string(static_cast<long long>(t.n)) +
           ".json";
}

namespace {

std::vector<std::size_t> member_dims(const SvddWorkloadConfig& cfg, const SvddTarget& t)
{
    std::vector<std::size_t> dims{kEventFeatures};
    dims.insert(dims.end(), cfg.hidden_dims.begin(), cfg.hidden_dims.end());
    dims.push_back(t.z);
    return dims;
}

std::vector<double> reference_scores(const MlpParams& p, const SvddTarget& t,
                                     std::span<const EventRecord> events)
{
    std::vector<double> out(events.size());
    parallel_for(events.size(), 256, [&](std::size_t begin, std::size_t end) {
        Matrix x(static_cast<Eigen::Index>(kEventFeatures), static_cast<Eigen::Index>(end - begin));
        for (std::size_t b = begin; b < end; ++b) {
            x.col(static_cast<Eigen::Index>(b - begin)) = events[b].as_vector();
        }
        const Matrix y = mlp_forward_batch(p, x);
        for (Eigen::Index b = 0; b < y.cols(); ++b) {
            out[begin + static_cast<std::size_t>(b)] = svdd_score(y.col(b), t);
        }
    });
    return out;
}

double mean_of(std::span<const double> xs)
{
    return compensated_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace

MlpParams svdd_member_params(const SvddWorkloadConfig& cfg, const SvddTarget& t)
{
    if (cfg.weights_dir) {
        auto params = load_weights(std::filesystem::path(*cfg.weights_dir) / member_weights_filename(t));
        if (!std::holds_alternative<MlpParams>(params)) {
            throw FormatError("weights manifest does not describe an MLP");
        }
        return std::get<MlpParams>(std::move(params));
    }
    const auto dims = member_dims(cfg, t);
    if (cfg.init == WeightInit::zero) {
        return MlpParams::zeros(dims, Activation::elu);
    }
    // Seeded by (z, n) so a member is identical alone or inside the ensemble.
    const std::uint64_t key = t.z * 1000 + static_cast<std::uint64_t>(t.n);
    return MlpParams::random_he(dims, Activation::elu, stream_seed(cfg.seed, key, kMemberSalt));
}

std::vector<EventRecord> svdd_workload_events(const SvddWorkloadConfig& cfg)
{
    return cfg.events_path ? load_events(*cfg.events_path)
                           : synth_events(cfg.event_count, cfg.seed, cfg.anomaly_fraction);
}

std::vector<EventRecord> svdd_calibration_events(const SvddWorkloadConfig& cfg)
{
    return synth_events(cfg.calibration_count, stream_seed(cfg.seed, 0, kCalibSalt),
                        cfg.anomaly_fraction);
}

SvddReport run_svdd_workload(const SvddWorkloadConfig& cfg)
{
    if (cfg.targets.empty()) {
        throw DomainError("SVDD workload needs at least one target");
    }
    const std::vector<EventRecord> events = svdd_workload_events(cfg);
    if (events.size() < 2) {
        throw DomainError("SVDD workload needs at least two events");
    }
    const auto calib = svdd_calibration_events(cfg);

    SvddReport r;
    r.events = events.size();
    r.anomalies = static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [](const auto& e) { return e.is_anomaly.value_or(false); }));
    r.rule = cfg.rule;

    const std::size_t m = cfg.targets.size();
    std::vector<std::vector<double>> ref_scores(m);
    std::vector<std::vector<double>> aimc_scores(m);
    double min_score = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < m; ++k) {
        const auto& t = cfg.targets[k];
        const MlpParams p = svdd_member_params(cfg, t);
        require_dims(p.output_dim() == t.z, "member network output width != z");
        std::vector<std::pair<std::size_t, std::size_t>> dims;
        for (const auto& layer : p.layers) {
            dims.emplace_back(static_cast<std::size_t>(layer.weight.cols()),
                              static_cast<std::size_t>(layer.weight.rows()));
        }
        const auto mapping = map_network(dims, cfg.arch, "svdd");

        ref_scores[k] = reference_scores(p, t, events);
        const AimcSvddModel model = map_svdd(p, t, cfg.quant, calib, cfg.calibration);
        aimc_scores[k] = aimc_forward_svdd_batch(cfg.arch, model, events);

        SvddMemberReport mr;
        mr.target = t;
        mr.spearman = spearman(ref_scores[k], aimc_scores[k]);
        mr.mean_score_ref = mean_of(ref_scores[k]);
        mr.mean_score_aimc = mean_of(aimc_scores[k]);
        for (std::size_t i = 0; i < events.size(); ++i) {
            mr.max_abs_score_diff =
                std::max(mr.max_abs_score_diff, std::fabs(ref_scores[k][i] - aimc_scores[k][i]));
            min_score = std::min({min_score, ref_scores[k][i], aimc_scores[k][i]});
        }
        mr.perf = estimate_performance(mapping, cfg.arch);
        r.members.push_back(mr);
    }

    r.ensemble_ref.resize(events.size());
    r.ensemble_aimc.resize(events.size());
    std::vector<double> buf_ref(m);
    std::vector<double> buf_aimc(m);
    for (std::size_t i = 0; i < events.size(); ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            buf_ref[k] = ref_scores[k][i];
            buf_aimc[k] = aimc_scores[k][i];
        }
        r.ensemble_ref[i] = aggregate_scores(buf_ref, cfg.rule);
        r.ensemble_aimc[i] = aggregate_scores(buf_aimc, cfg.rule);
    }
    r.ensemble_spearman = spearman(r.ensemble_ref, r.ensemble_aimc);
    r.mean_ensemble_ref = mean_of(r.ensemble_ref);
    r.mean_ensemble_aimc = mean_of(r.ensemble_aimc);
    r.min_score = min_score;
    // Members share the stage structure; the largest member sets the report.
    r.perf = r.members.back().perf;
    for (const auto& mr : r.members) {
        if (mr.perf.power > r.perf.power) {
            r.perf = mr.perf;
        }
    }
    return r;
}

}  // namespace aimc
