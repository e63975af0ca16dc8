#pragma once

// End-to-end drivers for the two use cases: the RBM wavefunction over the
// zero-magnetization sector, and the Deep-SVDD ensemble over collision events.

#include "aimc/aimc_sim.hpp"
#include "aimc/lattice.hpp"
#include "aimc/perf_model.hpp"
#include "aimc/ref_models.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace aimc {

// All C(N, N/2) states with zero total magnetization. Ordered as binary
// numbers with spin 0 most significant and "down" = 1.
std::vector<SpinConfiguration> enumerate_zero_mag_states(std::size_t n);

// Background and anomalous events; the anomaly count is exactly
// round(count * anomaly_fraction). Deterministic in seed.
std::vector<EventRecord> synth_events(std::size_t count, std::uint64_t seed,
                                      double anomaly_fraction);

enum class WeightInit { random, zero };

struct FidelityStats {
    double median_abs_error = 0.0;
    double p95_abs_error = 0.0;
    double max_abs_error = 0.0;
};

struct NqsWorkloadConfig {
    std::size_t lx = 4;
    std::size_t ly = 4;
    bool periodic = true;
    std::size_t alpha = 2;
    double J = 1.0;
    bool marshall = true;
    std::optional<std::string> weights_path;  // manifest; overrides alpha
    std::uint64_t seed = 0;
    WeightInit init = WeightInit::random;
    double init_scale = 0.1;
    QuantConfig quant;
    CalibrationOptions calibration;
    ArchConfig arch;
};

struct NqsReport {
    std::size_t n_spins = 0;
    std::size_t alpha = 0;
    std::size_t states = 0;
    FidelityStats log_psi_error;
    double energy_ref = 0.0;
    double energy_aimc = 0.0;
    double lut_error_bound = 0.0;  // per hidden unit
    PerfReport perf;
};

// Weights from the manifest, or seeded initialization.
RbmParams nqs_workload_params(const NqsWorkloadConfig& cfg, std::size_t n_spins);
NqsReport run_nqs_workload(const NqsWorkloadConfig& cfg);

struct SvddWorkloadConfig {
    std::vector<std::size_t> hidden_dims{512, 512, 512};
    std::vector<SvddTarget> targets = build_ensemble_specs();
    std::optional<std::string> events_path;
    std::optional<std::string> weights_dir;  // holds svdd_z<z>_n<n>.json manifests
    std::uint64_t seed = 0;
    std::size_t event_count = 10000;
    double anomaly_fraction = 0.1;
    std::size_t calibration_count = 1000;
    WeightInit init = WeightInit::random;
    EnsembleRule rule = EnsembleRule::mean;
    QuantConfig quant;
    CalibrationOptions calibration;
    ArchConfig arch;
};

struct SvddMemberReport {
    SvddTarget target;
    double spearman = 0.0;
    double mean_score_ref = 0.0;
    double mean_score_aimc = 0.0;
    double max_abs_score_diff = 0.0;
    PerfReport perf;
};

struct SvddReport {
    std::size_t events = 0;
    std::size_t anomalies = 0;
    std::vector<SvddMemberReport> members;
    EnsembleRule rule = EnsembleRule::mean;
    double ensemble_spearman = 0.0;
    double mean_ensemble_ref = 0.0;
    double mean_ensemble_aimc = 0.0;
    double min_score = 0.0;  // over both paths, all members
    PerfReport perf;
    // Per-event aggregated scores; not serialized.
    std::vector<double> ensemble_ref;
    std::vector<double> ensemble_aimc;
};

MlpParams svdd_member_params(const SvddWorkloadConfig& cfg, const SvddTarget& t);
std::vector<EventRecord> svdd_workload_events(const SvddWorkloadConfig& cfg);
// Synthetic, from a stream independent of the evaluation events.
std::vector<EventRecord> svdd_calibration_events(const SvddWorkloadConfig& cfg);
SvddReport run_svdd_workload(const SvddWorkloadConfig& cfg);

std::string member_weights_filename(const SvddTarget& t);

}  // namespace aimc
