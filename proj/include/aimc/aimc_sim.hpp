#pragma once

// Integer-faithful model of one analog tile (DAC -> PCM crossbar -> dual-rail
// ADC -> LDPU) and of the shared DPU (look-up tables + adder tree).
//
// Orientation: crossbar rows are wordlines driven by the DACs (layer inputs),
// columns are bitlines read by the ADCs (layer outputs). A dense layer with
// weight matrix W (out x in) is programmed as W^T.

#include "aimc/common.hpp"
#include "aimc/perf_model.hpp"
#include "aimc/ref_models.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace aimc {

using IntMatrix = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;
using IntVector = Eigen::Matrix<std::int32_t, Eigen::Dynamic, 1>;

inline constexpr std::size_t kCrossbarRows = 512;
inline constexpr std::size_t kCrossbarCols = 512;

struct QuantConfig {
    int dac_bits = 8;
    int adc_bits = 10;
    int weight_levels = 256;     // symmetric signed, level range +-(levels/2 - 1)
    double input_scale = 1.0 / 127.0;
    double weight_scale = 1.0;
    double adc_gain = 1.0;       // counts per unit of integer accumulation
    double prog_noise_sigma = 0.0;  // fraction of the maximum level
    double read_noise_sigma = 0.0;  // fraction of the ADC full-scale accumulation
    std::uint64_t rng_seed = 0;
    std::size_t lut_entries = 1024;

    int max_dac_code() const { return (1 << (dac_bits - 1)) - 1; }
    int max_adc_count() const { return (1 << adc_bits) - 1; }
    int max_weight_level() const { return weight_levels / 2 - 1; }
    void validate() const;
};

enum class QuantPreset { ideal, standard, noisy };

std::string_view to_string(QuantPreset p);
QuantPreset quant_preset_from_string(std::string_view s);
QuantConfig make_quant_config(QuantPreset p, std::uint64_t seed = 0);

struct ProgrammedCrossbar {
    IntMatrix g_plus;   // rows_used x cols_used, levels >= 0
    IntMatrix g_minus;
    std::size_t rows_used = 0;
    std::size_t cols_used = 0;

    IntMatrix levels() const { return g_plus - g_minus; }
};

struct AdcReading {
    IntVector pos;
    IntVector neg;
};

// Scale mapping the clip_percentile-th percentile of |x| onto the largest DAC code.
double percentile_scale(std::span<const double> magnitudes, double clip_percentile, int bits);

struct ScaleCalibration {
    double input_scale = 0.0;
    std::vector<double> output_scales;
};

// Input scale from samples; one output scale per entry of layer_outputs.
ScaleCalibration calibrate_scales(std::span<const Vector> samples, double clip_percentile,
                                  int dac_bits = 8,
                                  std::span<const std::vector<Vector>> layer_outputs = {});

int dac_quantize(double x, double input_scale, int dac_bits = 8);

// weights_rows_in: rows are crossbar wordlines (inputs).
ProgrammedCrossbar program_weights(const Matrix& weights_rows_in, const QuantConfig& q);

// sample_index selects the read-noise stream.
AdcReading crossbar_mvm_adc(const ProgrammedCrossbar& xb, const IntVector& x_q,
                            const QuantConfig& q, std::uint64_t sample_index = 0);

Vector ldpu_apply(const AdcReading& r, double out_scale, const Vector& bias, Activation act);

enum class LutFunction { log2cosh, square };
enum class LutExtension { clamp, abs_linear };

// Both tabulated functions are even, so the table covers [0, max(|lo|, |hi|)]
// and is indexed by |x|; grid point 0 is always present.
struct Lut {
    LutFunction fn = LutFunction::log2cosh;
    double domain_lo = -1.0;
    double domain_hi = 1.0;
    double step = 0.0;
    LutExtension extension = LutExtension::abs_linear;
    std::vector<double> entries;

    double table_max() const { return step * static_cast<double>(entries.size() - 1); }
    // Largest |f'| over the table range.
    double max_slope() const;
    // Worst-case in-domain nearest-entry error.
    double error_bound() const { return max_slope() * step / 2.0; }
};

Lut lut_build(LutFunction fn, double domain_lo, double domain_hi, std::size_t entries = 1024);
double lut_eval(const Lut& l, double x);

double dpu_nqs_reduce(const Vector& a, const Lut& l);
double dpu_svdd_reduce(const Vector& y, const SvddTarget& t, const Lut& l);

struct CalibrationOptions {
    double input_percentile = 100.0;
    double adc_percentile = 99.9;
    double adc_margin = 0.10;
};

// One programmed tile with its per-layer scales.
struct MappedLayer {
    QuantConfig q;  // input_scale / weight_scale / adc_gain are per layer
    ProgrammedCrossbar xbar;
    Vector bias;
    Activation act = Activation::none;
    double out_scale = 1.0;  // real units per ADC count
};

struct AimcNqsModel {
    MappedLayer tile;
    Lut lut;
};

struct AimcSvddModel {
    std::vector<MappedLayer> tiles;
    Lut lut;
    SvddTarget target;
};

// Calibrates on the given states (spins map exactly onto +-max code).
AimcNqsModel map_rbm(const RbmParams& p, const QuantConfig& base,
                     std::span<const SpinConfiguration> calibration,
                     const CalibrationOptions& opts = {});

// Hidden activations run as ReLU on the LDPU regardless of p.hidden_activation.
AimcSvddModel map_svdd(const MlpParams& p, const SvddTarget& t, const QuantConfig& base,
                       std::span<const EventRecord> calibration,
                       const CalibrationOptions& opts = {});

double aimc_forward_nqs(const ArchConfig& arch, const AimcNqsModel& m, const SpinConfiguration& s,
                        std::uint64_t sample_index = 0);
std::vector<double> aimc_forward_nqs_batch(const ArchConfig& arch, const AimcNqsModel& m,
                                           std::span<const SpinConfiguration> states,
                                           std::uint64_t first_index = 0);

double aimc_forward_svdd(const ArchConfig& arch, const AimcSvddModel& m, const EventRecord& x,
                         std::uint64_t sample_index = 0);
std::vector<double> aimc_forward_svdd_batch(const ArchConfig& arch, const AimcSvddModel& m,
                                            std::span<const EventRecord> events,
                                            std::uint64_t first_index = 0);

// Counts saturated ADC readings (either rail at full scale) for a batch of
// real-valued inputs passed through one layer.
std::size_t count_adc_saturation(const MappedLayer& layer, const Matrix& inputs);

}  // namespace aimc
