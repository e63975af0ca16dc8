#include "aimc/aimc_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace aimc {

namespace {

constexpr std::uint64_t kProgSalt = 0x70726f67;
constexpr std::uint64_t kReadSalt = 0x72656164;
constexpr std::uint64_t kLayerSalt = 0x6c617972;
constexpr std::size_t kChunk = 256;

}  // namespace

void QuantConfig::validate() const
{
    if (dac_bits < 2 || dac_bits > 24) {
        throw DomainError("dac_bits must lie in [2, 24]");
    }
    if (adc_bits < 2 || adc_bits > 30) {
        throw DomainError("adc_bits must lie in [2, 30]");
    }
    if (weight_levels < 3) {
        throw DomainError("weight_levels must be at least 3");
    }
    if (!(input_scale > 0.0) || !(weight_scale > 0.0) || !(adc_gain > 0.0)) {
        throw DomainError("quantization scales must be positive");
    }
    if (prog_noise_sigma < 0.0 || read_noise_sigma < 0.0) {
        throw DomainError("noise levels must be non-negative");
    }
    if (lut_entries < 2) {
        throw DomainError("a look-up table needs at least 2 entries");
    }
}

std::string_view to_string(QuantPreset p)
{
    switch (p) {
    case QuantPreset::ideal:
        return "ideal";
    case QuantPreset::standard:
        return "default";
    case QuantPreset::noisy:
        return "noisy";
    }
    return "default";
}

QuantPreset quant_preset_from_string(std::string_view s)
{
    if (s == "ideal") {
        return QuantPreset::ideal;
    }
    if (s == "default") {
        return QuantPreset::standard;
    }
    if (s == "noisy") {
        return QuantPreset::noisy;
    }
    throw FormatError("unknown quantization preset '" + std::string(s) + "'");
}

QuantConfig make_quant_config(QuantPreset p, std::uint64_t seed)
{
    QuantConfig q;
    q.rng_seed = seed;
    switch (p) {
    case QuantPreset::ideal:
        q.dac_bits = 16;
        q.adc_bits = 16;
        q.weight_levels = 65536;
        q.lut_entries = 65536;
        break;
    case QuantPreset::noisy:
        q.prog_noise_sigma = 0.02;
        break;
    case QuantPreset::standard:
        break;
    }
    q.input_scale = 1.0 / q.max_dac_code();
    return q;
}

double percentile_scale(std::span<const double> magnitudes, double clip_percentile, int bits)
{
    if (magnitudes.empty()) {
        throw DomainError("calibration set is empty");
    }
    if (!(clip_percentile > 0.0 && clip_percentile <= 100.0)) {
        throw DomainError("clip percentile must lie in (0, 100]");
    }
    std::vector<double> mags(magnitudes.size());
    std::transform(magnitudes.begin(), magnitudes.end(), mags.begin(),
                   [](double v) { return std::fabs(v); });
    const double p = percentile(std::move(mags), clip_percentile);
    if (!(p > 0.0)) {
        throw DomainError("calibration set is all zero; scale would be 0");
    }
    return p / static_cast<double>((1 << (bits - 1)) - 1);
}

ScaleCalibration calibrate_scales(std::span<const Vector> samples, double clip_percentile,
                                  int dac_bits, std::span<const std::vector<Vector>> layer_outputs)
{
    if (samples.empty()) {
        throw DomainError("calibration set is empty");
    }
    auto flatten = [](std::span<const Vector> vs) {
        std::vector<double> out;
        for (const auto& v : vs) {
            out.insert(out.end(), v.data(), v.data() + v.size());
        }
        return out;
    };
    ScaleCalibration c;
    c.input_scale = percentile_scale(flatten(samples), clip_percentile, dac_bits);
    for (const auto& outputs : layer_outputs) {
        c.output_scales.push_back(percentile_scale(flatten(outputs), clip_percentile, dac_bits));
    }
    return c;
}

int dac_quantize(double x, double input_scale, int dac_bits)
{
    if (!(input_scale > 0.0)) {
        throw DomainError("input scale must be positive");
    }
    const double max_code = static_cast<double>((1 << (dac_bits - 1)) - 1);
    return static_cast<int>(std::clamp(std::round(x / input_scale), -max_code, max_code));
}

ProgrammedCrossbar program_weights(const Matrix& w, const QuantConfig& q)
{
    q.validate();
    if (static_cast<std::size_t>(w.rows()) > kCrossbarRows ||
        static_cast<std::size_t>(w.cols()) > kCrossbarCols) {
        throw MappingError("weight matrix " + std::to_string(w.rows()) + " x " +
                           std::to_string(w.cols()) + " exceeds the 512 x 512 crossbar");
    }
    const double max_level = q.max_weight_level();
    ProgrammedCrossbar xb;
    xb.rows_used = static_cast<std::size_t>(w.rows());
    xb.cols_used = static_cast<std::size_t>(w.cols());
    xb.g_plus = IntMatrix::Zero(w.rows(), w.cols());
    xb.g_minus = IntMatrix::Zero(w.rows(), w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
        for (Eigen::Index j = 0; j < w.cols(); ++j) {
            const double level = std::clamp(std::round(w(i, j) / q.weight_scale), -max_level, max_level);
            if (level > 0) {
                xb.g_plus(i, j) = static_cast<std::int32_t>(level);
            } else {
                xb.g_minus(i, j) = static_cast<std::int32_t>(-level);
            }
        }
    }
    if (q.prog_noise_sigma > 0.0) {
        const double sigma = q.prog_noise_sigma * max_level;
        for (Eigen::Index i = 0; i < w.rows(); ++i) {
            std::mt19937_64 rng(stream_seed(q.rng_seed, static_cast<std::uint64_t>(i), kProgSalt));
            std::normal_distribution<double> g(0.0, sigma);
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                auto perturb = [&](std::int32_t v) {
                    return static_cast<std::int32_t>(std::max(0.0, std::round(v + g(rng))));
                };
                xb.g_plus(i, j) = perturb(xb.g_plus(i, j));
                xb.g_minus(i, j) = perturb(xb.g_minus(i, j));
            }
        }
    }
    return xb;
}

namespace {

// Integer accumulations per bitline; columns of codes are samples. Products
// stay far below 2^53, so double arithmetic is exact here.
Matrix accumulate(const Matrix& levels_t, const Matrix& codes)
{
    return levels_t * codes;
}

Matrix levels_transposed(const ProgrammedCrossbar& xb)
{
    return xb.levels().transpose().cast<double>();
}

void add_read_noise(Matrix& acc, const QuantConfig& q, std::uint64_t first_index)
{
    if (q.read_noise_sigma <= 0.0) {
        return;
    }
    const double sigma = q.read_noise_sigma * q.max_adc_count() / q.adc_gain;
    for (Eigen::Index b = 0; b < acc.cols(); ++b) {
        std::mt19937_64 rng(
            stream_seed(q.rng_seed, first_index + static_cast<std::uint64_t>(b), kReadSalt));
        std::normal_distribution<double> g(0.0, sigma);
        for (Eigen::Index j = 0; j < acc.rows(); ++j) {
            acc(j, b) += g(rng);
        }
    }
}

double adc_rail(double gain, double v, double max_count)
{
    return std::clamp(std::round(gain * std::max(v, 0.0)), 0.0, max_count);
}

// ADC followed by LDPU; returns the real-valued layer output.
Matrix convert_and_scale(const Matrix& acc, const MappedLayer& layer)
{
    const double max_count = layer.q.max_adc_count();
    Matrix y(acc.rows(), acc.cols());
    for (Eigen::Index b = 0; b < acc.cols(); ++b) {
        for (Eigen::Index j = 0; j < acc.rows(); ++j) {
            const double a = acc(j, b);
            const double diff = adc_rail(layer.q.adc_gain, a, max_count) -
                                adc_rail(layer.q.adc_gain, -a, max_count);
            y(j, b) = apply_activation(layer.act, layer.out_scale * diff + layer.bias(j));
        }
    }
    return y;
}

Matrix dac_batch(const Matrix& x, double input_scale, int dac_bits)
{
    const double max_code = static_cast<double>((1 << (dac_bits - 1)) - 1);
    return x.unaryExpr([&](double v) {
        return std::clamp(std::round(v / input_scale), -max_code, max_code);
    });
}

Matrix run_layer(const MappedLayer& layer, const Matrix& levels_t, const Matrix& codes,
                 std::uint64_t first_index)
{
    Matrix acc = accumulate(levels_t, codes);
    add_read_noise(acc, layer.q, first_index);
    return convert_and_scale(acc, layer);
}

double gain_from_accumulations(const Matrix& acc, const QuantConfig& q, const CalibrationOptions& o)
{
    std::vector<double> mags(static_cast<std::size_t>(acc.size()));
    std::transform(acc.data(), acc.data() + acc.size(), mags.begin(),
                   [](double v) { return std::fabs(v); });
    const double max_mag = *std::max_element(mags.begin(), mags.end());
    double p = percentile(std::move(mags), o.adc_percentile);
    if (!(p > 0.0)) {
        p = max_mag;
    }
    if (!(p > 0.0)) {
        return 1.0;
    }
    return q.max_adc_count() * (1.0 - o.adc_margin) / p;
}

double weight_scale_for(const Matrix& w, const QuantConfig& q)
{
    const double m = w.size() == 0 ? 0.0 : w.cwiseAbs().maxCoeff();
    return m > 0.0 ? m / q.max_weight_level() : 1.0;
}

void check_fits(const ArchConfig& arch, const MappedLayer& layer)
{
    if (layer.xbar.rows_used > arch.rows || layer.xbar.cols_used > arch.cols) {
        throw MappingError("programmed layer does not fit the architecture's crossbar");
    }
}

}  // namespace

AdcReading crossbar_mvm_adc(const ProgrammedCrossbar& xb, const IntVector& x_q,
                            const QuantConfig& q, std::uint64_t sample_index)
{
    require_dims(static_cast<std::size_t>(x_q.size()) == xb.rows_used,
                 "input code vector length != rows_used");
    Matrix acc = accumulate(levels_transposed(xb), x_q.cast<double>());
    add_read_noise(acc, q, sample_index);
    const double max_count = q.max_adc_count();
    AdcReading r;
    r.pos.resize(acc.rows());
    r.neg.resize(acc.rows());
    for (Eigen::Index j = 0; j < acc.rows(); ++j) {
        r.pos(j) = static_cast<std::int32_t>(adc_rail(q.adc_gain, acc(j, 0), max_count));
        r.neg(j) = static_cast<std::int32_t>(adc_rail(q.adc_gain, -acc(j, 0), max_count));
    }
    return r;
}

Vector ldpu_apply(const AdcReading& r, double out_scale, const Vector& bias, Activation act)
{
    require_dims(r.pos.size() == r.neg.size() && r.pos.size() == bias.size(),
                 "ADC reading and bias lengths differ");
    Vector y(bias.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
        y(j) = apply_activation(act, out_scale * static_cast<double>(r.pos(j) - r.neg(j)) + bias(j));
    }
    return y;
}

namespace {

double lut_function(LutFunction fn, double x)
{
    return fn == LutFunction::log2cosh ? log2cosh(x) : x * x;
}

}  // namespace

double Lut::max_slope() const
{
    const double h = table_max();
    // d/dx ln 2cosh x = tanh x; d/dx x^2 = 2x. Both maximal at the table edge.
    return fn == LutFunction::log2cosh ? std::tanh(h) : 2.0 * h;
}

Lut lut_build(LutFunction fn, double domain_lo, double domain_hi, std::size_t entries)
{
    if (!(domain_lo < domain_hi)) {
        throw DomainError("LUT domain must satisfy lo < hi");
    }
    if (entries < 2) {
        throw DomainError("a look-up table needs at least 2 entries");
    }
    Lut l;
    l.fn = fn;
    l.domain_lo = domain_lo;
    l.domain_hi = domain_hi;
    l.extension = fn == LutFunction::log2cosh ? LutExtension::abs_linear : LutExtension::clamp;
    const double h = std::max(std::fabs(domain_lo), std::fabs(domain_hi));
    l.step = h / static_cast<double>(entries - 1);
    l.entries.resize(entries);
    for (std::size_t k = 0; k < entries; ++k) {
        l.entries[k] = lut_function(fn, static_cast<double>(k) * l.step);
    }
    return l;
}

double lut_eval(const Lut& l, double x)
{
    const double a = std::fabs(x);
    const double h = l.table_max();
    if (a > h) {
        if (l.extension == LutExtension::abs_linear) {
            return l.entries.back() + (a - h);
        }
        return l.entries.back();
    }
    const auto idx = std::min(static_cast<std::size_t>(std::round(a / l.step)), l.entries.size() - 1);
    return l.entries[idx];
}

double dpu_nqs_reduce(const Vector& a, const Lut& l)
{
    if (l.fn != LutFunction::log2cosh) {
        throw DomainError("NQS reduction needs a log2cosh table");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        acc += lut_eval(l, a(i));
    }
    return acc;
}

double dpu_svdd_reduce(const Vector& y, const SvddTarget& t, const Lut& l)
{
    if (l.fn != LutFunction::square) {
        throw DomainError("SVDD reduction needs a square table");
    }
    require_dims(static_cast<std::size_t>(y.size()) == t.z, "network output length != z");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        acc += lut_eval(l, t.n - y(k));
    }
    return acc;
}

namespace {

Matrix spin_codes(std::span<const SpinConfiguration> states, std::size_t n, int max_code)
{
    Matrix codes(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(states.size()));
    for (std::size_t b = 0; b < states.size(); ++b) {
        require_dims(states[b].size() == n, "spin configuration length != N");
        for (std::size_t i = 0; i < n; ++i) {
            codes(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(b)) =
                static_cast<double>(states[b][i] * max_code);
        }
    }
    return codes;
}

Matrix event_matrix(std::span<const EventRecord> events)
{
    Matrix x(static_cast<Eigen::Index>(kEventFeatures), static_cast<Eigen::Index>(events.size()));
    for (std::size_t b = 0; b < events.size(); ++b) {
        for (std::size_t f = 0; f < kEventFeatures; ++f) {
            x(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(b)) = events[b].features[f];
        }
    }
    return x;
}

}  // namespace

AimcNqsModel map_rbm(const RbmParams& p, const QuantConfig& base,
                     std::span<const SpinConfiguration> calibration, const CalibrationOptions& opts)
{
    p.validate();
    base.validate();
    if (calibration.empty()) {
        throw DomainError("calibration set is empty");
    }
    AimcNqsModel m;
    MappedLayer& t = m.tile;
    t.q = base;
    t.q.input_scale = 1.0 / base.max_dac_code();
    t.q.weight_scale = weight_scale_for(p.weights, base);
    t.q.rng_seed = stream_seed(base.rng_seed, 0, kLayerSalt);
    t.xbar = program_weights(p.weights.transpose(), t.q);
    t.bias = p.bias;
    t.act = Activation::none;

    const Matrix levels_t = levels_transposed(t.xbar);
    const Matrix acc = accumulate(levels_t, spin_codes(calibration, p.n_spins, base.max_dac_code()));
    t.q.adc_gain = gain_from_accumulations(acc, base, opts);
    t.out_scale = t.q.input_scale * t.q.weight_scale / t.q.adc_gain;

    const Matrix y = convert_and_scale(acc, t);
    const double h = y.size() == 0 ? 0.0 : y.cwiseAbs().maxCoeff();
    m.lut = lut_build(LutFunction::log2cosh, -(h > 0.0 ? h : 1.0), h > 0.0 ? h : 1.0,
                      base.lut_entries);
    return m;
}

AimcSvddModel map_svdd(const MlpParams& p, const SvddTarget& t, const QuantConfig& base,
                       std::span<const EventRecord> calibration, const CalibrationOptions& opts)
{
    p.validate();
    base.validate();
    require_dims(p.input_dim() == kEventFeatures, "SVDD network must take 57 event features");
    require_dims(p.output_dim() == t.z, "SVDD network output width != z");
    if (calibration.empty()) {
        throw DomainError("calibration set is empty");
    }
    AimcSvddModel m;
    m.target = t;
    Matrix h = event_matrix(calibration);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        const auto& dense = p.layers[l];
        MappedLayer layer;
        layer.q = base;
        const double max_in = h.size() == 0 ? 0.0 : h.cwiseAbs().maxCoeff();
        if (max_in > 0.0) {
            std::vector<double> flat(h.data(), h.data() + h.size());
            try {
                layer.q.input_scale = percentile_scale(flat, opts.input_percentile, base.dac_bits);
            } catch (const DomainError&) {
                // Percentile below the sparse nonzero tail; fall back to the maximum.
                layer.q.input_scale = max_in / base.max_dac_code();
            }
        } else {
            layer.q.input_scale = 1.0 / base.max_dac_code();
        }
        layer.q.weight_scale = weight_scale_for(dense.weight, base);
        layer.q.rng_seed = stream_seed(base.rng_seed, l, kLayerSalt);
        layer.xbar = program_weights(dense.weight.transpose(), layer.q);
        layer.bias = dense.bias;
        layer.act = l + 1 < p.layers.size() ? Activation::relu : Activation::none;

        const Matrix levels_t = levels_transposed(layer.xbar);
        const Matrix acc = accumulate(levels_t, dac_batch(h, layer.q.input_scale, base.dac_bits));
        layer.q.adc_gain = gain_from_accumulations(acc, base, opts);
        layer.out_scale = layer.q.input_scale * layer.q.weight_scale / layer.q.adc_gain;
        h = convert_and_scale(acc, layer);
        m.tiles.push_back(std::move(layer));
    }
    const double d = h.size() == 0 ? 0.0 : (h.array() - t.n).abs().maxCoeff();
    const double dom = d > 0.0 ? d : 1.0;
    m.lut = lut_build(LutFunction::square, -dom, dom, base.lut_entries);
    return m;
}

std::vector<double> aimc_forward_nqs_batch(const ArchConfig& arch, const AimcNqsModel& m,
                                           std::span<const SpinConfiguration> states,
                                           std::uint64_t first_index)
{
    check_fits(arch, m.tile);
    const Matrix levels_t = levels_transposed(m.tile.xbar);
    std::vector<double> out(states.size());
    parallel_for(states.size(), kChunk, [&](std::size_t begin, std::size_t end) {
        const Matrix codes = spin_codes(states.subspan(begin, end - begin), m.tile.xbar.rows_used,
                                        m.tile.q.max_dac_code());
        const Matrix y = run_layer(m.tile, levels_t, codes, first_index + begin);
        for (Eigen::Index b = 0; b < y.cols(); ++b) {
            out[begin + static_cast<std::size_t>(b)] = dpu_nqs_reduce(y.col(b), m.lut);
        }
    });
    return out;
}

double aimc_forward_nqs(const ArchConfig& arch, const AimcNqsModel& m, const SpinConfiguration& s,
                        std::uint64_t sample_index)
{
    return aimc_forward_nqs_batch(arch, m, std::span(&s, 1), sample_index).front();
}

std::vector<double> aimc_forward_svdd_batch(const ArchConfig& arch, const AimcSvddModel& m,
                                            std::span<const EventRecord> events,
                                            std::uint64_t first_index)
{
    if (m.tiles.size() > arch.n_tiles) {
        throw MappingError("network needs more tiles than the architecture has");
    }
    std::vector<Matrix> levels;
    for (const auto& t : m.tiles) {
        check_fits(arch, t);
        levels.push_back(levels_transposed(t.xbar));
    }
    std::vector<double> out(events.size());
    parallel_for(events.size(), kChunk, [&](std::size_t begin, std::size_t end) {
        Matrix h = event_matrix(events.subspan(begin, end - begin));
        for (std::size_t l = 0; l < m.tiles.size(); ++l) {
            const auto& t = m.tiles[l];
            h = run_layer(t, levels[l], dac_batch(h, t.q.input_scale, t.q.dac_bits), first_index + begin);
        }
        for (Eigen::Index b = 0; b < h.cols(); ++b) {
            out[begin + static_cast<std::size_t>(b)] = dpu_svdd_reduce(h.col(b), m.target, m.lut);
        }
    });
    return out;
}

double aimc_forward_svdd(const ArchConfig& arch, const AimcSvddModel& m, const EventRecord& x,
                         std::uint64_t sample_index)
{
    return aimc_forward_svdd_batch(arch, m, std::span(&x, 1), sample_index).front();
}

std::size_t count_adc_saturation(const MappedLayer& layer, const Matrix& inputs)
{
    const Matrix acc = accumulate(levels_transposed(layer.xbar),
                                  dac_batch(inputs, layer.q.input_scale, layer.q.dac_bits));
    const double max_count = layer.q.max_adc_count();
    std::size_t n = 0;
    for (Eigen::Index i = 0; i < acc.size(); ++i) {
        const double a = acc.data()[i];
        if (adc_rail(layer.q.adc_gain, a, max_count) >= max_count ||
            adc_rail(layer.q.adc_gain, -a, max_count) >= max_count) {
            ++n;
        }
    }
    return n;
}

}  // namespace aimc
