#include "aimc/ref_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

namespace aimc {

double log2cosh(double x)
{
    const double a = std::fabs(x);
    return a + std::log1p(std::exp(-2.0 * a));
}

void RbmParams::validate() const
{
    if (alpha == 0 || n_spins == 0) {
        throw DomainError("RBM alpha and n_spins must be positive");
    }
    const auto h = static_cast<Eigen::Index>(hidden());
    require_dims(weights.rows() == h && weights.cols() == static_cast<Eigen::Index>(n_spins),
                 "RBM weight matrix must be (alpha*N) x N");
    require_dims(bias.size() == h, "RBM bias length must be alpha*N");
}

RbmParams RbmParams::zeros(std::size_t n_spins, std::size_t alpha)
{
    RbmParams p;
    p.alpha = alpha;
    p.n_spins = n_spins;
    const auto h = static_cast<Eigen::Index>(alpha * n_spins);
    p.weights = Matrix::Zero(h, static_cast<Eigen::Index>(n_spins));
    p.bias = Vector::Zero(h);
    return p;
}

RbmParams RbmParams::random_uniform(std::size_t n_spins, std::size_t alpha, double scale,
                                    std::uint64_t seed)
{
    RbmParams p = zeros(n_spins, alpha);
    std::mt19937_64 rng(stream_seed(seed, 0, 0x52424d));
    std::uniform_real_distribution<double> u(-scale, scale);
    // Row-major fill so the draw order matches the on-disk layout.
    for (Eigen::Index r = 0; r < p.weights.rows(); ++r) {
        for (Eigen::Index c = 0; c < p.weights.cols(); ++c) {
            p.weights(r, c) = u(rng);
        }
    }
    for (Eigen::Index r = 0; r < p.bias.size(); ++r) {
        p.bias(r) = u(rng);
    }
    return p;
}

namespace {

Vector spin_vector(const SpinConfiguration& s)
{
    Vector v(static_cast<Eigen::Index>(s.size()));
    for (std::size_t i = 0; i < s.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = s[i];
    }
    return v;
}

Vector rbm_theta(const RbmParams& p, const SpinConfiguration& s)
{
    p.validate();
    require_dims(s.size() == p.n_spins, "spin configuration length must equal N");
    return p.weights * spin_vector(s) + p.bias;
}

double sum_log2cosh(const Vector& theta)
{
    double acc = 0.0;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        acc += log2cosh(theta(i));
    }
    return acc;
}

void check_marshall(const LatticeSpec& lat, bool marshall)
{
    if (marshall && !lat.bipartite) {
        throw DomainError("Marshall sign rule requires a bipartite lattice");
    }
}

template <class RatioFn>
double local_energy_impl(const SpinConfiguration& s, const LatticeSpec& lat, double J,
                         bool marshall, RatioFn&& log_ratio)
{
    check_marshall(lat, marshall);
    require_dims(s.size() == lat.sites(), "spin configuration length must equal lattice size");
    const double sign = marshall ? -1.0 : 1.0;
    double diag = 0.0;
    double offdiag = 0.0;
    for (const Bond& b : lat.bonds) {
        const int si = s[b.a];
        const int sj = s[b.b];
        diag += 0.25 * si * sj;
        if (si != sj) {
            offdiag += sign * 0.5 * std::exp(log_ratio(b));
        }
    }
    return J * (diag + offdiag);
}

}  // namespace

double rbm_log_psi(const RbmParams& p, const SpinConfiguration& s)
{
    return sum_log2cosh(rbm_theta(p, s));
}

double heisenberg_local_energy(const RbmParams& p, const SpinConfiguration& s,
                               const LatticeSpec& lat, double J, bool marshall)
{
    const Vector theta = rbm_theta(p, s);
    const double base = sum_log2cosh(theta);
    Vector moved(theta.size());
    return local_energy_impl(s, lat, J, marshall, [&](const Bond& b) {
        // Swapping an antiparallel pair flips both spins.
        const auto i = static_cast<Eigen::Index>(b.a);
        const auto j = static_cast<Eigen::Index>(b.b);
        moved = theta - 2.0 * s[b.a] * p.weights.col(i) - 2.0 * s[b.b] * p.weights.col(j);
        return sum_log2cosh(moved) - base;
    });
}

LogPsiTable::LogPsiTable(std::span<const SpinConfiguration> sector,
                         std::span<const double> log_psi)
{
    require_dims(sector.size() == log_psi.size(), "log-psi table needs one value per state");
    std::vector<std::pair<std::uint64_t, double>> entries;
    entries.reserve(sector.size());
    for (std::size_t i = 0; i < sector.size(); ++i) {
        entries.emplace_back(sector[i].key(), log_psi[i]);
    }
    std::sort(entries.begin(), entries.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t i = 1; i < entries.size(); ++i) {
        if (entries[i].first == entries[i - 1].first) {
            throw DomainError("sector contains duplicate configurations");
        }
    }
    keys_.reserve(entries.size());
    values_.reserve(entries.size());
    for (const auto& [k, v] : entries) {
        keys_.push_back(k);
        values_.push_back(v);
    }
}

double LogPsiTable::at(const SpinConfiguration& s) const
{
    const auto k = s.key();
    const auto it = std::lower_bound(keys_.begin(), keys_.end(), k);
    if (it == keys_.end() || *it != k) {
        throw DomainError("configuration outside the tabulated sector");
    }
    return values_[static_cast<std::size_t>(it - keys_.begin())];
}

double heisenberg_local_energy(const LogPsiTable& table, const SpinConfiguration& s,
                               const LatticeSpec& lat, double J, bool marshall)
{
    const double base = table.at(s);
    return local_energy_impl(s, lat, J, marshall, [&](const Bond& b) {
        return table.at(s.swapped(b.a, b.b)) - base;
    });
}

double weighted_energy(std::span<const double> log_psi, std::span<const double> local_energy)
{
    require_dims(log_psi.size() == local_energy.size(), "one local energy per amplitude");
    if (log_psi.empty()) {
        throw DomainError("energy expectation over an empty sector");
    }
    const double shift = *std::max_element(log_psi.begin(), log_psi.end());
    CompensatedSum num;
    CompensatedSum den;
    for (std::size_t i = 0; i < log_psi.size(); ++i) {
        const double w = std::exp(2.0 * (log_psi[i] - shift));
        num.add(w * local_energy[i]);
        den.add(w);
    }
    const double e = num.value() / den.value();
    if (!std::isfinite(e)) {
        throw NumericError("energy expectation overflowed despite max-log shift");
    }
    return e;
}

namespace {

void check_distinct(std::span<const SpinConfiguration> sector)
{
    if (sector.empty()) {
        throw DomainError("energy expectation over an empty sector");
    }
    std::vector<std::uint64_t> keys;
    keys.reserve(sector.size());
    for (const auto& s : sector) {
        keys.push_back(s.key());
    }
    std::sort(keys.begin(), keys.end());
    if (std::adjacent_find(keys.begin(), keys.end()) != keys.end()) {
        throw DomainError("sector contains duplicate configurations");
    }
}

}  // namespace

double energy_expectation_fullsum(const RbmParams& p, std::span<const SpinConfiguration> sector,
                                  const LatticeSpec& lat, double J, bool marshall)
{
    check_distinct(sector);
    check_marshall(lat, marshall);
    std::vector<double> log_psi(sector.size());
    std::vector<double> e_loc(sector.size());
    parallel_for(sector.size(), 512, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            log_psi[i] = rbm_log_psi(p, sector[i]);
            e_loc[i] = heisenberg_local_energy(p, sector[i], lat, J, marshall);
        }
    });
    return weighted_energy(log_psi, e_loc);
}

double energy_expectation_table(std::span<const SpinConfiguration> sector,
                                std::span<const double> log_psi, const LatticeSpec& lat,
                                double J, bool marshall)
{
    check_marshall(lat, marshall);
    const LogPsiTable table(sector, log_psi);
    std::vector<double> e_loc(sector.size());
    parallel_for(sector.size(), 512, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) {
            e_loc[i] = heisenberg_local_energy(table, sector[i], lat, J, marshall);
        }
    });
    return weighted_energy(log_psi, e_loc);
}

std::string_view to_string(Activation a)
{
    switch (a) {
    case Activation::none:
        return "none";
    case Activation::elu:
        return "elu";
    case Activation::relu:
        return "relu";
    }
    return "none";
}

Activation activation_from_string(std::string_view s)
{
    if (s == "elu") {
        return Activation::elu;
    }
    if (s == "relu") {
        return Activation::relu;
    }
    if (s == "none") {
        return Activation::none;
    }
    throw FormatError("unknown activation '" + std::string(s) + "'");
}

double apply_activation(Activation a, double x)
{
    switch (a) {
    case Activation::elu:
        return elu(x);
    case Activation::relu:
        return relu(x);
    case Activation::none:
        break;
    }
    return x;
}

std::size_t MlpParams::input_dim() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpParams::output_dim() const
{
    return layers.empty() ? 0 : static_cast<std::size_t>(layers.back().weight.rows());
}

void MlpParams::validate() const
{
    if (layers.empty()) {
        throw DomainError("MLP needs at least one layer");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const auto& layer = layers[l];
        require_dims(layer.bias.size() == layer.weight.rows(),
                     "layer " + std::to_string(l) + " bias length != output width");
        if (l > 0) {
            require_dims(layer.weight.cols() == layers[l - 1].weight.rows(),
                         "layer " + std::to_string(l) + " input width does not chain");
        }
    }
}

MlpParams MlpParams::zeros(std::span<const std::size_t> dims, Activation act)
{
    if (dims.size() < 2) {
        throw DomainError("MLP dims need at least input and output widths");
    }
    MlpParams p;
    p.hidden_activation = act;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(dims[l]);
        const auto out = static_cast<Eigen::Index>(dims[l + 1]);
        p.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
    }
    return p;
}

MlpParams MlpParams::random_he(std::span<const std::size_t> dims, Activation act,
                               std::uint64_t seed)
{
    MlpParams p = zeros(dims, act);
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        auto& w = p.layers[l].weight;
        std::mt19937_64 rng(stream_seed(seed, l, 0x4d4c50));
        std::normal_distribution<double> g(0.0, std::sqrt(2.0 / static_cast<double>(w.cols())));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = g(rng);
            }
        }
    }
    return p;
}

Vector mlp_forward(const MlpParams& p, const Vector& x)
{
    p.validate();
    require_dims(static_cast<std::size_t>(x.size()) == p.input_dim(),
                 "MLP input length != first layer width");
    Vector h = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        Vector next = p.layers[l].weight * h + p.layers[l].bias;
        if (l + 1 < p.layers.size()) {
            next = next.unaryExpr([&](double v) { return apply_activation(p.hidden_activation, v); });
        }
        h = std::move(next);
    }
    return h;
}

Matrix mlp_forward_batch(const MlpParams& p, const Matrix& x)
{
    p.validate();
    require_dims(static_cast<std::size_t>(x.rows()) == p.input_dim(),
                 "MLP input length != first layer width");
    Matrix h = x;
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
        Matrix next = p.layers[l].weight * h;
        next.colwise() += p.layers[l].bias;
        if (l + 1 < p.layers.size()) {
            next = next.unaryExpr([&](double v) { return apply_activation(p.hidden_activation, v); });
        }
        h = std::move(next);
    }
    return h;
}

double svdd_score(const Vector& y, const SvddTarget& t)
{
    require_dims(static_cast<std::size_t>(y.size()) == t.z, "network output length != z");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < y.size(); ++k) {
        const double d = t.n - y(k);
        acc += d * d;
    }
    return acc;
}

std::vector<SvddTarget> build_ensemble_specs()
{
    std::vector<SvddTarget> out;
    out.reserve(kEnsembleZ.size() * kEnsembleN.size());
    for (auto z : kEnsembleZ) {
        for (auto n : kEnsembleN) {
            out.push_back({z, n});
        }
    }
    return out;
}

bool is_standard_ensemble_z(std::size_t z)
{
    return std::find(kEnsembleZ.begin(), kEnsembleZ.end(), z) != kEnsembleZ.end();
}

std::string_view to_string(EnsembleRule r)
{
    switch (r) {
    case EnsembleRule::mean:
        return "mean";
    case EnsembleRule::sum:
        return "sum";
    case EnsembleRule::max:
        return "max";
    }
    return "mean";
}

EnsembleRule ensemble_rule_from_string(std::string_view s)
{
    if (s == "mean") {
        return EnsembleRule::mean;
    }
    if (s == "sum") {
        return EnsembleRule::sum;
    }
    if (s == "max") {
        return EnsembleRule::max;
    }
    throw FormatError("unknown ensemble rule '" + std::string(s) + "'");
}

double aggregate_scores(std::span<const double> member_scores, EnsembleRule rule)
{
    if (member_scores.empty()) {
        throw DomainError("cannot aggregate an empty ensemble");
    }
    switch (rule) {
    case EnsembleRule::sum:
        return compensated_sum(member_scores);
    case EnsembleRule::max:
        return *std::max_element(member_scores.begin(), member_scores.end());
    case EnsembleRule::mean:
        break;
    }
    return compensated_sum(member_scores) / static_cast<double>(member_scores.size());
}

void EventRecord::validate() const
{
    for (std::size_t obj = 0; obj < kEventObjects; ++obj) {
        const double pt = features[3 * obj];
        const double phi = features[3 * obj + 2];
        if (!std::isfinite(pt) || !std::isfinite(features[3 * obj + 1]) || !std::isfinite(phi)) {
            throw DomainError("event feature is not finite");
        }
        if (pt < 0.0) {
            throw DomainError("negative transverse momentum");
        }
        if (std::fabs(phi) > std::numbers::pi) {
            throw DomainError("azimuth outside [-pi, pi]");
        }
    }
}

Vector EventRecord::as_vector() const
{
    Vector v(static_cast<Eigen::Index>(kEventFeatures));
    for (std::size_t i = 0; i < kEventFeatures; ++i) {
        v(static_cast<Eigen::Index>(i)) = features[i];
    }
    return v;
}

}  // namespace aimc
