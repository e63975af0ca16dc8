#pragma once

// Full-precision reference models: the RBM log-amplitude with its Heisenberg
// local energy, and the Deep-SVDD scoring network.

#include "aimc/common.hpp"
#include "aimc/lattice.hpp"

#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace aimc {

// ln(2 cosh x), evaluated as |x| + ln(1 + e^{-2|x|}).
double log2cosh(double x);

struct RbmParams {
    Matrix weights;  // (alpha * n_spins) x n_spins
    Vector bias;     // alpha * n_spins
    std::size_t alpha = 1;
    std::size_t n_spins = 0;

    std::size_t hidden() const { return alpha * n_spins; }
    void validate() const;

    static RbmParams zeros(std::size_t n_spins, std::size_t alpha);
    // Entries i.i.d. uniform in [-scale, scale].
    static RbmParams random_uniform(std::size_t n_spins, std::size_t alpha, double scale,
                                    std::uint64_t seed);
};

double rbm_log_psi(const RbmParams& p, const SpinConfiguration& s);

// J * sum over bonds of [s_i s_j / 4 + [s_i != s_j] * sign * 1/2 * psi(s^ij) / psi(s)],
// sign = -1 in the Marshall-rotated basis.
double heisenberg_local_energy(const RbmParams& p, const SpinConfiguration& s,
                               const LatticeSpec& lat, double J, bool marshall);

// Same expansion with amplitudes taken from a table over a closed sector
// (every bond swap of a sector state must itself be in the sector).
class LogPsiTable {
  public:
    LogPsiTable(std::span<const SpinConfiguration> sector, std::span<const double> log_psi);
    double at(const SpinConfiguration& s) const;

  private:
    std::vector<std::uint64_t> keys_;  // sorted
    std::vector<double> values_;
};

double heisenberg_local_energy(const LogPsiTable& table, const SpinConfiguration& s,
                               const LatticeSpec& lat, double J, bool marshall);

// sum_s w(s) e(s) / sum_s w(s), w = exp(2 (log_psi - max log_psi)).
double weighted_energy(std::span<const double> log_psi, std::span<const double> local_energy);

double energy_expectation_fullsum(const RbmParams& p, std::span<const SpinConfiguration> sector,
                                  const LatticeSpec& lat, double J, bool marshall);

double energy_expectation_table(std::span<const SpinConfiguration> sector,
                                std::span<const double> log_psi, const LatticeSpec& lat,
                                double J, bool marshall);

enum class Activation { none, elu, relu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view s);

inline double elu(double x) { return x > 0.0 ? x : std::expm1(x); }
inline double relu(double x) { return x > 0.0 ? x : 0.0; }
double apply_activation(Activation a, double x);

struct DenseLayer {
    Matrix weight;  // out x in
    Vector bias;    // out
};

struct MlpParams {
    std::vector<DenseLayer> layers;
    Activation hidden_activation = Activation::elu;

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    void validate() const;

    static MlpParams zeros(std::span<const std::size_t> dims, Activation act);
    // He-normal weights (std = sqrt(2 / fan_in)), zero biases.
    static MlpParams random_he(std::span<const std::size_t> dims, Activation act,
                               std::uint64_t seed);
};

Vector mlp_forward(const MlpParams& p, const Vector& x);

// Columns of x are samples.
Matrix mlp_forward_batch(const MlpParams& p, const Matrix& x);

struct SvddTarget {
    std::size_t z = 0;
    double n = 0.0;

    Vector center() const { return Vector::Constant(static_cast<Eigen::Index>(z), n); }
    friend bool operator==(const SvddTarget&, const SvddTarget&) = default;
};

// Squared Euclidean distance between y and the constant target.
double svdd_score(const Vector& y, const SvddTarget& t);

inline constexpr std::array<std::size_t, 9> kEnsembleZ{5, 8, 13, 21, 34, 55, 89, 144, 233};
inline constexpr std::array<double, 7> kEnsembleN{0, 1, 2, 3, 4, 10, 25};

// All (z, n) pairs, z-outer.
std::vector<SvddTarget> build_ensemble_specs();

bool is_standard_ensemble_z(std::size_t z);

enum class EnsembleRule { mean, sum, max };

std::string_view to_string(EnsembleRule r);
EnsembleRule ensemble_rule_from_string(std::string_view s);

double aggregate_scores(std::span<const double> member_scores, EnsembleRule rule);

// Missing energy, 4 electrons, 4 muons, 10 jets; (pT, eta, phi) each.
inline constexpr std::size_t kEventObjects = 19;
inline constexpr std::size_t kEventFeatures = 3 * kEventObjects;

struct EventRecord {
    std::array<double, kEventFeatures> features{};
    std::optional<bool> is_anomaly;

    void validate() const;
    Vector as_vector() const;
};

}  // namespace aimc
