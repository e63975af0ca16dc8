#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace aimc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Error categories. Everything derives from std::runtime_error so callers
// that do not care can catch one type.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DimensionError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct MappingError : Error {
    using Error::Error;
};
struct FormatError : Error {
    using Error::Error;
};
struct NumericError : Error {
    using Error::Error;
};

void require_dims(bool ok, const std::string& what);

// SplitMix64 finalizer; used to derive independent per-sample RNG seeds from
// (seed, index) so that results do not depend on evaluation order.
constexpr std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index,
                                    std::uint64_t salt = 0)
{
    return mix64(mix64(seed ^ mix64(salt)) + index);
}

// Neumaier-compensated sum. Accumulates in long double.
class CompensatedSum {
  public:
    void add(double x);
    double value() const;

  private:
    long double sum_ = 0.0L;
    long double comp_ = 0.0L;
};

double compensated_sum(std::span<const double> xs);

// Linear-interpolation percentile (p in [0, 100]) of an unsorted sample.
double percentile(std::vector<double> xs, double p);

double median(std::vector<double> xs);

// Spearman rank correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

// Number of worker threads used by parallel loops. 0 selects the hardware
// concurrency. Results never depend on this value.
void set_worker_count(unsigned n);
unsigned worker_count();

// Runs fn(begin, end) over [0, n) split into fixed-size chunks. The chunk
// layout depends only on n and chunk, never on the worker count.
void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace aimc
