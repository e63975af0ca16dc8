#pragma once

// Host-side measurement harness: energy per sample, throughput and effective
// latency of a batch evaluator, with a pluggable energy probe.

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aimc {

// Monotonic clock in seconds. Injectable for tests.
using BenchClock = std::function<double()>;
BenchClock steady_clock_seconds();

// The harness reads the clock once at each window edge and passes the same
// timestamps to the probe, so E and dt describe the same window.
class EnergyProbe {
  public:
    virtual ~EnergyProbe() = default;
    virtual bool available() const = 0;
    virtual std::string name() const = 0;
    void start(double t);
    // Joules consumed since start(). Throws if start() was not called.
    double stop(double t);

  protected:
    virtual void on_start(double t) = 0;
    virtual double on_stop(double t_start, double t_stop) = 0;

  private:
    std::optional<double> started_;
};

class NullProbe final : public EnergyProbe {
  public:
    bool available() const override { return false; }
    std::string name() const override { return "null"; }

  protected:
    void on_start(double) override {}
    double on_stop(double, double) override { return 0.0; }
};

// Constant-power model: energy = watts * elapsed.
class SyntheticProbe final : public EnergyProbe {
  public:
    explicit SyntheticProbe(double watts);
    bool available() const override { return true; }
    std::string name() const override;
    double watts() const { return watts_; }

  protected:
    void on_start(double) override {}
    double on_stop(double t_start, double t_stop) override;

  private:
    double watts_;
};

// Package energy counters from the Linux powercap interface, when readable.
class PlatformProbe final : public EnergyProbe {
  public:
    explicit PlatformProbe(std::string counter_path = "/sys/class/powercap/intel-rapl:0/energy_uj");
    bool available() const override;
    std::string name() const override { return "platform"; }

  protected:
    void on_start(double) override;
    double on_stop(double, double) override;

  private:
    std::optional<double> read_joules() const;
    std::string path_;
    std::string max_path_;
    double start_joules_ = 0.0;
};

// "null", "synthetic:<watts>" or "platform".
std::unique_ptr<EnergyProbe> make_probe(std::string_view selector);
// Reads AIMC_BENCH_PROBE; falls back to "null" when unset.
std::unique_ptr<EnergyProbe> probe_from_environment();

double e_sample(double energy, std::size_t n);
double throughput(std::size_t n, double dt);
double effective_latency(double throughput);

struct BenchResult {
    std::size_t samples = 0;      // N
    double elapsed = 0.0;         // dt, s
    std::optional<double> energy;    // J
    std::optional<double> e_sample;  // J per sample
    double throughput = 0.0;      // 1/s
    double effective_latency = 0.0;
    std::size_t batch = 0;
    std::size_t repetitions = 0;
    double compute_fraction = 0.0;
};

// Evaluates data[offset, offset + count).
using BatchRunner = std::function<void(std::size_t offset, std::size_t count)>;

struct HostBenchOptions {
    double min_fraction = 0.99;
    std::function<void()> setup;  // counted in the total span, not in dt
    std::size_t min_repetitions = 1;  // starting point of the scaling loop
    std::size_t max_repetitions = std::size_t{1} << 30;
};

BenchResult run_host_bench(const BatchRunner& runner, std::size_t data_size, std::size_t batch,
                           EnergyProbe& probe, const HostBenchOptions& opts = {},
                           const BenchClock& clock = steady_clock_seconds());

struct SweepResult {
    std::size_t best_batch = 0;
    std::vector<BenchResult> results;
};

SweepResult sweep_batch(const BatchRunner& runner, std::size_t data_size,
                        const std::vector<std::size_t>& candidates, EnergyProbe& probe,
                        const HostBenchOptions& opts = {},
                        const BenchClock& clock = steady_clock_seconds());

// Index of the preferred result: argmin e_sample when energies are present,
// otherwise argmax throughput; ties go to larger throughput, then smaller batch.
std::size_t select_best(const std::vector<BenchResult>& results);

// Powers of two 2^6 .. 2^20 plus 12870 and 10^6, ascending.
std::vector<std::size_t> default_batch_candidates();

}  // namespace aimc
