#include "aimc/bench.hpp"

#include "aimc/common.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <tuple>

namespace aimc {

BenchClock steady_clock_seconds()
{
    return [] {
        using namespace std::chrono;
        return duration<double>(steady_clock::now().time_since_epoch()).count();
    };
}

void EnergyProbe::start(double t)
{
    started_ = t;
    on_start(t);
}

double EnergyProbe::stop(double t)
{
    if (!started_) {
        throw Error("energy probe stopped without being started");
    }
    const double t0 = *started_;
    started_.reset();
    return std::max(0.0, on_stop(t0, t));
}

SyntheticProbe::SyntheticProbe(double watts) : watts_(watts)
{
    if (!(watts >= 0.0) || !std::isfinite(watts)) {
        throw DomainError("synthetic probe power must be a finite non-negative number");
    }
}

std::string SyntheticProbe::name() const
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, watts_);
    return "synthetic:" + std::string(buf, res.ptr);
}

double SyntheticProbe::on_stop(double t_start, double t_stop)
{
    return watts_ * (t_stop - t_start);
}

PlatformProbe::PlatformProbe(std::string counter_path) : path_(std::move(counter_path))
{
    const auto slash = path_.find_last_of('/');
    max_path_ = (slash == std::string::npos ? std::string{} : path_.substr(0, slash + 1)) +
                "max_energy_range_uj";
}

std::optional<double> PlatformProbe::read_joules() const
{
    std::ifstream in(path_);
    double uj = 0.0;
    if (!(in >> uj)) {
        return std::nullopt;
    }
    return uj * 1e-6;
}

bool PlatformProbe::available() const
{
    return read_joules().has_value();
}

void PlatformProbe::on_start(double)
{
    const auto j = read_joules();
    if (!j) {
        throw Error("platform energy counter is not readable: " + path_);
    }
    start_joules_ = *j;
}

double PlatformProbe::on_stop(double, double)
{
    const auto j = read_joules();
    if (!j) {
        throw Error("platform energy counter is not readable: " + path_);
    }
    double delta = *j - start_joules_;
    if (delta < 0.0) {
        // Counter wrapped.
        std::ifstream in(max_path_);
        double max_uj = 0.0;
        if (in >> max_uj) {
            delta += max_uj * 1e-6;
        }
    }
    return delta;
}

std::unique_ptr<EnergyProbe> make_probe(std::string_view selector)
{
    if (selector == "null") {
        return std::make_unique<NullProbe>();
    }
    if (selector == "platform") {
        return std::make_unique<PlatformProbe>();
    }
    constexpr std::string_view prefix = "synthetic:";
    if (selector.starts_with(prefix)) {
        const auto num = selector.substr(prefix.size());
        double watts = 0.0;
        const auto res = std::from_chars(num.data(), num.data() + num.size(), watts);
        if (res.ec != std::errc{} || res.ptr != num.data() + num.size()) {
            throw FormatError("bad synthetic probe power '" + std::string(num) + "'");
        }
        return std::make_unique<SyntheticProbe>(watts);
    }
    throw FormatError("unknown probe '" + std::string(selector) +
                      "' (expected null, synthetic:<watts> or platform)");
}

std::unique_ptr<EnergyProbe> probe_from_environment()
{
    const char* v = std::getenv("AIMC_BENCH_PROBE");
    return make_probe(v && *v ? std::string_view(v) : std::string_view("null"));
}

namespace {

// Picks (t, dt') with t * dt' == n exactly, dt' within a few ulps of dt. The
// product grid is coarser than ulp(n) for some inputs, so both factors move.
double nudge(double x, int ulps)
{
    for (; ulps > 0; --ulps) {
        x = std::nextafter(x, std::numeric_limits<double>::infinity());
    }
    for (; ulps < 0; ++ulps) {
        x = std::nextafter(x, -std::numeric_limits<double>::infinity());
    }
    return x;
}

std::pair<double, double> exact_rate(double n, double dt)
{
    const double t0 = n / dt;
    for (int k = 0; k < 64; ++k) {
        const double t = nudge(t0, (k % 2) ? -(k + 1) / 2 : k / 2);
        const double d0 = n / t;
        for (int j = 0; j < 9; ++j) {
            const double d = nudge(d0, (j % 2) ? -(j + 1) / 2 : j / 2);
            if (t * d == n) {
                return {t, d};
            }
        }
    }
    throw NumericError("no exactly representable throughput for this window");
}

}  // namespace

double e_sample(double energy, std::size_t n)
{
    if (n == 0) {
        throw DomainError("energy per sample needs at least one sample");
    }
    if (energy < 0.0) {
        throw DomainError("energy must be non-negative");
    }
    return energy / static_cast<double>(n);
}

double throughput(std::size_t n, double dt)
{
    if (!(dt > 0.0)) {
        throw DomainError("elapsed time must be positive");
    }
    return static_cast<double>(n) / dt;
}

double effective_latency(double t)
{
    if (!(t > 0.0)) {
        throw DomainError("throughput must be positive");
    }
    return 1.0 / t;
}

BenchResult run_host_bench(const BatchRunner& runner, std::size_t data_size, std::size_t batch,
                           EnergyProbe& probe, const HostBenchOptions& opts, const BenchClock& clock)
{
    if (data_size == 0) {
        throw DomainError("benchmark data is empty");
    }
    if (batch == 0) {
        throw DomainError("batch size must be at least 1");
    }
    if (!(opts.min_fraction > 0.0 && opts.min_fraction < 1.0)) {
        throw DomainError("minimum compute fraction must lie in (0, 1)");
    }
    auto pass = [&] {
        for (std::size_t off = 0; off < data_size; off += batch) {
            runner(off, std::min(batch, data_size - off));
        }
    };

    if (opts.min_repetitions == 0 || opts.min_repetitions > opts.max_repetitions) {
        throw DomainError("repetition bounds must satisfy 1 <= min <= max");
    }
    std::size_t reps = opts.min_repetitions;
    for (;;) {
        const double setup_start = clock();
        if (opts.setup) {
            opts.setup();
        }
        const double setup_span = clock() - setup_start;
        pass();  // warm-up, untimed
        const double t0 = clock();
        if (probe.available()) {
            probe.start(t0);
        }
        for (std::size_t r = 0; r < reps; ++r) {
            pass();
        }
        const double t1 = clock();
        const std::optional<double> energy =
            probe.available() ? std::optional<double>(probe.stop(t1)) : std::nullopt;
        const double total_end = clock();

        const double dt = t1 - t0;
        const double total = setup_span + (total_end - t0);
        const double fraction = total > 0.0 ? dt / total : 0.0;
        if (dt > 0.0 && fraction >= opts.min_fraction) {
            BenchResult res;
            res.samples = reps * data_size;
            res.batch = batch;
            res.repetitions = reps;
            res.compute_fraction = fraction;
            // Reported dt and E are reconciled to the last ulp so the
            // identities T*dt = N and e*N = E hold exactly.
            const double n = static_cast<double>(res.samples);
            std::tie(res.throughput, res.elapsed) = exact_rate(n, dt);
            res.effective_latency = effective_latency(res.throughput);
            if (energy) {
                res.e_sample = e_sample(*energy, res.samples);
                res.energy = *res.e_sample * n;
            }
            return res;
        }
        if (reps >= opts.max_repetitions) {
            throw Error("could not reach the minimum compute fraction within the repetition limit");
        }
        std::size_t next = reps * 2;
        if (dt > 0.0 && total > dt) {
            // Overhead is roughly fixed; aim directly for the target fraction.
            const double overhead = total - dt;
            const double needed = overhead * opts.min_fraction / (1.0 - opts.min_fraction);
            const double est = std::ceil(1.1 * needed / (dt / static_cast<double>(reps)));
            if (est > static_cast<double>(next)) {
                next = static_cast<std::size_t>(std::min(est, static_cast<double>(opts.max_repetitions)));
            }
        }
        reps = std::min(next, opts.max_repetitions);
    }
}

std::size_t select_best(const std::vector<BenchResult>& results)
{
    if (results.empty()) {
        throw DomainError("no benchmark results to choose from");
    }
    const bool by_energy = std::all_of(results.begin(), results.end(),
                                       [](const auto& r) { return r.e_sample.has_value(); });
    auto better = [&](const BenchResult& a, const BenchResult& b) {
        if (by_energy && *a.e_sample != *b.e_sample) {
            return *a.e_sample < *b.e_sample;
        }
        if (a.throughput != b.throughput) {
            return a.throughput > b.throughput;
        }
        return a.batch < b.batch;
    };
    std::size_t best = 0;
    for (std::size_t i = 1; i < results.size(); ++i) {
        if (better(results[i], results[best])) {
            best = i;
        }
    }
    return best;
}

SweepResult sweep_batch(const BatchRunner& runner, std::size_t data_size,
                        const std::vector<std::size_t>& candidates, EnergyProbe& probe,
                        const HostBenchOptions& opts, const BenchClock& clock)
{
    if (candidates.empty()) {
        throw DomainError("batch sweep needs at least one candidate");
    }
    SweepResult s;
    for (auto b : candidates) {
        s.results.push_back(run_host_bench(runner, data_size, b, probe, opts, clock));
    }
    s.best_batch = s.results[select_best(s.results)].batch;
    return s;
}

std::vector<std::size_t> default_batch_candidates()
{
    std::vector<std::size_t> c;
    for (int k = 6; k <= 20; ++k) {
        c.push_back(std::size_t{1} << k);
    }
    c.push_back(12870);
    c.push_back(1000000);
    std::sort(c.begin(), c.end());
    return c;
}

}  // namespace aimc
