#include "aimc/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace aimc {

void require_dims(bool ok, const std::string& what)
{
    if (!ok) {
        throw DimensionError("dimension mismatch: " + what);
    }
}

void CompensatedSum::add(double x)
{
    const long double v = x;
    const long double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
        comp_ += (sum_ - t) + v;
    } else {
        comp_ += (v - t) + sum_;
    }
    sum_ = t;
}

double CompensatedSum::value() const
{
    return static_cast<double>(sum_ + comp_);
}

double compensated_sum(std::span<const double> xs)
{
    CompensatedSum acc;
    for (double x : xs) {
        acc.add(x);
    }
    return acc.value();
}

double percentile(std::vector<double> xs, double p)
{
    if (xs.empty()) {
        throw DomainError("percentile of empty sample");
    }
    if (!(p >= 0.0 && p <= 100.0)) {
        throw DomainError("percentile outside [0, 100]");
    }
    std::sort(xs.begin(), xs.end());
    const double pos = p / 100.0 * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, xs.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) {
        return xs[lo];
    }
    return xs[lo] + frac * (xs[hi] - xs[lo]);
}

double median(std::vector<double> xs)
{
    return percentile(std::move(xs), 50.0);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman(std::span<const double> a, std::span<const double> b)
{
    require_dims(a.size() == b.size(), "spearman inputs differ in length");
    if (a.size() < 2) {
        throw DomainError("spearman needs at least two points");
    }
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n + 1.0) / 2.0;
    CompensatedSum sab, saa, sbb;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        const double da = ra[i] - mean;
        const double db = rb[i] - mean;
        sab.add(da * db);
        saa.add(da * da);
        sbb.add(db * db);
    }
    const double denom = std::sqrt(saa.value() * sbb.value());
    if (denom == 0.0) {
        // Both constant: identical rankings.
        return saa.value() == sbb.value() ? 1.0 : 0.0;
    }
    return sab.value() / denom;
}

namespace {
std::atomic<unsigned> g_workers{0};
}

void set_worker_count(unsigned n)
{
    g_workers.store(n);
}

unsigned worker_count()
{
    const unsigned n = g_workers.load();
    if (n != 0) {
        return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t chunk,
                  const std::function<void(std::size_t, std::size_t)>& fn)
{
    if (n == 0) {
        return;
    }
    chunk = std::max<std::size_t>(chunk, 1);
    const std::size_t n_chunks = (n + chunk - 1) / chunk;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::size_t>(worker_count(), n_chunks));
    if (workers <= 1) {
        for (std::size_t c = 0; c < n_chunks; ++c) {
            fn(c * chunk, std::min(n, (c + 1) * chunk));
        }
        return;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= n_chunks) {
                return;
            }
            try {
                fn(c * chunk, std::min(n, (c + 1) * chunk));
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(n_chunks);
            }
        }
    };
    std::vector<std::jthread> pool;
    pool.reserve(workers - 1);
    for (unsigned w = 1; w < workers; ++w) {
        pool.emplace_back(work);
    }
    work();
    pool.clear();
    if (failure) {
        std::rethrow_exception(failure);
    }
}

}  // namespace aimc
