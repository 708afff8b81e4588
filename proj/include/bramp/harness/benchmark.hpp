#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "bramp/harness/episode.hpp"

namespace bramp {

/// Worker count: BRAMP_THREADS if set, else the hardware concurrency.
inline unsigned worker_count() {
    unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const char* env = std::getenv("BRAMP_THREADS");
    if (env == nullptr || *env == '\0') return hw;
    const std::string_view s(env);
    unsigned n = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
    if (ec != std::errc() || ptr != s.data() + s.size() || n == 0)
        throw std::invalid_argument("BRAMP_THREADS must be a positive integer, got '" + std::string(s) + "'");
    return n;
}

/// Runs body(i) for i in [0, n) on up to worker_count() threads.
/// The first exception thrown by any task is rethrown after all workers join.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
    const std::size_t workers = std::min<std::size_t>(worker_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&]() {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

inline constexpr std::array<std::string_view, 4> kMetricNames{"total_cost", "tracking_error", "param_error",
                                                              "violations"};

inline double metric_value(const EpisodeMetrics& m, std::size_t i) {
    switch (i) {
        case 0: return m.total_cost;
        case 1: return m.tracking_error;
        case 2: return m.param_error;
        default: return m.violations;
    }
}

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;
    double median = 0.0;
};

/// Mean, sample standard deviation (0 for a single value) and median.
inline MetricStats summarize(std::vector<double> xs) {
    MetricStats s;
    if (xs.empty()) return s;
    const double n = static_cast<double>(xs.size());
    for (double x : xs) s.mean += x;
    s.mean /= n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / (n - 1.0));
    }
    std::sort(xs.begin(), xs.end());
    const std::size_t mid = xs.size() / 2;
    s.median = xs.size() % 2 ? xs[mid] : 0.5 * (xs[mid - 1] + xs[mid]);
    return s;
}

struct KindSummary {
    ControllerKind kind = ControllerKind::nominal;
    /// Completed episodes entering the statistics.
    std::size_t n_runs = 0;
    std::size_t aborted = 0;
    std::array<MetricStats, 4> metrics{};
};

struct BenchmarkTable {
    std::vector<KindSummary> rows;

    [[nodiscard]] const KindSummary& at(ControllerKind k) const {
        for (const auto& r : rows) {
            if (r.kind == k) return r;
        }
        throw std::out_of_range("BenchmarkTable: controller kind not in table");
    }
};

struct Campaign {
    /// records[kind index][run]
    std::vector<std::vector<EpisodeRecord>> records;
    BenchmarkTable table;
};

/// Aggregates completed episodes per kind; aborted ones are only counted.
inline BenchmarkTable tabulate(const std::vector<std::vector<EpisodeRecord>>& records) {
    BenchmarkTable table;
    for (const auto& runs : records) {
        if (runs.empty()) continue;
        KindSummary row;
        row.kind = runs.front().kind;
        std::array<std::vector<double>, 4> values;
        for (const auto& rec : runs) {
            if (rec.aborted) {
                ++row.aborted;
                continue;
            }
            ++row.n_runs;
            for (std::size_t m = 0; m < 4; ++m) values[m].push_back(metric_value(rec.metrics, m));
        }
        for (std::size_t m = 0; m < 4; ++m) row.metrics[m] = summarize(values[m]);
        table.rows.push_back(row);
    }
    return table;
}

/// n_runs paired episodes per kind; run i uses seed base_seed + i for every kind.
inline Campaign run_campaign(const ExperimentConfig& cfg,
                             const std::vector<ControllerKind>& kinds = {std::begin(kAllControllers),
                                                                         std::end(kAllControllers)}) {
    cfg.validate();
    const std::size_t runs = cfg.run.runs;
    Campaign c;
    c.records.assign(kinds.size(), std::vector<EpisodeRecord>(runs));
    parallel_for(kinds.size() * runs, [&](std::size_t job) {
        const std::size_t k = job / runs;
        const std::size_t i = job % runs;
        c.records[k][i] = run_episode(cfg, kinds[k], cfg.run.seed + i, i);
    });
    c.table = tabulate(c.records);
    return c;
}

inline BenchmarkTable run_benchmark(const ExperimentConfig& cfg) { return run_campaign(cfg).table; }

}  // namespace bramp
