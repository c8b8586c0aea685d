#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "malsched/relaxed.hpp"
#include "malsched/simulator.hpp"

namespace malsched {

struct SweepOptions {
    std::vector<double> scales{1.0};
    std::vector<std::string> policies{"wham"};
    std::size_t replicas = 10;
    double completions_target = 1e5;  // expected post-warmup arrivals per cell
    double horizon_override = 0.0;    // > 0: fixed horizon instead of the target
    double warmup_frac = 0.2;
    std::uint64_t base_seed = 1;
    double beta = 0.8;
    std::size_t live_cap = 1'000'000;
    std::size_t threads = 0;  // 0: hardware concurrency
};

struct CellResult {
    std::string policy;
    double scale = 1.0;
    std::size_t replica = 0;
    std::uint64_t seed = 0;
    SimMetrics metrics;
    std::string error;  // non-empty: the cell failed before producing metrics

    bool ok() const { return error.empty(); }
};

inline std::uint64_t cell_seed(std::uint64_t base, std::string_view policy, double scale,
                               std::size_t replica) {
    return derive_seed({base, hash_label(policy), double_bits(scale), replica});
}

inline double derive_horizon(const WorkloadSpec& w, double scale, const SweepOptions& opt) {
    if (opt.horizon_override > 0.0) return opt.horizon_override;
    double rate = w.total_arrival_rate() * scale;
    return opt.completions_target / (rate * (1.0 - opt.warmup_frac));
}

namespace detail {

inline void run_parallel(std::size_t n_tasks, std::size_t threads,
                         const std::function<void(std::size_t)>& task) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n_tasks > 0 ? n_tasks : std::size_t{1});
    if (threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&]() {
            for (;;) {
                std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                task(i);
            }
        });
    for (auto& th : pool) th.join();
}

}  // namespace detail

// Runs every (policy, scale, replica) cell; cells are independent and run
// concurrently, each owning its trace, policy instance and metrics. The
// result order is fixed by the options, not by thread timing.
inline std::vector<CellResult> sweep(const WorkloadSpec& w, const SweepOptions& opt) {
    w.validate();
    std::vector<CellResult> cells;
    for (const auto& policy : opt.policies)
        for (double d : opt.scales)
            for (std::size_t r = 0; r < opt.replicas; ++r) {
                CellResult c;
                c.policy = policy;
                c.scale = d;
                c.replica = r;
                c.seed = cell_seed(opt.base_seed, policy, d, r);
                cells.push_back(std::move(c));
            }

    detail::run_parallel(cells.size(), opt.threads, [&](std::size_t idx) {
        CellResult& c = cells[idx];
        try {
            auto policy = make_policy(c.policy, w, c.scale, opt.beta);
            SimOptions so;
            so.horizon = derive_horizon(w, c.scale, opt);
            so.warmup = opt.warmup_frac * so.horizon;
            so.live_cap = opt.live_cap;
            c.metrics = run(w, c.scale, *policy, so, c.seed);
        } catch (const std::exception& e) {
            c.error = e.what();
        }
    });
    return cells;
}

struct ClassSummary {
    double mean_response = 0.0;
    double response_ci95 = 0.0;
    double mean_queue_len = 0.0;
    double queue_ci95 = 0.0;
};

// Replica-aggregated statistics of one (policy, scale) point.
struct SweepSummary {
    std::string policy;
    double scale = 1.0;
    double n_cores = 0.0;
    std::size_t replicas_ok = 0;
    double mean_cost = 0.0;
    double cost_ci95 = 0.0;
    double lower_bound = 0.0;
    double ratio_to_bound = 0.0;
    double ratio_ci95 = 0.0;
    double mode1_fraction = 0.0;
    double idle_fraction = 0.0;
    std::vector<ClassSummary> per_class;
    std::string flags = "ok";
};

namespace detail {

inline double t_quantile_975(std::size_t df) {
    static constexpr double table[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                       2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                       2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                       2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
    if (df == 0) return 0.0;
    if (df <= 30) return table[df - 1];
    return 1.96;
}

struct MeanCi {
    double mean = 0.0;
    double ci95 = 0.0;
};

inline MeanCi mean_ci(const std::vector<double>& xs) {
    MeanCi out;
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2) return out;
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    out.ci95 = t_quantile_975(xs.size() - 1) * sd / std::sqrt(static_cast<double>(xs.size()));
    return out;
}

}  // namespace detail

inline std::vector<SweepSummary> summarize(const WorkloadSpec& w, const SweepOptions& opt,
                                           const std::vector<CellResult>& cells) {
    double bound = value_lower_bound(w);
    std::vector<SweepSummary> rows;
    for (const auto& policy : opt.policies)
        for (double d : opt.scales) {
            SweepSummary row;
            row.policy = policy;
            row.scale = d;
            row.n_cores = w.n_cores * d;
            row.lower_bound = bound;
            std::vector<double> costs;
            std::vector<std::vector<double>> resp(w.classes.size()), qlen(w.classes.size());
            double mode1 = 0.0, idle = 0.0;
            std::string flags;
            for (const auto& c : cells) {
                if (c.policy != policy || c.scale != d) continue;
                if (!c.ok()) {
                    flags = flags.empty() ? ("error:" + c.error) : flags;
                    continue;
                }
                const auto& met = c.metrics;
                std::string f = met.flags();
                if (f != "ok" && flags.empty()) flags = f;
                costs.push_back(met.normalized_cost());
                mode1 += met.overload_fraction();
                idle += met.idle_fraction();
                for (std::size_t i = 0; i < w.classes.size(); ++i) {
                    resp[i].push_back(met.per_class[i].mean_response());
                    qlen[i].push_back(met.per_class[i].queue_time / met.measured_time());
                }
            }
            row.replicas_ok = costs.size();
            auto cost = detail::mean_ci(costs);
            row.mean_cost = cost.mean;
            row.cost_ci95 = cost.ci95;
            row.ratio_to_bound = cost.mean / bound;
            row.ratio_ci95 = cost.ci95 / bound;
            if (!costs.empty()) {
                mode1 /= static_cast<double>(costs.size());
                idle /= static_cast<double>(costs.size());
            }
            row.mode1_fraction = mode1;
            row.idle_fraction = idle;
            for (std::size_t i = 0; i < w.classes.size(); ++i) {
                auto r = detail::mean_ci(resp[i]);
                auto q = detail::mean_ci(qlen[i]);
                row.per_class.push_back({r.mean, r.ci95, q.mean, q.ci95});
            }
            row.flags = flags.empty() ? "ok" : flags;
            rows.push_back(std::move(row));
        }
    return rows;
}

}  // namespace malsched
