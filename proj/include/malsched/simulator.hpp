#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "malsched/policies.hpp"
#include "malsched/trace.hpp"
#include "malsched/workload.hpp"

namespace malsched {

struct SimOptions {
    double horizon = 0.0;
    double warmup = 0.0;
    std::size_t live_cap = 1'000'000;  // abort-and-flag threshold
};

struct ClassMetrics {
    std::uint64_t arrivals = 0;
    std::uint64_t completions = 0;  // completions inside [warmup, horizon]
    double response_sum = 0.0;
    double live_time = 0.0;   // integral of live count over [warmup, horizon]
    double queue_time = 0.0;  // integral of zero-allocation count

    double mean_response() const {
        return completions ? response_sum / static_cast<double>(completions) : 0.0;
    }
};

struct SimMetrics {
    double horizon = 0.0;
    double warmup = 0.0;
    double n_cores = 0.0;        // core count of the simulated system
    double lambda_total = 0.0;   // total arrival rate of the simulated system
    double cost_integral = 0.0;  // integral of the live holding-cost rate
    double idle_core_time = 0.0;
    double overload_time = 0.0;  // time with more jobs than cores
    std::vector<ClassMetrics> per_class;
    bool unstable = false;
    bool saturated_seen = false;
    bool work_ledger_ok = true;
    bool capacity_ok = true;

    double measured_time() const { return horizon - warmup; }

    // (1 / lambda) * time-average total holding-cost rate
    double normalized_cost() const {
        return cost_integral / (measured_time() * lambda_total);
    }

    // Same quantity assembled from completion counts and response times;
    // agrees with normalized_cost() up to boundary effects.
    double normalized_cost_via_responses(const WorkloadSpec& w) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < per_class.size(); ++i)
            acc += w.classes[i].holding_cost * per_class[i].response_sum;
        return acc / (measured_time() * lambda_total);
    }

    std::uint64_t total_completions() const {
        std::uint64_t t = 0;
        for (const auto& c : per_class) t += c.completions;
        return t;
    }

    double mean_live_count() const {
        double t = 0.0;
        for (const auto& c : per_class) t += c.live_time;
        return t / measured_time();
    }

    double idle_fraction() const { return idle_core_time / (measured_time() * n_cores); }
    double overload_fraction() const { return overload_time / measured_time(); }

    std::string flags() const {
        std::string f;
        auto add = [&](const char* tag) {
            if (!f.empty()) f += '+';
            f += tag;
        };
        if (unstable) add("unstable");
        if (saturated_seen) add("saturated");
        if (!work_ledger_ok) add("work_ledger");
        if (!capacity_ok) add("capacity");
        return f.empty() ? "ok" : f;
    }
};

// Called once per constant-allocation interval [from, to) with the current
// live count; used by the coupled comparison to sample trajectories.
using IntervalObserver = std::function<void(double from, double to, std::size_t live)>;

// Exact event-driven simulation of one run. Events are arrivals and
// completions; every implemented policy keeps allocations constant between
// events, so integrating metrics piecewise is exact. Deterministic given the
// trace.
inline SimMetrics run_trace(const WorkloadSpec& w, double scale, const AllocationPolicy& policy,
                            const Trace& trace, const SimOptions& opt,
                            const IntervalObserver& observe = {}) {
    if (!(opt.horizon > opt.warmup && opt.warmup >= 0.0))
        throw std::invalid_argument("simulate: need horizon > warmup >= 0");

    const std::size_t m = w.classes.size();
    const double n_cores = w.n_cores * scale;

    SimMetrics met;
    met.horizon = opt.horizon;
    met.warmup = opt.warmup;
    met.n_cores = n_cores;
    met.lambda_total = w.total_arrival_rate() * scale;
    met.per_class.assign(m, {});

    std::vector<LiveJob> live;
    std::vector<double> initial_size;  // aligned with live
    std::vector<double> served;        // aligned with live; work-conservation ledger
    Allocation alloc;
    std::vector<double> rate;  // aligned with live
    std::vector<double> class_s;
    std::vector<double> class_k;

    double t = 0.0;
    double live_cost_rate = 0.0;
    std::size_t next_arrival = 0;
    const double inf = std::numeric_limits<double>::infinity();

    auto apply_policy = [&]() {
        policy.allocate(std::span<const LiveJob>(live), n_cores, alloc);
        if (alloc.saturated) met.saturated_seen = true;
        if (alloc.total > n_cores + 1e-9) met.capacity_ok = false;
        rate.assign(live.size(), 0.0);
        class_s.assign(m, -1.0);
        class_k.assign(m, -1.0);
        for (std::size_t j = 0; j < live.size(); ++j) {
            double k = alloc.cores[j];
            if (k <= 0.0) continue;
            if (k < 1.0 - 1e-12) met.capacity_ok = false;  // allocation floor breach
            auto ci = static_cast<std::size_t>(live[j].class_index);
            if (class_k[ci] != k) {
                class_k[ci] = k;
                class_s[ci] = w.classes[ci].speedup.eval(k);
            }
            rate[j] = class_s[ci];
        }
    };

    apply_policy();
    while (t < opt.horizon) {
        // next completion among running jobs; ties by job id (scan order)
        double dt_complete = inf;
        std::size_t completer = live.size();
        for (std::size_t j = 0; j < live.size(); ++j) {
            if (rate[j] <= 0.0) continue;
            double dt_j = live[j].remaining / rate[j];
            if (dt_j < dt_complete) {
                dt_complete = dt_j;
                completer = j;
            }
        }
        // durations, not absolute times: the completer's interval must be
        // exactly remaining / rate or the work ledger drifts at large t
        double dt_arrival = next_arrival < trace.arrivals.size()
                                ? std::max(0.0, trace.arrivals[next_arrival].time - t)
                                : inf;
        double dt_horizon = opt.horizon - t;
        double dt = std::min({dt_complete, dt_arrival, dt_horizon});
        if (!(dt >= 0.0) || !std::isfinite(t))
            throw std::runtime_error("simulate: non-finite event time");

        // integrate over [t, t + dt)
        double ov = std::min(t + dt, opt.horizon) - std::max(t, opt.warmup);
        if (ov > 0.0) {
            met.cost_integral += live_cost_rate * ov;
            met.idle_core_time += (n_cores - alloc.total) * ov;
            if (static_cast<double>(live.size()) > n_cores) met.overload_time += ov;
            for (std::size_t j = 0; j < live.size(); ++j) {
                auto ci = static_cast<std::size_t>(live[j].class_index);
                met.per_class[ci].live_time += ov;
                if (alloc.cores[j] <= 0.0) met.per_class[ci].queue_time += ov;
            }
        }
        if (observe) observe(t, t + dt, live.size());

        // advance remaining work
        if (dt > 0.0) {
            for (std::size_t j = 0; j < live.size(); ++j) {
                if (rate[j] <= 0.0) continue;
                served[j] += rate[j] * dt;
                live[j].remaining = std::max(0.0, live[j].remaining - rate[j] * dt);
            }
        }
        if (dt_horizon <= dt_complete && dt_horizon <= dt_arrival) {
            t = opt.horizon;
            break;
        }

        if (dt_complete <= dt_arrival && completer < live.size()) {
            t += dt_complete;
            // completion (processed before any simultaneous arrival)
            auto ci = static_cast<std::size_t>(live[completer].class_index);
            if (t >= opt.warmup) {
                met.per_class[ci].completions += 1;
                met.per_class[ci].response_sum += t - live[completer].arrival_time;
            }
            if (std::abs(served[completer] - initial_size[completer]) >
                1e-6 * std::max(initial_size[completer], 1e-12))
                met.work_ledger_ok = false;
            live_cost_rate -= w.classes[ci].holding_cost;
            live.erase(live.begin() + static_cast<std::ptrdiff_t>(completer));
            initial_size.erase(initial_size.begin() + static_cast<std::ptrdiff_t>(completer));
            served.erase(served.begin() + static_cast<std::ptrdiff_t>(completer));
        } else {
            const auto& a = trace.arrivals[next_arrival++];
            if (!(std::isfinite(a.time) && std::isfinite(a.size)))
                throw std::runtime_error("simulate: non-finite arrival in trace");
            t = std::max(t, a.time);
            auto ci = static_cast<std::size_t>(a.class_index);
            live.push_back({static_cast<std::uint64_t>(next_arrival - 1), a.class_index, a.time,
                            a.size, a.initial_phase});
            initial_size.push_back(a.size);
            served.push_back(0.0);
            met.per_class[ci].arrivals += 1;
            live_cost_rate += w.classes[ci].holding_cost;
            if (live.size() > opt.live_cap) {
                met.unstable = true;
                break;
            }
        }
        apply_policy();
    }
    return met;
}

// Convenience wrapper: sample a fresh trace from `seed` and run it.
inline SimMetrics run(const WorkloadSpec& w, double scale, const AllocationPolicy& policy,
                      const SimOptions& opt, std::uint64_t seed) {
    Trace trace = build_trace(w, scale, seed, opt.horizon);
    return run_trace(w, scale, policy, trace, opt);
}

struct CoupledComparison {
    std::vector<double> grid;  // sample times
    std::vector<double> live_a;
    std::vector<double> live_b;
    double mean_live_a = 0.0;
    double mean_live_b = 0.0;
};

// Runs two policies against the identical arrival/size realization and
// samples both live-count trajectories on a shared uniform grid.
inline CoupledComparison coupled_compare(const WorkloadSpec& w, double scale,
                                         const AllocationPolicy& policy_a,
                                         const AllocationPolicy& policy_b, const SimOptions& opt,
                                         std::uint64_t seed, std::size_t grid_points = 512) {
    Trace trace = build_trace(w, scale, seed, opt.horizon);
    CoupledComparison cmp;
    cmp.grid.reserve(grid_points);
    double step = opt.horizon / static_cast<double>(grid_points);
    for (std::size_t i = 0; i < grid_points; ++i)
        cmp.grid.push_back(static_cast<double>(i) * step);

    auto sample = [&](std::vector<double>& out) {
        out.assign(grid_points, 0.0);
        return [&out, step, grid_points](double from, double to, std::size_t live) {
            auto first = static_cast<std::size_t>(std::ceil(from / step));
            for (std::size_t i = first; i < grid_points; ++i) {
                double ti = static_cast<double>(i) * step;
                if (ti >= to) break;
                out[i] = static_cast<double>(live);
            }
        };
    };
    SimMetrics ma = run_trace(w, scale, policy_a, trace, opt, sample(cmp.live_a));
    SimMetrics mb = run_trace(w, scale, policy_b, trace, opt, sample(cmp.live_b));
    cmp.mean_live_a = ma.mean_live_count();
    cmp.mean_live_b = mb.mean_live_count();
    return cmp;
}

}  // namespace malsched
