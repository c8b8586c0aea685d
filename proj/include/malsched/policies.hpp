#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "malsched/relaxed.hpp"
#include "malsched/workload.hpp"

namespace malsched {

// One live job as seen by an allocation policy. Policies receive the live set
// sorted by (arrival_time, id) ascending; "oldest" always means span order.
// Sizes are sampled in full at arrival; initial_phase only records where the
// absorbing chain started and plays no role in scheduling.
struct LiveJob {
    std::uint64_t id;
    int class_index;
    double arrival_time;
    double remaining;  // remaining inherent work, > 0
    int initial_phase = 0;
};

// cores[i] belongs to jobs[i] of the span the policy was called with.
// Every entry is 0 or >= 1, and the sum never exceeds the core count.
struct Allocation {
    std::vector<double> cores;
    double total = 0.0;
    bool overload_mode = false;  // more jobs than cores; 1-core-each regime
    bool saturated = false;      // demand saturated below n; cores left idle

    void reset(std::size_t n) {
        cores.assign(n, 0.0);
        total = 0.0;
        overload_mode = false;
        saturated = false;
    }
};

class AllocationPolicy {
  public:
    virtual ~AllocationPolicy() = default;
    virtual std::string_view name() const = 0;

    void allocate(std::span<const LiveJob> jobs, double n_cores, Allocation& out) const {
        do_allocate(jobs, n_cores, out);
    }

    Allocation allocate(std::span<const LiveJob> jobs, double n_cores) const {
        Allocation a;
        do_allocate(jobs, n_cores, a);
        return a;
    }

  private:
    virtual void do_allocate(std::span<const LiveJob> jobs, double n_cores,
                             Allocation& out) const = 0;
};

namespace detail {

inline std::size_t whole_cores(double n_cores) {
    return static_cast<std::size_t>(std::max(0.0, std::floor(n_cores)));
}

// Oldest-first 1-core-each fallback shared by the non-price policies.
inline void one_core_oldest(std::span<const LiveJob> jobs, double n_cores, Allocation& out) {
    std::size_t limit = std::min(jobs.size(), whole_cores(n_cores));
    for (std::size_t i = 0; i < limit; ++i) out.cores[i] = 1.0;
    out.total = static_cast<double>(limit);
}

// Smallest price at which the aggregate demand of `count[i]` jobs per class
// fits into n_cores. `demand_one(i, price)` gives one job's demand. Keeps the
// invariant demand(returned price) <= n_cores.
template <typename DemandOne>
inline double clear_price(std::span<const std::size_t> count, double n_cores, double price_hi,
                          DemandOne&& demand_one, bool& saturated) {
    auto demand = [&](double ell) {
        double d = 0.0;
        for (std::size_t i = 0; i < count.size(); ++i)
            if (count[i] > 0) d += static_cast<double>(count[i]) * demand_one(i, ell);
        return d;
    };
    double hi = price_hi, lo = price_hi;
    bool bracketed = false;
    while (lo > 1e-18 * price_hi) {
        lo *= 0.5;
        if (demand(lo) >= n_cores) {
            bracketed = true;
            break;
        }
        hi = lo;
    }
    if (!bracketed) {
        saturated = demand(lo) < n_cores * (1.0 - 1e-12);
        return lo;
    }
    for (int i = 0; i < 200 && (hi - lo) > 1e-14 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (demand(mid) >= n_cores ? lo : hi) = mid;
    }
    return hi;
}

}  // namespace detail

// Equal split: every job gets n/|jobs| cores; oldest-first 1-core-each when
// jobs outnumber cores.
class EquiPolicy final : public AllocationPolicy {
  public:
    std::string_view name() const override { return "equi"; }

    void do_allocate(std::span<const LiveJob> jobs, double n_cores,
                     Allocation& out) const override {
        out.reset(jobs.size());
        if (jobs.empty()) return;
        if (static_cast<double>(jobs.size()) > n_cores) {
            out.overload_mode = true;
            detail::one_core_oldest(jobs, n_cores, out);
            return;
        }
        double share = n_cores / static_cast<double>(jobs.size());
        for (auto& c : out.cores) c = share;
        out.total = n_cores;
    }
};

// FCFS with exactly 1 core per job: the GI/GI/n coupling baseline.
class Fcfs1Policy final : public AllocationPolicy {
  public:
    std::string_view name() const override { return "fcfs1"; }

    void do_allocate(std::span<const LiveJob> jobs, double n_cores,
                     Allocation& out) const override {
        out.reset(jobs.size());
        detail::one_core_oldest(jobs, n_cores, out);
        out.overload_mode = static_cast<double>(jobs.size()) > n_cores;
    }
};

// Maximizes the total rate of inherent-work completion: equalizes marginal
// speedups s'_i(k) across jobs at a level theta chosen so the cores are used
// up, with k >= 1 floors. Instances keep scratch buffers; use one instance
// per simulation replica.
class GreedyPolicy final : public AllocationPolicy {
  public:
    explicit GreedyPolicy(std::span<const JobClass> classes) : classes_(classes) {}

    std::string_view name() const override { return "greedy"; }

    void do_allocate(std::span<const LiveJob> jobs, double n_cores,
                     Allocation& out) const override {
        out.reset(jobs.size());
        if (jobs.empty()) return;
        if (static_cast<double>(jobs.size()) > n_cores) {
            out.overload_mode = true;
            detail::one_core_oldest(jobs, n_cores, out);
            return;
        }
        count_.assign(classes_.size(), 0);
        for (const auto& j : jobs) ++count_[static_cast<std::size_t>(j.class_index)];
        double theta_hi = 0.0;
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (count_[i] > 0) theta_hi = std::max(theta_hi, classes_[i].speedup.deriv(1.0));
        per_class_.assign(classes_.size(), 1.0);
        if (theta_hi > 0.0) {
            double theta = detail::clear_price(
                count_, n_cores, theta_hi,
                [&](std::size_t i, double th) { return classes_[i].speedup.deriv_inv(th); },
                out.saturated);
            for (std::size_t i = 0; i < classes_.size(); ++i)
                if (count_[i] > 0) per_class_[i] = classes_[i].speedup.deriv_inv(theta);
        } else {
            out.saturated = true;  // no class benefits from a second core
        }
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            out.cores[j] = per_class_[static_cast<std::size_t>(jobs[j].class_index)];
            out.total += out.cores[j];
        }
    }

  private:
    std::span<const JobClass> classes_;
    mutable std::vector<std::size_t> count_;
    mutable std::vector<double> per_class_;
};

// Two-mode price-clearing policy. With more jobs than cores, the jobs with
// the largest holding-cost-to-remaining-size ratio run on one core each.
// Otherwise a market price ell* is chosen so that giving every class-i job
// g_i(ell*) cores exactly uses up the capacity. Instances keep scratch
// buffers; use one instance per simulation replica.
class WhamPolicy final : public AllocationPolicy {
  public:
    explicit WhamPolicy(std::span<const JobClass> classes) : classes_(classes) {
        for (const auto& c : classes_)
            if (!c.speedup.strictly_concave())
                throw std::invalid_argument(
                    "wham: every class speedup must be strictly concave (no tables)");
    }

    std::string_view name() const override { return "wham"; }

    void do_allocate(std::span<const LiveJob> jobs, double n_cores,
                     Allocation& out) const override {
        out.reset(jobs.size());
        if (jobs.empty()) return;
        if (static_cast<double>(jobs.size()) > n_cores) {
            allocate_overload(jobs, n_cores, out);
            return;
        }
        count_.assign(classes_.size(), 0);
        for (const auto& j : jobs) ++count_[static_cast<std::size_t>(j.class_index)];
        double ell_hi = 0.0;
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (count_[i] > 0)
                ell_hi = std::max(ell_hi,
                                  classes_[i].holding_cost * classes_[i].speedup.whittle_f1());
        double ell = detail::clear_price(
            count_, n_cores, ell_hi,
            [&](std::size_t i, double l) {
                return classes_[i].speedup.g(classes_[i].holding_cost, l);
            },
            out.saturated);
        per_class_.assign(classes_.size(), 0.0);
        for (std::size_t i = 0; i < classes_.size(); ++i)
            if (count_[i] > 0) per_class_[i] = classes_[i].speedup.g(classes_[i].holding_cost, ell);
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            out.cores[j] = per_class_[static_cast<std::size_t>(jobs[j].class_index)];
            out.total += out.cores[j];
        }
    }

  private:
    void allocate_overload(std::span<const LiveJob> jobs, double n_cores, Allocation& out) const {
        out.overload_mode = true;
        std::size_t limit = std::min(jobs.size(), detail::whole_cores(n_cores));
        std::vector<std::uint32_t> order(jobs.size());
        std::iota(order.begin(), order.end(), 0u);
        auto ratio_greater = [&](std::uint32_t a, std::uint32_t b) {
            const auto& ja = jobs[a];
            const auto& jb = jobs[b];
            double ca = classes_[static_cast<std::size_t>(ja.class_index)].holding_cost;
            double cb = classes_[static_cast<std::size_t>(jb.class_index)].holding_cost;
            // c_a / x_a > c_b / x_b without dividing; ties go to the older job
            double lhs = ca * jb.remaining, rhs = cb * ja.remaining;
            if (lhs != rhs) return lhs > rhs;
            if (ja.arrival_time != jb.arrival_time) return ja.arrival_time < jb.arrival_time;
            return ja.id < jb.id;
        };
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit),
                          order.end(), ratio_greater);
        for (std::size_t i = 0; i < limit; ++i) out.cores[order[i]] = 1.0;
        out.total = static_cast<double>(limit);
    }

    std::span<const JobClass> classes_;
    mutable std::vector<std::size_t> count_;
    mutable std::vector<double> per_class_;
};

// Static plan of the fixed-width policy: per-class width k_i from the
// capacity-shrunk program, a dedicated pool of n_i cores per class, and
// floor(n_i / k_i) whole slots. Cores in one pool never serve another class.
struct FwCamPlan {
    double beta = 0.8;
    double budget = 0.0;  // n - n^beta, the shrunk capacity
    std::vector<double> width;
    std::vector<double> pool;
    std::vector<std::size_t> slots;
    RelaxSolution relaxed;
};

inline FwCamPlan make_fwcam_plan(const WorkloadSpec& w, double scale, double beta) {
    if (!(beta > 0.75 && beta < 1.0))
        throw std::invalid_argument("fwcam: beta must lie in (0.75, 1)");
    double n = w.n_cores * scale;
    FwCamPlan plan;
    plan.beta = beta;
    plan.budget = n - std::pow(n, beta);
    if (!(plan.budget > 0.0)) throw std::runtime_error("fwcam: n - n^beta is not positive");
    plan.relaxed = solve_relaxed(relax_inputs(w, scale), plan.budget);
    double sum_r = std::accumulate(plan.relaxed.effective_load.begin(),
                                   plan.relaxed.effective_load.end(), 0.0);
    for (std::size_t i = 0; i < w.classes.size(); ++i) {
        double k = plan.relaxed.k[i];
        double pool = n * plan.relaxed.effective_load[i] / sum_r;
        plan.width.push_back(k);
        plan.pool.push_back(pool);
        plan.slots.push_back(static_cast<std::size_t>(std::floor(pool / k)));
    }
    return plan;
}

// Each class independently runs its oldest jobs, one slot of exactly k_i
// cores per job; everything else queues. Leftover fractional pool capacity
// idles, as do freed slots when a class has no queue.
class FwCamPolicy final : public AllocationPolicy {
  public:
    FwCamPolicy(std::span<const JobClass> classes, FwCamPlan plan)
        : classes_(classes), plan_(std::move(plan)) {
        if (plan_.width.size() != classes_.size())
            throw std::invalid_argument("fwcam: plan does not match class count");
    }

    std::string_view name() const override { return "fwcam"; }
    const FwCamPlan& plan() const { return plan_; }

    void do_allocate(std::span<const LiveJob> jobs, double /*n_cores*/,
                     Allocation& out) const override {
        out.reset(jobs.size());
        running_.assign(classes_.size(), 0);
        for (std::size_t j = 0; j < jobs.size(); ++j) {
            auto i = static_cast<std::size_t>(jobs[j].class_index);
            if (running_[i] < plan_.slots[i]) {
                ++running_[i];
                out.cores[j] = plan_.width[i];
                out.total += plan_.width[i];
            } else if (plan_.slots[i] == 0) {
                // pool too small for even one slot of k_i cores: the class
                // can never be served at this scale
                out.saturated = true;
            }
        }
    }

  private:
    std::span<const JobClass> classes_;
    FwCamPlan plan_;
    mutable std::vector<std::size_t> running_;
};

inline std::unique_ptr<AllocationPolicy> make_policy(std::string_view name,
                                                     const WorkloadSpec& w, double scale,
                                                     double beta = 0.8) {
    if (name == "equi") return std::make_unique<EquiPolicy>();
    if (name == "fcfs1") return std::make_unique<Fcfs1Policy>();
    if (name == "greedy") return std::make_unique<GreedyPolicy>(w.classes);
    if (name == "wham") return std::make_unique<WhamPolicy>(w.classes);
    if (name == "fwcam")
        return std::make_unique<FwCamPolicy>(w.classes, make_fwcam_plan(w, scale, beta));
    throw std::invalid_argument("unknown policy: " + std::string(name));
}

}  // namespace malsched
