#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "malsched/speedup.hpp"
#include "malsched/workload.hpp"

namespace malsched {

// Inputs to the time-average-capacity program: one entry per class.
struct RelaxClass {
    double arrival_rate;   // lambda_i
    double mean_size;      // E[X_i]
    double holding_cost;   // c_i
    const SpeedupFunction* speedup;
};

// Solution of
//   minimize    sum_i (lambda_i / lambda) c_i E[X_i] / s_i(k_i)
//   subject to  sum_i lambda_i E[X_i] k_i / s_i(k_i) <= n,   k_i >= 1.
// k[i] are the fixed per-class widths, price is the multiplier on the
// capacity constraint, value the optimal normalized holding cost, and
// effective_load[i] = lambda_i E[X_i] k_i / s_i(k_i).
struct RelaxSolution {
    std::vector<double> k;
    double price = 0.0;
    double value = 0.0;
    std::vector<double> effective_load;
    bool constraint_slack = false;   // all k_i = 1 or demand saturated below n
    bool price_extreme = false;      // price above 1e6; poorly conditioned regime
};

inline std::vector<RelaxClass> relax_inputs(const WorkloadSpec& w, double scale = 1.0) {
    std::vector<RelaxClass> cl;
    cl.reserve(w.classes.size());
    for (const auto& c : w.classes)
        cl.push_back({c.arrivals.rate() * scale, c.size.mean(), c.holding_cost, &c.speedup});
    return cl;
}

// Aggregate core demand at price ell: D(ell) = sum_i lambda_i E[X_i] k/s(k)
// with k = g_i(ell). Strictly decreasing below every class's pin price.
inline double relax_demand(const std::vector<RelaxClass>& classes, double ell) {
    double d = 0.0;
    for (const auto& c : classes) {
        double k = c.speedup->g(c.holding_cost, ell);
        d += c.arrival_rate * c.mean_size * k / c.speedup->eval(k);
    }
    return d;
}

inline RelaxSolution solve_relaxed(const std::vector<RelaxClass>& classes, double n_cores) {
    if (classes.empty()) throw std::invalid_argument("solve_relaxed: no classes");
    double base_work = 0.0;
    double ell_hi = 0.0;
    for (const auto& c : classes) {
        if (!(c.arrival_rate > 0.0 && c.mean_size > 0.0 && c.holding_cost > 0.0))
            throw std::invalid_argument("solve_relaxed: class parameters must be > 0");
        base_work += c.arrival_rate * c.mean_size;
        ell_hi = std::max(ell_hi, c.holding_cost * c.speedup->whittle_f1());
    }
    // base_work == n is the degenerate boundary where only k_i = 1 fits
    if (base_work > n_cores)
        throw std::runtime_error("solve_relaxed: overload (sum lambda_i E[X_i] > n)");

    RelaxSolution sol;
    const double tol = 1e-9 * n_cores;

    // At ell_hi every class is pinned at k = 1 and demand equals the base
    // work, which is < n. Walk the price down until demand reaches n.
    double hi = ell_hi;
    double lo = ell_hi;
    bool bracketed = false;
    while (lo > 1e-12) {
        lo *= 0.5;
        if (relax_demand(classes, lo) >= n_cores) {
            bracketed = true;
            break;
        }
        hi = lo;
    }

    double ell;
    if (!bracketed) {
        // demand never reaches n: bounded parallelism saturates with slack
        ell = lo;
        sol.constraint_slack = true;
    } else {
        // keep demand(hi) <= n at all times so the result is always feasible
        for (int i = 0; i < 400 && (hi - lo) > 1e-16 * ell_hi; ++i) {
            double mid = 0.5 * (lo + hi);
            (relax_demand(classes, mid) > n_cores ? lo : hi) = mid;
        }
        ell = hi;
        if (relax_demand(classes, ell) < n_cores - tol) sol.constraint_slack = true;
    }

    sol.price = ell;
    sol.price_extreme = ell > 1e6;

    double lambda = 0.0, cost = 0.0;
    for (const auto& c : classes) {
        double k = c.speedup->g(c.holding_cost, ell);
        double s = c.speedup->eval(k);
        sol.k.push_back(k);
        sol.effective_load.push_back(c.arrival_rate * c.mean_size * k / s);
        lambda += c.arrival_rate;
        cost += c.holding_cost * c.arrival_rate * c.mean_size / s;
    }
    sol.value = cost / lambda;
    return sol;
}

inline RelaxSolution solve_relaxed(const WorkloadSpec& w, double scale = 1.0) {
    return solve_relaxed(relax_inputs(w, scale), w.n_cores * scale);
}

// The mean-field lower bound V*(lambda_i, n); invariant under the scale d.
inline double value_lower_bound(const WorkloadSpec& w) { return solve_relaxed(w).value; }

}  // namespace malsched
