#pragma once

// Brute-force verification oracle for the fixed-width convex program. It
// never touches the Whittle calculus (whittle_f / g / deriv): only plain
// speedup evaluation, monotone bisection on the per-class effective load
// r_i(k) = lambda_i E[X_i] k / s_i(k), and zoomed grid search over the
// constraint surface. Test-only; quadratic-to-cubic cost in the grid size.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "malsched/relaxed.hpp"

namespace testsupport {

struct GridSolution {
    std::vector<double> k;
    double value = std::numeric_limits<double>::infinity();
};

namespace griddetail {

inline double effective_load(const malsched::RelaxClass& c, double k) {
    return c.arrival_rate * c.mean_size * k / c.speedup->eval(k);
}

// largest k with r(k) <= budget
inline double load_inverse(const malsched::RelaxClass& c, double budget) {
    if (budget < effective_load(c, 1.0)) return 0.0;  // infeasible marker
    double lo = 1.0, hi = 2.0;
    int guard = 0;
    while (effective_load(c, hi) < budget) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 200) return hi;
    }
    for (int i = 0; i < 200 && (hi - lo) > 1e-13 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (effective_load(c, mid) <= budget ? lo : hi) = mid;
    }
    return lo;
}

inline double objective(const std::vector<malsched::RelaxClass>& cl, const std::vector<double>& k) {
    double lambda = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < cl.size(); ++i) {
        lambda += cl[i].arrival_rate;
        cost += cl[i].holding_cost * cl[i].arrival_rate * cl[i].mean_size /
                cl[i].speedup->eval(k[i]);
    }
    return cost / lambda;
}

}  // namespace griddetail

// Exhaustive zoomed search restricted to the tight-constraint surface: the
// free widths are enumerated on grids, the last width absorbs the leftover
// budget. Supports up to 3 classes.
inline GridSolution solve_relaxed_grid_oracle(const std::vector<malsched::RelaxClass>& classes,
                                              double n_cores, int grid_points = 61,
                                              int zoom_passes = 6) {
    using namespace griddetail;
    const std::size_t m = classes.size();
    if (m == 0 || m > 3) throw std::invalid_argument("grid oracle: supports 1..3 classes");

    double base_work = 0.0;
    for (const auto& c : classes) base_work += effective_load(c, 1.0);
    if (base_work > n_cores) throw std::runtime_error("grid oracle: overload");

    GridSolution best;

    if (m == 1) {
        best.k = {std::max(1.0, load_inverse(classes[0], n_cores))};
        best.value = objective(classes, best.k);
        return best;
    }

    // feasible upper range of each free width, with every other class at 1
    auto upper = [&](std::size_t i) {
        double others = 0.0;
        for (std::size_t j = 0; j < m; ++j)
            if (j != i) others += effective_load(classes[j], 1.0);
        return std::max(1.0, load_inverse(classes[i], n_cores - others));
    };

    std::vector<double> lo(m - 1, 1.0), hi(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) hi[i] = upper(i);

    auto evaluate = [&](std::vector<double>& k) {
        double used = 0.0;
        for (std::size_t i = 0; i + 1 < m; ++i) used += effective_load(classes[i], k[i]);
        double leftover = n_cores - used;
        double klast = load_inverse(classes[m - 1], leftover);
        if (klast < 1.0) return;  // this grid point is infeasible
        k[m - 1] = klast;
        double v = objective(classes, k);
        if (v < best.value) {
            best.value = v;
            best.k = k;
        }
    };

    const int g = grid_points;
    std::vector<double> k(m, 1.0);
    for (int pass = 0; pass < zoom_passes; ++pass) {
        std::vector<double> best_free(m - 1, 1.0);
        if (m == 2) {
            for (int a = 0; a < g; ++a) {
                k[0] = lo[0] + (hi[0] - lo[0]) * a / (g - 1);
                evaluate(k);
            }
        } else {
            for (int a = 0; a < g; ++a)
                for (int b = 0; b < g; ++b) {
                    k[0] = lo[0] + (hi[0] - lo[0]) * a / (g - 1);
                    k[1] = lo[1] + (hi[1] - lo[1]) * b / (g - 1);
                    evaluate(k);
                }
        }
        for (std::size_t i = 0; i + 1 < m; ++i) best_free[i] = best.k[i];
        // zoom: window of +-2 grid steps around the incumbent
        for (std::size_t i = 0; i + 1 < m; ++i) {
            double step = (hi[i] - lo[i]) / (g - 1);
            lo[i] = std::max(1.0, best_free[i] - 2.0 * step);
            hi[i] = std::min(upper(i), best_free[i] + 2.0 * step);
            if (hi[i] <= lo[i]) hi[i] = lo[i] + 1e-12;
        }
    }
    return best;
}

inline GridSolution solve_relaxed_grid_oracle(const malsched::WorkloadSpec& w,
                                              double n_override = 0.0) {
    return solve_relaxed_grid_oracle(malsched::relax_inputs(w),
                                     n_override > 0.0 ? n_override : w.n_cores);
}

}  // namespace testsupport
