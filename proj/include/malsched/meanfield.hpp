#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "malsched/workload.hpp"

namespace malsched {

// Normalized job counts of the fluid limit: one entry per phase per class
// (exponential sizes are the single-phase case).
struct FluidState {
    std::vector<Eigen::VectorXd> z;

    static FluidState zero(std::span<const JobClass> classes) {
        FluidState s;
        for (const auto& c : classes)
            s.z.push_back(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(c.size.num_phases())));
        return s;
    }

    double class_total(std::size_t i) const { return z[i].sum(); }

    double total() const {
        double t = 0.0;
        for (const auto& v : z) t += v.sum();
        return t;
    }

    double max_abs_diff(const FluidState& o) const {
        double d = 0.0;
        for (std::size_t i = 0; i < z.size(); ++i)
            d = std::max(d, (z[i] - o.z[i]).cwiseAbs().maxCoeff());
        return d;
    }

    bool finite() const {
        for (const auto& v : z)
            if (!v.allFinite()) return false;
        return true;
    }
};

struct FluidPrice {
    double price = 0.0;
    bool idle = false;            // no jobs at all; price is the all-pinned level
    bool saturated = false;       // bounded parallelism left demand below n
    bool overload_capped = false; // total count above n: outside the model, g capped at 1
};

namespace detail {

inline double pinned_price(std::span<const JobClass> classes) {
    double hi = 0.0;
    for (const auto& c : classes) hi = std::max(hi, c.holding_cost * c.speedup.whittle_f1());
    return hi;
}

}  // namespace detail

// The instantaneous price ell(z): unique root of sum_i z_i g_i(ell) = n when
// some work is present and the total count is at most n.
inline FluidPrice fluid_price(const FluidState& state, std::span<const JobClass> classes,
                              double n_cores) {
    FluidPrice out;
    double total = state.total();
    double hi = detail::pinned_price(classes);
    if (total <= 0.0) {
        out.idle = true;
        out.price = hi;
        return out;
    }
    if (total > n_cores) {
        out.overload_capped = true;
        out.price = hi;
        return out;
    }
    auto demand = [&](double ell) {
        double d = 0.0;
        for (std::size_t i = 0; i < classes.size(); ++i) {
            double zi = state.class_total(i);
            if (zi > 0.0) d += zi * classes[i].speedup.g(classes[i].holding_cost, ell);
        }
        return d;
    };
    double lo = hi;
    bool bracketed = false;
    while (lo > 1e-18 * hi) {
        lo *= 0.5;
        if (demand(lo) >= n_cores) {
            bracketed = true;
            break;
        }
        hi = lo;
    }
    if (!bracketed) {
        out.saturated = true;
        out.price = lo;
        return out;
    }
    for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
        double mid = 0.5 * (lo + hi);
        (demand(mid) >= n_cores ? lo : hi) = mid;
    }
    out.price = hi;
    return out;
}

// Drift of the fluid limit:
//   zdot_i = lambda_i p_i + z_i Q_i * s_i(g_i(ell(z)))
// with the exponential case being the one-phase specialization
//   zdot_i = lambda_i - z_i mu_i s_i(g_i(ell(z))).
inline FluidState fluid_rhs(const FluidState& state, std::span<const JobClass> classes,
                            double n_cores, FluidPrice* price_out = nullptr) {
    FluidPrice price = fluid_price(state, classes, n_cores);
    if (price_out) *price_out = price;
    FluidState rhs = FluidState::zero(classes);
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& c = classes[i];
        double gi = price.overload_capped ? 1.0 : c.speedup.g(c.holding_cost, price.price);
        double si = c.speedup.eval(gi);
        rhs.z[i] = c.arrivals.rate() * c.size.initial() +
                   si * (c.size.sub_generator().transpose() * state.z[i]);
    }
    return rhs;
}

struct FluidStationary {
    FluidState z;
    double price = 0.0;
    double cost = 0.0;  // normalized holding cost at the stationary point
    std::vector<double> allocation;  // g_i(price) per class
};

// Unique stationary point of the fluid ODE: the price solves
//   sum_i lambda_i E[X_i] g_i(ell) / s_i(g_i(ell)) = n
// and the per-phase counts follow from z_i Q_i s_i = -lambda_i p_i.
inline FluidStationary fluid_stationary(std::span<const JobClass> classes, double n_cores) {
    double base_work = 0.0;
    for (const auto& c : classes) base_work += c.arrivals.rate() * c.size.mean();
    if (base_work > n_cores)
        throw std::runtime_error("fluid_stationary: overload (sum lambda_i E[X_i] > n)");

    auto demand = [&](double ell) {
        double d = 0.0;
        for (const auto& c : classes) {
            double gi = c.speedup.g(c.holding_cost, ell);
            d += c.arrivals.rate() * c.size.mean() * gi / c.speedup.eval(gi);
        }
        return d;
    };
    double hi = detail::pinned_price(classes);
    double lo = hi;
    bool bracketed = false;
    while (lo > 1e-18 * hi) {
        lo *= 0.5;
        if (demand(lo) >= n_cores) {
            bracketed = true;
            break;
        }
        hi = lo;
    }
    double ell = lo;
    if (bracketed) {
        for (int i = 0; i < 200 && (hi - lo) > 1e-15 * hi; ++i) {
            double mid = 0.5 * (lo + hi);
            (demand(mid) >= n_cores ? lo : hi) = mid;
        }
        ell = hi;
    }

    FluidStationary out;
    out.price = ell;
    out.z = FluidState::zero(classes);
    double lambda = 0.0, cost = 0.0;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        const auto& c = classes[i];
        double gi = c.speedup.g(c.holding_cost, ell);
        double si = c.speedup.eval(gi);
        out.allocation.push_back(gi);
        // z_i = -(lambda_i / s_i) p_i Q_i^{-1}, via a left linear solve
        Eigen::VectorXd y = c.size.solve_left(c.size.initial());
        out.z.z[i] = -(c.arrivals.rate() / si) * y;
        lambda += c.arrivals.rate();
        cost += c.holding_cost * c.arrivals.rate() * c.size.mean() / si;
    }
    out.cost = cost / lambda;
    return out;
}

struct FluidTrajectory {
    std::vector<double> times;
    std::vector<FluidState> states;
    bool clamped = false;  // some component hit the z >= 0 boundary
    double step_used = 0.0;
};

namespace detail {

inline void clamp_nonnegative(FluidState& s, bool& clamped) {
    for (auto& v : s.z)
        for (Eigen::Index j = 0; j < v.size(); ++j)
            if (v(j) < 0.0) {
                v(j) = 0.0;
                clamped = true;
            }
}

inline FluidState rk4_step(const FluidState& y, double h, std::span<const JobClass> classes,
                           double n, bool& clamped) {
    auto axpy = [&](const FluidState& a, double w, const FluidState& b) {
        FluidState r = a;
        for (std::size_t i = 0; i < r.z.size(); ++i) r.z[i] += w * b.z[i];
        return r;
    };
    FluidState k1 = fluid_rhs(y, classes, n);
    FluidState k2 = fluid_rhs(axpy(y, 0.5 * h, k1), classes, n);
    FluidState k3 = fluid_rhs(axpy(y, 0.5 * h, k2), classes, n);
    FluidState k4 = fluid_rhs(axpy(y, h, k3), classes, n);
    FluidState out = y;
    for (std::size_t i = 0; i < out.z.size(); ++i)
        out.z[i] += (h / 6.0) * (k1.z[i] + 2.0 * k2.z[i] + 2.0 * k3.z[i] + k4.z[i]);
    clamp_nonnegative(out, clamped);
    return out;
}

}  // namespace detail

// Classical fixed-step 4th-order integration with step halving until the
// endpoint moves by less than `endpoint_tol`; reproducible byte for byte.
inline FluidTrajectory fluid_integrate(const FluidState& z0, std::span<const JobClass> classes,
                                       double n_cores, double t_end, double initial_step = 0.1,
                                       std::size_t grid_points = 200,
                                       double endpoint_tol = 1e-8) {
    if (!(t_end > 0.0)) throw std::invalid_argument("fluid_integrate: t_end must be > 0");

    auto integrate = [&](double h, FluidTrajectory* record) {
        auto steps = static_cast<std::size_t>(std::ceil(t_end / h));
        h = t_end / static_cast<double>(steps);
        double grid_dt = t_end / static_cast<double>(grid_points);
        double next_sample = 0.0;
        FluidState y = z0;
        bool clamped = false;
        for (std::size_t s = 0; s <= steps; ++s) {
            double t = static_cast<double>(s) * h;
            if (record && t >= next_sample - 1e-12 * t_end) {
                record->times.push_back(t);
                record->states.push_back(y);
                next_sample += grid_dt;
            }
            if (s == steps) break;
            y = detail::rk4_step(y, h, classes, n_cores, clamped);
        }
        if (record) {
            record->clamped = clamped;
            record->step_used = h;
        }
        return y;
    };

    double h = initial_step;
    FluidState end = integrate(h, nullptr);
    for (int halving = 0; halving < 16; ++halving) {
        FluidState end2 = integrate(h / 2.0, nullptr);
        bool comparable = end.finite() && end2.finite();
        double moved = comparable ? end.max_abs_diff(end2) : 1.0;
        end = end2;
        h /= 2.0;
        if (comparable && moved < endpoint_tol) break;
    }
    FluidTrajectory traj;
    integrate(h, &traj);
    return traj;
}

}  // namespace malsched
