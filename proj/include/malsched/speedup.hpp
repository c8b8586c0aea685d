#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace malsched {

// A concave speedup curve s(k): the factor by which a job's processing rate
// grows when it runs on k >= 1 cores instead of one. Every instance satisfies
//   s(1) = 1,  s nondecreasing,  s(k) <= k,  s(k)/k nonincreasing,
// and is not perfectly elastic (s(k) < k somewhere).
//
// On top of evaluation and differentiation this class carries the allocation
// calculus used by the price-clearing policies:
//   whittle_f(k)   = s'(k) / (s(k) - k s'(k)),   strictly decreasing,
//   whittle_f_inv  = its inverse,
//   g(c, ell)      = 1 if ell >= c * f(1), else f_inv(ell / c),
// i.e. the core demand of a job with holding-cost rate c at service price ell.
class SpeedupFunction {
  public:
    enum class Family { power, amdahl, table };

    static SpeedupFunction power(double exponent) {
        if (!(exponent > 0.0 && exponent < 1.0))
            throw std::invalid_argument("power speedup: exponent must lie in (0,1)");
        SpeedupFunction s;
        s.family_ = Family::power;
        s.a_ = exponent;
        return s;
    }

    static SpeedupFunction amdahl(double sequential_fraction) {
        if (!(sequential_fraction > 0.0 && sequential_fraction < 1.0))
            throw std::invalid_argument("amdahl speedup: sigma must lie in (0,1)");
        SpeedupFunction s;
        s.family_ = Family::amdahl;
        s.a_ = sequential_fraction;
        return s;
    }

    // Monotone concave piecewise-linear interpolation of measured (k, s)
    // knots; constant beyond the last knot. Rejects any knot set violating
    // the axioms. Not usable with price-clearing policies (no curvature).
    static SpeedupFunction table(std::vector<std::pair<double, double>> knots) {
        if (knots.empty()) throw std::invalid_argument("table speedup: no knots");
        std::sort(knots.begin(), knots.end());
        if (knots.front().first != 1.0 || knots.front().second != 1.0)
            throw std::invalid_argument("table speedup: first knot must be (1, 1)");
        double prev_slope = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < knots.size(); ++i) {
            auto [k, s] = knots[i];
            if (!(std::isfinite(k) && std::isfinite(s)))
                throw std::invalid_argument("table speedup: non-finite knot");
            if (s > k + 1e-12)
                throw std::invalid_argument("table speedup: sub-linearity s(k) <= k violated");
            if (i > 0) {
                auto [k0, s0] = knots[i - 1];
                if (k <= k0) throw std::invalid_argument("table speedup: duplicate knot abscissa");
                double slope = (s - s0) / (k - k0);
                if (slope < -1e-12)
                    throw std::invalid_argument("table speedup: monotonicity violated");
                slope = std::max(slope, 0.0);
                if (slope > prev_slope + 1e-12)
                    throw std::invalid_argument("table speedup: concavity violated");
                prev_slope = slope;
            }
        }
        SpeedupFunction s;
        s.family_ = Family::table;
        s.knots_ = std::move(knots);
        return s;
    }

    Family family() const { return family_; }

    // Parameter of the power / Amdahl families.
    double param() const { return a_; }

    const std::vector<std::pair<double, double>>& knots() const { return knots_; }

    // Smooth families satisfy s''(k) < 0 for k > 1 and are eligible for the
    // price-clearing (Whittle) calculus; the piecewise-linear table is not.
    bool strictly_concave() const { return family_ != Family::table; }

    double eval(double k) const {
        require_domain(k);
        switch (family_) {
            case Family::power: return std::pow(k, a_);
            case Family::amdahl: return k / (a_ * k + (1.0 - a_));
            case Family::table: return eval_table(k);
        }
        return 0.0;  // unreachable
    }

    // s'(k); at k = 1 the right derivative.
    double deriv(double k) const {
        require_domain(k);
        switch (family_) {
            case Family::power: return a_ * std::pow(k, a_ - 1.0);
            case Family::amdahl: {
                double d = a_ * k + (1.0 - a_);
                return (1.0 - a_) / (d * d);
            }
            case Family::table: return deriv_table(k);
        }
        return 0.0;
    }

    // Largest k with s'(k) >= theta, clamped to [1, inf); the marginal-value
    // inverse used by the work-rate-maximizing baseline. theta must be > 0.
    double deriv_inv(double theta) const {
        if (!(theta > 0.0)) throw std::domain_error("deriv_inv: theta must be > 0");
        switch (family_) {
            case Family::power:
                if (theta >= a_) return 1.0;
                return std::pow(theta / a_, 1.0 / (a_ - 1.0));
            case Family::amdahl: {
                if (theta >= deriv(1.0)) return 1.0;
                return (std::sqrt((1.0 - a_) / theta) - (1.0 - a_)) / a_;
            }
            case Family::table: {
                // slopes step down across knots; demand sits at a knot
                double k = 1.0;
                for (std::size_t i = 1; i < knots_.size(); ++i) {
                    double slope = (knots_[i].second - knots_[i - 1].second) /
                                   (knots_[i].first - knots_[i - 1].first);
                    if (slope >= theta)
                        k = knots_[i].first;
                    else
                        break;
                }
                return k;
            }
        }
        return 1.0;
    }

    // Penalty ratio f(k) = s'(k) / (s(k) - k s'(k)). The denominator is the
    // loss to sub-linearity; it vanishing means the function is perfectly
    // elastic at k and the Whittle calculus does not apply there.
    double whittle_f(double k) const {
        require_domain(k);
        switch (family_) {
            case Family::power: return a_ / ((1.0 - a_) * k);
            case Family::amdahl: return (1.0 - a_) / (a_ * k * k);
            case Family::table: {
                // exact right-segment slope; finite differences are too noisy
                // to detect the zero denominator of a linear-at-k segment
                double s = eval(k), sp = slope_table(k);
                double den = s - k * sp;
                if (den <= kElasticTol)
                    throw std::domain_error("whittle_f: speedup perfectly elastic at k");
                return sp / den;
            }
        }
        return 0.0;
    }

    double whittle_f1() const { return whittle_f(1.0); }

    // Inverse of whittle_f on (0, f(1)]. Closed form for the smooth families,
    // monotone bisection otherwise.
    double whittle_f_inv(double y) const {
        if (!(y > 0.0)) throw std::domain_error("whittle_f_inv: y must be > 0");
        double f1 = whittle_f1();
        if (y > f1 * (1.0 + 1e-12))
            throw std::domain_error("whittle_f_inv: y above f(1); caller must clamp to k = 1");
        switch (family_) {
            case Family::power: return std::max(1.0, a_ / ((1.0 - a_) * y));
            case Family::amdahl: return std::max(1.0, std::sqrt((1.0 - a_) / (a_ * y)));
            case Family::table: break;
        }
        // Bracket [1, hi] with geometric expansion; f is nonincreasing.
        double lo = 1.0, hi = 2.0;
        int guard = 0;
        while (whittle_f(hi) > y) {
            lo = hi;
            hi *= 2.0;
            if (++guard > 96)
                throw std::domain_error("whittle_f_inv: y below inf f (unbounded demand)");
        }
        for (int i = 0; i < 200 && (hi - lo) > 1e-10 * lo; ++i) {
            double mid = 0.5 * (lo + hi);
            (whittle_f(mid) > y ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // Core demand of one job of holding-cost rate c > 0 at service price
    // ell >= 0: one core when the price is at or above c * f(1), otherwise
    // the allocation equalizing f to ell / c.
    double g(double holding_cost, double ell) const {
        if (!(holding_cost > 0.0)) throw std::domain_error("g: holding cost must be > 0");
        if (!(ell >= 0.0)) throw std::domain_error("g: price must be >= 0");
        double y = ell / holding_cost;
        if (y >= whittle_f1()) return 1.0;
        return whittle_f_inv(y);
    }

  private:
    static constexpr double kElasticTol = 1e-12;

    void require_domain(double k) const {
        if (!(k >= 1.0)) throw std::domain_error("speedup: k must be >= 1");
    }

    double eval_table(double k) const {
        if (k >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), k,
                                   [](double v, const auto& kn) { return v < kn.first; });
        auto [k1, s1] = *it;
        auto [k0, s0] = *(it - 1);
        double w = (k - k0) / (k1 - k0);
        return s0 + w * (s1 - s0);
    }

    // slope of the segment to the right of k (0 beyond the last knot)
    double slope_table(double k) const {
        if (k >= knots_.back().first) return 0.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), k,
                                   [](double v, const auto& kn) { return v < kn.first; });
        auto [k1, s1] = *it;
        auto [k0, s0] = *(it - 1);
        return (s1 - s0) / (k1 - k0);
    }

    double deriv_table(double k) const {
        // centered finite difference (right difference at k = 1)
        double h = 1e-6 * std::max(1.0, k);
        if (k - h < 1.0) return (eval_table(k + h) - eval_table(k)) / h;
        return (eval_table(k + h) - eval_table(k - h)) / (2.0 * h);
    }

    Family family_ = Family::power;
    double a_ = 0.5;
    std::vector<std::pair<double, double>> knots_;
};

inline double effective_work(const SpeedupFunction& s, double inherent_work, double cores) {
    return cores * inherent_work / s.eval(cores);
}

}  // namespace malsched
