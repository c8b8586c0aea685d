#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "malsched/phase_type.hpp"
#include "malsched/rng.hpp"
#include "malsched/speedup.hpp"

namespace malsched {

// Renewal arrival process with mean inter-arrival time 1/rate. Under scale
// factor d the base sample is divided by d, so the coefficient of variation
// is scale-invariant.
class ArrivalProcess {
  public:
    enum class Family { poisson, deterministic, gamma_renewal };

    static ArrivalProcess poisson(double rate) { return {Family::poisson, rate, 1.0}; }
    static ArrivalProcess deterministic(double rate) { return {Family::deterministic, rate, 1.0}; }
    static ArrivalProcess gamma_renewal(double rate, double shape) {
        if (!(shape > 0.0)) throw std::invalid_argument("gamma arrivals: shape must be > 0");
        return {Family::gamma_renewal, rate, shape};
    }

    Family family() const { return family_; }
    double rate() const { return rate_; }
    double shape() const { return shape_; }

    double sample_interarrival(RngStream& rng, double scale = 1.0) const {
        double base;
        switch (family_) {
            case Family::poisson: base = rng.exponential(rate_); break;
            case Family::deterministic: base = 1.0 / rate_; break;
            case Family::gamma_renewal:
                base = rng.gamma(shape_, 1.0 / (rate_ * shape_));
                break;
            default: base = 0.0;
        }
        return base / scale;
    }

  private:
    ArrivalProcess(Family f, double rate, double shape) : family_(f), rate_(rate), shape_(shape) {
        if (!(rate > 0.0)) throw std::invalid_argument("arrival process: rate must be > 0");
    }

    Family family_;
    double rate_;
    double shape_;
};

struct JobClass {
    std::string name;
    ArrivalProcess arrivals;
    PhaseTypeDist size;
    double holding_cost;  // cost per unit time in system
    SpeedupFunction speedup;

    JobClass(std::string name_, ArrivalProcess a, PhaseTypeDist sz, double c, SpeedupFunction s)
        : name(std::move(name_)),
          arrivals(a),
          size(std::move(sz)),
          holding_cost(c),
          speedup(std::move(s)) {
        if (!(holding_cost > 0.0)) throw std::invalid_argument("job class: holding cost must be > 0");
    }
};

struct WorkloadSpec {
    std::vector<JobClass> classes;
    double n_cores = 1.0;  // base core count (scale d multiplies it)

    double total_arrival_rate() const {
        double t = 0.0;
        for (const auto& c : classes) t += c.arrivals.rate();
        return t;
    }

    // rho = (1/n) sum_i lambda_i E[X_i]; invariant under the scale factor.
    double system_load() const {
        double work = 0.0;
        for (const auto& c : classes) work += c.arrivals.rate() * c.size.mean();
        return work / n_cores;
    }

    void validate() const {
        if (classes.empty()) throw std::invalid_argument("workload: needs at least one class");
        if (!(n_cores > 0.0)) throw std::invalid_argument("workload: n must be > 0");
        if (!(system_load() < 1.0))
            throw std::invalid_argument("workload: system load must satisfy rho < 1");
    }
};

}  // namespace malsched
