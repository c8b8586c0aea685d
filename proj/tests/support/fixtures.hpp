#pragma once

#include <cstdint>
#include <vector>

#include "malsched/rng.hpp"
#include "malsched/workload.hpp"

namespace testsupport {

// The bundled three-class reference workload (rho = 0.25): power-law 0.3 over
// exponential sizes, power-law 0.5 over hyperexponential sizes with doubled
// holding cost, and an 80%-parallel curve over exponential sizes.
inline malsched::WorkloadSpec three_class_workload() {
    using namespace malsched;
    WorkloadSpec w;
    w.classes.emplace_back("batch", ArrivalProcess::poisson(1.0), PhaseTypeDist::exponential(5.0),
                           1.0, SpeedupFunction::power(0.3));
    w.classes.emplace_back("query", ArrivalProcess::poisson(2.0),
                           PhaseTypeDist::hyperexponential({0.5, 0.5}, {1.0, 9.0}), 2.0,
                           SpeedupFunction::power(0.5));
    w.classes.emplace_back("train", ArrivalProcess::poisson(5.0 / 3.0),
                           PhaseTypeDist::exponential(3.0), 1.0, SpeedupFunction::amdahl(0.2));
    w.n_cores = (1.0 * 0.2 + 2.0 * (0.5 + 0.5 / 9.0) + (5.0 / 3.0) / 3.0) / 0.25;
    return w;
}

// Seeded random workloads with 1..max_classes classes, mixed speedup families
// and size distributions, and a load drawn from [0.15, 0.6].
inline malsched::WorkloadSpec random_workload(std::uint64_t seed, std::size_t max_classes = 3,
                                              bool include_phase_type = false) {
    using namespace malsched;
    RngStream rng(malsched::derive_seed({seed, 0xF1}));
    WorkloadSpec w;
    auto n_classes = 1 + static_cast<std::size_t>(rng.u01() * static_cast<double>(max_classes));
    n_classes = std::min(n_classes, max_classes);
    for (std::size_t i = 0; i < n_classes; ++i) {
        double lambda = 0.5 + 2.5 * rng.u01();
        double c = 0.5 + 2.5 * rng.u01();
        SpeedupFunction s = rng.u01() < 0.5 ? SpeedupFunction::power(0.15 + 0.7 * rng.u01())
                                            : SpeedupFunction::amdahl(0.1 + 0.6 * rng.u01());
        double which = rng.u01();
        if (include_phase_type && which < 0.34) {
            // 3-phase chain with exits from every state
            double a = 1.0 + 4.0 * rng.u01(), b = 1.0 + 4.0 * rng.u01(),
                   cdiag = 1.0 + 4.0 * rng.u01();
            PhaseTypeDist ph({0.5, 0.3, 0.2},
                             {{-(a + 0.4), a * 0.3, a * 0.1},
                              {0.0, -(b + 0.2), b * 0.4},
                              {cdiag * 0.1, 0.0, -(cdiag + 0.3)}});
            w.classes.emplace_back("c" + std::to_string(i), ArrivalProcess::poisson(lambda), ph, c,
                                   s);
        } else if (which < 0.67) {
            w.classes.emplace_back("c" + std::to_string(i), ArrivalProcess::poisson(lambda),
                                   PhaseTypeDist::hyperexponential(
                                       {0.4, 0.6}, {0.5 + rng.u01(), 2.0 + 6.0 * rng.u01()}),
                                   c, s);
        } else {
            w.classes.emplace_back("c" + std::to_string(i), ArrivalProcess::poisson(lambda),
                                   PhaseTypeDist::exponential(0.5 + 4.0 * rng.u01()), c, s);
        }
    }
    double work = 0.0;
    for (const auto& c : w.classes) work += c.arrivals.rate() * c.size.mean();
    double rho = 0.15 + 0.45 * rng.u01();
    w.n_cores = work / rho;
    return w;
}

}  // namespace testsupport
