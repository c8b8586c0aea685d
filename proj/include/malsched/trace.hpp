#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "malsched/rng.hpp"
#include "malsched/workload.hpp"

namespace malsched {

// One pre-sampled arrival: everything random about a run is fixed here, so
// two policies given the same trace see identical realizations.
struct TraceArrival {
    double time;
    int class_index;
    double size;
    int initial_phase;
};

struct Trace {
    std::vector<TraceArrival> arrivals;  // sorted by (time, class, sequence)
    double horizon = 0.0;
    double scale = 1.0;
};

namespace detail {
inline constexpr std::uint64_t kArrivalStream = 0xA11;
inline constexpr std::uint64_t kSizeStream = 0x51E;
}  // namespace detail

// Renewal processes start fresh at t = 0. Each (class, purpose) pair draws
// from its own seed-derived stream, so the trace does not depend on how many
// classes precede it or on the consuming policy.
inline Trace build_trace(const WorkloadSpec& w, double scale, std::uint64_t seed, double horizon) {
    Trace trace;
    trace.horizon = horizon;
    trace.scale = scale;
    for (std::size_t i = 0; i < w.classes.size(); ++i) {
        const auto& cls = w.classes[i];
        RngStream arr(derive_seed({seed, i, detail::kArrivalStream}));
        RngStream siz(derive_seed({seed, i, detail::kSizeStream}));
        double t = 0.0;
        for (;;) {
            t += cls.arrivals.sample_interarrival(arr, scale);
            if (t >= horizon) break;
            auto s = cls.size.sample(siz);
            trace.arrivals.push_back({t, static_cast<int>(i), s.value, s.initial_phase});
        }
    }
    std::stable_sort(trace.arrivals.begin(), trace.arrivals.end(),
                     [](const TraceArrival& a, const TraceArrival& b) {
                         if (a.time != b.time) return a.time < b.time;
                         return a.class_index < b.class_index;
                     });
    return trace;
}

}  // namespace malsched
