#pragma once

#include <cstdio>
#include <ctime>
#include <ostream>
#include <string>

#include "malsched/sweep.hpp"

namespace malsched {

// Fixed column set; downstream plotting depends on the order never changing.
inline constexpr const char* kCsvHeader =
    "policy,d,n,seed,normalized_cost,cost_ci95,class_id,mean_response,"
    "mean_queue_len,mode1_fraction,idle_fraction,lower_bound,flags";

namespace detail {

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

}  // namespace detail

inline void write_csv_timestamp(std::ostream& os) {
    std::time_t now = std::time(nullptr);
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "# generated " << buf << "\n";
}

// One row per (policy, scale, class). `seed` is the base seed the per-cell
// seeds were derived from.
inline void write_csv(std::ostream& os, const std::vector<SweepSummary>& rows,
                      std::uint64_t base_seed, bool timestamp_header = true) {
    if (timestamp_header) write_csv_timestamp(os);
    os << kCsvHeader << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.per_class.size(); ++i) {
            const auto& pc = row.per_class[i];
            os << row.policy << ',' << detail::fmt_num(row.scale) << ','
               << detail::fmt_num(row.n_cores) << ',' << base_seed << ','
               << detail::fmt_num(row.mean_cost) << ',' << detail::fmt_num(row.cost_ci95) << ','
               << i << ',' << detail::fmt_num(pc.mean_response) << ','
               << detail::fmt_num(pc.mean_queue_len) << ','
               << detail::fmt_num(row.mode1_fraction) << ','
               << detail::fmt_num(row.idle_fraction) << ','
               << detail::fmt_num(row.lower_bound) << ',' << row.flags << "\n";
        }
    }
}

// Human-oriented companion to the CSV: one line per (policy, d) with the
// cost, confidence interval and the ratio to the lower bound.
inline void write_summary(std::ostream& os, const std::vector<SweepSummary>& rows) {
    os << "policy      d        n   reps      cost     ci95   cost/V*    flags\n";
    char line[160];
    for (const auto& row : rows) {
        std::snprintf(line, sizeof(line), "%-8s %5g %8.4g %6zu %9.5f %8.5f %9.5f    %s\n",
                      row.policy.c_str(), row.scale, row.n_cores, row.replicas_ok, row.mean_cost,
                      row.cost_ci95, row.ratio_to_bound, row.flags.c_str());
        os << line;
    }
}

}  // namespace malsched
