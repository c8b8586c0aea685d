#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "malsched/relaxed.hpp"

#include "support/fixtures.hpp"
#include "support/grid_oracle.hpp"

using namespace malsched;

namespace {

std::vector<RelaxClass> single_class(const SpeedupFunction& s, double lambda, double mean_size,
                                     double c) {
    return {{lambda, mean_size, c, &s}};
}

}  // namespace

TEST_CASE("single-class closed forms") {
    auto s = SpeedupFunction::power(0.5);

    SECTION("constraint 2 sqrt(k) = 4 gives k = 4, V = 1") {
        auto sol = solve_relaxed(single_class(s, 1.0, 2.0, 1.0), 4.0);
        CHECK(sol.k[0] == Catch::Approx(4.0).epsilon(1e-8));
        CHECK(sol.value == Catch::Approx(1.0).epsilon(1e-8));
        CHECK_FALSE(sol.constraint_slack);
        auto grid = testsupport::solve_relaxed_grid_oracle(single_class(s, 1.0, 2.0, 1.0), 4.0);
        CHECK(sol.value == Catch::Approx(grid.value).epsilon(1e-6));
        CHECK(sol.k[0] == Catch::Approx(grid.k[0]).epsilon(1e-4));
    }

    SECTION("n = 2 pins k at 1 with the constraint met exactly") {
        auto sol = solve_relaxed(single_class(s, 1.0, 2.0, 1.0), 2.0);
        CHECK(sol.k[0] == Catch::Approx(1.0).epsilon(1e-8));
        CHECK(sol.value == Catch::Approx(2.0).epsilon(1e-8));
    }

    SECTION("two identical classes split the symmetric optimum") {
        std::vector<RelaxClass> cl = {{0.5, 2.0, 1.0, &s}, {0.5, 2.0, 1.0, &s}};
        auto sol = solve_relaxed(cl, 4.0);
        CHECK(sol.k[0] == Catch::Approx(4.0).epsilon(1e-8));
        CHECK(sol.k[1] == Catch::Approx(4.0).epsilon(1e-8));
        CHECK(sol.value == Catch::Approx(1.0).epsilon(1e-8));
        auto grid = testsupport::solve_relaxed_grid_oracle(cl, 4.0);
        CHECK(sol.value == Catch::Approx(grid.value).epsilon(1e-6));
    }
}

TEST_CASE("solver equals the grid oracle on randomized instances") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(seed);
        auto w = testsupport::random_workload(seed);
        auto sol = solve_relaxed(w);
        auto grid = testsupport::solve_relaxed_grid_oracle(w);
        CHECK(sol.value == Catch::Approx(grid.value).epsilon(1e-6));
        for (std::size_t i = 0; i < sol.k.size(); ++i) {
            CAPTURE(i);
            CHECK(std::abs(sol.k[i] - grid.k[i]) <= 1e-4 * std::max(1.0, sol.k[i]));
        }
    }
}

TEST_CASE("KKT conditions hold at the solution") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        CAPTURE(seed);
        auto w = testsupport::random_workload(seed);
        auto cl = relax_inputs(w);
        auto sol = solve_relaxed(cl, w.n_cores);
        bool any_interior = false;
        for (std::size_t i = 0; i < cl.size(); ++i) {
            CAPTURE(i);
            if (sol.k[i] > 1.0 + 1e-9) {
                any_interior = true;
                CHECK(std::abs(cl[i].speedup->whittle_f(sol.k[i]) * cl[i].holding_cost -
                               sol.price) <= 1e-8);
            } else {
                CHECK(cl[i].speedup->whittle_f1() <= sol.price / cl[i].holding_cost + 1e-8);
            }
        }
        double used = 0.0;
        for (double r : sol.effective_load) used += r;
        CHECK(used <= w.n_cores + 1e-9);
        if (any_interior) CHECK(std::abs(used - w.n_cores) <= 1e-8 * w.n_cores);
    }
}

TEST_CASE("demand map is strictly decreasing") {
    auto w = testsupport::three_class_workload();
    auto cl = relax_inputs(w);
    double hi = 0.0;
    for (const auto& c : cl) hi = std::max(hi, c.holding_cost * c.speedup->whittle_f1());
    double prev = std::numeric_limits<double>::infinity();
    for (double ell = hi / 4096.0; ell < hi; ell *= 2.0) {
        double d = relax_demand(cl, ell);
        CHECK(d < prev);
        prev = d;
    }
}

TEST_CASE("lower bound is scale invariant") {
    auto w = testsupport::three_class_workload();
    double v1 = solve_relaxed(w, 1.0).value;
    double v16 = solve_relaxed(w, 16.0).value;
    double v256 = solve_relaxed(w, 256.0).value;
    CHECK(v16 == Catch::Approx(v1).epsilon(1e-10));
    CHECK(v256 == Catch::Approx(v1).epsilon(1e-10));
    CHECK(value_lower_bound(w) == Catch::Approx(v1).epsilon(1e-12));
}

TEST_CASE("reference workload regression value") {
    // frozen from the grid oracle (zoomed exhaustive search, tol 1e-6)
    auto w = testsupport::three_class_workload();
    auto grid = testsupport::solve_relaxed_grid_oracle(w);
    CHECK(grid.value == Catch::Approx(0.157848498386).epsilon(1e-6));
    CHECK(value_lower_bound(w) == Catch::Approx(0.157848498386).epsilon(1e-6));
}

TEST_CASE("c-scaling leaves widths fixed and doubles the value") {
    auto w = testsupport::random_workload(33);
    auto base = solve_relaxed(w);
    auto cl = relax_inputs(w);
    for (auto& c : cl) c.holding_cost *= 2.0;
    auto doubled = solve_relaxed(cl, w.n_cores);
    CHECK(doubled.value == Catch::Approx(2.0 * base.value).epsilon(1e-9));
    for (std::size_t i = 0; i < base.k.size(); ++i)
        CHECK(doubled.k[i] == Catch::Approx(base.k[i]).epsilon(1e-7));
}

TEST_CASE("near-saturation pins widths toward 1") {
    auto s = SpeedupFunction::power(0.5);
    // rho = 0.99: almost no room above the k = 1 footprint
    auto sol = solve_relaxed(single_class(s, 1.0, 1.98, 1.0), 2.0);
    CHECK(sol.k[0] < 1.05);
    auto grid = testsupport::solve_relaxed_grid_oracle(single_class(s, 1.0, 1.98, 1.0), 2.0);
    CHECK(sol.value == Catch::Approx(grid.value).epsilon(1e-6));
}

TEST_CASE("overload rejected") {
    auto s = SpeedupFunction::power(0.5);
    CHECK_THROWS(solve_relaxed(single_class(s, 2.0, 2.0, 1.0), 3.0));
}

TEST_CASE("an extreme multiplier is flagged") {
    // a huge holding cost under near-saturation load puts the multiplier
    // close to c * f(1) = 2e6, beyond the conditioning threshold
    auto s = SpeedupFunction::power(0.5);
    auto sol = solve_relaxed(single_class(s, 1.0, 0.999, 2e6), 1.0);
    CHECK(sol.price_extreme);
    CHECK(sol.k[0] < 1.01);
}

TEST_CASE("bounded parallelism saturates with slack") {
    // flat beyond k = 4: demand can never reach n = 100
    auto s = SpeedupFunction::table({{1, 1}, {2, 1.9}, {4, 3.0}});
    auto sol = solve_relaxed(single_class(s, 1.0, 1.0, 1.0), 100.0);
    CHECK(sol.constraint_slack);
    CHECK(sol.k[0] <= 4.0 + 1e-6);
    double used = 0.0;
    for (double r : sol.effective_load) used += r;
    CHECK(used < 100.0);
}

TEST_CASE("budget shrink monotonicity") {
    // V*(lambda, n - n^beta) >= V*(lambda, n), with the gap closing and the
    // shrunk-budget widths approaching the full-budget widths as the
    // effective capacity grows
    auto w = testsupport::three_class_workload();
    auto full = solve_relaxed(w);
    double prev_gap = std::numeric_limits<double>::infinity();
    std::vector<double> prev_kdiff(w.classes.size(),
                                   std::numeric_limits<double>::infinity());
    for (double d : {4.0, 16.0, 64.0, 256.0, 4096.0, 1e6}) {
        double n = w.n_cores * d;
        double budget = n - std::pow(n, 0.8);
        auto sol = solve_relaxed(relax_inputs(w, d), budget);
        CHECK(sol.value >= full.value - 1e-12);
        double gap = sol.value - full.value;
        CHECK(gap < prev_gap);
        prev_gap = gap;
        for (std::size_t i = 0; i < sol.k.size(); ++i) {
            double kdiff = std::abs(sol.k[i] - full.k[i]);
            CHECK(kdiff < prev_kdiff[i]);
            prev_kdiff[i] = kdiff;
        }
    }
    // by d = 1e6 the widths are within 1% of the unshrunk optimum
    for (std::size_t i = 0; i < full.k.size(); ++i)
        CHECK(prev_kdiff[i] <= 0.01 * full.k[i]);
}
