#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "malsched/phase_type.hpp"
#include "malsched/rng.hpp"

using malsched::PhaseTypeDist;
using malsched::RngStream;

namespace {

struct SampleStats {
    double mean;
    double std_err;
};

SampleStats sample_mean(const PhaseTypeDist& ph, std::size_t n, std::uint64_t seed) {
    RngStream rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = ph.sample(rng).value;
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / static_cast<double>(n);
    double var = sumsq / static_cast<double>(n) - mean * mean;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

}  // namespace

TEST_CASE("phase type closed-form means") {
    CHECK(PhaseTypeDist::exponential(5.0).mean() == Catch::Approx(0.2).epsilon(1e-12));
    // 0.5 * 1 + 0.5 * (1/9)
    CHECK(PhaseTypeDist::hyperexponential({0.5, 0.5}, {1.0, 9.0}).mean() ==
          Catch::Approx(0.5 + 0.5 / 9.0).epsilon(1e-12));
    CHECK(PhaseTypeDist::erlang(2, 2.0).mean() == Catch::Approx(1.0).epsilon(1e-12));

    // generic 3-phase chain: the solver mean must match the absorption sampler
    PhaseTypeDist ph({0.6, 0.4, 0.0}, {{-3.0, 1.0, 0.5}, {0.0, -2.0, 1.5}, {0.2, 0.0, -1.0}});
    auto st = sample_mean(ph, 400000, 42);
    CHECK(std::abs(st.mean - ph.mean()) < 3.0 * st.std_err);
}

TEST_CASE("phase type sampling converges to the mean") {
    const std::size_t n = 1000000;

    auto exp5 = sample_mean(PhaseTypeDist::exponential(5.0), n, 1);
    CHECK(std::abs(exp5.mean - 0.2) < 0.01 * 0.2);

    auto hyper = sample_mean(PhaseTypeDist::hyperexponential({0.5, 0.5}, {1.0, 9.0}), n, 2);
    CHECK(std::abs(hyper.mean - 0.5556) < 0.01 * 0.5556);

    auto erl = sample_mean(PhaseTypeDist::erlang(2, 2.0), n, 3);
    CHECK(std::abs(erl.mean - 1.0) < 0.01);

    // three-standard-error agreement
    CHECK(std::abs(exp5.mean - 0.2) < 3.0 * exp5.std_err);
    CHECK(std::abs(hyper.mean - (0.5 + 0.5 / 9.0)) < 3.0 * hyper.std_err);
    CHECK(std::abs(erl.mean - 1.0) < 3.0 * erl.std_err);
}

TEST_CASE("sampling is deterministic per seed") {
    auto ph = PhaseTypeDist::hyperexponential({0.3, 0.7}, {2.0, 5.0});
    RngStream a(123), b(123), c(124);
    bool identical = true, different = false;
    for (int i = 0; i < 1000; ++i) {
        double xa = ph.sample(a).value;
        double xb = ph.sample(b).value;
        double xc = ph.sample(c).value;
        identical = identical && (xa == xb);
        different = different || (xa != xc);
    }
    CHECK(identical);
    CHECK(different);
}

TEST_CASE("invalid generators rejected") {
    CHECK_THROWS(PhaseTypeDist({0.5, 0.4}, {{-1.0, 0.0}, {0.0, -1.0}}));  // p sums to 0.9
    CHECK_THROWS(PhaseTypeDist({1.0}, {{1.0}}));                          // positive diagonal
    CHECK_THROWS(PhaseTypeDist({0.5, 0.5}, {{-1.0, -0.5}, {0.0, -1.0}})); // negative off-diagonal
    CHECK_THROWS(PhaseTypeDist({0.5, 0.5}, {{-1.0, 2.0}, {0.0, -1.0}}));  // row sum > 0
    CHECK_THROWS(PhaseTypeDist({1.0}, {{-1.0, 0.0}}));                    // not square
    // conservative rows (no exit anywhere): absorption impossible, Q singular
    CHECK_THROWS(PhaseTypeDist({0.5, 0.5}, {{-1.0, 1.0}, {1.0, -1.0}}));
}
