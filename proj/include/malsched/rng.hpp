#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <initializer_list>
#include <random>
#include <string_view>

namespace malsched {

// Seed derivation for independent, reproducible RNG streams. Streams are
// identified by a list of 64-bit words (base seed, policy hash, scale bits,
// replica, class index, ...); mixing them through splitmix64 keeps the
// derived seeds stable across platforms and insensitive to word order
// collisions of the naive xor kind.
namespace detail {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

inline std::uint64_t derive_seed(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x8c62d0a4f3a9e1b7ULL;
    for (std::uint64_t w : words) h = detail::splitmix64(h ^ w);
    return h;
}

inline std::uint64_t hash_label(std::string_view label) {
    // FNV-1a, then one splitmix round to spread low-entropy labels.
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : label) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return detail::splitmix64(h);
}

inline std::uint64_t double_bits(double x) {
    std::uint64_t b;
    static_assert(sizeof(b) == sizeof(x));
    std::memcpy(&b, &x, sizeof(b));
    return b;
}

// One random stream owned by exactly one consumer (no sharing across threads).
class RngStream {
  public:
    explicit RngStream(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform in [0, 1) with 53 random bits.
    double u01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log1p(-u01()) / rate; }

    double gamma(double shape, double scale) {
        std::gamma_distribution<double> dist(shape, scale);
        return dist(gen_);
    }

    // Index in [0, n) drawn according to the given weights (sum > 0).
    template <typename Weights>
    std::size_t categorical(const Weights& w, double total) {
        double u = u01() * total;
        std::size_t last = 0;
        for (std::size_t i = 0; i < w.size(); ++i) {
            last = i;
            u -= w[i];
            if (u < 0.0) return i;
        }
        return last;  // guard against fp rounding at the top end
    }

    std::mt19937_64& engine() { return gen_; }

  private:
    std::mt19937_64 gen_;
};

}  // namespace malsched
