#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace mtsim {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Power ratio -> decibels. Throws on non-positive input.
inline double db(double power_ratio) {
    if (!(power_ratio > 0.0))
        throw std::domain_error("db: power ratio must be positive");
    return 10.0 * std::log10(power_ratio);
}

inline double undb(double value_db) {
    return std::pow(10.0, value_db / 10.0);
}

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, two_pi);
    if (a <= -pi)
        a += two_pi;
    return a;
}

/// Circular standard deviation sqrt(-2 ln R) of a set of phases, where R is
/// the mean resultant length. Zero iff all phases coincide mod 2pi; +inf when
/// the phasors cancel exactly.
inline double circular_std(std::span<const double> phases) {
    if (phases.empty())
        throw std::domain_error("circular_std: empty sample");
    cplx resultant{0.0, 0.0};
    for (double p : phases)
        resultant += std::polar(1.0, p);
    const double rbar = std::abs(resultant) / static_cast<double>(phases.size());
    if (rbar <= 0.0)
        return std::numeric_limits<double>::infinity();
    if (rbar >= 1.0)
        return 0.0;
    return std::sqrt(-2.0 * std::log(rbar));
}

inline double circular_std(const std::vector<double>& phases) {
    return circular_std(std::span<const double>(phases));
}

inline double circular_mean(std::span<const double> phases) {
    if (phases.empty())
        throw std::domain_error("circular_mean: empty sample");
    cplx resultant{0.0, 0.0};
    for (double p : phases)
        resultant += std::polar(1.0, p);
    return std::arg(resultant);
}

namespace detail {

// splitmix64 finalizer; full-avalanche mix of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

} // namespace detail

/// Counter-based random stream keyed by (seed, stream id). Identical keys
/// reproduce identical sequences; any draw is addressable by its counter, so
/// sweep trials stay reproducible in isolation and independent of scheduling.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream),
          key_(detail::mix64(seed ^ detail::mix64(stream ^ 0x6a09e667f3bcc909ull))) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

    /// Derive an independent stream for a sub-task (sweep index, party, ...).
    RandomStream substream(std::uint64_t id) const {
        return RandomStream(seed_, detail::mix64(stream_ ^ detail::mix64(id + 0x9e3779b97f4a7c15ull)));
    }

    std::uint64_t next_u64() {
        return detail::mix64(key_ + counter_++ * 0x9e3779b97f4a7c15ull);
    }

    /// Uniform in [0, 1) with 53-bit resolution.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform();
    }

    /// Uniform integer in [0, n).
    std::uint64_t uniform_index(std::uint64_t n) {
        // Lemire-style rejection-free enough for simulation purposes; n is
        // tiny relative to 2^64 so modulo bias is negligible, but stay exact.
        if (n == 0)
            throw std::domain_error("uniform_index: n must be positive");
        const std::uint64_t threshold = (0 - n) % n;
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold)
                return r % n;
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard normal via Box-Muller; one fresh pair of uniforms per call
    /// keeps the counter advance independent of call history.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0)
            u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

    double gaussian(double mean, double stddev) {
        return mean + stddev * gaussian();
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Sample CN(0, variance): real and imaginary parts independent N(0, variance/2).
inline cplx sample_complex_gaussian(RandomStream& stream, double variance) {
    if (variance < 0.0)
        throw std::domain_error("sample_complex_gaussian: negative variance");
    if (variance == 0.0)
        return {0.0, 0.0};
    double u1 = stream.uniform();
    while (u1 <= 0.0)
        u1 = stream.uniform();
    const double u2 = stream.uniform();
    const double mag = std::sqrt(-std::log(u1) * variance);
    return std::polar(mag, two_pi * u2);
}

/// Geometric sample on {1, 2, ...} with the given mean (mean >= 1).
inline int sample_geometric(RandomStream& stream, double mean) {
    if (mean <= 1.0)
        return 1;
    const double p = 1.0 / mean;
    double u = stream.uniform();
    while (u <= 0.0)
        u = stream.uniform();
    return 1 + static_cast<int>(std::floor(std::log(u) / std::log1p(-p)));
}

} // namespace mtsim
