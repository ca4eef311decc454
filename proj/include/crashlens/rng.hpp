#pragma once

// Deterministic random machinery for the synthetic generator. All algorithms
// are spelled out here (no implementation-defined std distributions) so a
// given seed reproduces the same dataset byte for byte.

#include <cmath>
#include <cstdint>
#include <vector>

#include "crashlens/common.hpp"

namespace crashlens {

/// splitmix64: tiny, fast, well-mixed; state advances by a Weyl constant.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, bound). Plain modulo: bias is irrelevant here,
    /// a pinned algorithm is what matters.
    std::size_t below(std::size_t bound) {
        return bound <= 1 ? 0 : static_cast<std::size_t>(next_u64() % bound);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::uint64_t state_;
};

/// Standard normal quantile (Acklam's rational approximation, |eps|<1.2e-8).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw DataError("normal quantile domain");
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;
    double q, r;
    if (p < p_low) {
        q = std::sqrt(-2.0 * std::log(p));
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    if (p > 1.0 - p_low) {
        q = std::sqrt(-2.0 * std::log(1.0 - p));
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    q = p - 0.5;
    r = q * q;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

// z-score of the 75th percentile; quartiles sit at +-this many sigmas.
inline constexpr double kZQuartile = 0.6744898;

/// Log-normal restricted to [lo, hi], parameterised so its truncated mean is
/// exact. Sigma comes from the printed Q1/Q3 ratio (floored to keep a little
/// spread even for degenerate Q1=Q3 columns); the log-median is solved by
/// bisection against the target mean.
struct TruncatedLognormal {
    double mu = 0.0;     // log-median
    double sigma = 0.1;
    double lo = 0.0;
    double hi = 0.0;
    double cdf_lo = 0.0;
    double cdf_hi = 1.0;

    double quantile(double p) const {
        double pp = cdf_lo + p * (cdf_hi - cdf_lo);
        pp = std::min(std::max(pp, 1e-12), 1.0 - 1e-12);
        return std::exp(mu + sigma * normal_quantile(pp));
    }
};

namespace detail {

inline double truncated_lognormal_mean(double mu, double sigma, double lo, double hi) {
    double a = (std::log(lo) - mu) / sigma;
    double b = (std::log(hi) - mu) / sigma;
    double z = normal_cdf(b) - normal_cdf(a);
    if (z <= 0.0) return std::exp(mu);
    return std::exp(mu + sigma * sigma / 2.0) * (normal_cdf(b - sigma) - normal_cdf(a - sigma)) / z;
}

}  // namespace detail

inline TruncatedLognormal fit_truncated_lognormal(double mean, double q1, double q3, double lo,
                                                  double hi, double sigma_floor = 0.08) {
    if (!(mean > 0.0) || !(q1 > 0.0) || !(q3 >= q1) || !(lo > 0.0) || !(hi > lo))
        throw DataError("invalid lognormal fit inputs");
    TruncatedLognormal t;
    t.sigma = std::max(sigma_floor, q3 > q1 ? std::log(q3 / q1) / (2.0 * kZQuartile) : 0.0);
    t.lo = lo;
    t.hi = hi;
    double mu_lo = std::log(mean) - 4.0;
    double mu_hi = std::log(mean) + 4.0;
    for (int i = 0; i < 96; ++i) {
        double mid = 0.5 * (mu_lo + mu_hi);
        if (detail::truncated_lognormal_mean(mid, t.sigma, lo, hi) < mean) mu_lo = mid;
        else mu_hi = mid;
    }
    t.mu = 0.5 * (mu_lo + mu_hi);
    t.cdf_lo = normal_cdf((std::log(lo) - t.mu) / t.sigma);
    t.cdf_hi = normal_cdf((std::log(hi) - t.mu) / t.sigma);
    return t;
}

/// n stratified draws: one uniform jitter inside each of n equal probability
/// strata, so the sample mean tracks the distribution mean tightly while
/// different seeds still produce different values.
inline std::vector<double> stratified_draws(const TruncatedLognormal& dist, std::size_t n,
                                            Rng& rng) {
    std::vector<double> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        double p = (static_cast<double>(i) + rng.uniform01()) / static_cast<double>(n);
        out.push_back(dist.quantile(p));
    }
    return out;
}

}  // namespace crashlens
