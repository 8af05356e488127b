#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>

#include "grasp/error.hpp"

namespace grasp {

inline constexpr int kOtsuBins = 256;

/// Histogram bin of `v` for samples spanning [lo, hi]: floor((v-lo)*256/(hi-lo)),
/// with the maximum folded into the last bin.
inline int otsu_bin(double v, double lo, double hi) noexcept {
    const double f = std::floor((v - lo) * kOtsuBins / (hi - lo));
    return static_cast<int>(std::clamp(f, 0.0, static_cast<double>(kOtsuBins - 1)));
}

/// Which edge wins when several maximize the score, as happens whenever
/// empty bins separate the classes.
enum class OtsuTie { Lowest, Highest };

struct OtsuSplit {
    double threshold = 0.0; // upper edge of `last_low_bin`
    int last_low_bin = 0;   // bins [0, last_low_bin] form the low class
    double lo = 0.0;
    double hi = 0.0;
};

namespace detail {

using u128 = unsigned __int128;

// a/b < c/d for b, d > 0, exact as long as the numerators fit in 128 bits.
inline bool fraction_less(u128 a, u128 b, u128 c, u128 d) noexcept {
    const u128 qa = a / b, qc = c / d;
    if (qa != qc) return qa < qc;
    return (a % b) * d < (c % d) * b;
}

} // namespace detail

/// Otsu's method on a 256-bin histogram over [min, max] of the samples.
/// Between-class variance w0*w1*(mu0-mu1)^2 is evaluated exactly on bin
/// indices, so the chosen cut is reproducible bit for bit; ties go to the
/// lowest edge unless `tie` asks for the highest.
inline OtsuSplit otsu_split(std::span<const float> samples, OtsuTie tie = OtsuTie::Lowest) {
    if (samples.size() < 2)
        throw Error(ErrorCode::DegenerateSamples, "Otsu threshold needs at least 2 samples");
    double lo = samples[0], hi = samples[0];
    for (float v : samples) {
        if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "Otsu samples must be finite");
        lo = std::min<double>(lo, v);
        hi = std::max<double>(hi, v);
    }
    if (!(hi > lo)) throw Error(ErrorCode::DegenerateSamples, "all Otsu samples are equal");

    std::array<std::uint64_t, kOtsuBins> hist{};
    for (float v : samples) ++hist[static_cast<std::size_t>(otsu_bin(v, lo, hi))];

    std::uint64_t total = 0, total_sum = 0;
    for (int i = 0; i < kOtsuBins; ++i) {
        total += hist[i];
        total_sum += static_cast<std::uint64_t>(i) * hist[i];
    }

    // score(k) = (s0*n1 - s1*n0)^2 / (n0*n1), proportional to the
    // between-class variance with bin centers as class values.
    using detail::u128;
    u128 best_num = 0, best_den = 1;
    int best = 0;
    std::uint64_t n0 = 0, s0 = 0;
    for (int k = 0; k < kOtsuBins - 1; ++k) {
        n0 += hist[k];
        s0 += static_cast<std::uint64_t>(k) * hist[k];
        const std::uint64_t n1 = total - n0;
        const std::uint64_t s1 = total_sum - s0;
        if (n0 == 0 || n1 == 0) continue;
        const u128 lhs = u128{s0} * n1;
        const u128 rhs = u128{s1} * n0;
        const u128 diff = lhs > rhs ? lhs - rhs : rhs - lhs;
        const u128 num = diff * diff;
        const u128 den = u128{n0} * n1;
        const bool better = tie == OtsuTie::Lowest ? detail::fraction_less(best_num, best_den, num, den)
                                                   : !detail::fraction_less(num, den, best_num, best_den);
        if (better) {
            best_num = num;
            best_den = den;
            best = k;
        }
    }
    return {lo + (hi - lo) * (best + 1) / kOtsuBins, best, lo, hi};
}

inline double otsu_threshold(std::span<const float> samples, OtsuTie tie = OtsuTie::Lowest) {
    return otsu_split(samples, tie).threshold;
}

} // namespace grasp
