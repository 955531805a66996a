#pragma once

#include <cmath>
#include <cstdint>

namespace matstein {

// Counter-based splittable generator built on the SplitMix64 finalizer.
// A stream is addressed by (seed, stream_id); the initial state hashes the
// pair, so stream k of a batch can be generated independently of streams
// 0..k-1.  Serial and per-sample-parallel generation therefore produce
// identical output.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : state_(mix64(seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1))) {}

    static std::uint64_t mix64(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]; never returns 0 so log() is safe.
    double next_uniform() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; caches the second variate.
    double next_normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    // Gamma(shape, 1) by Marsaglia-Tsang squeeze; shape < 1 handled by the
    // usual boost Gamma(shape+1) * U^{1/shape}.
    double next_gamma(double shape) {
        if (shape < 1.0) {
            const double g = next_gamma(shape + 1.0);
            return g * std::pow(next_uniform(), 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = next_normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = next_uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Chi-square with real dof > 0.
    double next_chisq(double dof) { return 2.0 * next_gamma(0.5 * dof); }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace matstein
