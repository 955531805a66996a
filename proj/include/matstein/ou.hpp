#pragma once

#include "matstein/distributions.hpp"

#include <functional>
#include <vector>

namespace matstein {

enum class OUScheme { exact, euler };

/// Discretization of d X_t = -X_t dt + sqrt(2) Psi^{1/2} dB_t Sigma^{1/2}.
struct OUConfig {
    SymPD psi;
    SymPD sigma;
    double dt = 1e-3;
    double horizon = 1.0;
    OUScheme scheme = OUScheme::euler;
    std::uint64_t seed = 0;

    OUConfig(SymPD psi_, SymPD sigma_, double dt_, double horizon_, OUScheme scheme_,
             std::uint64_t seed_);
};

struct OUPath {
    std::vector<double> times;
    std::vector<Matrix> states;
};

/// Step-k standard normal increments; overriding this lets tests force a
/// deterministic path.
using NoiseFn = std::function<Matrix(long)>;

/// Draws from X_t | X_0 = x0 ~ N(e^{-t} x0, (1 - e^{-2t}) Psi (x) Sigma).
SampleBatch exact_transition_sample(const Matrix& x0, double t, const SymPD& psi,
                                    const SymPD& sigma, Eigen::Index count,
                                    std::uint64_t seed, int threads = 1);

/// Euler-Maruyama: X_{k+1} = X_k (1 - dt) + sqrt(2 dt) Psi^{1/2} G_k Sigma^{1/2}.
OUPath euler_path(const Matrix& x0, const OUConfig& config);
OUPath euler_path(const Matrix& x0, const OUConfig& config, const NoiseFn& noise);

/// Per-step exact transition recursion (exact marginals at grid times).
OUPath exact_path(const Matrix& x0, const OUConfig& config);

struct ContractionReport {
    /// max over grid times of || (X_t - Y_t) - e^{-t} (X_0 - Y_0) ||_F
    double max_dev;
};

/// Runs two paths driven by identical noise (keyed by (seed, step)) and
/// reports how far the difference strays from the deterministic decay.
ContractionReport coupled_contraction(const Matrix& x0, const Matrix& y0, const OUConfig& config);

struct HkReport {
    double estimate;   // max over the anchor family of |mean_A h - mean_B h|
    double se_at_max;  // standard error of the difference at the maximizing anchor
    double max_se;     // largest standard error across the family
};

/// Finite-family lower estimate of the alpha-Holder-Kantorovich distance
/// using anchor functions h_A(X) = ||X - A||_F^alpha with [h]_alpha <= 1.
/// Anchors are drawn from the union of the two batches.
HkReport hk_lower_estimate_report(const SampleBatch& a, const SampleBatch& b, double alpha,
                                  int family_size, std::uint64_t seed);
double hk_lower_estimate(const SampleBatch& a, const SampleBatch& b, double alpha,
                         int family_size, std::uint64_t seed);

}  // namespace matstein
