#pragma once

#include "matstein/distributions.hpp"

#include <optional>
#include <string>
#include <vector>

namespace matstein {

enum class RescaleRule { trace_sigma_d, det_sigma_one, none };

std::string to_string(RescaleRule rule);
RescaleRule rescale_rule_from_string(const std::string& name);

struct FlipFlopConfig {
    std::optional<SymPD> w;  // nu x nu weight; identity when absent
    std::optional<SymPD> u;  // d x d weight; identity when absent
    RescaleRule rescale = RescaleRule::trace_sigma_d;
    double tol = 1e-8;       // relative Frobenius change of kron(Psi, Sigma)
    int max_iter = 200;
    double ridge_lambda = 0.0;  // in [0, 1); 0 disables the ridge blend
    double ridge_tau = 1.0;

    void validate(int nu, int d) const;
};

/// (1/(n tr(W))) sum_k X_k^T Psi^{-1/2} W Psi^{-1/2} X_k without the PD check.
Matrix sigma_moment_map(const SampleBatch& batch, const SymPD& psi, const Matrix& w);
/// (1/(n tr(U))) sum_k X_k Sigma^{-1/2} U Sigma^{-1/2} X_k^T without the PD check.
Matrix psi_moment_map(const SampleBatch& batch, const SymPD& sigma, const Matrix& u);

/// Weighted column-scale update; throws NumericalError if the average is not
/// positive definite (rank-deficient data), in which case ridging is the
/// caller's recourse.
SymPD sigma_update(const SampleBatch& batch, const SymPD& psi, const SymPD* w = nullptr);
SymPD psi_update(const SampleBatch& batch, const SymPD& sigma, const SymPD* u = nullptr);

struct FlipFlopResult {
    SymPD psi_hat;
    SymPD sigma_hat;
    int iters;
    bool converged;
};

FlipFlopResult weighted_flipflop(const SampleBatch& batch, const FlipFlopConfig& config,
                                 const SymPD& psi0);

/// Scalar trade (c Psi, Sigma / c) enforcing the chosen constraint;
/// kron(Psi, Sigma) is unchanged.
std::pair<SymPD, SymPD> rescale_identifiability(const SymPD& psi, const SymPD& sigma,
                                                RescaleRule rule);

/// Convex blends (1 - lambda) S + lambda tau I; accepts any symmetric
/// nonnegative definite inputs and returns positive definite results.
std::pair<SymPD, SymPD> shrink(const Matrix& sigma_hat, const Matrix& psi_hat,
                               double lambda, double tau);

/// Estimate restricted to an identifiable block: entries outside the block
/// are NaN in `value` and false in `known`.
struct MaskedEstimate {
    Matrix value;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> known;
};

struct MaskedFlipFlopResult {
    MaskedEstimate sigma;
    MaskedEstimate psi;
    int iters;
    bool converged;
};

/// Flip-flop under row mask P and column mask Q (diagonal 0/1, given as 0/1
/// vectors).  Only P Psi P and Q Sigma Q are identifiable; the iteration
/// carries identity filler on the unobserved blocks and never reports values
/// there.
MaskedFlipFlopResult masked_flipflop(const SampleBatch& batch, const std::vector<int>& p_mask,
                                     const std::vector<int>& q_mask, const FlipFlopConfig& config);

/// Linear covariance templates Sigma(beta) = sum beta_j B_j,
/// Psi(alpha) = sum alpha_l A_l, probed through weight families.
struct StructuredBasis {
    std::vector<Matrix> b_templates;  // d x d symmetric
    std::vector<Matrix> a_templates;  // nu x nu symmetric
    std::vector<Matrix> u_weights;    // d x d symmetric, nonzero trace
    std::vector<Matrix> w_weights;    // nu x nu symmetric, nonzero trace

    StructuredBasis(std::vector<Matrix> b, std::vector<Matrix> a, std::vector<Matrix> u,
                    std::vector<Matrix> w);

    int d() const { return static_cast<int>(b_templates.front().rows()); }
    int nu() const { return static_cast<int>(a_templates.front().rows()); }
    Matrix design_sigma() const;  // M x p with entries tr(B_j U_m)
    Matrix design_psi() const;    // R x q with entries tr(A_l W_r)
};

struct StructuredFit {
    Vector beta;
    Vector alpha;
    Matrix sigma;  // symmetrized reconstruction
    Matrix psi;
    bool sigma_pd;
    bool psi_pd;
    double residual_sigma;  // ||C beta - y||_2
    double residual_psi;
};

/// Least-squares projection given precomputed moment targets.
StructuredFit structured_solve(const StructuredBasis& basis, const Vector& y_sigma,
                               const Vector& y_psi);

/// One side of the projection, for sequential (flip-flop style) alternation.
struct StructuredHalfFit {
    Vector coef;
    Matrix value;  // symmetrized reconstruction
    bool pd;
    double residual;
};

StructuredHalfFit structured_fit_sigma(const SampleBatch& batch, const StructuredBasis& basis,
                                       const SymPD& psi_eval);
StructuredHalfFit structured_fit_psi(const SampleBatch& batch, const StructuredBasis& basis,
                                     const SymPD& sigma_eval);

/// Builds the moment targets from a batch, evaluating the moment maps at the
/// supplied (Psi, Sigma), then projects.
StructuredFit structured_projection(const SampleBatch& batch, const StructuredBasis& basis,
                                    const SymPD& psi_eval, const SymPD& sigma_eval);

}  // namespace matstein
