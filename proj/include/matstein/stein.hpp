#pragma once

#include "matstein/distributions.hpp"
#include "matstein/matcore.hpp"

#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

namespace matstein {

/// Certificates attached to a test function.  All bounds are sup bounds the
/// caller vouches for; estimators reject functions missing the fields they
/// need rather than guessing.
struct TestFunctionMeta {
    std::optional<double> holder_alpha;   // alpha in (0,1]
    std::optional<double> holder_const;   // [h]_alpha
    std::optional<double> bounded_sup;    // upper bound on ||h - E h(X_inf)||_inf
    std::map<int, double> coord_deriv_sups;  // m -> sup over index tuples of the order-m partials
    std::map<int, double> frechet_sups;      // m -> M_m(h)
    std::map<int, double> class_lip;  // p -> max over (p-1)-tuples of the Lipschitz const of that partial
};

/// Evaluable scalar function of a nu x d matrix with optional exact
/// derivatives.  The Hessian convention flattens entry (i,j) to index i*d+j,
/// so hessian(X)(a,b) is the second partial in entries a and b.
struct TestFunction {
    int nu = 0;
    int d = 0;
    std::function<double(const Matrix&)> value;
    std::function<Matrix(const Matrix&)> gradient;  // empty if unavailable
    std::function<Matrix(const Matrix&)> hessian;   // empty if unavailable
    // For functions with a known generator action (quadratic probes):
    // closed-form A f(X) given the column scale.
    std::function<double(const SymPD&, const Matrix&)> generator_closed_form;
    TestFunctionMeta meta;

    double operator()(const Matrix& x) const { return value(x); }
    bool has_gradient() const { return static_cast<bool>(gradient); }
    bool has_hessian() const { return static_cast<bool>(hessian); }
};

struct MeanSe {
    double mean;
    double se;
};

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);
/// Full matrix of second partials, flattened as in TestFunction::hessian.
Matrix fd_hessian(const std::function<double(const Matrix&)>& f, const Matrix& x, double step);

/// Checks a supplied exact gradient against central differences at 20 seeded
/// points (step 1e-5, relative tolerance 1e-5).
bool validate_gradient(const TestFunction& f, std::uint64_t seed, double point_scale = 1.5);

/// A^OU f(X) = -tr{X^T grad f} + sum_{ikjl} Psi_ik Sigma_jl d2f/dX_ij dX_kl.
/// Falls back to central differences (step fd_step) when derivatives are
/// missing and allow_fd is set.
double ou_generator(const TestFunction& f, const SymPD& psi, const SymPD& sigma,
                    const Matrix& x, bool allow_fd = true, double fd_step = 1e-4);

/// f_{W,U}(X) = 1/2 tr(X^T Psi^{-1/2} W Psi^{-1/2} X U) with exact gradient,
/// constant Hessian, and the closed-form generator action
/// A f(X) = tr(W) tr(Sigma U) - 2 f(X) attached.
TestFunction quadratic_probe(const SymPD& w, const SymPD& u, const SymPD& psi);

/// Row-side probe 1/2 tr(X Sigma^{-1/2} U Sigma^{-1/2} X^T W).
TestFunction quadratic_probe_row(const SymPD& w, const SymPD& u, const SymPD& sigma);

/// Empirical average of A^OU f over a batch, with its standard error.
MeanSe stein_identity_estimate(const SampleBatch& batch, const TestFunction& f,
                               const SymPD& psi, const SymPD& sigma);

/// Langevin drift of the matrix T law.
Matrix t_drift(const MatrixTParams& params, const Matrix& x);

/// tr{b(X)^T grad f} + tr{Sigma grad^T Psi grad f} with b = t_drift.
double langevin_t_generator(const TestFunction& f, const MatrixTParams& params,
                            const Matrix& x, bool allow_fd = true, double fd_step = 1e-4);

/// Gauss-Legendre nodes and weights on (0, 1).
void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights);

struct QuadratureConfig {
    int t_nodes = 64;     // >= 8
    int mc_inner = 4096;  // >= 256
    std::uint64_t seed = 0;
};

/// Discretized solution of the Stein equation,
///   f_h(X) = -Int_0^inf { P_t h(X) - E h(X_inf) } dt,
/// after the substitution u = e^{-t}.  The inner expectation uses one fixed
/// set of Gaussian draws shared across every (X, u), which makes f_h a smooth
/// deterministic function of X, so finite differences of it are meaningful.
class SteinSolution {
public:
    SteinSolution(TestFunction h, SymPD psi, SymPD sigma, QuadratureConfig config);

    double h_mean() const { return h_mean_; }
    double h_mean_se() const { return h_mean_se_; }
    const QuadratureConfig& config() const { return cfg_; }
    const TestFunction& h() const { return h_; }
    const SymPD& psi() const { return psi_; }
    const SymPD& sigma() const { return sigma_; }

    double evaluate(const Matrix& x) const;
    MeanSe evaluate_with_se(const Matrix& x) const;
    /// Evaluates f_h at several points in one pass over the shared draws.
    std::vector<double> evaluate_many(const std::vector<Matrix>& points) const;

    Matrix gradient_fd(const Matrix& x, double step = 1e-5) const;
    /// A^OU f_h(X) by central differences (gradient step 1e-5, Hessian 1e-3).
    double generator_fd(const Matrix& x, double grad_step = 1e-5, double hess_step = 1e-3) const;

private:
    TestFunction h_;
    SymPD psi_, sigma_;
    QuadratureConfig cfg_;
    std::vector<double> u_, w_;     // quadrature nodes/weights on (0,1)
    std::vector<Matrix> noise_;     // Psi^{1/2} Z_i Sigma^{1/2}
    std::vector<double> h_noise_;   // h at each noise matrix
    double h_mean_ = 0.0, h_mean_se_ = 0.0;
};

SteinSolution solve_stein(const TestFunction& h, const SymPD& psi, const SymPD& sigma,
                          const QuadratureConfig& config);

/// A^OU f_h(X) - {h(X) - h_mean}; zero for the exact solution.
double stein_residual(const SteinSolution& sol, const Matrix& x);

enum class BoundKind { coord_m, coord_bounded, coord_mixed, frechet_m, frechet_bounded, frechet_mixed };

/// Closed-form right-hand sides of the regularity estimates for f_h.  For
/// coord_bounded / coord_mixed, `indices` lists the (i,j) tuple; when empty
/// the anisotropy factor is maximized over all entries (the conservative
/// choice used by the CLT bounds).
double regularity_bound_rhs(BoundKind kind, int m, const TestFunction& h,
                            const SymPD& psi, const SymPD& sigma,
                            const std::vector<std::pair<int, int>>& indices = {});

/// Lower estimate of the Frechet norm M_m(f) (m = 1 or 2) by maximizing the
/// finite-difference directional derivative over grid points and random
/// unit-Frobenius direction tuples.
double frechet_lower_estimate(const std::function<double(const Matrix&)>& f, int nu, int d,
                              int order, const std::vector<Matrix>& grid, int n_dirs,
                              std::uint64_t seed, double step = 1e-3);

// Test-function builders.
TestFunction make_constant(int nu, int d, double c);
TestFunction make_linear(const Matrix& c);
/// scale * tanh(<C, X>_F + shift)
TestFunction make_tanh_ridge(const Matrix& c, double scale = 1.0, double shift = 0.0);
/// tanh of one entry, h(X) = tanh(X_ij); bounded with unit derivative sup.
TestFunction make_tanh_entry(int nu, int d, int i, int j);

}  // namespace matstein
