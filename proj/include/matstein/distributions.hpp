#pragma once

#include "matstein/matcore.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace matstein {

struct MatrixNormalParams {
    Matrix m;    // nu x d location
    SymPD psi;   // nu x nu row scale
    SymPD sigma; // d x d column scale

    MatrixNormalParams(Matrix m_, SymPD psi_, SymPD sigma_);
    int nu() const { return psi.dim(); }
    int d() const { return sigma.dim(); }
};

struct MatrixTParams {
    double n_dof;
    SymPD psi;
    SymPD sigma;

    MatrixTParams(double n_dof_, SymPD psi_, SymPD sigma_);
    int nu() const { return psi.dim(); }
    int d() const { return sigma.dim(); }
};

/// Column-major over samples, each row holds vec(X^T) of one draw.
class SampleBatch {
public:
    SampleBatch(int nu, int d, std::uint64_t seed, Eigen::Index count);

    int nu() const { return nu_; }
    int d() const { return d_; }
    std::uint64_t seed() const { return seed_; }
    Eigen::Index count() const { return data_.rows(); }

    Matrix sample(Eigen::Index k) const { return unvec_t(data_.row(k).transpose(), nu_, d_); }
    void set_sample(Eigen::Index k, const Matrix& x) { data_.row(k) = vec_t(x).transpose(); }

    /// count x (nu*d) storage, row k = vec(X_k^T).
    const Matrix& rows() const { return data_; }
    Matrix& rows() { return data_; }

private:
    int nu_, d_;
    std::uint64_t seed_;
    Matrix data_;
};

SampleBatch sample_matrix_normal(const MatrixNormalParams& params, Eigen::Index count,
                                 std::uint64_t seed, int threads = 1);

double log_density_matrix_normal(const MatrixNormalParams& params, const Matrix& x);

/// One Wishart_d(alpha, I_d) draw via the Bartlett decomposition; alpha may
/// be any real > dim - 1.
SymPD sample_wishart(int dim, double alpha, std::uint64_t seed);

SampleBatch sample_matrix_t(const MatrixTParams& params, Eigen::Index count,
                            std::uint64_t seed, int threads = 1);

double log_density_matrix_t(const MatrixTParams& params, const Matrix& x);

/// log of the multivariate gamma function Gamma_nu(a).
double log_multigamma(int nu, double a);

struct InvWishartTraceMoments {
    double m1;                    // E tr(W^{-1}), needs alpha > dim+1
    std::optional<double> m2tr;   // E tr(W^{-2}), needs alpha > dim+3
    std::optional<double> m1sq;   // E tr(W^{-1})^2, needs alpha > dim+3
};

InvWishartTraceMoments inv_wishart_trace_moments(int dim, double alpha);

struct MatrixTFrobeniusMoments {
    double m2;                  // E ||Y||_F^2, needs n > 2
    std::optional<double> m4;   // E ||Y||_F^4, needs n > 4
    double m2_bound;            // 2 nu d
    std::optional<double> m4_bound;  // 6 (nu d)^2 / (1 - 4/n)
};

MatrixTFrobeniusMoments matrix_t_frobenius_moments(int nu, int d, double n_dof);

}  // namespace matstein
