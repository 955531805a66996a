#pragma once

#include "matstein/common.hpp"

#include <cstdint>

namespace matstein {

/// Symmetric positive definite matrix with cached spectral data.
///
/// Construction symmetrizes the input (rejecting it if the asymmetry exceeds
/// 1e-12 relative Frobenius), runs one eigendecomposition, and rejects
/// matrices that are singular or nearly so (min eigenvalue <= 1e-12 * max).
/// Instances are immutable and safe to share across threads.
class SymPD {
public:
    explicit SymPD(const Matrix& entries);

    int dim() const { return static_cast<int>(mat_.rows()); }
    const Matrix& mat() const { return mat_; }
    /// Eigenvalues in descending order.
    const Vector& eigenvalues() const { return eigvals_; }
    /// Orthogonal matrix whose columns match eigenvalues().
    const Matrix& eigenvectors() const { return eigvecs_; }

    double log_det() const;
    double operator()(int i, int j) const { return mat_(i, j); }

    Matrix inverse() const { return apply_spectral([](double l) { return 1.0 / l; }); }
    Matrix sqrt_mat() const { return apply_spectral([](double l) { return std::sqrt(l); }); }
    Matrix inv_sqrt_mat() const { return apply_spectral([](double l) { return 1.0 / std::sqrt(l); }); }

    /// V diag(f(lambda)) V^T.
    template <typename F>
    Matrix apply_spectral(F&& f) const {
        Vector mapped(eigvals_.size());
        for (Eigen::Index i = 0; i < eigvals_.size(); ++i) mapped[i] = f(eigvals_[i]);
        return eigvecs_ * mapped.asDiagonal() * eigvecs_.transpose();
    }

private:
    Matrix mat_;
    Vector eigvals_;
    Matrix eigvecs_;
};

/// Symmetric square root as a SymPD (spectral, not Cholesky).
SymPD sym_sqrt(const SymPD& s);

/// Kronecker product of the two scale factors; throws if the product
/// dimension exceeds `dim_cap` (desk-scale guard, default 64).
SymPD kron(const SymPD& a, const SymPD& b, int dim_cap = 64);

/// Plain Kronecker product of two dense matrices.
Matrix kron_dense(const Matrix& a, const Matrix& b);

struct MatrixNorms {
    double frobenius;
    double spectral;
};

MatrixNorms norms(const Matrix& a);

/// Random orthogonal matrix (QR of a Gaussian matrix, signs fixed so the
/// result is deterministic per seed).
Matrix random_orthogonal(int dim, std::uint64_t seed);

/// Random SymPD with log-uniform spectrum in [lo, hi].
SymPD random_sympd(int dim, std::uint64_t seed, double lo = 0.5, double hi = 2.0);

/// vec(X^T): stacks the rows of X, matching the batch storage layout.
Vector vec_t(const Matrix& x);
Matrix unvec_t(const Vector& v, int nu, int d);

}  // namespace matstein
