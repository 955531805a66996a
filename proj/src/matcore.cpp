#include "matstein/matcore.hpp"

#include "matstein/rng.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace matstein {

SymPD::SymPD(const Matrix& entries) {
    require(entries.rows() == entries.cols() && entries.rows() > 0,
            "SymPD requires a square nonempty matrix");
    require(entries.allFinite(), "SymPD entries must be finite");

    const double scale = entries.norm();
    const double asym = (entries - entries.transpose()).norm();
    if (scale > 0.0 && asym > 1e-12 * scale)
        throw ValidationError("SymPD input asymmetric beyond 1e-12 relative tolerance");

    mat_ = 0.5 * (entries + entries.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(mat_);
    if (es.info() != Eigen::Success)
        throw NumericalError("SymPD eigendecomposition failed");

    // Eigen returns ascending order; store descending.
    const int n = dim();
    eigvals_.resize(n);
    eigvecs_.resize(n, n);
    for (int i = 0; i < n; ++i) {
        eigvals_[i] = es.eigenvalues()[n - 1 - i];
        eigvecs_.col(i) = es.eigenvectors().col(n - 1 - i);
    }

    const double lmax = eigvals_[0];
    const double lmin = eigvals_[n - 1];
    if (!(lmin > 0.0) || lmin <= 1e-12 * lmax)
        throw NumericalError("SymPD requires eigenvalues > 0 (min <= 1e-12 * max rejected)");
}

double SymPD::log_det() const {
    double s = 0.0;
    for (Eigen::Index i = 0; i < eigvals_.size(); ++i) s += std::log(eigvals_[i]);
    return s;
}

SymPD sym_sqrt(const SymPD& s) { return SymPD(s.sqrt_mat()); }

Matrix kron_dense(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

SymPD kron(const SymPD& a, const SymPD& b, int dim_cap) {
    const long prod = static_cast<long>(a.dim()) * b.dim();
    if (prod > dim_cap)
        throw ValidationError("kron dimension " + std::to_string(prod) +
                              " exceeds cap " + std::to_string(dim_cap));
    return SymPD(kron_dense(a.mat(), b.mat()));
}

MatrixNorms norms(const Matrix& a) {
    MatrixNorms n{};
    n.frobenius = a.norm();
    if (a.size() == 0) {
        n.spectral = 0.0;
    } else {
        Eigen::JacobiSVD<Matrix> svd(a);
        n.spectral = svd.singularValues().size() > 0 ? svd.singularValues()[0] : 0.0;
    }
    return n;
}

Matrix random_orthogonal(int dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix g(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) g(i, j) = rng.next_normal();
    Eigen::HouseholderQR<Matrix> qr(g);
    Matrix q = qr.householderQ();
    Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < dim; ++j)
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    return q;
}

SymPD random_sympd(int dim, std::uint64_t seed, double lo, double hi) {
    require(lo > 0.0 && hi >= lo, "random_sympd spectrum bounds invalid");
    Rng rng(seed, 1);
    Vector lambda(dim);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int i = 0; i < dim; ++i)
        lambda[i] = std::exp(llo + (lhi - llo) * rng.next_uniform());
    const Matrix q = random_orthogonal(dim, seed ^ 0xA5A5A5A5ULL);
    return SymPD(q * lambda.asDiagonal() * q.transpose());
}

Vector vec_t(const Matrix& x) {
    Vector v(x.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) v[k++] = x(i, j);
    return v;
}

Matrix unvec_t(const Vector& v, int nu, int d) {
    require(v.size() == static_cast<Eigen::Index>(nu) * d, "unvec_t size mismatch");
    Matrix x(nu, d);
    Eigen::Index k = 0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < d; ++j) x(i, j) = v[k++];
    return x;
}

}  // namespace matstein
