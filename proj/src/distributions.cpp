#include "matstein/distributions.hpp"

#include "matstein/parallel.hpp"
#include "matstein/rng.hpp"

#include <cmath>

namespace matstein {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
}

MatrixNormalParams::MatrixNormalParams(Matrix m_, SymPD psi_, SymPD sigma_)
    : m(std::move(m_)), psi(std::move(psi_)), sigma(std::move(sigma_)) {
    require(m.rows() == psi.dim() && m.cols() == sigma.dim(),
            "matrix normal location shape must match (psi.dim, sigma.dim)");
}

MatrixTParams::MatrixTParams(double n_dof_, SymPD psi_, SymPD sigma_)
    : n_dof(n_dof_), psi(std::move(psi_)), sigma(std::move(sigma_)) {
    require(n_dof > 0.0, "matrix T degrees of freedom must be positive");
}

SampleBatch::SampleBatch(int nu, int d, std::uint64_t seed, Eigen::Index count)
    : nu_(nu), d_(d), seed_(seed), data_(count, static_cast<Eigen::Index>(nu) * d) {
    require(nu > 0 && d > 0, "batch shape must be positive");
    require(count >= 1, "batch count must be >= 1");
}

SampleBatch sample_matrix_normal(const MatrixNormalParams& params, Eigen::Index count,
                                 std::uint64_t seed, int threads) {
    const int nu = params.nu(), d = params.d();
    SampleBatch batch(nu, d, seed, count);
    const Matrix psi_s = params.psi.sqrt_mat();
    const Matrix sigma_s = params.sigma.sqrt_mat();

    parallel_for(count, threads, [&](long k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        Matrix z(nu, d);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = rng.next_normal();
        batch.set_sample(k, params.m + psi_s * z * sigma_s);
    });
    return batch;
}

double log_density_matrix_normal(const MatrixNormalParams& params, const Matrix& x) {
    require(x.rows() == params.nu() && x.cols() == params.d(),
            "log density evaluation point shape mismatch");
    const double nu = params.nu(), d = params.d();
    const Matrix c = x - params.m;
    const double quad = (params.sigma.inverse() * c.transpose() * params.psi.inverse() * c).trace();
    return -0.5 * nu * d * kLog2Pi - 0.5 * d * params.psi.log_det() -
           0.5 * nu * params.sigma.log_det() - 0.5 * quad;
}

namespace {

// Lower-triangular Bartlett factor of Wishart_d(alpha, I_d).
Matrix bartlett_factor(int dim, double alpha, Rng& rng) {
    Matrix t = Matrix::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) t(i, i) = std::sqrt(rng.next_chisq(alpha - i));
    for (int i = 1; i < dim; ++i)
        for (int j = 0; j < i; ++j) t(i, j) = rng.next_normal();
    return t;
}

}  // namespace

SymPD sample_wishart(int dim, double alpha, std::uint64_t seed) {
    require(dim >= 1, "Wishart dimension must be >= 1");
    require(alpha > dim - 1, "Wishart dof must exceed dim - 1");
    Rng rng(seed, 0);
    const Matrix t = bartlett_factor(dim, alpha, rng);
    return SymPD(t * t.transpose());
}

SampleBatch sample_matrix_t(const MatrixTParams& params, Eigen::Index count,
                            std::uint64_t seed, int threads) {
    const int nu = params.nu(), d = params.d();
    const double n = params.n_dof;
    SampleBatch batch(nu, d, seed, count);
    const Matrix psi_s = params.psi.sqrt_mat();
    const Matrix sigma_s = params.sigma.sqrt_mat();
    const double wishart_dof = n + d - 1;

    parallel_for(count, threads, [&](long k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        Matrix z(nu, d);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < d; ++j) z(i, j) = rng.next_normal();
        const Matrix t = bartlett_factor(d, wishart_dof, rng);
        const SymPD w(t * t.transpose());
        const Matrix y = std::sqrt(n) * z * w.inv_sqrt_mat();
        batch.set_sample(k, psi_s * y * sigma_s);
    });
    return batch;
}

double log_multigamma(int nu, double a) {
    double s = 0.25 * nu * (nu - 1) * std::log(M_PI);
    for (int j = 1; j <= nu; ++j) s += std::lgamma(a - 0.5 * (j - 1));
    return s;
}

double log_density_matrix_t(const MatrixTParams& params, const Matrix& x) {
    require(x.rows() == params.nu() && x.cols() == params.d(),
            "log density evaluation point shape mismatch");
    const int nu = params.nu(), d = params.d();
    const double n = params.n_dof;
    const double a = 0.5 * (n + nu + d - 1);

    // |I + Psi^{-1} X Sigma^{-1} X^T / n| via the similar symmetric form.
    const Matrix b = params.psi.inv_sqrt_mat() * x * params.sigma.inv_sqrt_mat();
    const Matrix s = Matrix::Identity(nu, nu) + b * b.transpose() / n;
    const double log_det_s = Eigen::SelfAdjointEigenSolver<Matrix>(s).eigenvalues().array().log().sum();

    return log_multigamma(nu, a) - log_multigamma(nu, 0.5 * (n + nu - 1)) -
           0.5 * nu * d * std::log(M_PI * n) - 0.5 * d * params.psi.log_det() -
           0.5 * nu * params.sigma.log_det() - a * log_det_s;
}

InvWishartTraceMoments inv_wishart_trace_moments(int dim, double alpha) {
    require(dim >= 1, "dimension must be >= 1");
    const double d = dim;
    require(alpha > d + 1, "inverse Wishart trace moment needs alpha > dim + 1");
    InvWishartTraceMoments out{};
    out.m1 = d / (alpha - d - 1);
    if (alpha > d + 3) {
        const double den = (alpha - d) * (alpha - d - 1) * (alpha - d - 3);
        out.m2tr = ((alpha - d - 1) * d + d * d) / den;
        out.m1sq = ((alpha - d - 2) * d * d + 2 * d) / den;
    }
    return out;
}

MatrixTFrobeniusMoments matrix_t_frobenius_moments(int nu, int d, double n) {
    require(nu >= 1 && d >= 1, "shape must be positive");
    require(n > 2.0, "second Frobenius moment needs dof > 2");
    MatrixTFrobeniusMoments out{};
    const double nd = static_cast<double>(nu) * d;
    out.m2 = nd / (1.0 - 2.0 / n);
    out.m2_bound = 2.0 * nd;
    if (n > 4.0) {
        const double num = 2.0 * nu * ((1.0 - 2.0 / n) * d + d * d / n) +
                           static_cast<double>(nu) * nu * ((1.0 - 3.0 / n) * d * d + 2.0 * d / n);
        const double den = (1.0 - 1.0 / n) * (1.0 - 2.0 / n) * (1.0 - 4.0 / n);
        out.m4 = num / den;
        out.m4_bound = 6.0 * nd * nd / (1.0 - 4.0 / n);
    }
    return out;
}

}  // namespace matstein
