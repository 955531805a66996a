#include "matstein/estimators.hpp"

#include "matstein/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>

namespace matstein {

std::string to_string(RescaleRule rule) {
    switch (rule) {
        case RescaleRule::trace_sigma_d: return "trace_sigma_d";
        case RescaleRule::det_sigma_one: return "det_sigma_one";
        case RescaleRule::none: return "none";
    }
    return "unknown";
}

RescaleRule rescale_rule_from_string(const std::string& name) {
    if (name == "trace_sigma_d") return RescaleRule::trace_sigma_d;
    if (name == "det_sigma_one") return RescaleRule::det_sigma_one;
    if (name == "none") return RescaleRule::none;
    throw ValidationError("unknown rescale rule: " + name);
}

void FlipFlopConfig::validate(int nu, int d) const {
    if (w) {
        require(w->dim() == nu, "weight W dimension mismatch");
        require(std::abs(w->mat().trace()) > 0.0, "tr(W) must be nonzero");
    }
    if (u) {
        require(u->dim() == d, "weight U dimension mismatch");
        require(std::abs(u->mat().trace()) > 0.0, "tr(U) must be nonzero");
    }
    require(tol > 0.0, "tolerance must be positive");
    require(max_iter >= 1, "max_iter must be >= 1");
    require(ridge_lambda >= 0.0 && ridge_lambda < 1.0, "ridge_lambda must lie in [0, 1)");
    require(ridge_tau > 0.0, "ridge_tau must be positive");
}

namespace {

// Pairwise tree over samples; the reduction order is independent of any
// threading, so results are bit-reproducible.
Matrix sandwich_average_t(const SampleBatch& batch, const Matrix& middle) {
    const Eigen::Index n = batch.count();
    auto leaf = [&](long k) -> Matrix {
        const Matrix x = batch.sample(k);
        return x.transpose() * middle * x;
    };
    auto combine = [](Matrix l, Matrix r) -> Matrix { return l + r; };
    return pairwise_reduce<Matrix>(0, n, leaf, combine) / static_cast<double>(n);
}

Matrix sandwich_average(const SampleBatch& batch, const Matrix& middle) {
    const Eigen::Index n = batch.count();
    auto leaf = [&](long k) -> Matrix {
        const Matrix x = batch.sample(k);
        return x * middle * x.transpose();
    };
    auto combine = [](Matrix l, Matrix r) -> Matrix { return l + r; };
    return pairwise_reduce<Matrix>(0, n, leaf, combine) / static_cast<double>(n);
}

Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

Matrix sigma_moment_map(const SampleBatch& batch, const SymPD& psi, const Matrix& w) {
    require(psi.dim() == batch.nu(), "psi dimension mismatch");
    require(w.rows() == batch.nu() && w.cols() == batch.nu(), "weight W shape mismatch");
    const double tr_w = w.trace();
    require(std::abs(tr_w) > 0.0, "tr(W) must be nonzero");
    const Matrix r = psi.inv_sqrt_mat();
    const Matrix middle = r * w * r;
    return symmetrized(sandwich_average_t(batch, middle)) / tr_w;
}

Matrix psi_moment_map(const SampleBatch& batch, const SymPD& sigma, const Matrix& u) {
    require(sigma.dim() == batch.d(), "sigma dimension mismatch");
    require(u.rows() == batch.d() && u.cols() == batch.d(), "weight U shape mismatch");
    const double tr_u = u.trace();
    require(std::abs(tr_u) > 0.0, "tr(U) must be nonzero");
    const Matrix r = sigma.inv_sqrt_mat();
    const Matrix middle = r * u * r;
    return symmetrized(sandwich_average(batch, middle)) / tr_u;
}

SymPD sigma_update(const SampleBatch& batch, const SymPD& psi, const SymPD* w) {
    const Matrix wmat = w ? w->mat() : Matrix(Matrix::Identity(batch.nu(), batch.nu()));
    try {
        return SymPD(sigma_moment_map(batch, psi, wmat));
    } catch (const NumericalError&) {
        throw NumericalError("sigma update not positive definite (rank-deficient data)");
    }
}

SymPD psi_update(const SampleBatch& batch, const SymPD& sigma, const SymPD* u) {
    const Matrix umat = u ? u->mat() : Matrix(Matrix::Identity(batch.d(), batch.d()));
    try {
        return SymPD(psi_moment_map(batch, sigma, umat));
    } catch (const NumericalError&) {
        throw NumericalError("psi update not positive definite (rank-deficient data)");
    }
}

std::pair<SymPD, SymPD> rescale_identifiability(const SymPD& psi, const SymPD& sigma,
                                                RescaleRule rule) {
    if (rule == RescaleRule::none) return {psi, sigma};
    double c;
    if (rule == RescaleRule::trace_sigma_d) {
        c = sigma.mat().trace() / sigma.dim();
    } else {
        c = std::exp(sigma.log_det() / sigma.dim());
    }
    return {SymPD(c * psi.mat()), SymPD(sigma.mat() / c)};
}

std::pair<SymPD, SymPD> shrink(const Matrix& sigma_hat, const Matrix& psi_hat,
                               double lambda, double tau) {
    require(lambda > 0.0 && lambda < 1.0, "shrinkage weight must lie in (0, 1)");
    require(tau > 0.0, "ridge level must be positive");
    require(sigma_hat.rows() == sigma_hat.cols() && psi_hat.rows() == psi_hat.cols(),
            "shrink inputs must be square");
    const Matrix s = (1.0 - lambda) * symmetrized(sigma_hat) +
                     lambda * tau * Matrix::Identity(sigma_hat.rows(), sigma_hat.cols());
    const Matrix p = (1.0 - lambda) * symmetrized(psi_hat) +
                     lambda * tau * Matrix::Identity(psi_hat.rows(), psi_hat.cols());
    return {SymPD(s), SymPD(p)};
}

namespace {

Matrix ridge_blend(const Matrix& est, double lambda, double tau) {
    if (lambda == 0.0) return est;
    return (1.0 - lambda) * est + lambda * tau * Matrix::Identity(est.rows(), est.cols());
}

}  // namespace

FlipFlopResult weighted_flipflop(const SampleBatch& batch, const FlipFlopConfig& config,
                                 const SymPD& psi0) {
    const int nu = batch.nu(), d = batch.d();
    config.validate(nu, d);
    require(psi0.dim() == nu, "psi0 dimension mismatch");

    const Matrix wmat = config.w ? config.w->mat() : Matrix(Matrix::Identity(nu, nu));
    const Matrix umat = config.u ? config.u->mat() : Matrix(Matrix::Identity(d, d));

    SymPD psi = psi0;
    SymPD sigma(Matrix::Identity(d, d));
    Matrix kron_prev;
    bool have_prev = false;
    int iters = 0;
    bool converged = false;

    for (int t = 0; t < config.max_iter; ++t) {
        const Matrix sig_raw = ridge_blend(sigma_moment_map(batch, psi, wmat),
                                           config.ridge_lambda, config.ridge_tau);
        try {
            sigma = SymPD(sig_raw);
        } catch (const NumericalError&) {
            throw NumericalError("flip-flop iteration " + std::to_string(t) +
                                 ": sigma update not positive definite (rank-deficient data)");
        }
        const Matrix psi_raw = ridge_blend(psi_moment_map(batch, sigma, umat),
                                           config.ridge_lambda, config.ridge_tau);
        try {
            psi = SymPD(psi_raw);
        } catch (const NumericalError&) {
            throw NumericalError("flip-flop iteration " + std::to_string(t) +
                                 ": psi update not positive definite (rank-deficient data)");
        }
        std::tie(psi, sigma) = rescale_identifiability(psi, sigma, config.rescale);
        iters = t + 1;

        const Matrix kron_cur = kron_dense(psi.mat(), sigma.mat());
        if (have_prev) {
            const double denom = kron_prev.norm();
            if ((kron_cur - kron_prev).norm() <= config.tol * denom) {
                converged = true;
                kron_prev = kron_cur;
                break;
            }
        }
        kron_prev = kron_cur;
        have_prev = true;
    }
    return {psi, sigma, iters, converged};
}

namespace {

Matrix mask_diag(const std::vector<int>& mask) {
    Matrix m = Matrix::Zero(mask.size(), mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) m(i, i) = mask[i] ? 1.0 : 0.0;
    return m;
}

int mask_trace(const std::vector<int>& mask) {
    int t = 0;
    for (int v : mask) t += v ? 1 : 0;
    return t;
}

// Sub-matrix on the observed indices.
Matrix block_of(const Matrix& full, const std::vector<int>& mask) {
    std::vector<int> idx;
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) idx.push_back(static_cast<int>(i));
    Matrix sub(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
        for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = full(idx[a], idx[b]);
    return sub;
}

MaskedEstimate masked_output(const Matrix& carrier, const std::vector<int>& mask) {
    const int n = static_cast<int>(mask.size());
    MaskedEstimate out;
    out.value = Matrix::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
    out.known.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const bool k = mask[i] && mask[j];
            out.known(i, j) = k;
            if (k) out.value(i, j) = carrier(i, j);
        }
    return out;
}

}  // namespace

MaskedFlipFlopResult masked_flipflop(const SampleBatch& batch, const std::vector<int>& p_mask,
                                     const std::vector<int>& q_mask,
                                     const FlipFlopConfig& config) {
    const int nu = batch.nu(), d = batch.d();
    require(static_cast<int>(p_mask.size()) == nu, "row mask length mismatch");
    require(static_cast<int>(q_mask.size()) == d, "column mask length mismatch");
    const int tr_p = mask_trace(p_mask), tr_q = mask_trace(q_mask);
    require(tr_p >= 1, "empty row mask");
    require(tr_q >= 1, "empty column mask");
    config.validate(nu, d);

    const Matrix p = mask_diag(p_mask);
    const Matrix q = mask_diag(q_mask);

    // Observed data only; unobserved rows/columns never enter the updates.
    SampleBatch masked(nu, d, batch.seed(), batch.count());
    for (Eigen::Index k = 0; k < batch.count(); ++k)
        masked.set_sample(k, p * batch.sample(k) * q);

    // Carriers keep identity filler on the unobserved blocks so inverse
    // roots stay defined; filler values never reach the output.
    const Matrix p_fill = Matrix::Identity(nu, nu) - p;
    const Matrix q_fill = Matrix::Identity(d, d) - q;
    SymPD psi_c(Matrix::Identity(nu, nu));
    SymPD sigma_c(Matrix::Identity(d, d));

    Matrix kron_prev;
    bool have_prev = false;
    int iters = 0;
    bool converged = false;

    for (int t = 0; t < config.max_iter; ++t) {
        try {
            Matrix s = sigma_moment_map(masked, psi_c, p);
            s = q * s * q;  // identifiable block only
            if (config.ridge_lambda > 0.0)
                s = (1.0 - config.ridge_lambda) * s + config.ridge_lambda * config.ridge_tau * q;
            sigma_c = SymPD(s + q_fill);

            Matrix ps = psi_moment_map(masked, sigma_c, q);
            ps = p * ps * p;
            if (config.ridge_lambda > 0.0)
                ps = (1.0 - config.ridge_lambda) * ps + config.ridge_lambda * config.ridge_tau * p;
            psi_c = SymPD(ps + p_fill);
        } catch (const NumericalError& e) {
            throw NumericalError("masked flip-flop iteration " + std::to_string(t) +
                                 ": " + e.what());
        }

        if (config.rescale != RescaleRule::none) {
            const Matrix sig_block = block_of(sigma_c.mat(), q_mask);
            double c;
            if (config.rescale == RescaleRule::trace_sigma_d) {
                c = sig_block.trace() / tr_q;
            } else {
                c = std::exp(SymPD(sig_block).log_det() / tr_q);
            }
            sigma_c = SymPD(q * sigma_c.mat() * q / c + q_fill);
            psi_c = SymPD(p * psi_c.mat() * p * c + p_fill);
        }
        iters = t + 1;

        const Matrix kron_cur =
            kron_dense(block_of(psi_c.mat(), p_mask), block_of(sigma_c.mat(), q_mask));
        if (have_prev) {
            if ((kron_cur - kron_prev).norm() <= config.tol * kron_prev.norm()) {
                converged = true;
                kron_prev = kron_cur;
                break;
            }
        }
        kron_prev = kron_cur;
        have_prev = true;
    }

    MaskedFlipFlopResult out{masked_output(sigma_c.mat(), q_mask),
                             masked_output(psi_c.mat(), p_mask), iters, converged};
    return out;
}

StructuredBasis::StructuredBasis(std::vector<Matrix> b, std::vector<Matrix> a,
                                 std::vector<Matrix> u, std::vector<Matrix> w)
    : b_templates(std::move(b)), a_templates(std::move(a)), u_weights(std::move(u)),
      w_weights(std::move(w)) {
    require(!b_templates.empty() && !a_templates.empty(), "templates must be nonempty");
    require(!u_weights.empty() && !w_weights.empty(), "weight families must be nonempty");
    auto check_sym = [](const std::vector<Matrix>& ms, const char* what) {
        for (const Matrix& m : ms) {
            require(m.rows() == m.cols(), std::string(what) + " must be square");
            require((m - m.transpose()).norm() <= 1e-12 * std::max(1.0, m.norm()),
                    std::string(what) + " must be symmetric");
        }
    };
    check_sym(b_templates, "Sigma template");
    check_sym(a_templates, "Psi template");
    check_sym(u_weights, "U weight");
    check_sym(w_weights, "W weight");
    for (const Matrix& m : u_weights)
        require(std::abs(m.trace()) > 0.0, "U weight trace must be nonzero");
    for (const Matrix& m : w_weights)
        require(std::abs(m.trace()) > 0.0, "W weight trace must be nonzero");

    auto check_rank = [](const Matrix& c, const char* what) {
        require(c.rows() >= c.cols(), std::string(what) + " needs at least as many weights as templates");
        Eigen::JacobiSVD<Matrix> svd(c);
        const auto& sv = svd.singularValues();
        require(sv[sv.size() - 1] > 1e-10 * sv[0],
                std::string(what) + " design matrix is rank deficient");
    };
    check_rank(design_sigma(), "Sigma");
    check_rank(design_psi(), "Psi");
}

Matrix StructuredBasis::design_sigma() const {
    Matrix c(u_weights.size(), b_templates.size());
    for (std::size_t m = 0; m < u_weights.size(); ++m)
        for (std::size_t j = 0; j < b_templates.size(); ++j)
            c(m, j) = (b_templates[j] * u_weights[m]).trace();
    return c;
}

Matrix StructuredBasis::design_psi() const {
    Matrix c(w_weights.size(), a_templates.size());
    for (std::size_t r = 0; r < w_weights.size(); ++r)
        for (std::size_t l = 0; l < a_templates.size(); ++l)
            c(r, l) = (a_templates[l] * w_weights[r]).trace();
    return c;
}

StructuredFit structured_solve(const StructuredBasis& basis, const Vector& y_sigma,
                               const Vector& y_psi) {
    const Matrix cs = basis.design_sigma();
    const Matrix cp = basis.design_psi();
    require(y_sigma.size() == cs.rows(), "y_sigma length mismatch");
    require(y_psi.size() == cp.rows(), "y_psi length mismatch");

    StructuredFit fit;
    fit.beta = cs.colPivHouseholderQr().solve(y_sigma);
    fit.alpha = cp.colPivHouseholderQr().solve(y_psi);
    fit.residual_sigma = (cs * fit.beta - y_sigma).norm();
    fit.residual_psi = (cp * fit.alpha - y_psi).norm();

    fit.sigma = Matrix::Zero(basis.d(), basis.d());
    for (Eigen::Index j = 0; j < fit.beta.size(); ++j)
        fit.sigma += fit.beta[j] * basis.b_templates[j];
    fit.sigma = symmetrized(fit.sigma);
    fit.psi = Matrix::Zero(basis.nu(), basis.nu());
    for (Eigen::Index l = 0; l < fit.alpha.size(); ++l)
        fit.psi += fit.alpha[l] * basis.a_templates[l];
    fit.psi = symmetrized(fit.psi);

    Eigen::SelfAdjointEigenSolver<Matrix> es_s(fit.sigma);
    fit.sigma_pd = es_s.eigenvalues()[0] > 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es_p(fit.psi);
    fit.psi_pd = es_p.eigenvalues()[0] > 0.0;
    return fit;
}

namespace {

Vector structured_targets_sigma(const SampleBatch& batch, const StructuredBasis& basis,
                                const SymPD& psi_eval) {
    const std::size_t big_r = basis.w_weights.size();
    const std::size_t big_m = basis.u_weights.size();
    std::vector<Matrix> m_r(big_r);
    for (std::size_t r = 0; r < big_r; ++r)
        m_r[r] = sigma_moment_map(batch, psi_eval, basis.w_weights[r]);
    Vector y(big_m);
    for (std::size_t m = 0; m < big_m; ++m) {
        double acc = 0.0;
        for (std::size_t r = 0; r < big_r; ++r) acc += (m_r[r] * basis.u_weights[m]).trace();
        y[m] = acc / static_cast<double>(big_r);
    }
    return y;
}

Vector structured_targets_psi(const SampleBatch& batch, const StructuredBasis& basis,
                              const SymPD& sigma_eval) {
    const std::size_t big_r = basis.w_weights.size();
    const std::size_t big_m = basis.u_weights.size();
    std::vector<Matrix> n_m(big_m);
    for (std::size_t m = 0; m < big_m; ++m)
        n_m[m] = psi_moment_map(batch, sigma_eval, basis.u_weights[m]);
    Vector y(big_r);
    for (std::size_t r = 0; r < big_r; ++r) {
        double acc = 0.0;
        for (std::size_t m = 0; m < big_m; ++m) acc += (n_m[m] * basis.w_weights[r]).trace();
        y[r] = acc / static_cast<double>(big_m);
    }
    return y;
}

bool is_pd(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    return es.eigenvalues()[0] > 0.0;
}

}  // namespace

StructuredHalfFit structured_fit_sigma(const SampleBatch& batch, const StructuredBasis& basis,
                                       const SymPD& psi_eval) {
    require(basis.nu() == batch.nu() && basis.d() == batch.d(), "basis shape mismatch");
    const Vector y = structured_targets_sigma(batch, basis, psi_eval);
    const Matrix c = basis.design_sigma();
    StructuredHalfFit fit;
    fit.coef = c.colPivHouseholderQr().solve(y);
    fit.residual = (c * fit.coef - y).norm();
    fit.value = Matrix::Zero(basis.d(), basis.d());
    for (Eigen::Index j = 0; j < fit.coef.size(); ++j)
        fit.value += fit.coef[j] * basis.b_templates[j];
    fit.value = symmetrized(fit.value);
    fit.pd = is_pd(fit.value);
    return fit;
}

StructuredHalfFit structured_fit_psi(const SampleBatch& batch, const StructuredBasis& basis,
                                     const SymPD& sigma_eval) {
    require(basis.nu() == batch.nu() && basis.d() == batch.d(), "basis shape mismatch");
    const Vector y = structured_targets_psi(batch, basis, sigma_eval);
    const Matrix c = basis.design_psi();
    StructuredHalfFit fit;
    fit.coef = c.colPivHouseholderQr().solve(y);
    fit.residual = (c * fit.coef - y).norm();
    fit.value = Matrix::Zero(basis.nu(), basis.nu());
    for (Eigen::Index l = 0; l < fit.coef.size(); ++l)
        fit.value += fit.coef[l] * basis.a_templates[l];
    fit.value = symmetrized(fit.value);
    fit.pd = is_pd(fit.value);
    return fit;
}

StructuredFit structured_projection(const SampleBatch& batch, const StructuredBasis& basis,
                                    const SymPD& psi_eval, const SymPD& sigma_eval) {
    require(basis.nu() == batch.nu() && basis.d() == batch.d(), "basis shape mismatch");
    const Vector y_sigma = structured_targets_sigma(batch, basis, psi_eval);
    const Vector y_psi = structured_targets_psi(batch, basis, sigma_eval);
    return structured_solve(basis, y_sigma, y_psi);
}

}  // namespace matstein
