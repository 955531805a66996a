#include "matstein/stein.hpp"

#include "matstein/rng.hpp"

#include <cmath>
#include <limits>

namespace matstein {

namespace {

constexpr double kPi = 3.14159265358979323846;
// sup |tanh'|, sup |tanh''|, sup |tanh'''|
constexpr double kTanhD1 = 1.0;
const double kTanhD2 = 4.0 / (3.0 * std::sqrt(3.0));
constexpr double kTanhD3 = 2.0;

double gamma_ratio_half(int m) {
    // Gamma(m/2) / Gamma(m/2 + 1/2)
    return std::exp(std::lgamma(0.5 * m) - std::lgamma(0.5 * (m + 1)));
}

int pair_index(int i, int j, int d) { return i * d + j; }

}  // namespace

Matrix fd_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
    Matrix g(x.rows(), x.cols());
    Matrix xp = x;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double orig = xp(i, j);
            xp(i, j) = orig + step;
            const double up = f(xp);
            xp(i, j) = orig - step;
            const double dn = f(xp);
            xp(i, j) = orig;
            g(i, j) = (up - dn) / (2.0 * step);
        }
    }
    return g;
}

Matrix fd_hessian(const std::function<double(const Matrix&)>& f, const Matrix& x, double step) {
    const int nu = static_cast<int>(x.rows()), d = static_cast<int>(x.cols());
    const int n = nu * d;
    Matrix h(n, n);
    Matrix xp = x;
    const double f0 = f(x);
    for (int a = 0; a < n; ++a) {
        const int ia = a / d, ja = a % d;
        const double oa = xp(ia, ja);
        xp(ia, ja) = oa + step;
        const double up = f(xp);
        xp(ia, ja) = oa - step;
        const double dn = f(xp);
        xp(ia, ja) = oa;
        h(a, a) = (up - 2.0 * f0 + dn) / (step * step);
        for (int b = a + 1; b < n; ++b) {
            const int ib = b / d, jb = b % d;
            const double ob = xp(ib, jb);
            double v[4];
            const double sa[4] = {step, step, -step, -step};
            const double sb[4] = {step, -step, step, -step};
            for (int k = 0; k < 4; ++k) {
                xp(ia, ja) = oa + sa[k];
                xp(ib, jb) = ob + sb[k];
                v[k] = f(xp);
            }
            xp(ia, ja) = oa;
            xp(ib, jb) = ob;
            h(a, b) = h(b, a) = (v[0] - v[1] - v[2] + v[3]) / (4.0 * step * step);
        }
    }
    return h;
}

bool validate_gradient(const TestFunction& f, std::uint64_t seed, double point_scale) {
    require(f.has_gradient(), "validate_gradient needs an exact gradient");
    Rng rng(seed);
    for (int p = 0; p < 20; ++p) {
        Matrix x(f.nu, f.d);
        for (int i = 0; i < f.nu; ++i)
            for (int j = 0; j < f.d; ++j) x(i, j) = point_scale * rng.next_normal();
        const Matrix exact = f.gradient(x);
        const Matrix approx = fd_gradient(f.value, x, 1e-5);
        const double denom = std::max(1.0, exact.norm());
        if ((exact - approx).norm() > 1e-5 * denom) return false;
    }
    return true;
}

namespace {

double diffusion_term(const TestFunction& f, const SymPD& psi, const SymPD& sigma,
                      const Matrix& x, bool allow_fd, double fd_step) {
    Matrix h;
    if (f.has_hessian()) {
        h = f.hessian(x);
    } else {
        require(allow_fd, "test function lacks second partials and finite differences are disabled");
        h = fd_hessian(f.value, x, fd_step);
    }
    const int nu = f.nu, d = f.d;
    double acc = 0.0;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < nu; ++k)
                for (int l = 0; l < d; ++l)
                    acc += psi(i, k) * sigma(j, l) * h(pair_index(i, j, d), pair_index(k, l, d));
    return acc;
}

Matrix gradient_of(const TestFunction& f, const Matrix& x, bool allow_fd, double fd_step) {
    if (f.has_gradient()) return f.gradient(x);
    require(allow_fd, "test function lacks a gradient and finite differences are disabled");
    return fd_gradient(f.value, x, fd_step);
}

}  // namespace

double ou_generator(const TestFunction& f, const SymPD& psi, const SymPD& sigma,
                    const Matrix& x, bool allow_fd, double fd_step) {
    require(x.rows() == f.nu && x.cols() == f.d, "evaluation point shape mismatch");
    require(psi.dim() == f.nu && sigma.dim() == f.d, "scale shape mismatch");
    const Matrix grad = gradient_of(f, x, allow_fd, fd_step);
    const double drift = -(x.array() * grad.array()).sum();
    return drift + diffusion_term(f, psi, sigma, x, allow_fd, fd_step);
}

TestFunction quadratic_probe(const SymPD& w, const SymPD& u, const SymPD& psi) {
    require(w.dim() == psi.dim(), "probe weight W must match psi dimension");
    const int nu = psi.dim(), d = u.dim();
    const Matrix b = psi.inv_sqrt_mat() * w.mat() * psi.inv_sqrt_mat();
    const Matrix umat = u.mat();
    const double tr_w = w.mat().trace();

    TestFunction f;
    f.nu = nu;
    f.d = d;
    f.value = [b, umat](const Matrix& x) { return 0.5 * (x.transpose() * b * x * umat).trace(); };
    f.gradient = [b, umat](const Matrix& x) { return Matrix(b * x * umat); };

    Matrix hess(nu * d, nu * d);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < nu; ++k)
                for (int l = 0; l < d; ++l)
                    hess(pair_index(i, j, d), pair_index(k, l, d)) = b(i, k) * umat(l, j);
    f.hessian = [hess](const Matrix&) { return hess; };

    auto value = f.value;
    f.generator_closed_form = [tr_w, umat, value](const SymPD& sigma, const Matrix& x) {
        return tr_w * (sigma.mat() * umat).trace() - 2.0 * value(x);
    };

    f.meta.holder_alpha = 1.0;
    f.meta.coord_deriv_sups[2] = hess.cwiseAbs().maxCoeff();
    f.meta.coord_deriv_sups[3] = 0.0;
    double max_row = 0.0;
    for (int a = 0; a < nu * d; ++a) max_row = std::max(max_row, hess.row(a).norm());
    f.meta.class_lip[2] = max_row;
    f.meta.class_lip[3] = 0.0;
    f.meta.frechet_sups[2] = norms(hess).spectral;
    return f;
}

TestFunction quadratic_probe_row(const SymPD& w, const SymPD& u, const SymPD& sigma) {
    require(u.dim() == sigma.dim(), "probe weight U must match sigma dimension");
    const int nu = w.dim(), d = sigma.dim();
    const Matrix c = sigma.inv_sqrt_mat() * u.mat() * sigma.inv_sqrt_mat();
    const Matrix wmat = w.mat();

    TestFunction f;
    f.nu = nu;
    f.d = d;
    f.value = [c, wmat](const Matrix& x) { return 0.5 * (x * c * x.transpose() * wmat).trace(); };
    f.gradient = [c, wmat](const Matrix& x) { return Matrix(wmat * x * c); };
    Matrix hess(nu * d, nu * d);
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < d; ++j)
            for (int k = 0; k < nu; ++k)
                for (int l = 0; l < d; ++l)
                    hess(pair_index(i, j, d), pair_index(k, l, d)) = wmat(i, k) * c(l, j);
    f.hessian = [hess](const Matrix&) { return hess; };
    f.meta.holder_alpha = 1.0;
    return f;
}

MeanSe stein_identity_estimate(const SampleBatch& batch, const TestFunction& f,
                               const SymPD& psi, const SymPD& sigma) {
    require(batch.nu() == f.nu && batch.d() == f.d, "batch shape mismatch");
    const Eigen::Index n = batch.count();
    double mean = 0.0, m2 = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double v = ou_generator(f, psi, sigma, batch.sample(k));
        const double delta = v - mean;
        mean += delta / static_cast<double>(k + 1);
        m2 += delta * (v - mean);
    }
    const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

Matrix t_drift(const MatrixTParams& params, const Matrix& x) {
    require(x.rows() == params.nu() && x.cols() == params.d(), "drift point shape mismatch");
    const double n = params.n_dof;
    const int nu = params.nu();
    const Matrix rinv = params.psi.inv_sqrt_mat();
    const Matrix g = rinv * x;
    const Matrix m = Matrix::Identity(nu, nu) + g * params.sigma.inverse() * g.transpose() / n;
    const double coef = -(n + nu + params.d() - 1) / n;
    return coef * params.psi.sqrt_mat() * m.ldlt().solve(g);
}

double langevin_t_generator(const TestFunction& f, const MatrixTParams& params,
                            const Matrix& x, bool allow_fd, double fd_step) {
    const Matrix grad = gradient_of(f, x, allow_fd, fd_step);
    const Matrix b = t_drift(params, x);
    const double drift = (b.array() * grad.array()).sum();
    return drift + diffusion_term(f, params.psi, params.sigma, x, allow_fd, fd_step);
}

void gauss_legendre_01(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    require(n >= 1, "quadrature order must be positive");
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        // map from (-1,1) to (0,1); store ascending
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        const double w = 1.0 / ((1.0 - z * z) * pp * pp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

SteinSolution::SteinSolution(TestFunction h, SymPD psi, SymPD sigma, QuadratureConfig config)
    : h_(std::move(h)), psi_(std::move(psi)), sigma_(std::move(sigma)), cfg_(config) {
    require(cfg_.t_nodes >= 8, "quadrature configuration too coarse: t_nodes < 8");
    require(cfg_.mc_inner >= 256, "quadrature configuration too coarse: mc_inner < 256");
    require(static_cast<bool>(h_.value), "test function must be evaluable");
    require(h_.meta.holder_alpha.has_value(),
            "solve_stein requires meta.holder_alpha for truncation control");
    require(h_.nu == psi_.dim() && h_.d == sigma_.dim(), "test function shape mismatch");

    gauss_legendre_01(cfg_.t_nodes, u_, w_);

    const int nu = h_.nu, d = h_.d;
    const Matrix psi_s = psi_.sqrt_mat();
    const Matrix sigma_s = sigma_.sqrt_mat();
    noise_.resize(cfg_.mc_inner);
    h_noise_.resize(cfg_.mc_inner);
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < cfg_.mc_inner; ++i) {
        Rng rng(cfg_.seed, static_cast<std::uint64_t>(i));
        Matrix z(nu, d);
        for (int r = 0; r < nu; ++r)
            for (int c = 0; c < d; ++c) z(r, c) = rng.next_normal();
        noise_[i] = psi_s * z * sigma_s;
        const double v = h_.value(noise_[i]);
        h_noise_[i] = v;
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    h_mean_ = mean;
    h_mean_se_ = std::sqrt(m2 / (cfg_.mc_inner - 1) / cfg_.mc_inner);
}

MeanSe SteinSolution::evaluate_with_se(const Matrix& x) const {
    const int q_n = cfg_.t_nodes, mc = cfg_.mc_inner;
    std::vector<Matrix> ux(q_n);
    std::vector<double> cq(q_n);
    for (int q = 0; q < q_n; ++q) {
        ux[q] = u_[q] * x;
        cq[q] = std::sqrt(std::max(0.0, 1.0 - u_[q] * u_[q]));
    }
    Matrix buf(x.rows(), x.cols());
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < mc; ++i) {
        double g = 0.0;
        for (int q = 0; q < q_n; ++q) {
            buf = ux[q] + cq[q] * noise_[i];
            g -= w_[q] / u_[q] * (h_.value(buf) - h_noise_[i]);
        }
        const double delta = g - mean;
        mean += delta / (i + 1);
        m2 += delta * (g - mean);
    }
    return {mean, std::sqrt(m2 / (mc - 1) / mc)};
}

double SteinSolution::evaluate(const Matrix& x) const { return evaluate_with_se(x).mean; }

std::vector<double> SteinSolution::evaluate_many(const std::vector<Matrix>& points) const {
    const int q_n = cfg_.t_nodes, mc = cfg_.mc_inner;
    const int np = static_cast<int>(points.size());
    std::vector<Matrix> ux(static_cast<std::size_t>(q_n) * np);
    std::vector<double> cq(q_n);
    for (int q = 0; q < q_n; ++q) {
        cq[q] = std::sqrt(std::max(0.0, 1.0 - u_[q] * u_[q]));
        for (int p = 0; p < np; ++p) ux[static_cast<std::size_t>(q) * np + p] = u_[q] * points[p];
    }
    std::vector<double> acc(np, 0.0);
    Matrix scaled, buf;
    for (int i = 0; i < mc; ++i) {
        const double hn = h_noise_[i];
        for (int q = 0; q < q_n; ++q) {
            scaled = cq[q] * noise_[i];
            const double wq = w_[q] / u_[q];
            for (int p = 0; p < np; ++p) {
                buf = ux[static_cast<std::size_t>(q) * np + p] + scaled;
                acc[p] -= wq * (h_.value(buf) - hn);
            }
        }
    }
    for (double& v : acc) v /= mc;
    return acc;
}

Matrix SteinSolution::gradient_fd(const Matrix& x, double step) const {
    const int nu = h_.nu, d = h_.d;
    std::vector<Matrix> pts;
    pts.reserve(2 * nu * d);
    for (int a = 0; a < nu * d; ++a) {
        Matrix xp = x;
        xp(a / d, a % d) += step;
        pts.push_back(xp);
        xp(a / d, a % d) -= 2.0 * step;
        pts.push_back(xp);
    }
    const std::vector<double> v = evaluate_many(pts);
    Matrix g(nu, d);
    for (int a = 0; a < nu * d; ++a) g(a / d, a % d) = (v[2 * a] - v[2 * a + 1]) / (2.0 * step);
    return g;
}

double SteinSolution::generator_fd(const Matrix& x, double grad_step, double hess_step) const {
    const int nu = h_.nu, d = h_.d;
    const int n = nu * d;
    std::vector<Matrix> pts;
    pts.push_back(x);
    for (int a = 0; a < n; ++a) {
        Matrix xp = x;
        xp(a / d, a % d) = x(a / d, a % d) + grad_step;
        pts.push_back(xp);
        xp(a / d, a % d) = x(a / d, a % d) - grad_step;
        pts.push_back(xp);
        xp(a / d, a % d) = x(a / d, a % d) + hess_step;
        pts.push_back(xp);
        xp(a / d, a % d) = x(a / d, a % d) - hess_step;
        pts.push_back(xp);
    }
    // Off-diagonal Hessian stencils only where the Psi/Sigma weight is nonzero.
    std::vector<std::pair<int, int>> cross;
    for (int a = 0; a < n; ++a) {
        for (int b = a + 1; b < n; ++b) {
            const double coef = psi_(a / d, b / d) * sigma_(a % d, b % d);
            if (coef != 0.0) {
                cross.emplace_back(a, b);
                const double sa[4] = {hess_step, hess_step, -hess_step, -hess_step};
                const double sb[4] = {hess_step, -hess_step, hess_step, -hess_step};
                for (int k = 0; k < 4; ++k) {
                    Matrix xp = x;
                    xp(a / d, a % d) += sa[k];
                    xp(b / d, b % d) += sb[k];
                    pts.push_back(xp);
                }
            }
        }
    }

    const std::vector<double> v = evaluate_many(pts);
    const double f0 = v[0];
    double drift = 0.0, diff = 0.0;
    for (int a = 0; a < n; ++a) {
        const double gplus = v[1 + 4 * a], gminus = v[2 + 4 * a];
        const double hplus = v[3 + 4 * a], hminus = v[4 + 4 * a];
        drift -= x(a / d, a % d) * (gplus - gminus) / (2.0 * grad_step);
        diff += psi_(a / d, a / d) * sigma_(a % d, a % d) *
                (hplus - 2.0 * f0 + hminus) / (hess_step * hess_step);
    }
    std::size_t off = 1 + 4 * static_cast<std::size_t>(n);
    for (const auto& [a, b] : cross) {
        const double coef = psi_(a / d, b / d) * sigma_(a % d, b % d);
        const double hab = (v[off] - v[off + 1] - v[off + 2] + v[off + 3]) /
                           (4.0 * hess_step * hess_step);
        diff += 2.0 * coef * hab;
        off += 4;
    }
    return drift + diff;
}

SteinSolution solve_stein(const TestFunction& h, const SymPD& psi, const SymPD& sigma,
                          const QuadratureConfig& config) {
    return SteinSolution(h, psi, sigma, config);
}

double stein_residual(const SteinSolution& sol, const Matrix& x) {
    return sol.generator_fd(x) - (sol.h()(x) - sol.h_mean());
}

namespace {

double anisotropy_factor(const SymPD& psi, const SymPD& sigma,
                         const std::vector<std::pair<int, int>>& indices, bool take_min) {
    const Matrix psi_inv = psi.inverse();
    const Matrix sigma_inv = sigma.inverse();
    if (!indices.empty()) {
        double best = take_min ? std::numeric_limits<double>::infinity() : 0.0;
        for (const auto& [i, j] : indices) {
            require(i >= 0 && i < psi.dim() && j >= 0 && j < sigma.dim(),
                    "regularity bound index out of range");
            const double f = std::sqrt(psi_inv(i, i) * sigma_inv(j, j));
            best = take_min ? std::min(best, f) : std::max(best, f);
        }
        return best;
    }
    // No tuple given: maximize over entries, valid for every tuple.
    double best = 0.0;
    for (int i = 0; i < psi.dim(); ++i)
        for (int j = 0; j < sigma.dim(); ++j)
            best = std::max(best, std::sqrt(psi_inv(i, i) * sigma_inv(j, j)));
    return best;
}

double meta_at(const std::map<int, double>& m, int key, const char* what) {
    auto it = m.find(key);
    if (it == m.end())
        throw ValidationError(std::string("missing metadata: ") + what + " at order " +
                              std::to_string(key));
    return it->second;
}

}  // namespace

double regularity_bound_rhs(BoundKind kind, int m, const TestFunction& h,
                            const SymPD& psi, const SymPD& sigma,
                            const std::vector<std::pair<int, int>>& indices) {
    require(m >= 1, "bound order must be >= 1");
    const double spec_fac = 1.0 / std::sqrt(psi.eigenvalues()[psi.dim() - 1] *
                                            sigma.eigenvalues()[sigma.dim() - 1]);
    switch (kind) {
        case BoundKind::coord_m:
            return meta_at(h.meta.coord_deriv_sups, m, "coord_deriv_sups") / m;
        case BoundKind::coord_bounded: {
            require(h.meta.bounded_sup.has_value(), "missing metadata: bounded_sup");
            return std::sqrt(kPi / 2.0) * anisotropy_factor(psi, sigma, indices, false) *
                   *h.meta.bounded_sup;
        }
        case BoundKind::coord_mixed: {
            require(m >= 2, "mixed bound needs m >= 2");
            const double sups = meta_at(h.meta.coord_deriv_sups, m - 1, "coord_deriv_sups");
            return gamma_ratio_half(m) / std::sqrt(2.0) *
                   anisotropy_factor(psi, sigma, indices, !indices.empty()) * sups;
        }
        case BoundKind::frechet_m:
            return meta_at(h.meta.frechet_sups, m, "frechet_sups") / m;
        case BoundKind::frechet_bounded: {
            require(h.meta.bounded_sup.has_value(), "missing metadata: bounded_sup");
            return std::sqrt(kPi / 2.0) * spec_fac * *h.meta.bounded_sup;
        }
        case BoundKind::frechet_mixed: {
            require(m >= 2, "mixed bound needs m >= 2");
            const double sups = meta_at(h.meta.frechet_sups, m - 1, "frechet_sups");
            return gamma_ratio_half(m) / std::sqrt(2.0) * spec_fac * sups;
        }
    }
    throw ValidationError("unknown bound kind");
}

double frechet_lower_estimate(const std::function<double(const Matrix&)>& f, int nu, int d,
                              int order, const std::vector<Matrix>& grid, int n_dirs,
                              std::uint64_t seed, double step) {
    require(order == 1 || order == 2, "frechet_lower_estimate supports orders 1 and 2");
    Rng rng(seed);
    auto random_dir = [&]() {
        Matrix u(nu, d);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < d; ++j) u(i, j) = rng.next_normal();
        u /= u.norm();
        return u;
    };
    double best = 0.0;
    for (int t = 0; t < n_dirs; ++t) {
        const Matrix u1 = random_dir();
        const Matrix u2 = order == 2 ? random_dir() : Matrix();
        for (const Matrix& x : grid) {
            double v;
            if (order == 1) {
                v = (f(x + step * u1) - f(x - step * u1)) / (2.0 * step);
            } else {
                v = (f(x + step * u1 + step * u2) - f(x + step * u1 - step * u2) -
                     f(x - step * u1 + step * u2) + f(x - step * u1 - step * u2)) /
                    (4.0 * step * step);
            }
            best = std::max(best, std::abs(v));
        }
    }
    return best;
}

TestFunction make_constant(int nu, int d, double c) {
    TestFunction f;
    f.nu = nu;
    f.d = d;
    f.value = [c](const Matrix&) { return c; };
    f.gradient = [nu, d](const Matrix&) { return Matrix(Matrix::Zero(nu, d)); };
    f.hessian = [nu, d](const Matrix&) { return Matrix(Matrix::Zero(nu * d, nu * d)); };
    f.meta.holder_alpha = 1.0;
    f.meta.holder_const = 0.0;
    f.meta.bounded_sup = 0.0;
    f.meta.coord_deriv_sups = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
    f.meta.frechet_sups = {{1, 0.0}, {2, 0.0}};
    f.meta.class_lip = {{1, 0.0}, {2, 0.0}, {3, 0.0}};
    return f;
}

TestFunction make_linear(const Matrix& c) {
    TestFunction f;
    f.nu = static_cast<int>(c.rows());
    f.d = static_cast<int>(c.cols());
    const int n = f.nu * f.d;
    f.value = [c](const Matrix& x) { return (c.array() * x.array()).sum(); };
    f.gradient = [c](const Matrix&) { return c; };
    f.hessian = [n](const Matrix&) { return Matrix(Matrix::Zero(n, n)); };
    f.meta.holder_alpha = 1.0;
    f.meta.holder_const = c.norm();
    f.meta.coord_deriv_sups = {{1, c.cwiseAbs().maxCoeff()}, {2, 0.0}, {3, 0.0}};
    f.meta.frechet_sups = {{1, c.norm()}, {2, 0.0}};
    f.meta.class_lip = {{1, c.norm()}, {2, 0.0}, {3, 0.0}};
    return f;
}

TestFunction make_tanh_ridge(const Matrix& c, double scale, double shift) {
    TestFunction f;
    f.nu = static_cast<int>(c.rows());
    f.d = static_cast<int>(c.cols());
    const int d = f.d;
    f.value = [c, scale, shift](const Matrix& x) {
        return scale * std::tanh((c.array() * x.array()).sum() + shift);
    };
    f.gradient = [c, scale, shift](const Matrix& x) {
        const double t = std::tanh((c.array() * x.array()).sum() + shift);
        return Matrix(scale * (1.0 - t * t) * c);
    };
    f.hessian = [c, scale, shift, d](const Matrix& x) {
        const double t = std::tanh((c.array() * x.array()).sum() + shift);
        const double t2 = -2.0 * t * (1.0 - t * t);
        const int n = static_cast<int>(c.size());
        Matrix h(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                h(a, b) = scale * t2 * c(a / d, a % d) * c(b / d, b % d);
        return h;
    };
    const double cmax = c.cwiseAbs().maxCoeff();
    const double cnorm = c.norm();
    f.meta.holder_alpha = 1.0;
    f.meta.holder_const = scale * cnorm;
    f.meta.bounded_sup = 2.0 * scale;
    f.meta.coord_deriv_sups = {{1, scale * cmax * kTanhD1},
                               {2, scale * cmax * cmax * kTanhD2},
                               {3, scale * cmax * cmax * cmax * kTanhD3}};
    f.meta.frechet_sups = {{1, scale * cnorm},
                           {2, scale * cnorm * cnorm * kTanhD2},
                           {3, scale * cnorm * cnorm * cnorm * kTanhD3}};
    f.meta.class_lip = {{1, scale * cnorm},
                        {2, scale * cmax * cnorm * kTanhD2},
                        {3, scale * cmax * cmax * cnorm * kTanhD3}};
    return f;
}

TestFunction make_tanh_entry(int nu, int d, int i, int j) {
    require(i >= 0 && i < nu && j >= 0 && j < d, "tanh entry index out of range");
    Matrix c = Matrix::Zero(nu, d);
    c(i, j) = 1.0;
    TestFunction f = make_tanh_ridge(c, 1.0, 0.0);
    // E tanh(N_ij) = 0 for the centered stationary law, so the centered sup is 1.
    f.meta.bounded_sup = 1.0;
    return f;
}

}  // namespace matstein
