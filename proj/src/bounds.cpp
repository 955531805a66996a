#include "matstein/bounds.hpp"

#include "matstein/rng.hpp"

#include <algorithm>
#include <cmath>

namespace matstein {

namespace {
constexpr double kSqrt2Pi = 2.5066282746310005024157652848110;
}

void MomentSummary::set_third(int a, int b, int c, double v) {
    const int n = n_entries();
    abs_third[static_cast<std::size_t>((a * n + b)) * n + c] = v;
}

MomentSummary estimate_moments(const SampleBatch& batch) {
    require(batch.count() >= 100, "moment estimation needs at least 100 samples");
    const int nu = batch.nu(), d = batch.d();
    const int n = nu * d;
    const Eigen::Index cnt = batch.count();

    MomentSummary out;
    out.nu = nu;
    out.d = d;
    out.abs_third.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    out.abs_third_se.assign(static_cast<std::size_t>(n) * n * n, 0.0);
    out.abs_first.setZero(nu, d);
    out.abs_first_se.setZero(nu, d);
    out.source = MomentSummary::Source::monte_carlo;

    const Matrix& rows = batch.rows();
    for (int a = 0; a < n; ++a) {
        double mean = 0.0, m2 = 0.0;
        for (Eigen::Index k = 0; k < cnt; ++k) {
            const double v = std::abs(rows(k, a));
            const double delta = v - mean;
            mean += delta / static_cast<double>(k + 1);
            m2 += delta * (v - mean);
        }
        out.abs_first(a / d, a % d) = mean;
        out.abs_first_se(a / d, a % d) =
            std::sqrt(m2 / static_cast<double>(cnt - 1) / static_cast<double>(cnt));
    }

    // The average of |x_a x_b x_c| is permutation symmetric, so each
    // unordered triple is computed once and written to all six slots.
    for (int a = 0; a < n; ++a) {
        for (int b = a; b < n; ++b) {
            for (int c = b; c < n; ++c) {
                double mean = 0.0, m2 = 0.0;
                for (Eigen::Index k = 0; k < cnt; ++k) {
                    const double v = std::abs(rows(k, a) * rows(k, b) * rows(k, c));
                    const double delta = v - mean;
                    mean += delta / static_cast<double>(k + 1);
                    m2 += delta * (v - mean);
                }
                const double se =
                    std::sqrt(m2 / static_cast<double>(cnt - 1) / static_cast<double>(cnt));
                const int perms[6][3] = {{a, b, c}, {a, c, b}, {b, a, c},
                                         {b, c, a}, {c, a, b}, {c, b, a}};
                for (const auto& p : perms) {
                    out.set_third(p[0], p[1], p[2], mean);
                    const int nn = out.n_entries();
                    out.abs_third_se[static_cast<std::size_t>((p[0] * nn + p[1])) * nn + p[2]] = se;
                }
            }
        }
    }
    return out;
}

namespace {

// The braces sum of the CLT bounds factors: the second term separates over
// (i1,i2,j1,j2) and (i3,j3).
double clt_braces_sum(const MomentSummary& m, const SymPD& psi, const SymPD& sigma) {
    require(m.nu == psi.dim() && m.d == sigma.dim(), "moment/scale shape mismatch");
    const int n = m.n_entries();
    double third_sum = 0.0;
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c) third_sum += m.third(a, b, c);
    const double psi_abs = psi.mat().cwiseAbs().sum();
    const double sigma_abs = sigma.mat().cwiseAbs().sum();
    const double first_sum = m.abs_first.sum();
    return 0.5 * third_sum + psi_abs * sigma_abs * first_sum;
}

}  // namespace

double clt_bound_d3(const MomentSummary& moments, const SymPD& psi, const SymPD& sigma, long n) {
    require(n >= 1, "sample count must be positive");
    return clt_braces_sum(moments, psi, sigma) / (3.0 * std::sqrt(static_cast<double>(n)));
}

double clt_bound_d2(const MomentSummary& moments, const SymPD& psi, const SymPD& sigma, long n) {
    require(n >= 1, "sample count must be positive");
    const Matrix psi_inv = psi.inverse();
    const Matrix sigma_inv = sigma.inverse();
    double max_fac = 0.0;
    for (int i = 0; i < psi.dim(); ++i)
        for (int j = 0; j < sigma.dim(); ++j)
            max_fac = std::max(max_fac, std::sqrt(psi_inv(i, i) * sigma_inv(j, j)));
    return kSqrt2Pi / (4.0 * std::sqrt(static_cast<double>(n))) * max_fac *
           clt_braces_sum(moments, psi, sigma);
}

double t_normal_bound(double n_dof, int nu, int d, const SymPD& psi, const SymPD& sigma) {
    require(n_dof > 2.0, "matrix T bound needs dof > 2");
    const double nd = static_cast<double>(nu) * d;
    return 10.0 / std::sqrt(1.0 - 2.0 / n_dof) * nd * nd / n_dof *
           std::sqrt(psi.eigenvalues()[0]) * std::sqrt(sigma.eigenvalues()[0]);
}

DiscrepancyReport discrepancy_estimate(const SampleBatch& a, const SampleBatch& b,
                                       const std::vector<TestFunction>& family) {
    require(a.nu() == b.nu() && a.d() == b.d(), "batch shapes must match");
    require(!family.empty(), "family must be nonempty");

    DiscrepancyReport rep;
    rep.sup_est = 0.0;
    rep.argmax = 0;
    rep.se_at_max = 0.0;
    for (const TestFunction& h : family) {
        if (h.meta.class_lip.empty())
            throw ValidationError("uncertified test function rejected");
        require(h.nu == a.nu() && h.d == a.d(), "test function shape mismatch");

        auto batch_mean = [&](const SampleBatch& batch) {
            double mean = 0.0, m2 = 0.0;
            for (Eigen::Index k = 0; k < batch.count(); ++k) {
                const double v = h.value(batch.sample(k));
                const double delta = v - mean;
                mean += delta / static_cast<double>(k + 1);
                m2 += delta * (v - mean);
            }
            const double var =
                batch.count() > 1 ? m2 / static_cast<double>(batch.count() - 1) : 0.0;
            return MeanSe{mean, std::sqrt(var / static_cast<double>(batch.count()))};
        };
        const MeanSe ma = batch_mean(a);
        const MeanSe mb = batch_mean(b);
        PerFunctionDiff diff{ma.mean - mb.mean, std::sqrt(ma.se * ma.se + mb.se * mb.se)};
        rep.per_h.push_back(diff);
        if (std::abs(diff.mean_diff) > rep.sup_est) {
            rep.sup_est = std::abs(diff.mean_diff);
            rep.argmax = static_cast<int>(rep.per_h.size()) - 1;
            rep.se_at_max = diff.se;
        }
    }
    return rep;
}

namespace {

// Largest |h(X)-h(Y)| / ||X-Y||^alpha style quotient of the order-(p-1)
// partial derivatives over seeded point pairs; the audit confirms the
// certified Lipschitz constant within 5%.
void audit_class_certificate(const TestFunction& h, int p, double cert, std::uint64_t seed) {
    Rng rng(seed);
    const int nu = h.nu, d = h.d;
    auto random_point = [&](double scale) {
        Matrix x(nu, d);
        for (int i = 0; i < nu; ++i)
            for (int j = 0; j < d; ++j) x(i, j) = scale * rng.next_normal();
        return x;
    };
    auto partial = [&](const Matrix& x, int a) {
        Matrix xp = x;
        const double step = 1e-5;
        xp(a / d, a % d) += step;
        const double up = h.value(xp);
        xp(a / d, a % d) -= 2.0 * step;
        const double dn = h.value(xp);
        return (up - dn) / (2.0 * step);
    };
    auto second_partial = [&](const Matrix& x, int a, int b) {
        const double step = 1e-3;
        if (a == b) {
            Matrix xp = x;
            const double f0 = h.value(x);
            xp(a / d, a % d) += step;
            const double up = h.value(xp);
            xp(a / d, a % d) -= 2.0 * step;
            const double dn = h.value(xp);
            return (up - 2.0 * f0 + dn) / (step * step);
        }
        double v[4];
        const double sa[4] = {step, step, -step, -step};
        const double sb[4] = {step, -step, step, -step};
        for (int k = 0; k < 4; ++k) {
            Matrix xp = x;
            xp(a / d, a % d) += sa[k];
            xp(b / d, b % d) += sb[k];
            v[k] = h.value(xp);
        }
        return (v[0] - v[1] - v[2] + v[3]) / (4.0 * step * step);
    };

    for (int pair = 0; pair < 50; ++pair) {
        const Matrix x = random_point(1.5);
        Matrix y = random_point(1.5);
        if ((x - y).norm() < 1e-6) y.array() += 0.5;
        const double dist = (x - y).norm();
        double quotient = 0.0;
        if (p == 1) {
            quotient = std::abs(h.value(x) - h.value(y)) / dist;
        } else if (p == 2) {
            const int a = static_cast<int>(rng.next_u64() % (nu * d));
            quotient = std::abs(partial(x, a) - partial(y, a)) / dist;
        } else {
            const int a = static_cast<int>(rng.next_u64() % (nu * d));
            const int b = static_cast<int>(rng.next_u64() % (nu * d));
            quotient = std::abs(second_partial(x, a, b) - second_partial(y, a, b)) / dist;
        }
        if (quotient > cert * 1.05 + 1e-7)
            throw NumericalError("calibrated family certificate audit failed");
    }
}

TestFunction make_projection(int nu, int d, int i, int j) {
    Matrix c = Matrix::Zero(nu, d);
    c(i, j) = 1.0;
    return make_linear(c);
}

// h(X) = tanh(||X - A||_F), radial around the anchor with [h]_1 <= 1.
TestFunction make_radial_anchor(const Matrix& anchor) {
    TestFunction f;
    f.nu = static_cast<int>(anchor.rows());
    f.d = static_cast<int>(anchor.cols());
    f.value = [anchor](const Matrix& x) { return std::tanh((x - anchor).norm()); };
    f.meta.holder_alpha = 1.0;
    f.meta.holder_const = 1.0;
    f.meta.bounded_sup = 2.0;
    f.meta.class_lip[1] = 1.0;
    return f;
}

// h(X) = 1/2 X_a X_b (a == b gives the square); unit second derivatives.
TestFunction make_quadratic_entry(int nu, int d, int a, int b) {
    TestFunction f;
    f.nu = nu;
    f.d = d;
    const int ia = a / d, ja = a % d, ib = b / d, jb = b % d;
    f.value = [=](const Matrix& x) { return 0.5 * x(ia, ja) * x(ib, jb); };
    f.gradient = [=](const Matrix& x) {
        Matrix g = Matrix::Zero(nu, d);
        g(ia, ja) += 0.5 * x(ib, jb);
        g(ib, jb) += 0.5 * x(ia, ja);
        return g;
    };
    const int n = nu * d;
    Matrix hess = Matrix::Zero(n, n);
    hess(a, b) += 0.5;
    hess(b, a) += 0.5;
    f.hessian = [hess](const Matrix&) { return hess; };
    f.meta.holder_alpha = 1.0;
    f.meta.coord_deriv_sups[2] = hess.cwiseAbs().maxCoeff();
    f.meta.coord_deriv_sups[3] = 0.0;
    double max_row = 0.0;
    for (int r = 0; r < n; ++r) max_row = std::max(max_row, hess.row(r).norm());
    f.meta.class_lip[2] = max_row;
    f.meta.class_lip[3] = 0.0;
    return f;
}

}  // namespace

std::vector<TestFunction> calibrated_family(TestClass cls, int nu, int d, int size,
                                            std::uint64_t seed) {
    require(size >= 1, "family size must be >= 1");
    const int p = static_cast<int>(cls);
    std::vector<TestFunction> family;
    Rng rng(seed);

    auto push = [&](TestFunction f) {
        if (static_cast<int>(family.size()) >= size) return;
        audit_class_certificate(f, p, f.meta.class_lip.at(p),
                                seed ^ Rng::mix64(family.size() + 1));
        family.push_back(std::move(f));
    };

    // Coordinate projections certify for every class: the relevant partial
    // is constant (p = 1) or identically zero (p >= 2).
    for (int i = 0; i < nu && static_cast<int>(family.size()) < size; ++i)
        for (int j = 0; j < d && static_cast<int>(family.size()) < size; ++j)
            push(make_projection(nu, d, i, j));

    int guard = 0;
    while (static_cast<int>(family.size()) < size && guard++ < 4 * size) {
        const int kind = guard % 2;
        if (kind == 0) {
            // Shifted tanh ridge scaled so the class-p constant is exactly 1.
            Matrix c(nu, d);
            for (int i = 0; i < nu; ++i)
                for (int j = 0; j < d; ++j) c(i, j) = rng.next_normal();
            c /= c.norm();
            const double shift = rng.next_normal();
            TestFunction probe = make_tanh_ridge(c, 1.0, shift);
            const double cert = probe.meta.class_lip.at(p);
            push(make_tanh_ridge(c, 1.0 / cert, shift));
        } else if (cls == TestClass::H1) {
            Matrix anchor(nu, d);
            for (int i = 0; i < nu; ++i)
                for (int j = 0; j < d; ++j) anchor(i, j) = 1.5 * rng.next_normal();
            push(make_radial_anchor(anchor));
        } else {
            const int n = nu * d;
            const int a = static_cast<int>(rng.next_u64() % n);
            const int b = static_cast<int>(rng.next_u64() % n);
            push(make_quadratic_entry(nu, d, a, b));
        }
    }
    return family;
}

}  // namespace matstein
