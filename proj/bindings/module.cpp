#include "matstein/bounds.hpp"
#include "matstein/distributions.hpp"
#include "matstein/estimators.hpp"
#include "matstein/ou.hpp"
#include "matstein/serialize.hpp"
#include "matstein/stein.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace matstein;

namespace {

// Batches cross the boundary as (count, nu, d) arrays.
py::array_t<double> batch_to_array(const SampleBatch& batch) {
    py::array_t<double> out({static_cast<py::ssize_t>(batch.count()),
                             static_cast<py::ssize_t>(batch.nu()),
                             static_cast<py::ssize_t>(batch.d())});
    auto buf = out.mutable_unchecked<3>();
    for (py::ssize_t k = 0; k < buf.shape(0); ++k) {
        const Matrix x = batch.sample(k);
        for (py::ssize_t i = 0; i < buf.shape(1); ++i)
            for (py::ssize_t j = 0; j < buf.shape(2); ++j) buf(k, i, j) = x(i, j);
    }
    return out;
}

SampleBatch batch_from_array(const py::array_t<double>& arr, std::uint64_t seed) {
    if (arr.ndim() != 3) throw ValidationError("batch array must have shape (count, nu, d)");
    auto buf = arr.unchecked<3>();
    SampleBatch batch(static_cast<int>(buf.shape(1)), static_cast<int>(buf.shape(2)), seed,
                      static_cast<Eigen::Index>(buf.shape(0)));
    Matrix x(buf.shape(1), buf.shape(2));
    for (py::ssize_t k = 0; k < buf.shape(0); ++k) {
        for (py::ssize_t i = 0; i < buf.shape(1); ++i)
            for (py::ssize_t j = 0; j < buf.shape(2); ++j) x(i, j) = buf(k, i, j);
        batch.set_sample(k, x);
    }
    return batch;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "matrix-normal Stein framework: samplers, Stein solver, flip-flop estimators";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("sym_sqrt", [](const Matrix& s) { return sym_sqrt(SymPD(s)).mat(); },
          py::arg("s"), "Symmetric square root of a positive definite matrix.");
    m.def("kron", [](const Matrix& a, const Matrix& b, int cap) {
              return kron(SymPD(a), SymPD(b), cap).mat();
          },
          py::arg("a"), py::arg("b"), py::arg("dim_cap") = 64);
    m.def("norms", [](const Matrix& a) {
        const MatrixNorms n = norms(a);
        return py::make_tuple(n.frobenius, n.spectral);
    });
    m.def("random_sympd", [](int dim, std::uint64_t seed, double lo, double hi) {
              return random_sympd(dim, seed, lo, hi).mat();
          },
          py::arg("dim"), py::arg("seed"), py::arg("lo") = 0.5, py::arg("hi") = 2.0);

    m.def("sample_matrix_normal",
          [](const Matrix& mloc, const Matrix& psi, const Matrix& sigma, long count,
             std::uint64_t seed, int threads) {
              const MatrixNormalParams p(mloc, SymPD(psi), SymPD(sigma));
              return batch_to_array(sample_matrix_normal(p, count, seed, threads));
          },
          py::arg("m"), py::arg("psi"), py::arg("sigma"), py::arg("count"), py::arg("seed"),
          py::arg("threads") = 1);
    m.def("log_density_matrix_normal",
          [](const Matrix& mloc, const Matrix& psi, const Matrix& sigma, const Matrix& x) {
              return log_density_matrix_normal(MatrixNormalParams(mloc, SymPD(psi), SymPD(sigma)), x);
          });
    m.def("sample_matrix_t",
          [](double n_dof, const Matrix& psi, const Matrix& sigma, long count,
             std::uint64_t seed, int threads) {
              const MatrixTParams p(n_dof, SymPD(psi), SymPD(sigma));
              return batch_to_array(sample_matrix_t(p, count, seed, threads));
          },
          py::arg("n_dof"), py::arg("psi"), py::arg("sigma"), py::arg("count"), py::arg("seed"),
          py::arg("threads") = 1);
    m.def("log_density_matrix_t",
          [](double n_dof, const Matrix& psi, const Matrix& sigma, const Matrix& x) {
              return log_density_matrix_t(MatrixTParams(n_dof, SymPD(psi), SymPD(sigma)), x);
          });
    m.def("sample_wishart",
          [](int dim, double alpha, std::uint64_t seed) { return sample_wishart(dim, alpha, seed).mat(); },
          py::arg("dim"), py::arg("alpha"), py::arg("seed"));
    m.def("inv_wishart_trace_moments", [](int dim, double alpha) {
        const InvWishartTraceMoments mo = inv_wishart_trace_moments(dim, alpha);
        py::dict out;
        out["m1"] = mo.m1;
        if (mo.m2tr) out["m2tr"] = *mo.m2tr;
        if (mo.m1sq) out["m1sq"] = *mo.m1sq;
        return out;
    });
    m.def("matrix_t_frobenius_moments", [](int nu, int d, double n_dof) {
        const MatrixTFrobeniusMoments mo = matrix_t_frobenius_moments(nu, d, n_dof);
        py::dict out;
        out["m2"] = mo.m2;
        out["m2_bound"] = mo.m2_bound;
        if (mo.m4) out["m4"] = *mo.m4;
        if (mo.m4_bound) out["m4_bound"] = *mo.m4_bound;
        return out;
    });

    m.def("ou_exact_transition",
          [](const Matrix& x0, double t, const Matrix& psi, const Matrix& sigma, long count,
             std::uint64_t seed) {
              return batch_to_array(
                  exact_transition_sample(x0, t, SymPD(psi), SymPD(sigma), count, seed));
          },
          py::arg("x0"), py::arg("t"), py::arg("psi"), py::arg("sigma"), py::arg("count"),
          py::arg("seed"));
    m.def("ou_euler_terminal",
          [](const Matrix& x0, const Matrix& psi, const Matrix& sigma, double dt, double horizon,
             std::uint64_t seed) {
              const OUConfig cfg(SymPD(psi), SymPD(sigma), dt, horizon, OUScheme::euler, seed);
              return euler_path(x0, cfg).states.back();
          },
          py::arg("x0"), py::arg("psi"), py::arg("sigma"), py::arg("dt"), py::arg("horizon"),
          py::arg("seed"));

    m.def("ou_generator_quadratic_probe",
          [](const Matrix& w, const Matrix& u, const Matrix& psi, const Matrix& sigma,
             const Matrix& x) {
              const SymPD psi_s(psi), sigma_s(sigma);
              const TestFunction f = quadratic_probe(SymPD(w), SymPD(u), psi_s);
              return ou_generator(f, psi_s, sigma_s, x);
          },
          "A^OU applied to the quadratic probe f_{W,U} at X.");
    m.def("stein_identity_quadratic_probe",
          [](const py::array_t<double>& batch, const Matrix& w, const Matrix& u,
             const Matrix& psi, const Matrix& sigma) {
              const SymPD psi_s(psi), sigma_s(sigma);
              const SampleBatch b = batch_from_array(batch, 0);
              const TestFunction f = quadratic_probe(SymPD(w), SymPD(u), psi_s);
              const MeanSe est = stein_identity_estimate(b, f, psi_s, sigma_s);
              return py::make_tuple(est.mean, est.se);
          });
    m.def("solve_stein_tanh_entry",
          [](int i, int j, const Matrix& psi, const Matrix& sigma, int t_nodes, int mc_inner,
             std::uint64_t seed, const std::vector<Matrix>& points) {
              const SymPD psi_s(psi), sigma_s(sigma);
              QuadratureConfig qc{t_nodes, mc_inner, seed};
              const SteinSolution sol =
                  solve_stein(make_tanh_entry(psi_s.dim(), sigma_s.dim(), i, j), psi_s, sigma_s, qc);
              py::list values, residuals;
              for (const Matrix& x : points) {
                  values.append(sol.evaluate(x));
                  residuals.append(stein_residual(sol, x));
              }
              return py::make_tuple(sol.h_mean(), values, residuals);
          },
          py::arg("i"), py::arg("j"), py::arg("psi"), py::arg("sigma"), py::arg("t_nodes"),
          py::arg("mc_inner"), py::arg("seed"), py::arg("points"),
          "Solve the Stein equation for h(X) = tanh(X_ij); returns (h_mean, f_h values, residuals).");

    m.def("weighted_flipflop",
          [](const py::array_t<double>& batch, const std::string& rescale, double tol,
             int max_iter, std::uint64_t seed) {
              FlipFlopConfig cfg;
              cfg.rescale = rescale_rule_from_string(rescale);
              cfg.tol = tol;
              cfg.max_iter = max_iter;
              const SampleBatch b = batch_from_array(batch, seed);
              const SymPD psi0{Matrix::Identity(b.nu(), b.nu())};
              const FlipFlopResult fit = weighted_flipflop(b, cfg, psi0);
              py::dict out;
              out["psi"] = fit.psi_hat.mat();
              out["sigma"] = fit.sigma_hat.mat();
              out["iters"] = fit.iters;
              out["converged"] = fit.converged;
              return out;
          },
          py::arg("batch"), py::arg("rescale") = "trace_sigma_d", py::arg("tol") = 1e-8,
          py::arg("max_iter") = 200, py::arg("seed") = 0);

    m.def("clt_bound_d3",
          [](const py::array_t<double>& batch, const Matrix& psi, const Matrix& sigma, long n) {
              const SampleBatch b = batch_from_array(batch, 0);
              return clt_bound_d3(estimate_moments(b), SymPD(psi), SymPD(sigma), n);
          });
    m.def("t_normal_bound", [](double n_dof, int nu, int d, const Matrix& psi, const Matrix& sigma) {
        return t_normal_bound(n_dof, nu, d, SymPD(psi), SymPD(sigma));
    });

    m.attr("__version__") = MATSTEIN_VERSION;
}
