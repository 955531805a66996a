#include "matstein/experiments.hpp"

#include "matstein/bounds.hpp"
#include "matstein/estimators.hpp"
#include "matstein/ou.hpp"
#include "matstein/parallel.hpp"
#include "matstein/rng.hpp"
#include "matstein/serialize.hpp"
#include "matstein/stein.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace matstein {

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf, 16);
}

std::string config_hash_hex(const Json& config) { return fnv1a64_hex(config.dump()); }

Json matrix_to_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

Matrix matrix_from_json(const Json& j) {
    require(j.is_array() && !j.empty() && j[0].is_array(), "matrix must be a nested array");
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        require(j[i].is_array() && static_cast<Eigen::Index>(j[i].size()) == cols,
                "matrix rows must have equal length");
        for (Eigen::Index c = 0; c < cols; ++c) {
            require(j[i][c].is_number(), "matrix entries must be numbers");
            m(i, c) = j[i][c].get<double>();
        }
    }
    return m;
}

SymPD sympd_from_json(const Json& j) { return SymPD(matrix_from_json(j)); }

SampleBatch make_rademacher_sum_batch(int nu, int d, long n_sum, Eigen::Index count,
                                      std::uint64_t seed, int threads) {
    require(n_sum >= 1, "summand count must be positive");
    SampleBatch batch(nu, d, seed, count);
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_sum));
    parallel_for(count, threads, [&](long k) {
        Rng rng(seed, static_cast<std::uint64_t>(k));
        Matrix x(nu, d);
        for (int i = 0; i < nu; ++i) {
            for (int j = 0; j < d; ++j) {
                // Sum of n Rademacher signs = 2 * (number of set bits) - n.
                long ones = 0;
                long remaining = n_sum;
                while (remaining >= 64) {
                    ones += std::popcount(rng.next_u64());
                    remaining -= 64;
                }
                if (remaining > 0)
                    ones += std::popcount(rng.next_u64() >> (64 - remaining));
                x(i, j) = scale * static_cast<double>(2 * ones - n_sum);
            }
        }
        batch.set_sample(k, x);
    });
    return batch;
}

namespace {

const Json& need(const Json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key))
        throw ValidationError("config missing required field '" + key + "' in " + where);
    return j.at(key);
}

long need_count(const Json& params, const char* key = "count") {
    const long c = need(params, key, "params").get<long>();
    require(c >= 1, std::string(key) + " must be >= 1");
    return c;
}

SymPD scale_from(const Json& params, const std::string& key, int dim, std::uint64_t seed,
                 std::uint64_t salt) {
    if (params.contains(key)) return sympd_from_json(params.at(key));
    return random_sympd(dim, Rng::mix64(seed ^ salt));
}

TestFunction test_function_from_json(const Json& spec, const SymPD& psi) {
    const std::string type = need(spec, "type", "h").get<std::string>();
    if (type == "tanh_entry") {
        const int i = need(spec, "i", "h").get<int>();
        const int j = need(spec, "j", "h").get<int>();
        return make_tanh_entry(psi.dim(), need(spec, "d", "h").get<int>(), i, j);
    }
    if (type == "linear") return make_linear(matrix_from_json(need(spec, "c", "h")));
    if (type == "tanh_ridge") {
        const double scale = spec.value("scale", 1.0);
        const double shift = spec.value("shift", 0.0);
        return make_tanh_ridge(matrix_from_json(need(spec, "c", "h")), scale, shift);
    }
    if (type == "quadratic_probe") {
        const SymPD w = sympd_from_json(need(spec, "w", "h"));
        const SymPD u = sympd_from_json(need(spec, "u", "h"));
        return quadratic_probe(w, u, psi);
    }
    throw ValidationError("unknown test function type: " + type);
}

Json provenance_block(const Json& config) {
    Json p;
    p["tool_version"] = MATSTEIN_VERSION;
    p["config_hash"] = config_hash_hex(config);
    p["seeds"] = Json::array({config.at("seed").get<std::uint64_t>()});
    return p;
}

// ---- individual experiments ----------------------------------------------

Json run_sample(const Json& params, std::uint64_t seed, int threads, ExperimentOutput& out) {
    const std::string law = need(params, "law", "params").get<std::string>();
    const long count = need_count(params);
    const int nu = need(params, "nu", "params").get<int>();
    const int d = need(params, "d", "params").get<int>();
    const SymPD psi = scale_from(params, "psi", nu, seed, 0x70);
    const SymPD sigma = scale_from(params, "sigma", d, seed, 0x71);
    out.batch_layout = params.value("layout", std::string("binary"));
    require(out.batch_layout == "binary" || out.batch_layout == "csv",
            "layout must be 'binary' or 'csv'");

    Json results;
    if (law == "matrix_normal") {
        Matrix m = Matrix::Zero(nu, d);
        if (params.contains("m")) m = matrix_from_json(params.at("m"));
        out.batch = sample_matrix_normal(MatrixNormalParams(m, psi, sigma), count, seed, threads);
    } else if (law == "matrix_t") {
        const double n_dof = need(params, "n_dof", "params").get<double>();
        out.batch = sample_matrix_t(MatrixTParams(n_dof, psi, sigma), count, seed, threads);
    } else {
        throw ValidationError("unknown law: " + law);
    }
    results["law"] = law;
    results["count"] = count;
    results["nu"] = nu;
    results["d"] = d;
    return results;
}

Json run_verify_stein(const Json& params, std::uint64_t seed, int threads) {
    const int nu = need(params, "nu", "params").get<int>();
    const int d = need(params, "d", "params").get<int>();
    const long count = need_count(params);
    const int n_probes = params.value("n_probes", 10);
    const SymPD psi = scale_from(params, "psi", nu, seed, 0x80);
    const SymPD sigma = scale_from(params, "sigma", d, seed, 0x81);

    const MatrixNormalParams mn(Matrix::Zero(nu, d), psi, sigma);
    const SampleBatch batch = sample_matrix_normal(mn, count, seed, threads);

    Json probes = Json::array();
    int pass = 0;
    for (int p = 0; p < n_probes; ++p) {
        const SymPD w = random_sympd(nu, Rng::mix64(seed + 1000 + p));
        const SymPD u = random_sympd(d, Rng::mix64(seed + 2000 + p));
        const TestFunction f = quadratic_probe(w, u, psi);
        const MeanSe est = stein_identity_estimate(batch, f, psi, sigma);
        const bool ok = std::abs(est.mean) <= 4.0 * est.se;
        pass += ok ? 1 : 0;
        probes.push_back({{"mean", est.mean}, {"se", est.se}, {"within_4se", ok}});
    }
    Json results;
    results["probes"] = probes;
    results["pass_4se"] = pass;
    results["n_probes"] = n_probes;
    return results;
}

Json run_solve_stein(const Json& params, std::uint64_t seed, int /*threads*/) {
    const SymPD psi = sympd_from_json(need(params, "psi", "params"));
    const SymPD sigma = sympd_from_json(need(params, "sigma", "params"));
    Json hspec = need(params, "h", "params");
    hspec["d"] = sigma.dim();
    const TestFunction h = test_function_from_json(hspec, psi);

    QuadratureConfig qc;
    if (params.contains("quadrature")) {
        const Json& q = params.at("quadrature");
        qc.t_nodes = q.value("t_nodes", qc.t_nodes);
        qc.mc_inner = q.value("mc_inner", qc.mc_inner);
    }
    qc.seed = seed;
    const SteinSolution sol = solve_stein(h, psi, sigma, qc);

    const bool want_residuals = params.value("residuals", false);
    Json points = Json::array();
    if (params.contains("points")) {
        for (const Json& pj : params.at("points")) {
            const Matrix x = matrix_from_json(pj);
            const MeanSe v = sol.evaluate_with_se(x);
            Json entry{{"value", v.mean}, {"se", v.se}};
            if (want_residuals) entry["residual"] = stein_residual(sol, x);
            points.push_back(std::move(entry));
        }
    }
    Json results;
    results["h_mean"] = sol.h_mean();
    results["h_mean_se"] = sol.h_mean_se();
    results["points"] = points;
    results["t_nodes"] = qc.t_nodes;
    results["mc_inner"] = qc.mc_inner;
    return results;
}

Json run_ou_simulate(const Json& params, std::uint64_t seed, int /*threads*/,
                     ExperimentOutput& out) {
    const SymPD psi = sympd_from_json(need(params, "psi", "params"));
    const SymPD sigma = sympd_from_json(need(params, "sigma", "params"));
    const Matrix x0 = matrix_from_json(need(params, "x0", "params"));
    const double dt = params.value("dt", 1e-3);
    const double horizon = need(params, "horizon", "params").get<double>();
    const std::string scheme = params.value("scheme", std::string("euler"));
    require(scheme == "euler" || scheme == "exact", "scheme must be 'euler' or 'exact'");

    const OUConfig cfg(psi, sigma, dt, horizon,
                       scheme == "euler" ? OUScheme::euler : OUScheme::exact, seed);
    const OUPath path = scheme == "euler" ? euler_path(x0, cfg) : exact_path(x0, cfg);

    std::ostringstream csv;
    csv << "time";
    for (int i = 0; i < psi.dim(); ++i)
        for (int j = 0; j < sigma.dim(); ++j) csv << ",entry_" << (i + 1) << (j + 1);
    csv << "\n";
    for (std::size_t k = 0; k < path.times.size(); ++k) {
        csv << format_double(path.times[k]);
        for (int i = 0; i < psi.dim(); ++i)
            for (int j = 0; j < sigma.dim(); ++j) csv << "," << format_double(path.states[k](i, j));
        csv << "\n";
    }
    out.csv = csv.str();

    Json results;
    results["steps"] = static_cast<long>(path.times.size()) - 1;
    results["scheme"] = scheme;
    results["terminal"] = matrix_to_json(path.states.back());
    return results;
}

Json run_verify_moments(const Json& params, std::uint64_t seed, int threads) {
    Json results;
    if (params.contains("wishart")) {
        const Json& wj = params.at("wishart");
        const int dim = need(wj, "dim", "wishart").get<int>();
        const long draws = need(wj, "draws", "wishart").get<long>();
        Json per_alpha = Json::array();
        for (const Json& aj : need(wj, "alphas", "wishart")) {
            const double alpha = aj.get<double>();
            const InvWishartTraceMoments closed = inv_wishart_trace_moments(dim, alpha);
            // Monte Carlo over inverse Wishart draws.
            std::vector<double> t1(draws), t2(draws);
            parallel_for(draws, threads, [&](long k) {
                const SymPD w = sample_wishart(dim, alpha, Rng::mix64(seed) + k);
                const Matrix winv = w.inverse();
                t1[k] = winv.trace();
                t2[k] = (winv * winv).trace();
            });
            auto mean_se = [&](const std::vector<double>& v,
                               const std::function<double(double, double)>& f) {
                double mean = 0.0, m2 = 0.0;
                for (long k = 0; k < draws; ++k) {
                    const double x = f(t1[k], t2[k]);
                    const double delta = x - mean;
                    mean += delta / static_cast<double>(k + 1);
                    m2 += delta * (x - mean);
                }
                return MeanSe{mean, std::sqrt(m2 / (draws - 1.0) / draws)};
            };
            const MeanSe m1 = mean_se(t1, [](double a, double) { return a; });
            const MeanSe m2tr = mean_se(t2, [](double, double b) { return b; });
            const MeanSe m1sq = mean_se(t1, [](double a, double) { return a * a; });
            Json entry;
            entry["alpha"] = alpha;
            entry["closed_form"]["m1"] = closed.m1;
            if (closed.m2tr) entry["closed_form"]["m2tr"] = *closed.m2tr;
            if (closed.m1sq) entry["closed_form"]["m1sq"] = *closed.m1sq;
            entry["mc"] = {{"m1", m1.mean}, {"m1_se", m1.se}, {"m2tr", m2tr.mean},
                           {"m2tr_se", m2tr.se}, {"m1sq", m1sq.mean}, {"m1sq_se", m1sq.se}};
            per_alpha.push_back(std::move(entry));
        }
        results["wishart"] = {{"dim", dim}, {"draws", draws}, {"per_alpha", per_alpha}};
    }
    if (params.contains("matrix_t")) {
        const Json& tj = params.at("matrix_t");
        const int nu = need(tj, "nu", "matrix_t").get<int>();
        const int d = need(tj, "d", "matrix_t").get<int>();
        const long draws = need(tj, "draws", "matrix_t").get<long>();
        Json per_dof = Json::array();
        for (const Json& nj : need(tj, "n_dofs", "matrix_t")) {
            const double n_dof = nj.get<double>();
            const MatrixTFrobeniusMoments closed = matrix_t_frobenius_moments(nu, d, n_dof);
            const SymPD eye_nu{Matrix::Identity(nu, nu)}, eye_d{Matrix::Identity(d, d)};
            const SampleBatch batch = sample_matrix_t(MatrixTParams(n_dof, eye_nu, eye_d),
                                                      draws, Rng::mix64(seed + 7), threads);
            double mean2 = 0.0, m22 = 0.0, mean4 = 0.0, m24 = 0.0;
            for (long k = 0; k < draws; ++k) {
                const double f2 = batch.rows().row(k).squaredNorm();
                double delta = f2 - mean2;
                mean2 += delta / static_cast<double>(k + 1);
                m22 += delta * (f2 - mean2);
                const double f4 = f2 * f2;
                delta = f4 - mean4;
                mean4 += delta / static_cast<double>(k + 1);
                m24 += delta * (f4 - mean4);
            }
            Json entry;
            entry["n_dof"] = n_dof;
            entry["closed_form"]["m2"] = closed.m2;
            if (closed.m4) entry["closed_form"]["m4"] = *closed.m4;
            entry["mc"] = {{"m2", mean2},
                           {"m2_se", std::sqrt(m22 / (draws - 1.0) / draws)},
                           {"m4", mean4},
                           {"m4_se", std::sqrt(m24 / (draws - 1.0) / draws)}};
            per_dof.push_back(std::move(entry));
        }
        results["matrix_t"] = {{"nu", nu}, {"d", d}, {"draws", draws}, {"per_dof", per_dof}};
    }
    require(!results.empty(), "verify_moments needs a 'wishart' or 'matrix_t' block");
    return results;
}

Json masked_to_json(const MaskedEstimate& est) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < est.value.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index j = 0; j < est.value.cols(); ++j) {
            if (est.known(i, j))
                row.push_back(est.value(i, j));
            else
                row.push_back(nullptr);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

Json run_estimate(const Json& params, std::uint64_t seed, int /*threads*/) {
    const std::string data_path = need(params, "data", "params").get<std::string>();
    const SampleBatch batch = load_batch_binary(data_path);
    const std::string mode = params.value("mode", std::string("flipflop"));

    FlipFlopConfig cfg;
    if (params.contains("w")) cfg.w = sympd_from_json(params.at("w"));
    if (params.contains("u")) cfg.u = sympd_from_json(params.at("u"));
    cfg.rescale = rescale_rule_from_string(params.value("rescale", std::string("trace_sigma_d")));
    cfg.tol = params.value("tol", 1e-8);
    cfg.max_iter = params.value("max_iter", 200);
    cfg.ridge_lambda = params.value("ridge_lambda", 0.0);
    cfg.ridge_tau = params.value("ridge_tau", 1.0);

    Json results;
    results["rescale_rule"] = to_string(cfg.rescale);
    results["seed"] = seed;

    if (mode == "flipflop") {
        SymPD psi0 = params.contains("psi0") ? sympd_from_json(params.at("psi0"))
                                             : SymPD(Matrix::Identity(batch.nu(), batch.nu()));
        const FlipFlopResult fit = weighted_flipflop(batch, cfg, psi0);
        results["psi"] = matrix_to_json(fit.psi_hat.mat());
        results["sigma"] = matrix_to_json(fit.sigma_hat.mat());
        results["iters"] = fit.iters;
        results["converged"] = fit.converged;
    } else if (mode == "masked") {
        const auto p_mask = need(params, "p_mask", "params").get<std::vector<int>>();
        const auto q_mask = need(params, "q_mask", "params").get<std::vector<int>>();
        const MaskedFlipFlopResult fit = masked_flipflop(batch, p_mask, q_mask, cfg);
        results["psi"] = masked_to_json(fit.psi);
        results["sigma"] = masked_to_json(fit.sigma);
        results["iters"] = fit.iters;
        results["converged"] = fit.converged;
    } else if (mode == "structured") {
        auto matrices_from = [&](const char* key) {
            std::vector<Matrix> out;
            for (const Json& mj : need(params, key, "params")) out.push_back(matrix_from_json(mj));
            return out;
        };
        const StructuredBasis basis(matrices_from("b_templates"), matrices_from("a_templates"),
                                    matrices_from("u_weights"), matrices_from("w_weights"));
        // Alternating plug-in in flip-flop order: the column side is fitted
        // at the previous row scale, the row side at the fresh column scale.
        SymPD psi_cur{Matrix::Identity(batch.nu(), batch.nu())};
        SymPD sigma_cur{Matrix::Identity(batch.d(), batch.d())};
        const int alt_iters = params.value("alt_iters", 20);
        Vector beta, alpha;
        int iters = 0;
        bool converged = false;
        for (int t = 0; t < alt_iters; ++t) {
            const StructuredHalfFit s_fit = structured_fit_sigma(batch, basis, psi_cur);
            if (!s_fit.pd)
                throw NumericalError(
                    "structured sigma reconstruction not positive definite at iteration " +
                    std::to_string(t));
            SymPD sigma_next(s_fit.value);
            const StructuredHalfFit p_fit = structured_fit_psi(batch, basis, sigma_next);
            if (!p_fit.pd)
                throw NumericalError(
                    "structured psi reconstruction not positive definite at iteration " +
                    std::to_string(t));
            SymPD psi_next(p_fit.value);
            std::tie(psi_next, sigma_next) =
                rescale_identifiability(psi_next, sigma_next, cfg.rescale);
            const double change = (kron_dense(psi_next.mat(), sigma_next.mat()) -
                                   kron_dense(psi_cur.mat(), sigma_cur.mat())).norm() /
                                  kron_dense(psi_cur.mat(), sigma_cur.mat()).norm();
            psi_cur = psi_next;
            sigma_cur = sigma_next;
            beta = s_fit.coef;
            alpha = p_fit.coef;
            iters = t + 1;
            if (change <= cfg.tol) {
                converged = true;
                break;
            }
        }
        results["psi"] = matrix_to_json(psi_cur.mat());
        results["sigma"] = matrix_to_json(sigma_cur.mat());
        results["beta"] = std::vector<double>(beta.data(), beta.data() + beta.size());
        results["alpha"] = std::vector<double>(alpha.data(), alpha.data() + alpha.size());
        results["iters"] = iters;
        results["converged"] = converged;
    } else {
        throw ValidationError("unknown estimate mode: " + mode);
    }
    return results;
}

std::string csv_bound_table(const Json& rows, const std::string& hash) {
    std::ostringstream csv;
    csv << "# matstein " << MATSTEIN_VERSION << " config_hash=" << hash << "\n";
    csv << "experiment,n,nu,d,bound_rhs,lower_estimate,se_at_max\n";
    for (const Json& r : rows) {
        csv << r.at("experiment").get<std::string>() << "," << r.at("n") << ","
            << r.at("nu") << "," << r.at("d") << ","
            << format_double(r.at("bound_rhs").get<double>()) << ","
            << format_double(r.at("lower_estimate").get<double>()) << ","
            << format_double(r.at("se_at_max").get<double>()) << "\n";
    }
    return csv.str();
}

Json run_clt_experiment(const Json& params, std::uint64_t seed, int threads, Json& csv_rows) {
    const int nu = need(params, "nu", "params").get<int>();
    const int d = need(params, "d", "params").get<int>();
    const long count = need_count(params);
    const int family_size = params.value("family_size", 16);
    const SymPD psi{Matrix::Identity(nu, nu)};
    const SymPD sigma{Matrix::Identity(d, d)};

    const std::vector<TestFunction> family =
        calibrated_family(TestClass::H3, nu, d, family_size, Rng::mix64(seed + 11));
    const MatrixNormalParams mn(Matrix::Zero(nu, d), psi, sigma);
    const SampleBatch normal = sample_matrix_normal(mn, count, Rng::mix64(seed + 13), threads);

    Json per_n = Json::array();
    csv_rows = Json::array();
    for (const Json& nj : need(params, "n_list", "params")) {
        const long n = nj.get<long>();
        const SampleBatch sums =
            make_rademacher_sum_batch(nu, d, n, count, Rng::mix64(seed) + n, threads);
        const MomentSummary moments = estimate_moments(sums);
        const double bound = clt_bound_d3(moments, psi, sigma, n);
        const DiscrepancyReport rep = discrepancy_estimate(sums, normal, family);
        Json entry;
        entry["n"] = n;
        entry["bound_rhs"] = bound;
        entry["lower_estimate"] = rep.sup_est;
        entry["se_at_max"] = rep.se_at_max;
        Json per_h = Json::array();
        for (const PerFunctionDiff& ph : rep.per_h)
            per_h.push_back({{"mean_diff", ph.mean_diff}, {"se", ph.se}});
        entry["per_h"] = per_h;
        per_n.push_back(entry);
        csv_rows.push_back({{"experiment", "clt_experiment"}, {"n", n}, {"nu", nu}, {"d", d},
                            {"bound_rhs", bound}, {"lower_estimate", rep.sup_est},
                            {"se_at_max", rep.se_at_max}});
    }
    Json results;
    results["nu"] = nu;
    results["d"] = d;
    results["count"] = count;
    results["per_n"] = per_n;
    return results;
}

Json run_t_experiment(const Json& params, std::uint64_t seed, int threads, Json& csv_rows) {
    const int nu = need(params, "nu", "params").get<int>();
    const int d = need(params, "d", "params").get<int>();
    const long count = need_count(params);
    const int family_size = params.value("family_size", 16);
    const SymPD psi = scale_from(params, "psi", nu, seed, 0x90);
    const SymPD sigma = scale_from(params, "sigma", d, seed, 0x91);

    const std::vector<TestFunction> family =
        calibrated_family(TestClass::H1, nu, d, family_size, Rng::mix64(seed + 17));
    const MatrixNormalParams mn(Matrix::Zero(nu, d), psi, sigma);
    const SampleBatch normal = sample_matrix_normal(mn, count, Rng::mix64(seed + 19), threads);

    Json per_dof = Json::array();
    csv_rows = Json::array();
    for (const Json& nj : need(params, "n_dofs", "params")) {
        const double n_dof = nj.get<double>();
        const SampleBatch tbatch = sample_matrix_t(MatrixTParams(n_dof, psi, sigma), count,
                                                   Rng::mix64(seed + 23) + static_cast<std::uint64_t>(n_dof),
                                                   threads);
        const double bound = t_normal_bound(n_dof, nu, d, psi, sigma);
        const DiscrepancyReport rep = discrepancy_estimate(tbatch, normal, family);
        Json entry;
        entry["n_dof"] = n_dof;
        entry["bound_rhs"] = bound;
        entry["lower_estimate"] = rep.sup_est;
        entry["se_at_max"] = rep.se_at_max;
        Json per_h = Json::array();
        for (const PerFunctionDiff& ph : rep.per_h)
            per_h.push_back({{"mean_diff", ph.mean_diff}, {"se", ph.se}});
        entry["per_h"] = per_h;
        per_dof.push_back(entry);
        csv_rows.push_back({{"experiment", "t_experiment"}, {"n", n_dof}, {"nu", nu}, {"d", d},
                            {"bound_rhs", bound}, {"lower_estimate", rep.sup_est},
                            {"se_at_max", rep.se_at_max}});
    }
    Json results;
    results["nu"] = nu;
    results["d"] = d;
    results["count"] = count;
    results["per_dof"] = per_dof;
    return results;
}

}  // namespace

ExperimentOutput run_experiment(const Json& config, int threads) {
    require(config.is_object(), "config must be a JSON object");
    const std::string experiment = need(config, "experiment", "config").get<std::string>();
    if (!config.contains("seed"))
        throw ValidationError("seeds mandatory: config must set an integer 'seed'");
    require(config.at("seed").is_number_integer(), "seeds mandatory: 'seed' must be an integer");
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const Json params = config.value("params", Json::object());
    const std::string format = config.value("format", std::string("json"));
    require(format == "json" || format == "csv", "format must be 'json' or 'csv'");

    ExperimentOutput out;
    Json results;
    Json csv_rows;
    if (experiment == "sample") {
        results = run_sample(params, seed, threads, out);
    } else if (experiment == "verify_stein") {
        results = run_verify_stein(params, seed, threads);
    } else if (experiment == "solve_stein") {
        results = run_solve_stein(params, seed, threads);
    } else if (experiment == "ou_simulate") {
        results = run_ou_simulate(params, seed, threads, out);
    } else if (experiment == "verify_moments") {
        results = run_verify_moments(params, seed, threads);
    } else if (experiment == "estimate") {
        results = run_estimate(params, seed, threads);
    } else if (experiment == "clt_experiment") {
        results = run_clt_experiment(params, seed, threads, csv_rows);
    } else if (experiment == "t_experiment") {
        results = run_t_experiment(params, seed, threads, csv_rows);
    } else {
        throw ValidationError("unknown experiment: " + experiment);
    }

    out.artifact["experiment"] = experiment;
    out.artifact["provenance"] = provenance_block(config);
    out.artifact["results"] = results;
    if (format == "csv") {
        if (!csv_rows.is_null())
            out.csv = csv_bound_table(csv_rows, config_hash_hex(config));
        else if (!out.csv && !out.batch)
            throw ValidationError("csv format is not available for experiment " + experiment);
    }
    return out;
}

int run_experiment_file(const std::string& config_path, const std::string& output_override,
                        int threads, std::ostream& err) {
    const auto started = std::chrono::steady_clock::now();
    try {
        std::ifstream in(config_path);
        if (!in.good()) throw ValidationError("cannot open config " + config_path);
        Json config;
        try {
            config = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ValidationError(std::string("config parse error: ") + e.what());
        }
        ExperimentOutput out = run_experiment(config, threads);

        std::string output = output_override;
        if (output.empty()) output = config.value("output", std::string());
        if (output.empty())
            throw ValidationError("no output path: set 'output' in the config or pass --output");

        if (out.batch) {
            if (out.batch_layout == "binary")
                save_batch_binary(*out.batch, output);
            else
                save_batch_csv(*out.batch, output);
            std::ofstream manifest(output + ".manifest.json");
            require(manifest.good(), "cannot open manifest for writing");
            manifest << out.artifact.dump(2) << "\n";
        } else if (out.csv) {
            std::ofstream f(output);
            require(f.good(), "cannot open " + output + " for writing");
            f << *out.csv;
            if (out.artifact.at("experiment") == "ou_simulate") {
                std::ofstream manifest(output + ".manifest.json");
                manifest << out.artifact.dump(2) << "\n";
            }
        } else {
            std::ofstream f(output);
            require(f.good(), "cannot open " + output + " for writing");
            f << out.artifact.dump(2) << "\n";
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        err << "experiment " << out.artifact.at("experiment").get<std::string>()
            << " completed in " << secs << " s (artifact: " << output << ")\n";
        return 0;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const NumericalError& e) {
        err << "numerical error: " << e.what() << "\n";
        return 2;
    }
}

int verify_artifact_file(const std::string& config_path, const std::string& artifact_path,
                         std::ostream& err) {
    try {
        std::ifstream in(config_path);
        if (!in.good()) throw ValidationError("cannot open config " + config_path);
        Json config;
        try {
            config = Json::parse(in);
        } catch (const Json::exception& e) {
            throw ValidationError(std::string("config parse error: ") + e.what());
        }
        const std::string expected = config_hash_hex(config);

        std::ifstream af(artifact_path);
        if (!af.good()) throw ValidationError("cannot open artifact " + artifact_path);
        std::string embedded;
        // JSON artifacts embed provenance.config_hash; CSV artifacts carry a
        // leading "# ... config_hash=<hex>" comment; batch payloads use
        // their sidecar manifest.
        char first = static_cast<char>(af.peek());
        if (first == '{') {
            Json artifact = Json::parse(af);
            embedded = artifact.at("provenance").at("config_hash").get<std::string>();
        } else {
            std::string line;
            std::getline(af, line);
            const std::string tag = "config_hash=";
            const auto pos = line.find(tag);
            if (pos == std::string::npos)
                throw ValidationError("artifact carries no config hash: " + artifact_path);
            embedded = line.substr(pos + tag.size(), 16);
        }
        if (embedded != expected) {
            err << "config hash mismatch: config " << expected << " vs artifact " << embedded
                << "\n";
            return 1;
        }
        err << "config hash verified: " << expected << "\n";
        return 0;
    } catch (const ValidationError& e) {
        err << "validation error: " << e.what() << "\n";
        return 1;
    } catch (const Json::exception& e) {
        err << "validation error: artifact parse failure: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace matstein
