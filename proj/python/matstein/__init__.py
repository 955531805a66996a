"""Matrix-normal Stein framework: samplers, Stein-equation solver, flip-flop estimators."""

from matstein._core import (  # noqa: F401
    ValidationError,
    NumericalError,
    __version__,
    clt_bound_d3,
    inv_wishart_trace_moments,
    kron,
    log_density_matrix_normal,
    log_density_matrix_t,
    matrix_t_frobenius_moments,
    norms,
    ou_euler_terminal,
    ou_exact_transition,
    ou_generator_quadratic_probe,
    random_sympd,
    sample_matrix_normal,
    sample_matrix_t,
    sample_wishart,
    solve_stein_tanh_entry,
    stein_identity_quadratic_probe,
    sym_sqrt,
    t_normal_bound,
    weighted_flipflop,
)
