"""delayline: whole-line solutions of delay differential inclusions.

Solves u'(t) in A(t, u_t) u(t) + omega u(t) on the whole real line by a
Yosida approximation of the time derivative: the derivative is replaced
by an exponential-kernel difference quotient, each regularized problem is
solved by resolvent fixed-point iteration, and an outer recursion feeds
the solved trajectory back in as the history argument.  Verifiers check
the contraction rates, the generalized-solution inequality and the
qualitative properties (boundedness, Lipschitz continuity, periodicity,
almost-period scans) of the computed limits.
"""

__version__ = "0.1.0"

from .grids import (GridFunction, GridSpec, HistorySegment, read_csv,
                    upper_bracket, vector_norm, write_csv)
from .operators import (CATALOG, HypothesisError, OperatorSpec,
                        apply_selection, check_control_inequality,
                        check_dissipativity, history_lipschitz_check,
                        is_admitted, make_operator, require_admitted,
                        resolvent, resolvent_omega)
from .recursion import (ConvergenceReport, SolverConfig,
                        check_start_independence, lambda_cauchy_table,
                        run_recursion, theoretical_bounds)
from .volterra import VolterraProblem, picard_solve, resolvent_solve
from .yosida import (PicardDivergence, exp_convolution, exp_convolution_grid,
                     solve_T_lambda, verify_iterate_inequality,
                     yosida_derivative)

__all__ = [
    "GridFunction", "GridSpec", "HistorySegment", "read_csv", "write_csv",
    "upper_bracket", "vector_norm",
    "CATALOG", "HypothesisError", "OperatorSpec", "apply_selection",
    "check_control_inequality", "check_dissipativity",
    "history_lipschitz_check", "is_admitted", "make_operator",
    "require_admitted", "resolvent", "resolvent_omega",
    "ConvergenceReport", "SolverConfig", "check_start_independence",
    "lambda_cauchy_table", "run_recursion", "theoretical_bounds",
    "VolterraProblem", "picard_solve", "resolvent_solve",
    "PicardDivergence", "exp_convolution", "exp_convolution_grid",
    "solve_T_lambda", "verify_iterate_inequality", "yosida_derivative",
    "__version__",
]
