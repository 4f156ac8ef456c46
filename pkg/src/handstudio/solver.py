"""Constrained smooth optimization for grasp synthesis.

A single solve is sequential least-squares quadratic programming (SLSQP, via
scipy) over box bounds and a subset of linear equality rows. The cascade in
:mod:`handstudio.synthesis` re-introduces coupling rows stage by stage,
warm-starting each stage from the previous solution; convergence is judged by
our own feasibility and KKT checks, not the backend's exit flag.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .errors import InvalidSchedule, RankDeficientConstraints


class SolveStatus(enum.Enum):
    Converged = "Converged"
    MaxIterations = "MaxIterations"
    Infeasible = "Infeasible"
    NumericalFailure = "NumericalFailure"


@dataclass(frozen=True)
class SolveOptions:
    max_iterations: int = 200
    tol_objective: float = 1e-8   # relative
    tol_constraint: float = 1e-6  # inf-norm
    tol_step: float = 1e-9
    seed: int = 0
    restarts: int = 5

    def __post_init__(self):
        if (self.max_iterations <= 0 or self.tol_objective <= 0
                or self.tol_constraint <= 0 or self.tol_step <= 0
                or self.restarts <= 0):
            raise ValueError("solver options must be positive")


@dataclass(frozen=True)
class NlpProblem:
    """min f(x) s.t. lower <= x <= upper, A x = b."""

    dimension: int
    objective: object         # callable (n,) -> float
    gradient: object          # callable (n,) -> (n,)
    bounds: np.ndarray        # (n, 2)
    eq_matrix: np.ndarray     # (k, n)
    eq_rhs: np.ndarray        # (k,)

    def __post_init__(self):
        b = np.asarray(self.bounds, dtype=float).reshape(self.dimension, 2)
        A = np.asarray(self.eq_matrix, dtype=float).reshape(-1, self.dimension)
        rhs = np.asarray(self.eq_rhs, dtype=float).reshape(A.shape[0])
        if np.any(b[:, 0] > b[:, 1]):
            raise ValueError("bound lower > upper")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "eq_matrix", A)
        object.__setattr__(self, "eq_rhs", rhs)

    def restricted(self, rows) -> "NlpProblem":
        """Same problem with only the given equality rows active."""
        rows = sorted(rows)
        return NlpProblem(dimension=self.dimension, objective=self.objective,
                          gradient=self.gradient, bounds=self.bounds,
                          eq_matrix=self.eq_matrix[rows, :],
                          eq_rhs=self.eq_rhs[rows])

    def without_equalities(self) -> "NlpProblem":
        return self.restricted([])

    def violation(self, x: np.ndarray) -> float:
        if self.eq_matrix.shape[0] == 0:
            return 0.0
        return float(np.max(np.abs(self.eq_matrix @ x - self.eq_rhs)))


@dataclass(frozen=True)
class CascadeSchedule:
    """Ordered constraint-row subsets, nondecreasing by inclusion."""

    stages: tuple             # of sorted tuples of row indices

    def __post_init__(self):
        stages = tuple(tuple(sorted(set(s))) for s in self.stages)
        if not stages:
            raise InvalidSchedule("schedule has no stages")
        for a, b in zip(stages, stages[1:]):
            if not set(a) <= set(b):
                raise InvalidSchedule("stages must be nondecreasing by inclusion")
        object.__setattr__(self, "stages", stages)

    def validate_for(self, n_rows: int) -> None:
        for s in self.stages:
            if any(r < 0 or r >= n_rows for r in s):
                raise InvalidSchedule(f"row index out of range for {n_rows} rows")
        if set(self.stages[-1]) != set(range(n_rows)):
            raise InvalidSchedule("final stage must activate every constraint row")

    @staticmethod
    def single_stage(n_rows: int) -> "CascadeSchedule":
        return CascadeSchedule(stages=(tuple(range(n_rows)),))


def _check_rank(A: np.ndarray, tol: float = 1e-10) -> None:
    if A.shape[0] == 0:
        return
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= tol * max(1.0, s[0]):
        raise RankDeficientConstraints(
            f"active equality rows are linearly dependent (sigma_min={s[-1]:.3e})")


def kkt_residual(problem: NlpProblem, x: np.ndarray,
                 bound_tol: float = 1e-8) -> float:
    """Inf-norm of the reduced stationarity residual at x.

    Bound-active coordinates are removed; the equality multiplier is the
    least-squares estimate on the remaining coordinates.
    """
    g = np.asarray(problem.gradient(x), dtype=float)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    free = (x - lo > bound_tol) & (hi - x > bound_tol)
    if not np.any(free):
        return 0.0
    gf = g[free]
    A = problem.eq_matrix
    if A.shape[0] == 0:
        return float(np.max(np.abs(gf)))
    Af = A[:, free]
    lam, *_ = np.linalg.lstsq(Af.T, -gf, rcond=None)
    return float(np.max(np.abs(gf + Af.T @ lam)))


def _classify(problem: NlpProblem, x: np.ndarray, f: float,
              options: SolveOptions, backend_ok: bool) -> SolveStatus:
    viol = problem.violation(x)
    if viol > options.tol_constraint:
        return SolveStatus.Infeasible
    if kkt_residual(problem, x) <= 1e-5 * (1.0 + abs(f)):
        return SolveStatus.Converged
    return SolveStatus.MaxIterations if backend_ok else SolveStatus.NumericalFailure


def sqp_solve(problem: NlpProblem, x0, options: SolveOptions | None = None
              ) -> tuple:
    """Solve the bound- and equality-constrained problem from x0.

    Returns (x, status, iterations). x0 outside the bounds is clamped with a
    warning. Raises RankDeficientConstraints when the active equality rows are
    dependent beyond tolerance.
    """
    if options is None:
        options = SolveOptions()
    x0 = np.asarray(x0, dtype=float).reshape(problem.dimension)
    lo, hi = problem.bounds[:, 0], problem.bounds[:, 1]
    clipped = np.clip(x0, lo, hi)
    if np.max(np.abs(clipped - x0)) > 0:
        warnings.warn("initial guess clamped into bounds")
    x0 = clipped
    _check_rank(problem.eq_matrix)

    constraints = []
    A, b = problem.eq_matrix, problem.eq_rhs
    if A.shape[0] > 0:
        constraints.append({"type": "eq",
                            "fun": lambda x: A @ x - b,
                            "jac": lambda x: A})
    # scipy's ftol is absolute; the option is relative, so scale by the
    # starting objective (floored so a zero start still terminates)
    f0 = float(problem.objective(x0))
    ftol = options.tol_objective * max(abs(f0), 1e-6)
    try:
        res = minimize(problem.objective, x0, jac=problem.gradient,
                       method="SLSQP",
                       bounds=[(float(l), float(u)) for l, u in problem.bounds],
                       constraints=constraints,
                       options={"maxiter": options.max_iterations,
                                "ftol": ftol})
    except (np.linalg.LinAlgError, ValueError, FloatingPointError):
        return x0, SolveStatus.NumericalFailure, 0
    x = np.clip(res.x, lo, hi)
    if not np.all(np.isfinite(x)):
        return x0, SolveStatus.NumericalFailure, int(res.nit)
    # backend mode 9 is the iteration limit; other nonzero modes are numeric
    backend_ok = bool(res.success) or res.status == 9
    status = _classify(problem, x, float(problem.objective(x)), options, backend_ok)
    return x, status, int(res.nit)


def unconstrained_stage_solve(problem: NlpProblem, x0,
                              options: SolveOptions | None = None) -> tuple:
    """Stage 0 of the cascade: bounds kept, every equality row relaxed."""
    return sqp_solve(problem.without_equalities(), x0, options)
