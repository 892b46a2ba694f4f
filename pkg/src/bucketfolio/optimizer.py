"""Long-only minimum-variance portfolio: min w'Sw s.t. sum(w) = 1, w >= 0.

The upper bound w <= 1 is implied by the budget and non-negativity
constraints, so only the simplex is enforced.

The solver is a primal active-set method. For a working set of free assets F
the equality-constrained minimizer is ``S_FF^{-1} 1 / (1' S_FF^{-1} 1)``; it is
either accepted (then the multipliers of the fixed assets decide whether one
is released) or approached until the first free weight hits zero. Every
iterate is feasible, so a truncated run still returns valid weights.
"""

import enum
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from sklearn.exceptions import ConvergenceWarning

from .covariance import CovarianceMatrix, pd_certificate
from .exceptions import BadInput
from .validation import check_square_matrix

__all__ = ["SolveStatus", "SolveDiagnostics", "solve_min_variance", "kkt_residual"]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


class SolveStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class SolveDiagnostics:
    iterations: int
    kkt_residual: float
    objective: float
    status: SolveStatus

    @property
    def converged(self):
        return self.status is SolveStatus.OPTIMAL


def kkt_residual(sigma, w):
    """First-order optimality violation of ``w`` for the simplex program.

    With gradient ``g = S w`` and budget multiplier ``lam = w' S w``, this is
    the largest of: ``|g_i - lam|`` over held assets, ``max(0, lam - g_i)``
    over all assets, the budget error ``|sum(w) - 1|`` and any negative weight.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    g = sigma @ w
    lam = float(w @ g)
    held = w > 0
    stationarity = np.max(np.abs(g[held] - lam), initial=0.0)
    dual = np.max(lam - g, initial=0.0)
    primal = max(abs(w.sum() - 1.0), float(np.max(-w, initial=0.0)))
    return float(max(stationarity, dual, primal, 0.0))


def _feasible_start(w0, n):
    if w0 is None:
        return np.full(n, 1.0 / n)
    w = np.asarray(w0, dtype=np.float64).copy()
    if w.shape != (n,) or not np.all(np.isfinite(w)):
        return np.full(n, 1.0 / n)
    w[w < 0] = 0.0
    total = w.sum()
    if not total > 0:
        return np.full(n, 1.0 / n)
    return w / total


def _equality_solution(sigma, free):
    idx = np.flatnonzero(free)
    block = sigma[np.ix_(idx, idx)]
    x = linalg.cho_solve(linalg.cho_factor(block, lower=True, check_finite=False),
                         np.ones(idx.size), check_finite=False)
    return idx, x / x.sum()


def solve_min_variance(sigma, tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER, w0=None):
    """Solve the long-only minimum-variance problem.

    Parameters
    ----------
    sigma : CovarianceMatrix or array-like of shape (n, n)
        Positive definite covariance. Raw arrays are certified with a
        Cholesky factorization first.
    tol : float, default=1e-8
        Bound on the KKT residual (see :func:`kkt_residual`) for ``Optimal``.
    max_iter : int, default=10000
        Active-set iterations before giving up.
    w0 : array-like of shape (n,), optional
        Warm start; any non-negative vector is projected onto the simplex by
        rescaling. The solution does not depend on it.

    Returns
    -------
    weights : ndarray of shape (n,)
        Always feasible, also when the iteration cap was hit.
    diagnostics : SolveDiagnostics

    Raises
    ------
    BadInput
        ``sigma`` is not symmetric positive definite.
    """
    if isinstance(sigma, CovarianceMatrix):
        S = sigma.values
    else:
        try:
            S = check_square_matrix(sigma)
        except ValueError as exc:
            raise BadInput(str(exc)) from exc
        if not np.allclose(S, S.T, rtol=1e-12, atol=0):
            raise BadInput("covariance matrix is not symmetric")
        if pd_certificate(S) is None:
            raise BadInput("covariance matrix is not positive definite")
    if tol <= 0 or max_iter < 1:
        raise ValueError("tol must be positive and max_iter >= 1")

    n = S.shape[0]
    if n == 1:
        w = np.ones(1)
        return w, SolveDiagnostics(0, kkt_residual(S, w), float(S[0, 0]), SolveStatus.OPTIMAL)

    w = _feasible_start(w0, n)
    free = w > 0
    status = SolveStatus.MAX_ITERATIONS
    iterations = 0
    for iterations in range(1, max_iter + 1):
        idx, target = _equality_solution(S, free)
        if np.all(target >= 0):
            w = np.zeros(n)
            w[idx] = target
            g = S @ w
            lam = w @ g
            fixed = np.flatnonzero(~free)
            if fixed.size == 0:
                status = SolveStatus.OPTIMAL
                break
            mu = g[fixed] - lam
            # noise-level multipliers are not released; that would only cycle
            noise = 64 * np.finfo(np.float64).eps * np.max(np.abs(g))
            j = int(np.argmin(mu))
            if mu[j] >= -noise:
                status = SolveStatus.OPTIMAL
                break
            free[fixed[j]] = True
        else:
            current = w[idx]
            step = target - current
            shrinking = step < 0
            ratios = np.full(idx.size, np.inf)
            ratios[shrinking] = current[shrinking] / -step[shrinking]
            alpha = min(1.0, float(np.min(ratios)))
            new = current + alpha * step
            blocking = ratios <= alpha
            new[blocking] = 0.0
            new[new < 0] = 0.0
            w = np.zeros(n)
            w[idx] = new
            w /= w.sum()
            free = w > 0

    residual = kkt_residual(S, w)
    if status is SolveStatus.OPTIMAL and residual > tol:
        status = SolveStatus.MAX_ITERATIONS
    if status is not SolveStatus.OPTIMAL:
        warnings.warn(
            f"minimum-variance solve stopped after {iterations} iterations with "
            f"KKT residual {residual:.3g} > tol {tol:.3g}",
            ConvergenceWarning,
            stacklevel=2,
        )
    return w, SolveDiagnostics(iterations, residual, float(w @ S @ w), status)
