"""Damped Newton for the primal DG system and the transposed dual solve."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .dg import BlockTriDiag, DGProblem, DGSolution, OrderMap, assemble
from .errors import (
    BoundaryFluxError,
    ConvergenceError,
    DegeneratePolynomialError,
    RealizabilityError,
    SingularBlockError,
)

log = logging.getLogger(__name__)

# failures that make a trial state inadmissible rather than the run invalid
_REJECT = (RealizabilityError, BoundaryFluxError, DegeneratePolynomialError, FloatingPointError)


def _factor(block: np.ndarray, index: int):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)  # singularity is reported below
        lu, piv = lu_factor(block, check_finite=False)
    dg = np.abs(np.diag(lu))
    scale = np.abs(lu).max() if lu.size else 0.0
    if not np.all(np.isfinite(lu)) or dg.min() <= np.finfo(float).eps * scale * block.shape[0] or scale == 0.0:
        raise SingularBlockError(index)
    return lu, piv


def block_tridiag_solve(A: BlockTriDiag, b: np.ndarray, transpose: bool = False) -> np.ndarray:
    """Solve ``A x = b`` (or ``A.T x = b``) by block LU without inter-block pivoting.

    Diagonal blocks are factored with partial pivoting.
    """
    if transpose:
        A = A.transpose()
    n_rows, n_cols = A.shape
    b = np.asarray(b, dtype=float)
    if n_rows != n_cols or any(r != c for r, c in zip(A.row_sizes, A.col_sizes)):
        raise ValueError("block_tridiag_solve needs square diagonal blocks")
    if b.shape != (n_rows,):
        raise ValueError(f"right-hand side has shape {b.shape}, expected ({n_rows},)")
    n = len(A.diag)
    off = np.concatenate([[0], np.cumsum(A.row_sizes)])
    bs = [b[off[k]:off[k + 1]].copy() for k in range(n)]

    facs = []
    # eliminate the sub-diagonal: S_k = D_k - L_{k-1} S_{k-1}^{-1} U_{k-1}
    fac = _factor(A.diag[0], 0)
    facs.append(fac)
    y = [bs[0]]
    for k in range(1, n):
        L = A.lower[k - 1]
        w = lu_solve(fac, A.upper[k - 1], check_finite=False)
        S = A.diag[k] - L @ w
        y.append(bs[k] - L @ lu_solve(fac, y[k - 1], check_finite=False))
        fac = _factor(S, k)
        facs.append(fac)
    x = [None] * n
    x[n - 1] = lu_solve(facs[n - 1], y[n - 1], check_finite=False)
    for k in range(n - 2, -1, -1):
        x[k] = lu_solve(facs[k], y[k] - A.upper[k] @ x[k + 1], check_finite=False)
    return np.concatenate(x)


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = 1e-10
    max_iters: int = 50
    max_halvings: int = 30

    def __post_init__(self):
        if not self.residual_tol > 0.0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 0 or self.max_halvings < 0:
            raise ValueError("iteration limits must be nonnegative")


@dataclass
class NewtonTrace:
    residual_norms: list = field(default_factory=list)
    step_lengths: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.step_lengths)


def newton_solve(problem: DGProblem, initial: DGSolution, cfg: NewtonConfig = NewtonConfig()):
    """Damped Newton iteration; returns ``(solution, trace)``.

    Each step halves the Newton update until the max-norm of the residual
    decreases. A trial state that is not realizable counts as a rejection.
    """
    sol = initial
    asm = assemble(problem, sol)
    norm = float(np.abs(asm.residual).max())
    trace = NewtonTrace([norm])
    while norm > cfg.residual_tol:
        if trace.iterations >= cfg.max_iters:
            raise ConvergenceError(f"no convergence in {cfg.max_iters} Newton steps (residual {norm:.3e})",
                                   trace.residual_norms)
        try:
            dx = block_tridiag_solve(asm.jacobian, -asm.residual)
        except SingularBlockError as exc:
            raise ConvergenceError(f"Newton system singular: {exc}", trace.residual_norms) from exc
        x0 = sol.vector()
        t = 1.0
        for _ in range(cfg.max_halvings + 1):
            trial = sol.with_vector(x0 + t * dx)
            try:
                with np.errstate(over="raise", invalid="raise"):
                    trial_asm = assemble(problem, trial)
                trial_norm = float(np.abs(trial_asm.residual).max())
            except _REJECT:
                trial_norm = np.inf
            if trial_norm < norm:
                break
            t *= 0.5
        else:
            raise ConvergenceError(f"line search failed at residual {norm:.3e}", trace.residual_norms)
        sol, asm, norm = trial, trial_asm, trial_norm
        trace.residual_norms.append(norm)
        trace.step_lengths.append(t)
        log.debug("newton %d: |R| = %.3e, step %.3g", trace.iterations, norm, t)
    return sol, trace


def enriched_operator(problem: DGProblem, primal: DGSolution, enriched: OrderMap):
    """Assembly at the zero-padded primal state with enriched test and trial spaces."""
    if any(e < m for e, m in zip(enriched, primal.orders)):
        raise ValueError("enriched orders must dominate the primal orders")
    padded = primal.prolong(enriched)
    return padded, assemble(problem, padded, enriched)


def dual_solve(problem: DGProblem, primal: DGSolution, enriched: OrderMap, rhs: np.ndarray,
               operator=None) -> DGSolution:
    """Solve ``K.T z = rhs`` with ``K`` the enriched Jacobian at the padded primal."""
    if all(e == m for e, m in zip(enriched, primal.orders)):
        raise ValueError("enriched orders must exceed the primal orders somewhere")
    if operator is None:
        _, operator = enriched_operator(problem, primal, enriched)
    rhs = np.asarray(rhs, dtype=float)
    if rhs.shape != (enriched.dof,):
        raise ValueError(f"goal gradient has {rhs.size} entries, expected {enriched.dof}")
    z = block_tridiag_solve(operator.jacobian, rhs, transpose=True)
    return DGSolution.zeros(primal.mesh, enriched).with_vector(z)
