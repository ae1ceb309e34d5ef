"""Cancellation-aware marking and the solve-estimate-mark-refine loop."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .dg import DGProblem, DGSolution, OrderMap
from .errors import MomentDGError
from .solver import NewtonConfig, dual_solve, enriched_operator, newton_solve

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class MarkingConfig:
    fraction_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.fraction_c <= 1.0:
            raise ValueError(f"fraction_c must lie in (0, 1], got {self.fraction_c}")


def split_signs(zeta):
    """Indices agreeing in sign with the total, and the rest.

    Zero indicators go to the second set.
    """
    zeta = np.asarray(zeta, dtype=float)
    if zeta.size == 0:
        raise ValueError("no indicators")
    total = float(np.sum(zeta))
    if total == 0.0:
        raise ValueError("indicators sum to zero; nothing to split")
    plus = [k for k, z in enumerate(zeta) if np.sign(z) == np.sign(total)]
    minus = [k for k, z in enumerate(zeta) if np.sign(z) != np.sign(total)]
    return plus, minus


def _by_magnitude(zeta, idx, descending):
    key = (lambda k: (-abs(zeta[k]), k)) if descending else (lambda k: (abs(zeta[k]), k))
    return sorted(idx, key=key)


def cancellation_subset(zeta, t_plus, t_minus):
    """Largest ascending-magnitude prefix of ``t_plus`` cancelled by ``t_minus``."""
    zeta = np.asarray(zeta, dtype=float)
    budget = abs(float(sum(zeta[k] for k in t_minus)))
    chosen, acc = [], 0.0
    for k in _by_magnitude(zeta, t_plus, descending=False):
        if acc + abs(zeta[k]) > budget:
            break
        acc += abs(zeta[k])
        chosen.append(k)
    return sorted(chosen)


def bounds(zeta):
    """``(bound_cancel, bound_triangle)`` for the indicators ``zeta``."""
    zeta = np.asarray(zeta, dtype=float)
    tri = float(np.sum(np.abs(zeta)))
    if float(np.sum(zeta)) == 0.0:
        return 0.0, tri
    plus, minus = split_signs(zeta)
    tilde = set(cancellation_subset(zeta, plus, minus))
    return float(sum(abs(zeta[k]) for k in plus if k not in tilde)), tri


def mark(zeta, cfg: MarkingConfig = MarkingConfig(), saturated=()):
    """Shortest descending-magnitude prefix of the uncancelled candidates
    whose signed sum reaches ``c |sum zeta|``.

    Elements in ``saturated`` are never marked. If no prefix is sufficient all
    remaining candidates are returned.
    """
    zeta = np.asarray(zeta, dtype=float)
    total = float(np.sum(zeta))
    plus, minus = split_signs(zeta)
    tilde = set(cancellation_subset(zeta, plus, minus))
    skip = set(saturated)
    cands = _by_magnitude(zeta, [k for k in plus if k not in tilde and k not in skip], descending=True)
    target = cfg.fraction_c * abs(total)
    acc = 0.0
    for n, k in enumerate(cands, start=1):
        acc += zeta[k]
        if abs(acc) >= target:
            return sorted(cands[:n])
    return sorted(cands)


@dataclass(frozen=True)
class AdaptConfig:
    initial_order: int = 4
    order_increment: int = 2
    dual_increment: int = 2
    order_cap: int = 14
    tol: float = 1e-8
    max_iters: int = 10
    marking: MarkingConfig = MarkingConfig()
    newton: NewtonConfig = NewtonConfig()

    def __post_init__(self):
        if self.initial_order < 2 or self.order_increment < 1 or self.dual_increment < 1:
            raise ValueError("orders and increments must be positive (initial order >= 2)")
        if self.order_cap < self.initial_order:
            raise ValueError("order_cap below initial_order")
        if not self.tol > 0.0 or self.max_iters < 1:
            raise ValueError("tol must be positive and max_iters >= 1")


@dataclass
class IterationRecord:
    iteration: int
    dof: int
    goal: float
    estimate: float
    bound_cancel: float
    bound_triangle: float
    orders: tuple
    marked: tuple
    zeta: np.ndarray
    newton_iters: int
    seconds: float


@dataclass
class AdaptState:
    ranks: np.ndarray
    history: list = field(default_factory=list)
    solution: DGSolution | None = None
    stop_reason: str = ""
    failure: str | None = None

    @property
    def iteration(self) -> int:
        return len(self.history)


def semr_loop(problem: DGProblem, goal, cfg: AdaptConfig = AdaptConfig(), initial: DGSolution | None = None) -> AdaptState:
    """Solve, estimate, mark, refine until ``|estimate| < tol``.

    A solver failure stops the loop; ``state.failure`` holds the message and
    ``state.history`` the completed iterations.
    """
    from .goal import breakdown, goal_gradient, goal_value, indicators_from_residual

    n = problem.mesh.n_elements
    state = AdaptState(ranks=np.zeros(n, dtype=int))
    sol = initial
    for it in range(cfg.max_iters):
        t0 = time.perf_counter()
        orders = OrderMap(cfg.initial_order + cfg.order_increment * state.ranks)
        start = DGSolution.zeros(problem.mesh, orders) if sol is None else sol.prolong(orders)
        try:
            sol, trace = newton_solve(problem, start, cfg.newton)
            enriched = orders + cfg.dual_increment
            padded, op = enriched_operator(problem, sol, enriched)
            rhs = goal_gradient(problem, padded, goal, enriched)
            z = dual_solve(problem, sol, enriched, rhs, operator=op)
            zeta = indicators_from_residual(op.residual, z)
            saturated = [k for k in range(n) if orders[k] + cfg.order_increment > cfg.order_cap]
            err = breakdown(zeta, cfg.marking.fraction_c, saturated)
            J = goal_value(problem, sol, goal)
        except MomentDGError as exc:
            state.failure = f"iteration {it}: {exc}"
            state.stop_reason = "failure"
            log.error("adaptive loop aborted: %s", state.failure)
            return state
        state.solution = sol
        state.history.append(IterationRecord(it, orders.dof, J, err.estimate, err.bound_cancel,
                                             err.bound_triangle, tuple(orders), err.marked, zeta,
                                             trace.iterations, time.perf_counter() - t0))
        log.info("adapt %d: dof %d J %.12e est %.3e", it, orders.dof, J, err.estimate)
        if abs(err.estimate) < cfg.tol:
            state.stop_reason = "tolerance"
            return state
        if not err.marked:
            state.stop_reason = "saturated"
            return state
        state.ranks[list(err.marked)] += 1
    state.stop_reason = "max_iters"
    return state
