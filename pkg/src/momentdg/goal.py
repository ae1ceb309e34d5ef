"""Heat-flux goal functional and dual-weighted-residual error indicators."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import comb

from .dg import DGProblem, DGSolution, OrderMap, basis_scale
from .velocity import FULL, GaussianParams, RenormalizedDensity


@dataclass(frozen=True)
class GoalSpec:
    """Shift ``U`` of the weight ``(v - U)**3``, one value per element."""

    u_field: tuple

    def __post_init__(self):
        object.__setattr__(self, "u_field", tuple(float(u) for u in self.u_field))

    @classmethod
    def from_backgrounds(cls, bgs) -> "GoalSpec":
        return cls(tuple(bg.u for bg in bgs))


def _weight(bg: GaussianParams, shift: float) -> np.ndarray:
    """``(v - U)**3`` as a cubic in the local variable ``xi``."""
    s, delta = bg.std, bg.u - shift
    m = np.arange(4)
    return comb(3, m) * s ** m.astype(float) * delta ** (3 - m).astype(float)


def element_density(problem: DGProblem, sol: DGSolution, k: int) -> RenormalizedDensity:
    """``beta(g_k)`` in the local variable of element ``k``."""
    bg = problem.backgrounds[k]
    c = sol.coeffs[k] * basis_scale(sol.orders[k] + 1)
    return RenormalizedDensity(c, problem.spec, GaussianParams(bg.rho, 0.0, 1.0))


def _check(problem, sol, goal):
    n = problem.mesh.n_elements
    if len(goal.u_field) != n or len(sol.orders) != n:
        raise ValueError("goal, solution and mesh disagree on the element count")


def local_heat_flux(problem: DGProblem, sol: DGSolution, goal: GoalSpec) -> np.ndarray:
    """``<(v - U_k)**3 beta(g_k)>`` per element."""
    _check(problem, sol, goal)
    out = np.empty(problem.mesh.n_elements)
    for k in range(out.size):
        w = _weight(problem.backgrounds[k], goal.u_field[k])
        out[k] = w @ element_density(problem, sol, k).moments(3, FULL)
    return out


def goal_value(problem: DGProblem, sol: DGSolution, goal: GoalSpec) -> float:
    """``sum_k h_k <(v - U_k)**3 beta(g_k)>``."""
    return float(problem.mesh.widths @ local_heat_flux(problem, sol, goal))


def goal_gradient(problem: DGProblem, sol: DGSolution, goal: GoalSpec, test_orders: OrderMap | None = None) -> np.ndarray:
    """Derivative of the goal with respect to the local coefficients.

    ``test_orders`` may exceed the orders of ``sol``; the extra entries are
    derivatives along the enriched basis functions at the same state.
    """
    _check(problem, sol, goal)
    tests = sol.orders if test_orders is None else test_orders
    h = problem.mesh.widths
    blocks = []
    for k in range(problem.mesh.n_elements):
        m = tests[k]
        w = _weight(problem.backgrounds[k], goal.u_field[k])
        mup = element_density(problem, sol, k).moments(m + 3, FULL, derivative=True)
        g = np.array([w @ mup[j:j + 4] for j in range(m + 1)])
        blocks.append(h[k] * g * basis_scale(m + 1))
    return np.concatenate(blocks)


@dataclass
class ErrorBreakdown:
    zeta: np.ndarray
    estimate: float
    bound_cancel: float
    bound_triangle: float
    marked: tuple = ()


def indicators_from_residual(residual: np.ndarray, dual: DGSolution) -> np.ndarray:
    """``zeta_k = sum_i R[k, i] z[k, i]`` over the enriched basis of each element."""
    off = dual.orders.offsets
    if residual.shape != (off[-1],):
        raise ValueError("residual does not match the dual orders")
    return np.array([residual[off[k]:off[k + 1]] @ dual.coeffs[k] for k in range(len(dual.orders))])


def breakdown(zeta: np.ndarray, fraction_c: float = 1.0, saturated=()) -> ErrorBreakdown:
    from .adapt import MarkingConfig, bounds, mark

    zeta = np.asarray(zeta, dtype=float)
    est = float(np.sum(zeta))
    b_cancel, b_tri = bounds(zeta)
    marked = () if est == 0.0 else tuple(mark(zeta, MarkingConfig(fraction_c), saturated))
    return ErrorBreakdown(zeta, est, b_cancel, b_tri, marked)


def error_indicators(problem: DGProblem, primal: DGSolution, dual: DGSolution,
                     fraction_c: float = 1.0, saturated=()) -> ErrorBreakdown:
    """DWR indicators of ``primal`` weighted by the enriched ``dual``."""
    from .dg import assemble_residual

    if len(dual.orders) != len(primal.orders) or any(d < m for d, m in zip(dual.orders, primal.orders)):
        raise ValueError("dual orders must dominate the primal orders element-wise")
    r = assemble_residual(problem, primal.prolong(dual.orders), dual.orders)
    return breakdown(indicators_from_residual(r, dual), fraction_c, saturated)
