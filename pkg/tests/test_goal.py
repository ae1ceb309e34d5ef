import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from momentdg.collision import BgkParams
from momentdg.dg import BoundaryCondition, DGProblem, DGSolution, Mesh1D, OrderMap, assemble_residual, velocity_to_local
from momentdg.goal import (
    GoalSpec,
    breakdown,
    error_indicators,
    goal_gradient,
    goal_value,
    indicators_from_residual,
    local_heat_flux,
)
from momentdg.problems import HeatTransferConfig, build_problem
from momentdg.solver import dual_solve, enriched_operator, newton_solve
from momentdg.velocity import GaussianParams, RenormSpec

STD = GaussianParams(1.0, 0.0, 1.0)


def _problem(bgs, spec=RenormSpec(1), x_hi=1.0):
    n = len(bgs)
    return DGProblem(Mesh1D(0.0, x_hi, n), list(bgs), BoundaryCondition.maxwellian(bgs[0]),
                     BoundaryCondition.maxwellian(bgs[-1]), spec, BgkParams(0.1))


def test_centered_maxwellian_zero():
    bgs = [GaussianParams(1.0 + 0.1 * k, 0.2 * k, 1.0 + 0.05 * k) for k in range(4)]
    p = _problem(bgs)
    sol = DGSolution.zeros(p.mesh, OrderMap.uniform(4, 4))
    assert goal_value(p, sol, GoalSpec.from_backgrounds(bgs)) == pytest.approx(0.0, abs=1e-15)


def test_even_state_zero():
    p = _problem([STD] * 2, RenormSpec(2))
    sol = DGSolution(p.mesh, OrderMap.uniform(2, 4), [np.array([0.1, 0, -0.2, 0, 0.05])] * 2)
    assert goal_value(p, sol, GoalSpec((0.0, 0.0))) == pytest.approx(0.0, abs=1e-15)


def test_sixth_moment_example():
    eps = 1e-3  # clipping sets in at |v| ~ 10, far in the Gaussian tail
    p = _problem([STD])
    sol = DGSolution(p.mesh, OrderMap([3]), [velocity_to_local([0, 0, 0, eps], STD)])
    assert goal_value(p, sol, GoalSpec((0.0,))) == pytest.approx(15 * eps, rel=1e-12)


def test_goal_scales_with_width():
    p1, p2 = _problem([STD]), _problem([STD], x_hi=2.5)
    sol = [np.array([0.0, 0.1, 0.0, 0.05])]
    J1 = goal_value(p1, DGSolution(p1.mesh, OrderMap([3]), sol), GoalSpec((0.0,)))
    J2 = goal_value(p2, DGSolution(p2.mesh, OrderMap([3]), sol), GoalSpec((0.0,)))
    assert J2 == pytest.approx(2.5 * J1, rel=1e-14)


def test_goal_shape_check():
    p = _problem([STD] * 2)
    with pytest.raises(ValueError):
        goal_value(p, DGSolution.zeros(p.mesh, OrderMap.uniform(2, 2)), GoalSpec((0.0,)))


def test_gradient_finite_difference(rng):
    worst = 0.0
    for _ in range(30):
        bgs = [GaussianParams(rng.uniform(0.5, 2), rng.uniform(-1, 1), rng.uniform(0.5, 2)) for _ in range(3)]
        p = _problem(bgs, RenormSpec(int(rng.integers(1, 3))))
        orders = OrderMap([int(m) for m in rng.integers(2, 8, size=3)])
        sol = DGSolution(p.mesh, orders, [0.2 * rng.normal(size=m + 1) for m in orders])
        goal = GoalSpec(tuple(rng.uniform(-1, 1, size=3)))
        grad = goal_gradient(p, sol, goal)
        x = sol.vector()
        d = rng.normal(size=x.size)
        h = 1e-5
        fd = (goal_value(p, sol.with_vector(x + h * d), goal) - goal_value(p, sol.with_vector(x - h * d), goal)) / (2 * h)
        worst = max(worst, abs(fd - grad @ d) / max(abs(grad @ d), np.abs(grad).max()))
    assert worst <= 1e-8


def test_gradient_enriched_entries():
    p = _problem([STD, GaussianParams(1.2, 0.3, 0.8)])
    sol = DGSolution(p.mesh, OrderMap.uniform(2, 3), [np.array([0.0, 0.1, 0.0, 0.02])] * 2)
    goal = GoalSpec.from_backgrounds(p.backgrounds)
    g = goal_gradient(p, sol, goal)
    ge = goal_gradient(p, sol.prolong(sol.orders + 2), goal, sol.orders + 2)
    assert ge[[0, 1, 2, 3, 6, 7, 8, 9]] == pytest.approx(g, rel=1e-14, abs=1e-16)


def test_gradient_fully_clipped():
    p = _problem([STD, STD])
    sol = DGSolution(p.mesh, OrderMap.uniform(2, 2), [np.array([0.0, 0.1, 0.0]), np.array([-3.0, 0.0, -1.0])])
    g = goal_gradient(p, sol, GoalSpec((0.0, 0.0)))
    assert np.all(g[3:] == 0.0)
    assert np.any(g[:3] != 0.0)


def test_gradient_parity():
    p = _problem([STD])
    sol = DGSolution(p.mesh, OrderMap([6]), [np.array([0.1, 0.0, -0.3, 0.0, 0.05, 0.0, 0.01])])
    g = goal_gradient(p, sol, GoalSpec((0.0,)))
    assert np.all(np.abs(g[0::2]) <= 1e-15 * np.abs(g).max())
    assert np.all(np.abs(g[1::2]) > 0)


def test_synthetic_indicators():
    mesh = Mesh1D(0.0, 1.0, 3)
    dual = DGSolution(mesh, OrderMap([2, 3, 2]), [np.array([1.0, -2.0, 0.5]), np.array([0.0, 1.0, 1.0, -1.0]),
                                                  np.array([2.0, 2.0, 2.0])])
    r = np.array([0.1, 0.2, 0.4, 1.0, -1.0, 3.0, 0.5, 0.25, -0.25, 1.0])
    zeta = indicators_from_residual(r, dual)
    assert zeta == pytest.approx([0.1 - 0.4 + 0.2, -1.0 + 3.0 - 0.5, 0.5 - 0.5 + 2.0], rel=1e-15)
    b = breakdown(zeta)
    assert b.estimate == pytest.approx(-0.1 + 1.5 + 2.0, rel=1e-15)
    assert b.bound_triangle == pytest.approx(3.6, rel=1e-15)
    with pytest.raises(ValueError):
        indicators_from_residual(r[:-1], dual)


@given(st.lists(st.floats(-10, 10, allow_subnormal=False), min_size=1, max_size=20))
def test_bound_chain(zeta):
    b = breakdown(np.array(zeta))
    assert abs(b.estimate) <= b.bound_cancel * (1 + 1e-12) + 1e-300
    assert b.bound_cancel <= b.bound_triangle


@pytest.fixture(scope="module")
def heat():
    setup = build_problem(HeatTransferConfig(n_elements=12))
    sol, _ = newton_solve(setup.dg, DGSolution.zeros(setup.dg.mesh, OrderMap.uniform(12, 4)))
    return setup, sol


def test_zero_dual(heat):
    setup, sol = heat
    b = error_indicators(setup.dg, sol, DGSolution.zeros(sol.mesh, sol.orders + 2))
    assert np.all(b.zeta == 0.0) and b.estimate == 0.0 and b.marked == ()


def test_galerkin_orthogonality(heat):
    setup, sol = heat
    enriched = sol.orders + 2
    padded, op = enriched_operator(setup.dg, sol, enriched)
    z = dual_solve(setup.dg, sol, enriched, goal_gradient(setup.dg, padded, setup.goal, enriched), op)
    off = enriched.offsets
    for k, m in enumerate(sol.orders):
        low = op.residual[off[k]:off[k] + m + 1] * z.coeffs[k][:m + 1]
        assert np.all(np.abs(low) <= 10 * 1e-10 * np.abs(z.coeffs[k]).max())
    b = error_indicators(setup.dg, sol, z)
    assert b.zeta == pytest.approx(indicators_from_residual(op.residual, z), rel=1e-14)
    assert abs(b.estimate) <= b.bound_cancel <= b.bound_triangle


def test_local_heat_flux_matches_goal(heat):
    setup, sol = heat
    q = local_heat_flux(setup.dg, sol, setup.goal)
    assert goal_value(setup.dg, sol, setup.goal) == pytest.approx(float(setup.dg.mesh.widths @ q), rel=1e-15)
