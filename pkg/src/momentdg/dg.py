"""Piecewise-constant DG discretization in space with a kinetic upwind flux.

Basis
-----
Element ``k`` carries background ``(rho_k, u_k, theta_k)`` and the local
velocity variable ``xi = (v - u_k) / sqrt(theta_k)``. Test and trial functions
are the normalized monomials ``phi_i = xi**i / sqrt((2i-1)!!)``, which span
exactly the polynomials of degree ``<= M_k`` in ``v`` but keep the moment
matrices well scaled at high order. ``DGSolution.coeffs[k]`` holds the
coefficients of ``g`` in this basis; :meth:`DGSolution.velocity_poly`
converts to plain monomials in ``v``.

Residual
--------
For element ``k`` and test function ``phi_i``::

    R[k, i] = F_i(right edge) - F_i(left edge) - h <phi_i C(beta(g_k))>

with ``F_i(e) = <phi_i v beta_hat>``: the upwind trace is taken from the
element on the side the particles leave, or from boundary data.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.special import comb

from . import kernels
from .collision import BgkParams, bgk_core
from .errors import BoundaryFluxError, RealizabilityError, VacuumError
from .velocity import (
    FULL,
    GaussianParams,
    Interval,
    PolyLike,
    RenormalizedDensity,
    RenormSpec,
    as_coeffs,
    incomplete_gaussian_moments,
)

INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


def basis_scale(n: int) -> np.ndarray:
    """``1/sqrt((2i-1)!!)`` for ``i = 0..n-1``: unit Gaussian norm of ``xi**i``."""
    d = np.ones(n)
    for i in range(2, n):
        d[i] = d[i - 1] / math.sqrt(2 * i - 1)
    return d


@dataclass(frozen=True)
class Mesh1D:
    x_lo: float
    x_hi: float
    n_elements: int

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("x_lo must be < x_hi")
        if self.n_elements < 1:
            raise ValueError("need at least one element")

    @property
    def h(self) -> float:
        return (self.x_hi - self.x_lo) / self.n_elements

    @property
    def edges(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.n_elements + 1)

    @property
    def centers(self) -> np.ndarray:
        e = self.edges
        return 0.5 * (e[1:] + e[:-1])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


class OrderMap:
    """Per-element moment orders ``M_k`` (highest monomial degree)."""

    def __init__(self, orders: Sequence[int]):
        o = np.array(orders, dtype=int)
        if o.ndim != 1 or o.size == 0:
            raise ValueError("orders must be a nonempty 1D sequence")
        if np.any(o < 2):
            raise ValueError("every moment order must be >= 2 (collision invariants)")
        o.flags.writeable = False
        self.orders = o

    @classmethod
    def uniform(cls, n: int, order: int) -> "OrderMap":
        return cls(np.full(n, order))

    def __len__(self):
        return self.orders.size

    def __getitem__(self, k):
        return int(self.orders[k])

    def __iter__(self):
        return (int(m) for m in self.orders)

    def __eq__(self, other):
        return isinstance(other, OrderMap) and np.array_equal(self.orders, other.orders)

    def __add__(self, inc: int) -> "OrderMap":
        return OrderMap(self.orders + inc)

    @property
    def dof(self) -> int:
        return int(np.sum(self.orders + 1))

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.orders + 1)])

    def __repr__(self):
        return f"OrderMap({self.orders.tolist()})"


@dataclass
class DGSolution:
    """Moment orders and local-basis coefficients on every element."""

    mesh: Mesh1D
    orders: OrderMap
    coeffs: list

    def __post_init__(self):
        if len(self.orders) != self.mesh.n_elements or len(self.coeffs) != self.mesh.n_elements:
            raise ValueError("orders and coeffs must have one entry per element")
        self.coeffs = [np.asarray(c, dtype=float) for c in self.coeffs]
        for k, (c, m) in enumerate(zip(self.coeffs, self.orders)):
            if c.shape != (m + 1,):
                raise ValueError(f"element {k}: expected {m + 1} coefficients, got {c.shape}")

    @classmethod
    def zeros(cls, mesh: Mesh1D, orders: OrderMap) -> "DGSolution":
        return cls(mesh, orders, [np.zeros(m + 1) for m in orders])

    @property
    def dof(self) -> int:
        return self.orders.dof

    def vector(self) -> np.ndarray:
        return np.concatenate(self.coeffs)

    def with_vector(self, x: np.ndarray) -> "DGSolution":
        off = self.orders.offsets
        return DGSolution(self.mesh, self.orders, [x[off[k]:off[k + 1]].copy() for k in range(len(self.orders))])

    def prolong(self, orders: OrderMap) -> "DGSolution":
        """Zero-pad (or truncate) every element to ``orders``."""
        out = []
        for c, m in zip(self.coeffs, orders):
            z = np.zeros(m + 1)
            n = min(m + 1, c.size)
            z[:n] = c[:n]
            out.append(z)
        return DGSolution(self.mesh, orders, out)

    def velocity_poly(self, bg: GaussianParams, k: int) -> np.ndarray:
        """Coefficients of ``g_k`` as a polynomial in ``v``."""
        return local_to_velocity(self.coeffs[k], bg)


def local_to_velocity(coeffs, bg: GaussianParams) -> np.ndarray:
    c = np.asarray(coeffs, dtype=float) * basis_scale(len(coeffs))
    s = bg.std
    out = np.zeros(c.size)
    # xi**i = sum_j C(i,j) (-u/s)**(i-j) s**-j v**j
    for i, ci in enumerate(c):
        if ci == 0.0:
            continue
        j = np.arange(i + 1)
        out[: i + 1] += ci * comb(i, j) * (-bg.u / s) ** (i - j) * s ** (-j.astype(float))
    return out


def velocity_to_local(coeffs: PolyLike, bg: GaussianParams) -> np.ndarray:
    c = as_coeffs(coeffs)
    out = np.zeros(c.size)
    # v = u + s xi
    for i, ci in enumerate(c):
        if ci == 0.0:
            continue
        j = np.arange(i + 1)
        out[: i + 1] += ci * comb(i, j) * bg.u ** (i - j) * bg.std ** j.astype(float)
    return out / basis_scale(c.size)


@dataclass(frozen=True)
class BoundaryCondition:
    """Inflow data at one end of the domain.

    ``fixed_maxwellian`` prescribes the full incoming Maxwellian. For
    ``accommodation`` only ``u`` (must be 0) and ``theta`` of ``inflow`` are
    used; the wall density follows from zero net mass flux, unless
    ``pin_density`` holds it at ``inflow.rho``.

    Two impermeable walls leave the overall density scale free (the discrete
    problem is invariant under ``beta -> c beta``); pinning one wall fixes it,
    and mass balance then enforces impermeability there at convergence.
    """

    kind: str
    inflow: GaussianParams
    pin_density: bool = False

    def __post_init__(self):
        if self.kind not in ("fixed_maxwellian", "accommodation"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "accommodation" and self.inflow.u != 0.0:
            raise ValueError("accommodating walls are at rest (u = 0)")
        if self.pin_density and self.kind != "accommodation":
            raise ValueError("pin_density applies to accommodating walls only")

    @classmethod
    def wall(cls, theta: float, density: float | None = None) -> "BoundaryCondition":
        """Accommodating wall; ``density`` pins the emitted density."""
        rho = 1.0 if density is None else density
        return cls("accommodation", GaussianParams(rho, 0.0, theta), density is not None)

    @classmethod
    def maxwellian(cls, bg: GaussianParams) -> "BoundaryCondition":
        return cls("fixed_maxwellian", bg)


@dataclass
class BlockTriDiag:
    """Block-tridiagonal matrix with variable block sizes.

    ``lower[k]`` couples row block ``k+1`` to column block ``k``;
    ``upper[k]`` couples row block ``k`` to column block ``k+1``.
    """

    diag: list
    lower: list = field(default_factory=list)
    upper: list = field(default_factory=list)

    def __post_init__(self):
        n = len(self.diag)
        if len(self.lower) != n - 1 or len(self.upper) != n - 1:
            raise ValueError("need n-1 lower and upper blocks")
        rs, cs = self.row_sizes, self.col_sizes
        for k in range(n - 1):
            if self.lower[k].shape != (rs[k + 1], cs[k]) or self.upper[k].shape != (rs[k], cs[k + 1]):
                raise ValueError(f"off-diagonal block {k} has inconsistent shape")

    @property
    def row_sizes(self):
        return [b.shape[0] for b in self.diag]

    @property
    def col_sizes(self):
        return [b.shape[1] for b in self.diag]

    @property
    def shape(self):
        return sum(self.row_sizes), sum(self.col_sizes)

    def _split(self, x, sizes):
        off = np.concatenate([[0], np.cumsum(sizes)])
        return [x[off[k]:off[k + 1]] for k in range(len(sizes))]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        xs = self._split(np.asarray(x, dtype=float), self.col_sizes)
        out = [d @ xk for d, xk in zip(self.diag, xs)]
        for k in range(len(self.diag) - 1):
            out[k + 1] += self.lower[k] @ xs[k]
            out[k] += self.upper[k] @ xs[k + 1]
        return np.concatenate(out)

    def rmatvec(self, y: np.ndarray) -> np.ndarray:
        ys = self._split(np.asarray(y, dtype=float), self.row_sizes)
        out = [d.T @ yk for d, yk in zip(self.diag, ys)]
        for k in range(len(self.diag) - 1):
            out[k] += self.lower[k].T @ ys[k + 1]
            out[k + 1] += self.upper[k].T @ ys[k]
        return np.concatenate(out)

    def transpose(self) -> "BlockTriDiag":
        return BlockTriDiag([d.T for d in self.diag], [u.T for u in self.upper], [l.T for l in self.lower])

    def to_dense(self) -> np.ndarray:
        ro = np.concatenate([[0], np.cumsum(self.row_sizes)])
        co = np.concatenate([[0], np.cumsum(self.col_sizes)])
        A = np.zeros(self.shape)
        for k, d in enumerate(self.diag):
            A[ro[k]:ro[k + 1], co[k]:co[k + 1]] = d
        for k in range(len(self.diag) - 1):
            A[ro[k + 1]:ro[k + 2], co[k]:co[k + 1]] = self.lower[k]
            A[ro[k]:ro[k + 1], co[k + 1]:co[k + 2]] = self.upper[k]
        return A


@dataclass
class DGProblem:
    """Everything the residual needs besides the state itself."""

    mesh: Mesh1D
    backgrounds: list
    bc_left: BoundaryCondition
    bc_right: BoundaryCondition
    spec: RenormSpec
    params: BgkParams

    def __post_init__(self):
        if len(self.backgrounds) != self.mesh.n_elements:
            raise ValueError("need one background per element")


# ---------------------------------------------------------------------------
# public flux operations in plain velocity monomials


def upwind_flux_moments(g_left: PolyLike, g_right: PolyLike, spec: RenormSpec,
                        bg_left: GaussianParams, bg_right: GaussianParams, k_max: int) -> np.ndarray:
    """``F_k = <v**(k+1) beta_hat>`` at an edge, ``k = 0..k_max``."""
    out = RenormalizedDensity(g_left, spec, bg_left).moments(k_max + 1, Interval(0.0, math.inf))
    out = out + RenormalizedDensity(g_right, spec, bg_right).moments(k_max + 1, Interval(-math.inf, 0.0))
    return out[1:]


def wall_unit_flux(theta: float) -> float:
    """Mass flux of the unit-density Maxwellian at rest through a wall."""
    return math.sqrt(theta / (2.0 * math.pi))


def boundary_flux_moments(g_inside: PolyLike, side: str, bc: BoundaryCondition, spec: RenormSpec,
                          bg_inside: GaussianParams, k_max: int):
    """Edge moments ``<v**(k+1) beta_hat>`` at a domain boundary.

    Returns ``(fluxes, rho_wall)``; ``rho_wall`` is ``None`` for fixed
    Maxwellian data.
    """
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    out_win = Interval(-math.inf, 0.0) if side == "left" else Interval(0.0, math.inf)
    in_win = Interval(0.0, math.inf) if side == "left" else Interval(-math.inf, 0.0)
    outgoing = RenormalizedDensity(g_inside, spec, bg_inside).moments(k_max + 1, out_win)
    rho_wall = None
    inflow = bc.inflow
    if bc.kind == "accommodation" and bc.pin_density:
        rho_wall = inflow.rho
    elif bc.kind == "accommodation":
        mass_out = outgoing[1]
        if (side == "left" and mass_out > 0.0) or (side == "right" and mass_out < 0.0):
            raise BoundaryFluxError(f"outgoing mass flux {mass_out} has the wrong sign at the {side} wall")
        rho_wall = abs(mass_out) / wall_unit_flux(inflow.theta)
        inflow = GaussianParams(rho_wall, 0.0, inflow.theta) if rho_wall > 0.0 else None
    incoming = np.zeros(k_max + 2) if inflow is None else incomplete_gaussian_moments(k_max + 1, in_win, inflow)
    return (outgoing + incoming)[1:], rho_wall


# ---------------------------------------------------------------------------
# assembly in the local normalized basis


def _shift_matrix(n_rows: int, n_cols: int, alpha: float, gamma: float) -> np.ndarray:
    """``T[i, l]``: coefficient of ``y**l`` in ``(alpha + gamma y)**i``."""
    T = np.zeros((n_rows, n_cols))
    for i in range(n_rows):
        l = np.arange(min(i, n_cols - 1) + 1)
        T[i, l] = comb(i, l) * alpha ** (i - l) * gamma ** l.astype(float)
    return T


class _Element:
    """Velocity moments of one element's ``beta`` needed by the assembly."""

    __slots__ = ("bg", "s", "order", "q_plus", "q_minus", "dq_plus", "dq_minus", "coll", "dcoll", "dens")

    def __init__(self, k, coeffs, bg, spec, params, test_order, flux_order, jac):
        self.bg = bg
        self.s = s = bg.std
        self.order = m = coeffs.size - 1
        d = basis_scale(max(flux_order, m, test_order) + 2)
        mono = coeffs * d[: m + 1]
        dens = RenormalizedDensity(mono, spec, GaussianParams(bg.rho, 0.0, 1.0))
        if dens.empty:
            raise VacuumError("beta(g) vanishes identically", k)
        self.dens = dens
        xi0 = -bg.u / s
        plus, minus = Interval(xi0, math.inf), Interval(-math.inf, xi0)
        u = bg.u
        kq = flux_order
        mp = dens.moments(kq + 1, plus)
        mm = dens.moments(kq + 1, minus)
        # <xi**i v beta> over each half line, with v = u + s xi
        self.q_plus = u * mp[:-1] + s * mp[1:]
        self.q_minus = u * mm[:-1] + s * mm[1:]
        coll, dcoll = bgk_core(dens, params, test_order + 1, m + 1 if jac else 0,
                               theta_scale=bg.theta, element=k)
        self.coll = coll
        self.dcoll = dcoll
        if jac:
            mpp = dens.moments(kq + m + 1, plus, derivative=True)
            mmp = dens.moments(kq + m + 1, minus, derivative=True)
            Hp = kernels.hankel(mpp, kq + 1, m + 2, 0)
            Hm = kernels.hankel(mmp, kq + 1, m + 2, 0)
            self.dq_plus = (u * Hp[:, :-1] + s * Hp[:, 1:]) * d[None, : m + 1]
            self.dq_minus = (u * Hm[:, :-1] + s * Hm[:, 1:]) * d[None, : m + 1]
            self.dcoll = dcoll * d[None, : m + 1]


def _transfer(receiver: GaussianParams, donor: GaussianParams, n_rows: int, n_cols: int) -> np.ndarray:
    """Receiver test functions expressed in the donor's ``xi`` monomials."""
    alpha = (donor.u - receiver.u) / receiver.std
    gamma = donor.std / receiver.std
    return basis_scale(n_rows)[:, None] * _shift_matrix(n_rows, n_cols, alpha, gamma)


def _inflow_vector(receiver: GaussianParams, inflow: GaussianParams, window: str, n_rows: int) -> np.ndarray:
    """``<phi_i v M_inflow>`` over the incoming half line, in the receiver basis."""
    s = receiver.std
    xi0 = -receiver.u / s
    win = Interval(xi0, math.inf) if window == "plus" else Interval(-math.inf, xi0)
    local = GaussianParams(inflow.rho, (inflow.u - receiver.u) / s, inflow.theta / receiver.theta)
    G = incomplete_gaussian_moments(n_rows, win, local)
    return basis_scale(n_rows) * (receiver.u * G[:-1] + s * G[1:])


@dataclass
class Assembly:
    residual: np.ndarray
    jacobian: BlockTriDiag | None
    rho_wall: tuple
    elements: list


def assemble(problem: DGProblem, sol: DGSolution, test_orders: OrderMap | None = None,
             jacobian: bool = True) -> Assembly:
    """Residual (and Jacobian) of the DG moment system at ``sol``.

    ``test_orders`` defaults to the trial orders; the dual problem passes an
    enriched map together with a zero-padded state.
    """
    n = problem.mesh.n_elements
    if len(sol.orders) != n:
        raise ValueError("solution does not match the mesh")
    tests = sol.orders if test_orders is None else test_orders
    if len(tests) != n:
        raise ValueError("test orders do not match the mesh")
    widths = problem.mesh.widths
    bgs = problem.backgrounds
    spec, params = problem.spec, problem.params

    els = []
    for k in range(n):
        kq = max(tests[j] for j in (k - 1, k, k + 1) if 0 <= j < n)
        els.append(_Element(k, sol.coeffs[k], bgs[k], spec, params, tests[k], kq, jacobian))

    res = []
    diag, lower, upper = [], [], []
    for k, e in enumerate(els):
        mt = tests[k] + 1
        d = basis_scale(mt)
        r = d * (e.q_plus[:mt] - e.q_minus[:mt]) - widths[k] * d * e.coll
        if jacobian:
            D = d[:, None] * (e.dq_plus[:mt] - e.dq_minus[:mt]) - widths[k] * d[:, None] * e.dcoll
        if k + 1 < n:
            nb = els[k + 1]
            T = _transfer(bgs[k], nb.bg, mt, nb.q_minus.size)
            r += T @ nb.q_minus
            if jacobian:
                upper.append(T @ nb.dq_minus)
        if k > 0:
            nb = els[k - 1]
            T = _transfer(bgs[k], nb.bg, mt, nb.q_plus.size)
            r -= T @ nb.q_plus
            if jacobian:
                lower.append(-(T @ nb.dq_plus))
        res.append(r)
        if jacobian:
            diag.append(D)

    walls = [None, None]
    for side, k, bc, win, sign in (("left", 0, problem.bc_left, "plus", -1.0),
                                   ("right", n - 1, problem.bc_right, "minus", 1.0)):
        e = els[k]
        mt = tests[k] + 1
        if bc.kind == "fixed_maxwellian":
            res[k] += sign * _inflow_vector(bgs[k], bc.inflow, win, mt)
            continue
        unit = _inflow_vector(bgs[k], GaussianParams(1.0, 0.0, bc.inflow.theta), win, mt)
        if bc.pin_density:
            walls[0 if side == "left" else 1] = bc.inflow.rho
            res[k] += sign * bc.inflow.rho * unit
            continue
        flux1 = wall_unit_flux(bc.inflow.theta)
        out_mass = e.q_minus[0] if side == "left" else e.q_plus[0]
        if (side == "left" and out_mass > 0.0) or (side == "right" and out_mass < 0.0):
            raise BoundaryFluxError(f"outgoing mass flux {out_mass} has the wrong sign at the {side} wall")
        rho_w = abs(out_mass) / flux1
        walls[0 if side == "left" else 1] = rho_w
        res[k] += sign * rho_w * unit
        if jacobian:
            # rho_w = |outgoing mass| / flux1, differentiated exactly
            dmass = e.dq_minus[0] if side == "left" else e.dq_plus[0]
            drho = (-dmass if side == "left" else dmass) / flux1
            diag[k] += sign * np.outer(unit, drho)

    # fold lower into row-block convention: lower[k] couples row k+1 to col k
    if jacobian:
        jac = BlockTriDiag(diag, lower, upper)
    else:
        jac = None
    return Assembly(np.concatenate(res), jac, tuple(walls), els)


def assemble_residual(problem: DGProblem, sol: DGSolution, test_orders: OrderMap | None = None) -> np.ndarray:
    return assemble(problem, sol, test_orders, jacobian=False).residual


def assemble_jacobian(problem: DGProblem, sol: DGSolution, test_orders: OrderMap | None = None) -> BlockTriDiag:
    return assemble(problem, sol, test_orders, jacobian=True).jacobian


def residual_blocks(problem: DGProblem, sol: DGSolution, r: np.ndarray, test_orders: OrderMap | None = None) -> list:
    tests = sol.orders if test_orders is None else test_orders
    off = tests.offsets
    return [r[off[k]:off[k + 1]] for k in range(len(tests))]


def element_macroscopic(problem: DGProblem, sol: DGSolution, k: int) -> GaussianParams:
    """Density, velocity and temperature of ``beta(g_k)`` in physical units."""
    bg = problem.backgrounds[k]
    c = sol.coeffs[k] * basis_scale(sol.orders[k] + 1)
    dens = RenormalizedDensity(c, problem.spec, GaussianParams(bg.rho, 0.0, 1.0))
    if dens.empty:
        raise VacuumError("beta(g) vanishes identically", k)
    mu = dens.moments(2, FULL)
    a = mu[1] / mu[0]
    b2 = mu[2] / mu[0] - a * a
    if not b2 > 0.0:
        raise RealizabilityError(f"temperature {b2 * bg.theta} is not positive", k)
    return GaussianParams(float(mu[0]), bg.u + bg.std * a, b2 * bg.theta)
