"""Velocity-space kernel: renormalization map, entropy, Maxwellians and exact
integration of Gaussian-weighted piecewise polynomials.

A distribution is represented through a polynomial ``g`` and a Gaussian
background ``B``::

    beta(g) = B * max(0, 1 + g/N) ** N

All velocity integrals are evaluated exactly (to round-off): the support of
``beta(g)`` is split at the real roots of ``1 + g/N`` and each piece is
integrated against incomplete Gaussian moments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from . import kernels
from .errors import (
    DegeneratePolynomialError,
    NonRealizableError,
    QuadratureCapError,
    VacuumError,
)

#: Largest moment order the incomplete-moment recurrence is allowed to reach.
QUAD_CAP = 160

#: Half-width, in background standard deviations, beyond which the Gaussian
#: weight underflows and root locations no longer matter.
ROOT_CLIP = 40.0

INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianParams:
    """Density, bulk velocity and temperature (``theta = R T``) of a 1D Maxwellian."""

    rho: float
    u: float
    theta: float

    def __post_init__(self):
        if not (self.rho > 0.0 and self.theta > 0.0):
            raise ValueError(f"need rho > 0 and theta > 0, got {self}")
        if not math.isfinite(self.u):
            raise ValueError(f"bulk velocity must be finite, got {self.u}")

    @property
    def std(self) -> float:
        return math.sqrt(self.theta)

    @property
    def pressure(self) -> float:
        return self.rho * self.theta


@dataclass(frozen=True)
class RenormSpec:
    """Exponent ``N`` of the renormalization map."""

    n_exponent: int

    def __post_init__(self):
        if int(self.n_exponent) != self.n_exponent or self.n_exponent < 1:
            raise ValueError(f"n_exponent must be a positive integer, got {self.n_exponent}")


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty interval ({self.lo}, {self.hi})")


FULL = Interval(-math.inf, math.inf)
POSITIVE = Interval(0.0, math.inf)
NEGATIVE = Interval(-math.inf, 0.0)
_RANGES = {"full": FULL, "positive": POSITIVE, "negative": NEGATIVE}


class VelocityPoly:
    """Polynomial ``g(v) = sum_k coeffs[k] * v**k`` of degree at least 2."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Sequence[float]):
        c = np.array(coeffs, dtype=float)
        if c.ndim != 1 or c.size < 3:
            raise ValueError("a VelocityPoly needs at least the coefficients of 1, v, v**2")
        if not np.all(np.isfinite(c)):
            raise ValueError("coefficients must be finite")
        c.flags.writeable = False
        self.coeffs = c

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    def __call__(self, v):
        return P.polyval(v, self.coeffs)

    def __repr__(self):
        return f"VelocityPoly({self.coeffs.tolist()})"


PolyLike = Union[VelocityPoly, Sequence[float], np.ndarray]


def as_coeffs(g: PolyLike) -> np.ndarray:
    if isinstance(g, VelocityPoly):
        return g.coeffs
    return np.atleast_1d(np.asarray(g, dtype=float))


def _range(r) -> Interval:
    if isinstance(r, Interval):
        return r
    try:
        return _RANGES[r]
    except KeyError:
        raise ValueError(f"range must be one of {sorted(_RANGES)} or an Interval") from None


# ---------------------------------------------------------------------------
# pointwise maps


def maxwellian(v, bg: GaussianParams):
    v = np.asarray(v, dtype=float)
    return bg.rho * INV_SQRT2PI / bg.std * np.exp(-0.5 * (v - bg.u) ** 2 / bg.theta)


def eval_beta(g: PolyLike, spec: RenormSpec, bg: GaussianParams, v):
    n = spec.n_exponent
    base = np.maximum(0.0, 1.0 + P.polyval(v, as_coeffs(g)) / n)
    return maxwellian(v, bg) * base**n


def eval_beta_prime(g: PolyLike, spec: RenormSpec, bg: GaussianParams, v):
    n = spec.n_exponent
    base = 1.0 + P.polyval(v, as_coeffs(g)) / n
    pos = base > 0.0
    return np.where(pos, maxwellian(v, bg) * np.where(pos, base, 0.0) ** (n - 1), 0.0)


def eval_eta(f, spec: RenormSpec, bg_value):
    n = spec.n_exponent
    f = np.asarray(f, dtype=float)
    return f * (n * n / (1.0 + n) * (f / bg_value) ** (1.0 / n) - n) + bg_value * n / (1.0 + n)


def eval_eta_prime(f, spec: RenormSpec, bg_value):
    n = spec.n_exponent
    return n * ((np.asarray(f, dtype=float) / bg_value) ** (1.0 / n) - 1.0)


# ---------------------------------------------------------------------------
# Gaussian moments


def incomplete_gaussian_moments(k_max: int, iv: Interval, bg: GaussianParams) -> np.ndarray:
    """``G[k] = int_iv v**k M_bg(v) dv`` for ``k = 0..k_max``.

    Intervals with an infinite end use the forward three-term recurrence with
    erfc-based zeroth moment; finite intervals, where that recurrence loses
    the dominant solution, use piecewise Gauss-Legendre quadrature.
    """
    if k_max < 0:
        raise ValueError("k_max must be nonnegative")
    if k_max > QUAD_CAP:
        raise QuadratureCapError(f"moment order {k_max} exceeds quadrature cap {QUAD_CAP}")
    if math.isinf(iv.lo) or math.isinf(iv.hi):
        return kernels.recurrence_moments(k_max, iv.lo, iv.hi, bg.rho, bg.u, bg.theta)
    zclip = max(12.0, math.sqrt(k_max) + 10.0)
    return kernels.finite_moments(k_max, iv.lo, iv.hi, bg.rho, bg.u, bg.theta, zclip)


def gaussian_moments(k_max: int, bg: GaussianParams) -> np.ndarray:
    """Full-range moments of the Maxwellian ``bg``."""
    out = np.empty(k_max + 1)
    out[0] = bg.rho
    if k_max >= 1:
        out[1] = bg.rho * bg.u
    for k in range(2, k_max + 1):
        out[k] = bg.u * out[k - 1] + bg.theta * (k - 1) * out[k - 2]
    return out


# ---------------------------------------------------------------------------
# support of beta(g)


def _trim(c: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(c)
    if nz.size == 0:
        return c[:0]
    return c[: nz[-1] + 1]


def _real_roots(c: np.ndarray) -> np.ndarray:
    """Real roots of a polynomial (ascending coefficients), sorted and polished."""
    c = _trim(c)
    if c.size == 0:
        raise DegeneratePolynomialError("polynomial is identically zero")
    if c.size == 1:
        return np.empty(0)
    # companion-matrix eigenvalues of the monic polynomial
    roots = np.roots(c[::-1] / c[-1])
    keep = np.abs(roots.imag) < 1e-10 * (1.0 + np.abs(roots.real))
    r = np.sort(roots.real[keep])
    if r.size == 0:
        return r
    dc = P.polyder(c)
    fv = P.polyval(r, c)
    dv = P.polyval(r, dc)
    step = np.divide(fv, dv, out=np.zeros_like(fv), where=dv != 0.0)
    polished = r - step
    # a Newton step that moves far signals a multiple root; keep the eigenvalue
    r = np.where(np.abs(step) < 1e-6 * (1.0 + np.abs(r)), polished, r)
    r.sort()
    out = [r[0]]
    for x in r[1:]:
        if abs(x - out[-1]) > 1e-12 * max(1.0, abs(x)):
            out.append(x)
    return np.array(out)


def positivity_breakpoints(g: PolyLike, spec: RenormSpec) -> np.ndarray:
    """All real roots of ``1 + g(v)/N``, ascending and deduplicated."""
    q = as_coeffs(g) / spec.n_exponent
    q = q.copy()
    q[0] += 1.0
    return _real_roots(q)


def _support_pieces(q: np.ndarray, center: float, scale: float) -> list:
    """Intervals where the polynomial ``q`` is positive.

    Roots farther than ``ROOT_CLIP`` standard deviations from ``center`` are
    ignored; the Gaussian weight vanishes there in double precision.
    """
    lo_clip = center - ROOT_CLIP * scale
    hi_clip = center + ROOT_CLIP * scale
    roots = _real_roots(q)
    roots = roots[(roots > lo_clip) & (roots < hi_clip)]
    edges = [-math.inf, *roots.tolist(), math.inf]
    pieces = []
    for a, b in zip(edges[:-1], edges[1:]):
        test = 0.5 * (max(a, lo_clip) + min(b, hi_clip))
        if P.polyval(test, q) > 0.0:
            if pieces and pieces[-1][1] == a:  # tangency: merge
                pieces[-1] = (pieces[-1][0], b)
            else:
                pieces.append((a, b))
    return pieces


class RenormalizedDensity:
    """``beta(g)`` for one polynomial and background, with cached support.

    Work is done in the standardized variable ``z = (v - u)/sqrt(theta)`` of
    the background: the expanded powers of ``1 + g/N`` are contracted against
    incomplete Gaussian moments in ``z`` over the support pieces, and the
    result is shifted back to monomials in ``v``. Contracting in ``z`` keeps
    the coefficients of the expanded power well scaled.
    """

    def __init__(self, g: PolyLike, spec: RenormSpec, bg: GaussianParams):
        c = as_coeffs(g)
        self.n = spec.n_exponent
        self.bg = bg
        q = c / self.n
        q = q.copy()
        q[0] += 1.0
        q = _trim(q)
        if q.size == 0:
            raise DegeneratePolynomialError("1 + g/N is identically zero")
        self.shift, self.scale = bg.u, bg.std
        self._standard = self.shift == 0.0 and self.scale == 1.0
        qz = q if self._standard else _compose_affine(q, self.shift, self.scale)
        self.base = qz
        self.pow_n = P.polypow(qz, self.n)
        self.pow_n1 = P.polypow(qz, self.n - 1) if self.n > 1 else np.ones(1)
        self.pieces = _support_pieces(qz, 0.0, 1.0)
        self._zbg = GaussianParams(bg.rho, 0.0, 1.0)
        self._gcache = {}

    @property
    def empty(self) -> bool:
        return not self.pieces

    def _table(self, k_max: int, window: Interval) -> np.ndarray:
        key = (window.lo, window.hi)
        cached = self._gcache.get(key)
        if cached is not None and cached.size > k_max:
            return cached
        if k_max > QUAD_CAP:
            raise QuadratureCapError(f"moment order {k_max} exceeds quadrature cap {QUAD_CAP}")
        wlo = (window.lo - self.shift) / self.scale
        whi = (window.hi - self.shift) / self.scale
        total = np.zeros(k_max + 1)
        for a, b in self.pieces:
            lo = max(a, wlo)
            hi = min(b, whi)
            if lo < hi:
                total += incomplete_gaussian_moments(k_max, Interval(lo, hi), self._zbg)
        self._gcache[key] = total
        return total

    def moments(self, k_max: int, window: Interval = FULL, derivative: bool = False) -> np.ndarray:
        """``<v**k beta(g)>`` (or ``beta'(g)``) over ``window`` for ``k = 0..k_max``."""
        poly = self.pow_n1 if derivative else self.pow_n
        deg = max(self.pow_n.size, self.pow_n1.size) - 1
        table = self._table(k_max + deg, window)
        mz = kernels.window_contract(poly, table, k_max)
        if self._standard:
            return mz
        return _shift_moments(mz, self.shift, self.scale)


def _compose_affine(q: np.ndarray, u: float, s: float) -> np.ndarray:
    """Coefficients of ``q(u + s z)`` in ``z``."""
    out = np.zeros(q.size)
    for i in range(q.size - 1, -1, -1):  # Horner in polynomials
        out = P.polymul(out, [u, s])[: q.size]
        out[0] += q[i]
    return out


def _shift_moments(mz: np.ndarray, u: float, s: float) -> np.ndarray:
    """``<v**k f>`` from ``<z**j f>`` with ``v = u + s z``."""
    k = mz.size
    out = np.empty(k)
    sp = s ** np.arange(k, dtype=float)
    for i in range(k):
        j = np.arange(i + 1)
        out[i] = np.sum(_binom_row(i) * u ** (i - j).astype(float) * sp[: i + 1] * mz[: i + 1])
    return out


_BINOM = [np.ones(1)]


def _binom_row(i: int) -> np.ndarray:
    while len(_BINOM) <= i:
        prev = _BINOM[-1]
        _BINOM.append(np.concatenate([[1.0], prev[1:] + prev[:-1], [1.0]]))
    return _BINOM[i]


def beta_monomial_moments(g: PolyLike, spec: RenormSpec, bg: GaussianParams, k_max: int, range="full"):
    """``<v**k beta(g)>`` over the full line or a half line, ``k = 0..k_max``."""
    return RenormalizedDensity(g, spec, bg).moments(k_max, _range(range))


def beta_prime_monomial_moments(g: PolyLike, spec: RenormSpec, bg: GaussianParams, k_max: int, range="full"):
    """``<v**k beta'(g)>``; ``beta'`` vanishes outside the support of ``beta``."""
    return RenormalizedDensity(g, spec, bg).moments(k_max, _range(range), derivative=True)


# ---------------------------------------------------------------------------
# macroscopic state


def maxwellian_from_moments(rho: float, momentum: float, energy: float) -> GaussianParams:
    """Maxwellian with density ``rho``, momentum ``<v f>`` and energy ``<v**2 f>``."""
    if not rho > 0.0:
        raise VacuumError(f"density {rho!r} is not positive")
    u = momentum / rho
    theta = energy / rho - u * u
    if not theta > 0.0:
        raise NonRealizableError(f"temperature {theta!r} is not positive")
    return GaussianParams(float(rho), float(u), float(theta))


def conserved_moments(g: PolyLike, spec: RenormSpec, bg: GaussianParams):
    """Mass, momentum and energy of ``beta(g)`` plus the matching ``(rho, u, theta)``.

    Returns ``((rho, momentum, energy), GaussianParams)``.
    """
    dens = RenormalizedDensity(g, spec, bg)
    if dens.empty:
        raise VacuumError("beta(g) vanishes identically")
    m = dens.moments(2)
    return (float(m[0]), float(m[1]), float(m[2])), maxwellian_from_moments(*m)
