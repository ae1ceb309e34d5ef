"""BGK collision operator in moment form and its exact linearization."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import RealizabilityError, VacuumError
from .velocity import (
    GaussianParams,
    PolyLike,
    RenormalizedDensity,
    RenormSpec,
    gaussian_moments,
    maxwellian_from_moments,
)


@dataclass(frozen=True)
class BgkParams:
    """Hard-sphere BGK parameters; ``mean_free_path`` is in length units."""

    mean_free_path: float

    def __post_init__(self):
        if not self.mean_free_path > 0.0:
            raise ValueError(f"mean_free_path must be positive, got {self.mean_free_path}")


def relaxation_time(rho: float, pressure: float, params: BgkParams) -> float:
    """Bird's hard-sphere relaxation time ``(5 lambda / 16) sqrt(2 pi rho / p)``."""
    if not (rho > 0.0 and pressure > 0.0):
        raise ValueError(f"relaxation time needs rho > 0 and p > 0, got rho={rho}, p={pressure}")
    return 5.0 * params.mean_free_path / 16.0 * math.sqrt(2.0 * math.pi * rho / pressure)


def maxwellian_moment_jacobian(n_rows: int, bg: GaussianParams) -> np.ndarray:
    """Derivatives of ``<v**i M>`` with respect to (mass, momentum, energy).

    ``bg`` is the Maxwellian at which to differentiate; the result has shape
    ``(n_rows, 3)``.
    """
    rho, u, th = bg.rho, bg.u, bg.theta
    e = gaussian_moments(max(n_rows - 1, 0), bg) / rho
    out = np.zeros((n_rows, 3))
    for i in range(n_rows):
        de_du = i * e[i - 1] if i >= 1 else 0.0
        de_dth = 0.5 * i * (i - 1) * e[i - 2] if i >= 2 else 0.0
        # (u, theta) as functions of (rho, rho*u, rho*(u**2 + theta))
        out[i, 0] = e[i] - u * de_du + (u * u - th) * de_dth
        out[i, 1] = de_du - 2.0 * u * de_dth
        out[i, 2] = de_dth
    return out


def bgk_core(dens: RenormalizedDensity, params: BgkParams, n_rows: int, n_cols: int = 0,
             theta_scale: float = 1.0, frozen_tau: bool = False, element=None):
    """Collision moments ``<m_i C(beta)>`` and, if ``n_cols``, their Jacobian.

    ``dens`` may live in a rescaled velocity variable ``xi = (v - u0)/s``; then
    ``theta_scale = s**2`` restores the physical temperature entering the
    relaxation time. Derivatives are with respect to the monomial
    coefficients of ``g`` in that same variable.
    """
    if dens.empty:
        raise VacuumError("beta(g) vanishes identically", element)
    kmax = max(n_rows - 1, 2)
    mu = dens.moments(kmax)
    try:
        maxw = maxwellian_from_moments(mu[0], mu[1], mu[2])
    except RealizabilityError as exc:
        raise type(exc)(str(exc), element) from None
    theta_phys = maxw.theta * theta_scale
    rate = 1.0 / relaxation_time(maxw.rho, maxw.rho * theta_phys, params)
    eq = gaussian_moments(kmax, maxw)
    diff = eq[:n_rows] - mu[:n_rows]
    coll = rate * diff
    if not n_cols:
        return coll, None
    mup = dens.moments(kmax + n_cols - 1, derivative=True)
    dmu = np.array([mup[a:a + n_cols] for a in range(3)])  # d mu_a / d c_j
    dM = maxwellian_moment_jacobian(n_rows, maxw)
    jac = rate * (dM @ dmu)
    if not frozen_tau:
        # rate ~ sqrt(theta); theta = mu2/mu0 - (mu1/mu0)**2
        u, th, rho = maxw.u, maxw.theta, maxw.rho
        dth = np.array([(u * u - th) / rho, -2.0 * u / rho, 1.0 / rho]) @ dmu
        jac += np.outer(diff, rate / (2.0 * th) * dth)
    idx = np.arange(n_rows)[:, None] + np.arange(n_cols)[None, :]
    jac -= rate * mup[idx]
    return coll, jac


def bgk_moments(g: PolyLike, spec: RenormSpec, bg: GaussianParams, params: BgkParams, k_max: int) -> np.ndarray:
    """``<v**k C(beta(g))>`` for ``k = 0..k_max``."""
    coll, _ = bgk_core(RenormalizedDensity(g, spec, bg), params, k_max + 1)
    return coll


def bgk_jacobian(g: PolyLike, spec: RenormSpec, bg: GaussianParams, params: BgkParams,
                 rows: int, cols: int, frozen_tau: bool = False) -> np.ndarray:
    """``d<v**i C(beta(g))>/dc_j`` as a ``(rows, cols)`` array.

    With ``frozen_tau`` the relaxation time is held at its value for ``g``.
    """
    _, jac = bgk_core(RenormalizedDensity(g, spec, bg), params, rows, cols, frozen_tau=frozen_tau)
    return jac


def bgk_moments_frozen(g: PolyLike, spec: RenormSpec, bg: GaussianParams, params: BgkParams,
                       k_max: int, tau: float) -> np.ndarray:
    """Collision moments with a prescribed relaxation time."""
    dens = RenormalizedDensity(g, spec, bg)
    mu = dens.moments(max(k_max, 2))
    maxw = maxwellian_from_moments(mu[0], mu[1], mu[2])
    eq = gaussian_moments(max(k_max, 2), maxw)
    return (eq - mu)[: k_max + 1] / tau
