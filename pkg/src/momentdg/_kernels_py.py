"""Pure-Python implementations of the velocity-quadrature kernels.

These mirror ``_kernels.pyx`` function for function and are used whenever the
compiled extension is unavailable.
"""
import math

import numpy as np

SQRT2 = math.sqrt(2.0)
INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)

_GL_CACHE = {}


def _gauss_legendre(n):
    rule = _GL_CACHE.get(n)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = rule
    return rule


def _normal_mass(zlo, zhi):
    """P(zlo < Z < zhi) for a standard normal Z, accurate in both tails."""
    if zlo >= 0.0:
        a = 0.5 * math.erfc(zlo / SQRT2)
        b = 0.5 * math.erfc(zhi / SQRT2) if zhi != math.inf else 0.0
        return a - b
    if zhi <= 0.0:
        a = 0.5 * math.erfc(-zhi / SQRT2)
        b = 0.5 * math.erfc(-zlo / SQRT2) if zlo != -math.inf else 0.0
        return a - b
    lower = 0.5 * math.erfc(-zlo / SQRT2) if zlo != -math.inf else 0.0
    upper = 0.5 * math.erfc(zhi / SQRT2) if zhi != math.inf else 0.0
    return 1.0 - lower - upper


def recurrence_moments(kmax, lo, hi, rho, u, theta):
    """Gaussian moments over an interval with at least one infinite end.

    Forward three-term recurrence; stable here because every half-line moment
    sequence carries the dominant (full-range) growth.
    """
    s = math.sqrt(theta)
    zlo = (lo - u) / s
    zhi = (hi - u) / s
    out = np.empty(kmax + 1)
    out[0] = rho * _normal_mass(zlo, zhi)
    # boundary densities w(lo), w(hi); zero at infinite ends
    wlo = rho * INV_SQRT2PI / s * math.exp(-0.5 * zlo * zlo) if lo != -math.inf else 0.0
    whi = rho * INV_SQRT2PI / s * math.exp(-0.5 * zhi * zhi) if hi != math.inf else 0.0
    plo = 1.0  # lo**(k-1)
    phi = 1.0
    prev2 = 0.0
    prev1 = out[0]
    for k in range(1, kmax + 1):
        bnd = 0.0
        if whi != 0.0:
            bnd += phi * whi
        if wlo != 0.0:
            bnd -= plo * wlo
        val = u * prev1 + theta * (k - 1) * prev2 - theta * bnd
        out[k] = val
        prev2 = prev1
        prev1 = val
        if whi != 0.0:
            phi *= hi
        if wlo != 0.0:
            plo *= lo
    return out


def finite_moments(kmax, lo, hi, rho, u, theta, zclip):
    """Gaussian moments over a finite interval by piecewise Gauss-Legendre.

    Pieces have unit width in standardized units; the rule is sized so the
    polynomial-times-Gaussian integrand is resolved to round-off.
    """
    s = math.sqrt(theta)
    zlo = max((lo - u) / s, -zclip)
    zhi = min((hi - u) / s, zclip)
    out = np.zeros(kmax + 1)
    if zhi <= zlo:
        return out
    npieces = max(1, int(math.ceil(zhi - zlo)))
    nodes, weights = _gauss_legendre(kmax // 2 + 20)
    edges = np.linspace(zlo, zhi, npieces + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    z = (mid[:, None] + half[:, None] * nodes[None, :]).ravel()
    wz = (half[:, None] * weights[None, :]).ravel() * np.exp(-0.5 * z * z)
    v = u + s * z
    acc = wz * (rho * INV_SQRT2PI)
    for k in range(kmax + 1):
        out[k] = acc.sum()
        acc = acc * v
    return out


def window_contract(poly, table, kmax):
    """out[k] = sum_l poly[l] * table[k + l] for k = 0..kmax."""
    n = len(poly)
    out = np.empty(kmax + 1)
    for k in range(kmax + 1):
        out[k] = np.dot(table[k:k + n], poly)
    return out


def hankel(table, nrows, ncols, offset):
    """H[i, j] = table[i + j + offset]."""
    idx = np.arange(nrows)[:, None] + np.arange(ncols)[None, :] + offset
    return table[idx]
