# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled velocity-quadrature kernels; see ``_kernels_py`` for the reference."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, exp, erfc, ceil, INFINITY

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT2PI = 1.0 / sqrt(2.0 * 3.14159265358979323846)

_GL_CACHE = {}


def _gauss_legendre(int n):
    rule = _GL_CACHE.get(n)
    if rule is None:
        rule = np.polynomial.legendre.leggauss(n)
        _GL_CACHE[n] = rule
    return rule


cdef double _normal_mass(double zlo, double zhi):
    cdef double a, b
    if zlo >= 0.0:
        a = 0.5 * erfc(zlo / SQRT2)
        b = 0.5 * erfc(zhi / SQRT2) if zhi != INFINITY else 0.0
        return a - b
    if zhi <= 0.0:
        a = 0.5 * erfc(-zhi / SQRT2)
        b = 0.5 * erfc(-zlo / SQRT2) if zlo != -INFINITY else 0.0
        return a - b
    a = 0.5 * erfc(-zlo / SQRT2) if zlo != -INFINITY else 0.0
    b = 0.5 * erfc(zhi / SQRT2) if zhi != INFINITY else 0.0
    return 1.0 - a - b


def recurrence_moments(int kmax, double lo, double hi, double rho, double u, double theta):
    cdef double s = sqrt(theta)
    cdef double zlo = (lo - u) / s
    cdef double zhi = (hi - u) / s
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(kmax + 1)
    cdef double wlo = 0.0, whi = 0.0, plo = 1.0, phi = 1.0, prev2 = 0.0, prev1, bnd, val
    cdef int k
    out[0] = rho * _normal_mass(zlo, zhi)
    if lo != -INFINITY:
        wlo = rho * INV_SQRT2PI / s * exp(-0.5 * zlo * zlo)
    if hi != INFINITY:
        whi = rho * INV_SQRT2PI / s * exp(-0.5 * zhi * zhi)
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


def finite_moments(int kmax, double lo, double hi, double rho, double u, double theta, double zclip):
    cdef double s = sqrt(theta)
    cdef double zlo = max((lo - u) / s, -zclip)
    cdef double zhi = min((hi - u) / s, zclip)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(kmax + 1)
    if zhi <= zlo:
        return out
    cdef int npieces = max(1, <int>ceil(zhi - zlo))
    nodes_, weights_ = _gauss_legendre(kmax // 2 + 20)
    cdef double[::1] nodes = np.ascontiguousarray(nodes_)
    cdef double[::1] weights = np.ascontiguousarray(weights_)
    cdef int nq = nodes.shape[0]
    cdef double width = (zhi - zlo) / npieces
    cdef double half = 0.5 * width
    cdef double mid, z, acc, v
    cdef int p, q, k
    for p in range(npieces):
        mid = zlo + (p + 0.5) * width
        for q in range(nq):
            z = mid + half * nodes[q]
            acc = half * weights[q] * exp(-0.5 * z * z) * rho * INV_SQRT2PI
            v = u + s * z
            for k in range(kmax + 1):
                out[k] += acc
                acc *= v
    return out


def window_contract(poly, table, int kmax):
    cdef double[::1] p = np.ascontiguousarray(poly, dtype=np.float64)
    cdef double[::1] t = np.ascontiguousarray(table, dtype=np.float64)
    cdef int n = p.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(kmax + 1)
    cdef int k, l
    cdef double acc
    for k in range(kmax + 1):
        acc = 0.0
        for l in range(n):
            acc += t[k + l] * p[l]
        out[k] = acc
    return out
