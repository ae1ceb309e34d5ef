import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from conftest import realizable_states
from momentdg.errors import (
    DegeneratePolynomialError,
    NonRealizableError,
    QuadratureCapError,
    VacuumError,
)
from momentdg.velocity import (
    FULL,
    NEGATIVE,
    POSITIVE,
    QUAD_CAP,
    GaussianParams,
    Interval,
    RenormalizedDensity,
    RenormSpec,
    VelocityPoly,
    beta_monomial_moments,
    beta_prime_monomial_moments,
    conserved_moments,
    eval_beta,
    eval_beta_prime,
    eval_eta,
    eval_eta_prime,
    gaussian_moments,
    incomplete_gaussian_moments,
    maxwellian,
    maxwellian_from_moments,
    positivity_breakpoints,
)

STD = GaussianParams(1.0, 0.0, 1.0)
W0 = 1.0 / math.sqrt(2.0 * math.pi)


# --- types -----------------------------------------------------------------

def test_gaussian_params_validation():
    with pytest.raises(ValueError):
        GaussianParams(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        GaussianParams(1.0, 0.0, -1.0)
    assert GaussianParams(2.0, 1.0, 3.0).pressure == 6.0


def test_renorm_spec_and_interval_validation():
    with pytest.raises(ValueError):
        RenormSpec(0)
    with pytest.raises(ValueError):
        Interval(1.0, 1.0)


def test_velocity_poly_invariants():
    with pytest.raises(ValueError):
        VelocityPoly([1.0, 2.0])
    with pytest.raises(ValueError):
        VelocityPoly([1.0, math.nan, 0.0])
    g = VelocityPoly([1.0, 0.0, 2.0])
    assert g.order == 2
    assert g(2.0) == 9.0


# --- pointwise maps ---------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 5])
def test_beta_at_zero_is_background(n):
    assert eval_beta([0, 0, 0], RenormSpec(n), STD, 0.0) == pytest.approx(W0, rel=1e-15)


@pytest.mark.parametrize("n", [1, 3])
def test_beta_clipped(n):
    assert eval_beta([-2 * n, 0, 0], RenormSpec(n), STD, 0.7) == 0.0
    assert eval_beta_prime([-2 * n, 0, 0], RenormSpec(n), STD, 0.7) == 0.0


def test_beta_linear_example():
    assert eval_beta([0, 1, 0], RenormSpec(1), STD, 1.0) == pytest.approx(2 * math.exp(-0.5) * W0, rel=1e-15)


def test_beta_prime_examples():
    assert eval_beta_prime([0, 0, 0], RenormSpec(1), STD, 0.0) == pytest.approx(W0, rel=1e-15)
    assert eval_beta_prime([2, 0, 0], RenormSpec(2), STD, 0.0) == pytest.approx(2 * W0, rel=1e-15)


def test_eta_examples():
    assert eval_eta(1.7, RenormSpec(3), 1.7) == pytest.approx(0.0, abs=1e-15)
    assert eval_eta(0.0, RenormSpec(2), 1.5) == pytest.approx(1.5 * 2 / 3, rel=1e-15)
    assert eval_eta(4.0, RenormSpec(1), 1.0) == pytest.approx(4.5, rel=1e-15)


def test_eta_prime_examples():
    assert eval_eta_prime(0.8, RenormSpec(2), 0.8) == 0.0
    assert eval_eta_prime(2.25, RenormSpec(2), 1.0) == pytest.approx(1.0, rel=1e-15)
    assert eval_eta_prime(4.0, RenormSpec(1), 1.0) == pytest.approx(3.0, rel=1e-15)


@given(st.integers(1, 4), st.lists(st.floats(-0.5, 0.5), min_size=3, max_size=7),
       st.floats(-3, 3))
def test_eta_prime_inverts_beta(n, c, v):
    spec = RenormSpec(n)
    if 1 + np.polyval(c[::-1], v) / n <= 1e-3:
        return
    f = eval_beta(c, spec, STD, v)
    assert abs(eval_eta_prime(f, spec, maxwellian(v, STD)) - np.polyval(c[::-1], v)) <= 1e-10


@given(st.integers(1, 4), st.floats(1e-3, 10), st.floats(1e-3, 10), st.floats(0.01, 0.99), st.floats(0.1, 3))
def test_eta_convex(n, f1, f2, a, b):
    spec = RenormSpec(n)
    lhs = eval_eta(a * f1 + (1 - a) * f2, spec, b)
    rhs = a * eval_eta(f1, spec, b) + (1 - a) * eval_eta(f2, spec, b)
    assert lhs <= rhs + 1e-12 * (1 + abs(rhs))


@given(st.integers(1, 3), st.lists(st.floats(-5, 5), min_size=3, max_size=7), st.floats(-10, 10))
def test_beta_nonnegative(n, c, v):
    assert eval_beta(c, RenormSpec(n), STD, v) >= 0.0


# --- Gaussian moments -------------------------------------------------------

def test_incomplete_moment_examples():
    assert incomplete_gaussian_moments(0, FULL, STD)[0] == pytest.approx(1.0, rel=1e-15)
    assert incomplete_gaussian_moments(1, POSITIVE, STD)[1] == pytest.approx(W0, rel=1e-15)
    assert incomplete_gaussian_moments(4, FULL, STD)[4] == pytest.approx(3.0, rel=1e-14)


def test_incomplete_moment_cap():
    incomplete_gaussian_moments(QUAD_CAP, POSITIVE, STD)
    with pytest.raises(QuadratureCapError):
        incomplete_gaussian_moments(QUAD_CAP + 1, FULL, STD)
    assert QUAD_CAP >= 40


@pytest.mark.parametrize("iv", [Interval(-math.inf, 0.3), Interval(-0.4, math.inf), Interval(-1.3, 0.8),
                                Interval(2.0, 2.5), Interval(-6.0, -5.0)])
def test_incomplete_moments_match_quad(iv):
    bg = GaussianParams(1.3, 0.2, 0.7)
    got = incomplete_gaussian_moments(12, iv, bg)
    for k in range(13):
        ref = integrate.quad(lambda v: v ** k * maxwellian(v, bg), iv.lo, iv.hi, epsabs=0, epsrel=1e-13, limit=200)[0]
        assert got[k] == pytest.approx(ref, rel=1e-10, abs=1e-14)


def test_gaussian_moments_closed_form():
    bg = GaussianParams(2.0, 1.0, 3.0)
    assert np.allclose(gaussian_moments(3, bg), [2, 2, 8, 2 * (1 + 9)], rtol=1e-15)
    assert np.allclose(incomplete_gaussian_moments(20, FULL, bg), gaussian_moments(20, bg), rtol=1e-12)


# --- breakpoints ------------------------------------------------------------

def test_breakpoint_examples():
    assert positivity_breakpoints([0, 0, 0], RenormSpec(1)).size == 0
    assert positivity_breakpoints([0, 1, 0], RenormSpec(1)) == pytest.approx([-1.0])
    assert positivity_breakpoints([-4, 0, 1], RenormSpec(2)) == pytest.approx([-math.sqrt(2), math.sqrt(2)], rel=1e-14)


def test_breakpoint_degenerate():
    with pytest.raises(DegeneratePolynomialError):
        positivity_breakpoints([-2, 0, 0], RenormSpec(2))


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=6, unique=True))
def test_breakpoints_recover_planted_roots(roots):
    roots = sorted(roots)
    if min(np.diff(roots), default=1) < 1e-2:
        return
    q = np.polynomial.polynomial.polyfromroots(roots)
    q = np.concatenate([q, np.zeros(max(0, 3 - q.size))])
    g = q.copy()
    g[0] -= 1.0  # 1 + g = q with N = 1
    got = positivity_breakpoints(g, RenormSpec(1))
    assert got == pytest.approx(roots, abs=1e-8)


def test_breakpoint_tangency_kept():
    # 1 + g = (v - 1)^2 has a double root; the sign never changes
    got = positivity_breakpoints([0.0, -2.0, 1.0], RenormSpec(1))
    assert got.size >= 1 and got == pytest.approx(np.ones(got.size), abs=1e-7)
    m = beta_monomial_moments([0.0, -2.0, 1.0], RenormSpec(1), STD, 2)
    assert m[0] == pytest.approx(2.0, rel=1e-12)  # <(v-1)^2 w> = 1 + 1


# --- beta moments -----------------------------------------------------------

def test_beta_moments_background():
    bg = GaussianParams(1.5, -0.4, 0.8)
    m = beta_monomial_moments([0, 0, 0], RenormSpec(2), bg, 2)
    assert m == pytest.approx([1.5, 1.5 * -0.4, 1.5 * (0.16 + 0.8)], rel=1e-14)


def test_beta_moments_vacuum():
    for r in ("full", "positive", "negative"):
        assert np.all(beta_monomial_moments([-4, 0, 0], RenormSpec(2), STD, 5, r) == 0.0)


def test_beta_moments_linear_example():
    # g = v, N = 1: beta = (1 + v)_+ w
    got = beta_monomial_moments([0, 1, 0], RenormSpec(1), STD, 3)
    for k in range(4):
        ref = integrate.quad(lambda v: v ** k * (1 + v) * maxwellian(v, STD), -1, np.inf, epsabs=0, epsrel=1e-13)[0]
        assert got[k] == pytest.approx(ref, rel=1e-12)
    assert got[0] == pytest.approx(1.0833154705876864, rel=1e-14)


def test_beta_moments_range_names():
    with pytest.raises(ValueError):
        beta_monomial_moments([0, 0, 0], RenormSpec(1), STD, 2, "sideways")


@pytest.mark.parametrize("seed", range(4))
def test_half_range_additivity(seed):
    # measured on the scale <|v|^k beta>, which is what both halves sum to
    for g, spec, bg in realizable_states(seed, 50):
        d = RenormalizedDensity(g, spec, bg)
        full, pos, neg = d.moments(10), d.moments(10, POSITIVE), d.moments(10, NEGATIVE)
        assert np.all(np.abs(full - pos - neg) <= 1e-12 * (np.abs(pos) + np.abs(neg)))


def test_beta_prime_moments_n1_is_support_mass():
    g = [0.5, 1.0, -0.3]
    got = beta_prime_monomial_moments(g, RenormSpec(1), STD, 2)
    (a, b) = positivity_breakpoints(g, RenormSpec(1))
    ref = [integrate.quad(lambda v: v ** k * maxwellian(v, STD), a, b, epsrel=1e-13)[0] for k in range(3)]
    assert got == pytest.approx(ref, rel=1e-11)


def test_moment_cap_rejected():
    with pytest.raises(QuadratureCapError):
        RenormalizedDensity([0, 0, 1], RenormSpec(2), STD).moments(QUAD_CAP)


# --- macroscopic ------------------------------------------------------------

def test_conserved_moments_examples():
    (r, m, e), mac = conserved_moments([0, 0, 0], RenormSpec(1), GaussianParams(2, 1, 3))
    assert (r, m, e) == pytest.approx((2, 2, 8), rel=1e-14)
    assert (mac.rho, mac.u, mac.theta) == pytest.approx((2, 1, 3), rel=1e-14)
    for n in (1, 2, 3):
        c = n * (2 ** (1 / n) - 1)
        (r, m, e), mac = conserved_moments([c, 0, 0], RenormSpec(n), STD)
        assert (r, m, e) == pytest.approx((2, 0, 2), abs=1e-14)
        assert (mac.rho, mac.u, mac.theta) == pytest.approx((2, 0, 1), abs=1e-14)
    (r, m, e), mac = conserved_moments([0, 0, 0.1], RenormSpec(1), STD)
    assert r == pytest.approx(1.1, rel=1e-14)
    assert mac.theta == pytest.approx(1.3 / 1.1, rel=1e-14)


def test_conserved_moments_vacuum():
    with pytest.raises(VacuumError):
        conserved_moments([-3, 0, 0], RenormSpec(1), STD)


def test_maxwellian_from_moments_examples():
    assert maxwellian_from_moments(1, 0, 1) == GaussianParams(1.0, 0.0, 1.0)
    assert maxwellian_from_moments(2, 2, 8) == GaussianParams(2.0, 1.0, 3.0)
    assert maxwellian_from_moments(1, 0.5, 1) == GaussianParams(1.0, 0.5, 0.75)
    with pytest.raises(VacuumError):
        maxwellian_from_moments(0.0, 0.0, 1.0)
    with pytest.raises(NonRealizableError):
        maxwellian_from_moments(1.0, 1.0, 1.0)


@given(st.floats(0.1, 5), st.floats(-3, 3), st.floats(0.1, 5))
def test_maxwellian_round_trip(rho, u, theta):
    bg = GaussianParams(rho, u, theta)
    _, mac = conserved_moments([0, 0, 0], RenormSpec(2), bg)
    assert (mac.rho, mac.u, mac.theta) == pytest.approx((rho, u, theta), rel=1e-12, abs=1e-12)
