import math

import numpy as np
import pytest
from hypothesis import settings

from momentdg.dg import basis_scale
from momentdg.velocity import GaussianParams, RenormSpec, positivity_breakpoints

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")


def random_state(rng, eps=0.3, orders=(2, 8), ns=(1, 2)):
    """Random ``(g, spec, bg)`` with ``g`` scaled to the Gaussian size of each monomial.

    Coefficients are drawn in the background's standardized variable and
    converted to plain monomials in ``v``.
    """
    n = int(rng.choice(ns))
    m = int(rng.integers(orders[0], orders[1] + 1))
    bg = GaussianParams(float(rng.uniform(0.5, 2.0)), float(rng.uniform(-1.0, 1.0)), float(rng.uniform(0.5, 2.0)))
    c_xi = eps * rng.normal(size=m + 1) * basis_scale(m + 1)
    # xi = (v - u)/s  ->  monomials in v
    s = bg.std
    c = np.zeros(m + 1)
    for i, ci in enumerate(c_xi):
        for j in range(i + 1):
            c[j] += ci * math.comb(i, j) * (-bg.u / s) ** (i - j) * s ** (-j)
    return c, RenormSpec(n), bg


def realizable_states(seed, count, **kw):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        out.append(random_state(rng, **kw))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def has_kinks(g, spec):
    return positivity_breakpoints(g, spec).size > 0


# acceptance verdicts, printed in the terminal summary regardless of capture
VERDICTS = {}


def verdict(number, ok, detail):
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    VERDICTS[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[n])
