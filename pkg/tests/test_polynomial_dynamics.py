import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from henon_cocycle import angles as ang
from henon_cocycle import polynomial_dynamics as pd
from henon_cocycle.errors import SlowConvergence

PARAMS = [0, 0.1j, -1]
GOLDEN = (1 + math.sqrt(5)) / 2


@pytest.fixture(scope="module", params=PARAMS, ids=["c0", "c01i", "cm1"])
def ctx(request):
    return pd.context(request.param)


def escaping(ctx, rng, n):
    r = ctx.escape_radius * (1 + 4 * rng.random(n))
    return r * np.exp(2j * math.pi * rng.random(n))


def test_boettcher_functional_equation(ctx):
    z = escaping(ctx, np.random.default_rng(1), 1000)
    pz = ctx.poly(z)
    lhs = pd.boettcher_phi(ctx, pz)
    assert np.max(np.abs(lhs - pd.boettcher_phi(ctx, z) ** 2) / np.abs(lhs)) < 1e-12


def test_boettcher_tangent_to_identity(ctx):
    z = 1e6 * np.exp(2j * math.pi * np.linspace(0, 1, 17))
    assert np.max(np.abs(pd.boettcher_phi(ctx, z) / z - 1)) < 1e-6


def test_boettcher_c0_is_identity():
    ctx = pd.context(0)
    z = escaping(ctx, np.random.default_rng(2), 100)
    assert np.allclose(pd.boettcher_phi(ctx, z), z, rtol=1e-14)


@given(st.floats(0.01, 3.0), st.floats(0, 1, exclude_max=True))
def test_inverse_round_trip(t, theta):
    ctx = pd.context(-1)
    w = cmath.exp(t + 2j * math.pi * theta)
    z = pd.boettcher_inverse(ctx, w)
    assert abs(pd.boettcher_phi(ctx, z) - w) < 1e-9 * abs(w)


def test_inverse_rejects_unit_disc():
    with pytest.raises(ValueError):
        pd.boettcher_inverse(pd.context(-1), 0.5)


def test_escape_time():
    ctx = pd.context(-1)
    assert pd.escape_time(ctx, 0) is None  # 0 -> -1 -> 0 is a cycle
    assert pd.escape_time(ctx, 10) == 0
    assert pd.escape_time(ctx, 1.9) == 2  # 1.9 -> 2.61 -> 5.81 with escape radius 3


@pytest.mark.parametrize("c", [0.1j, -1])
def test_caratheodory_equivariance(c):
    ctx = pd.context(c)
    keys = [ang.key((m, 256)) for m in range(256)]
    g = pd.caratheodory_many(ctx, keys)
    g2 = pd.caratheodory_many(ctx, [ang.double(k) for k in keys])
    assert np.max(np.abs(g2 - ctx.poly(g))) < 1e-10


def test_caratheodory_identity_at_c0():
    ctx = pd.context(0)
    th = np.arange(64) / 64
    g = pd.caratheodory_many(ctx, [ang.key(t) for t in th])
    assert np.max(np.abs(g - np.exp(2j * math.pi * th))) < 1e-12


def test_landing_points_closed_form():
    ctx = pd.context(-1)
    alpha_fixed = (1 - math.sqrt(5)) / 2
    assert abs(pd.caratheodory(ctx, 0) - GOLDEN) < 1e-13
    assert abs(pd.caratheodory(ctx, Fraction(1, 3)) - alpha_fixed) < 1e-12
    assert abs(pd.caratheodory(ctx, Fraction(2, 3)) - alpha_fixed) < 1e-12
    # angle 1/2 lands at the preimage -beta of beta
    assert abs(pd.caratheodory(ctx, Fraction(1, 2)) + GOLDEN) < 1e-13


@pytest.mark.parametrize("c", [0.1j, -1])
@pytest.mark.parametrize("theta", [0.1, 0.3, 0.7])
def test_caratheodory_matches_radial_limit(c, theta):
    ctx = pd.context(c)
    try:
        v, _ = pd.caratheodory_radial(ctx, theta)
    except SlowConvergence as exc:
        v = exc.value
    assert abs(v - pd.caratheodory(ctx, theta)) < 1e-7


def test_landing_identified():
    assert pd.landing_identified(pd.context(-1), Fraction(1, 3), Fraction(2, 3))
    assert not pd.landing_identified(pd.context(0.1j), Fraction(1, 3), Fraction(2, 3))


def brute_force_delta(c, radii, n_angles=720, n_iter=200):
    """First radius on which some grid point escapes: an upper-side bracket of inf |gamma|."""
    for r in radii:
        z = r * np.exp(2j * math.pi * np.arange(n_angles) / n_angles)
        esc = np.zeros(z.shape, bool)
        for _ in range(n_iter):
            z = np.where(esc, z, z * z + c)
            esc |= np.abs(z) > 3
        if esc.any():
            return r
    return None


def test_delta():
    assert abs(pd.delta_inf_gamma(pd.context(0)) - 1) < 1e-12
    d = pd.delta_inf_gamma(pd.context(-1))
    rough = brute_force_delta(-1, np.arange(0.40, 0.56, 0.002))
    assert abs(d - rough) < 0.004
    assert d <= abs(pd.caratheodory(pd.context(-1), Fraction(1, 3)))


@given(st.integers(0, 2 ** 20 - 1), st.integers(1, 20))
def test_angle_doubling_exact(m, k):
    key = ang.key(Fraction(m, 2 ** 20))
    orb = ang.orbit(key, k)
    assert orb[-1] == ang.key(Fraction(m * 2 ** k, 2 ** 20))


@given(st.integers(1, 200), st.integers(0, 199))
def test_angle_period(q, p):
    theta = Fraction(p % (2 * q + 1), 2 * q + 1)
    n = ang.period(theta)
    assert n is not None and ang.orbit(theta, n)[-1] == ang.key(theta)
