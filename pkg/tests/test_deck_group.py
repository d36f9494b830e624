import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from henon_cocycle import angles as ang
from henon_cocycle import cocycle as co
from henon_cocycle import deck_group as dg
from henon_cocycle.errors import CertificateFailure, PreconditionUnmet
from henon_cocycle.henon_core import HenonParams

dyadic = st.integers(0, 2 ** 20 - 1).map(lambda m: Fraction(m, 2 ** 20))
level = st.integers(1, 6)
point = st.complex_numbers(max_magnitude=3)


class ConstantCocycle:
    """alpha identically equal to a: every deck transform is the identity on the fiber."""

    def __init__(self, a):
        self.a = a
        self.ref_c = 0j

    def values(self, keys):
        return np.full(len(list(keys)), self.a, complex)


@pytest.fixture(scope="module")
def henon_src():
    return dg.HenonCocycle(HenonParams(-1, 1e-3))


def test_deck_transform_normalization():
    assert dg.DeckTransform(2, 2) == dg.DeckTransform(1, 1)
    assert dg.DeckTransform(4, 2).is_identity
    assert dg.DeckTransform(3, 2).rotation == Fraction(3, 4)
    assert abs(dg.DeckTransform(1, 2).omega - 1j) < 1e-15


@given(dyadic, st.integers(1, 6), st.integers(0, 63), st.floats(1e-3, 1))
def test_limit_cocycle_closed_form_at_c0(theta, k, j, a):
    """alpha = a/(2 xi^3): p = omega^-3 and q follows from explicit suffix products."""
    src = dg.LimitCocycle(0, a)
    j = 2 * (j % 2 ** (k - 1)) + 1
    p, q = dg.pq_closed_form(src, j, k, theta)
    omega = cmath.exp(2j * math.pi * j / 2 ** k)
    xi = cmath.exp(2j * math.pi * float(theta))

    def suffix(s, w):
        out = 1
        for t in range(s, k):
            out *= a / (2 * w ** (3 * 2 ** t))
        return out

    q_ref = sum(suffix(s, omega * xi) - suffix(s, xi) for s in range(k)) / suffix(0, omega * xi)
    assert abs(p - omega ** -3) < 1e-9
    assert abs(q - q_ref) < 1e-9 * max(1, abs(q_ref))


@given(dyadic, level, point)
def test_closed_form_matches_recursion_limit(theta, k, z):
    src = dg.LimitCocycle(-1, 1e-3)
    j = 1 if k == 1 else 3 % 2 ** k
    p1, q1 = dg.pq_closed_form(src, j, k, theta)
    p2, q2 = dg.pq_recursive(src, j, k, theta)
    assert abs(p1 - p2) < 1e-10 * abs(p1)
    assert abs(q1 - q2) < 1e-10 * max(abs(q1), 1)


@given(dyadic, level, point)
def test_intertwining_limit(theta, k, z):
    src = dg.LimitCocycle(-1, 1e-3)
    assert dg.intertwining_residual(src, 1, k, theta, z) < 1e-8


@given(dyadic, st.integers(1, 5), point)
def test_group_law(theta, k, z):
    """gamma_{j1} followed by gamma_{j2} equals gamma_{j1+j2} at the same level."""
    src = dg.LimitCocycle(0.1j, 0.05)
    j1, j2 = 1, 2 ** k - 1
    t1, z1 = dg.deck_apply(src, j1, k, theta, z)
    t2, z2 = dg.deck_apply(src, j2, k, t1, z1)
    assert t2 == ang.key(theta)  # inverse pair returns home
    assert abs(z2 - z) < 1e-9 * (1 + abs(z))
    if k >= 2:
        t3, z3 = dg.deck_apply(src, 1, k, t1, z1)
        t4, z4 = dg.deck_apply(src, 2, k, theta, z)
        assert t3 == t4 and abs(z3 - z4) < 1e-9 * (1 + abs(z4))


def test_deck_transforms_commute_with_lift(henon_src):
    rng = np.random.default_rng(0)
    thetas = [Fraction(int(m), 2 ** 24) for m in rng.integers(0, 2 ** 24, 10)]
    co.prefetch(henon_src.h, [t for th in thetas for t in ang.orbit(th, 7)])
    for th in thetas:
        for k in range(1, 6):
            assert dg.intertwining_residual(henon_src, 1, k, th, 0.3 + 0.2j) < 1e-8
            p1, q1 = dg.pq_closed_form(henon_src, 3 % 2 ** k or 1, k, th)
            p2, q2 = dg.pq_recursive(henon_src, 3 % 2 ** k or 1, k, th)
            assert abs(p1 - p2) < 1e-10 * abs(p1)
            assert abs(q1 - q2) < 1e-10 * max(abs(q1), 1e-300)


def test_identity_transform(henon_src):
    assert dg.pq_closed_form(henon_src, 4, 2, 0.3) == (1, 0)
    assert dg.deck_apply(henon_src, 0, 3, 0.3, 0.5) == (ang.key(0.3), 0.5)


def test_k0_definitions():
    consts = dg.GroupConstants(0.5, 0.1, 0.1, 1e-3, 1, 1, 1e-4)
    for z in (0.0, 0.3, 2.0):
        k = consts.k0(z)
        bound = 32 * z / consts.delta ** 3
        assert consts.ratio ** (k - 1) > bound
        assert k == 1 or consts.ratio ** (k - 2) <= bound
        kc = consts.k0_certificate(z)
        bound = 64 / consts.delta ** 3 * (z + consts.delta ** 3 / 32)
        assert consts.ratio ** (kc - 1) > bound and consts.ratio ** (kc - 2) <= bound


def test_k0_needs_expansion():
    with pytest.raises(PreconditionUnmet):
        dg.GroupConstants(0.1, 0, 0, 0, 1, 1, 1.0).k0(1.0)


def test_a0_formula():
    d = 0.5
    third = d ** 2 / 2 * d ** 3 / (d ** 3 + 64)
    assert dg.a0_formula(d, 1, 1) == pytest.approx(third)
    assert dg.a0_formula(d, 1e-6, 1) == 1e-6


def test_constants_basilica(henon_src):
    consts = dg.compute_constants(henon_src)
    assert consts.delta == pytest.approx(0.4699, abs=1e-3)
    assert consts.sup_alpha_over_a < 2 / consts.delta ** 2
    assert consts.inf_gap_over_a > consts.delta / 8
    # the third term of a0 is far below 1e-3 for this delta
    assert consts.a0 < 2e-4 and not consts.abs_a < consts.a0


def test_growth_check_guards(henon_src):
    consts = dg.compute_constants(henon_src)
    with pytest.raises(PreconditionUnmet):
        dg.growth_check(henon_src, consts, 2, 3, 0.1, 0.3, enforce=False)
    with pytest.raises(PreconditionUnmet):
        dg.growth_check(henon_src, consts, 1, consts.k0(0.3), 0.1, 0.3)
    with pytest.raises(PreconditionUnmet):
        dg.growth_check(henon_src, consts, 1, 0, 0.1, 0.3, enforce=False)


def test_growth_when_premise_holds():
    src = dg.LimitCocycle(-1, 1e-5)
    consts = dg.compute_constants(src)
    assert consts.abs_a < consts.a0
    k0 = consts.k0(0.3)
    rng = np.random.default_rng(1)
    for th in rng.random(10):
        for k in range(k0, k0 + 4):
            assert dg.growth_check(src, consts, 1, k, ang.key(float(th)), 0.3).margin > 0


def test_certificate_when_premise_holds():
    src = dg.LimitCocycle(-1, 1e-5)
    consts = dg.compute_constants(src)
    r = dg.separating_neighborhood(src, consts, 0, 0j, sample_budget=300)
    assert r["passed"] and r["min_displacement_over_radius"] > 1


def test_certificate_detects_fixed_fiber():
    src = ConstantCocycle(1e-5)
    consts = dg.GroupConstants(0.5, 1, 1, 1e-3, 1, 1, 1e-5)
    with pytest.raises(CertificateFailure) as info:
        dg.separating_neighborhood(src, consts, 0, 0j, sample_budget=50, enforce=False)
    assert "j" in info.value.witness


def test_orbit_equivalence(henon_src):
    assert dg.orbit_equivalent(henon_src, (Fraction(1, 3), 0.7), (Fraction(2, 3), 0.7)) == (1, 0)
    th = Fraction(5, 2 ** 10)
    t2, z2 = dg.deck_apply(henon_src, 3, 3, th, 0.2)
    assert dg.orbit_equivalent(henon_src, (th, 0.2), (t2, z2), k_max=4) is not None
    assert dg.orbit_equivalent(henon_src, (th, 0.2), (th, 0.9), k_max=3) is None
