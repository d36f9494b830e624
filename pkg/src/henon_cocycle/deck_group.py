"""Deck transformations of S^1 x C commuting with the lifted Hénon map.

Angles are exact keys; xi stands for exp(2 pi i theta).  The element
gamma_{j/2^k} rotates the angle by j/2^k and acts on the fibre coordinate
by z -> p_{j,k}(xi) z + q_{j,k}(xi).  With Pi_s(xi) = prod_{t=s}^{k-1}
alpha(xi^(2^t)) and omega = exp(2 pi i j/2^k),

    p = Pi_0(xi) / Pi_0(omega xi),
    q = sum_{s<k} (Pi_s(omega xi) - Pi_s(xi)) / Pi_0(omega xi)

in the standard trivialization (beta = -alpha).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import angles as ang
from . import cocycle as co
from . import critical_locus as cl
from . import polynomial_dynamics as pd
from .errors import CertificateFailure, PreconditionUnmet
from .henon_core import HenonParams


# ------------------------------------------------------------ cocycle source

class HenonCocycle:
    """alpha of an actual Hénon map, batched through the shared cache."""

    def __init__(self, h: HenonParams):
        self.h = h
        self.a = h.a
        self.ref_c = h.ref_c

    def values(self, keys) -> np.ndarray:
        return co.alpha_values(self.h, keys)


class LimitCocycle:
    """Synthetic alpha = a gamma(xi) / (2 gamma(xi^2)^2), the small-Jacobian limit.

    For c = 0 this is a / (2 xi^3) exactly.
    """

    def __init__(self, c, a):
        self.ref_c = complex(c)
        self.a = complex(a)
        self.ctx = pd.context(c)

    def values(self, keys) -> np.ndarray:
        keys = list(keys)
        if self.ref_c == 0:
            th = np.array([ang.to_float(k) for k in keys])
            return self.a / (2 * np.exp(6j * math.pi * th))
        g = pd.caratheodory_many(self.ctx, keys)
        g2 = pd.caratheodory_many(self.ctx, [ang.double(k) for k in keys])
        return self.a * g / (2 * g2 ** 2)


def as_cocycle(src):
    return HenonCocycle(src) if isinstance(src, HenonParams) else src


# -------------------------------------------------------------- transforms

@dataclass(frozen=True)
class DeckTransform:
    j: int
    k: int

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        j, k = self.j % (2 ** self.k), self.k
        if j == 0:
            j, k = 1, 0
        while k > 0 and j % 2 == 0:
            j //= 2
            k -= 1
        object.__setattr__(self, "j", j if k > 0 else 1)
        object.__setattr__(self, "k", k)

    @property
    def is_identity(self) -> bool:
        return self.k == 0

    @property
    def rotation(self) -> Fraction:
        return Fraction(self.j, 2 ** self.k) if self.k else Fraction(0)

    @property
    def omega(self) -> complex:
        return complex(np.exp(2j * math.pi * float(self.rotation)))


def lift_apply(src, theta, z):
    """(theta, z) -> (2 theta, alpha z + beta) with beta = -alpha."""
    cc = as_cocycle(src)
    k = ang.key(theta)
    al = complex(cc.values([k])[0])
    return ang.double(k), al * z - al


def _log_products(vals: np.ndarray):
    """Suffix sums of log alpha: L[s] = log Pi_s for s = 0..k (L[k] = 0)."""
    logs = np.log(vals)
    out = np.zeros(len(vals) + 1, complex)
    out[:-1] = np.cumsum(logs[::-1])[::-1]
    return out


def pq_closed_form(src, j: int, k: int, theta):
    g = DeckTransform(j, k)
    if g.is_identity:
        return 1 + 0j, 0j
    cc = as_cocycle(src)
    t0 = ang.key(theta)
    t1 = ang.add(t0, g.rotation)
    o0 = ang.orbit(t0, g.k - 1)
    o1 = ang.orbit(t1, g.k - 1)
    vals = cc.values(o0 + o1)
    L0 = _log_products(vals[:g.k])
    L1 = _log_products(vals[g.k:])
    p = np.exp(L0[0] - L1[0])
    q = np.sum(np.exp(L1[:g.k] - L1[0]) - np.exp(L0[:g.k] - L1[0]))
    return complex(p), complex(q)


def pq_recursive(src, j: int, k: int, theta):
    g = DeckTransform(j, k)
    if g.is_identity:
        return 1 + 0j, 0j
    cc = as_cocycle(src)
    t0 = ang.key(theta)
    t1 = ang.add(t0, g.rotation)
    o0 = ang.orbit(t0, g.k - 1)
    o1 = ang.orbit(t1, g.k - 1)
    vals = cc.values(o0 + o1)
    a0, a1 = vals[:g.k], vals[g.k:]
    p, q = 1 + 0j, 0j  # gamma_{j/1} = id at level t = k
    for t in range(g.k - 1, -1, -1):
        b0, b1 = -a0[t], -a1[t]
        p, q = p * a0[t] / a1[t], (p * b0 + q - b1) / a1[t]
    return complex(p), complex(q)


def deck_apply(src, j: int, k: int, theta, z, method: str = "closed"):
    g = DeckTransform(j, k)
    p, q = (pq_closed_form if method == "closed" else pq_recursive)(src, g.j, g.k, theta)
    return ang.add(ang.key(theta), g.rotation), p * z + q


def intertwining_residual(src, j: int, k: int, theta, z) -> float:
    """Relative mismatch of lift o gamma_{j/2^(k+1)} and gamma_{j/2^k} o lift."""
    t1, z1 = deck_apply(src, j, k + 1, theta, z)
    lt, lz = lift_apply(src, t1, z1)
    t2, z2 = lift_apply(src, theta, z)
    rt, rz = deck_apply(src, j, k, t2, z2)
    if lt != rt:
        return math.inf
    return abs(lz - rz) / (1 + abs(lz))


# ---------------------------------------------------------------- constants

@dataclass
class GroupConstants:
    delta: float
    delta_prime: float
    delta_dprime: float
    a0: float
    sup_alpha_over_a: float
    inf_gap_over_a: float
    abs_a: float

    @property
    def ratio(self) -> float:
        return self.delta ** 2 / (2 * self.abs_a)

    def k0(self, z_abs: float) -> int:
        """Smallest k >= 1 with (delta^2 / 2|a|)^(k-1) > 32 |z| / delta^3."""
        return _smallest_k(self.ratio, 32 * z_abs / self.delta ** 3)

    def k0_certificate(self, z_abs: float) -> int:
        """Smallest k with (delta^2/2|a|)^(k-1) > (64/delta^3)(|z| + delta^3/32)."""
        return _smallest_k(self.ratio, 64 / self.delta ** 3 * (z_abs + self.delta ** 3 / 32))


def _smallest_k(ratio: float, bound: float) -> int:
    k = 1
    while ratio ** (k - 1) <= bound:
        k += 1
        if k > 200:
            raise PreconditionUnmet("growth ratio does not exceed 1")
    return k


def a0_formula(delta: float, delta_prime: float, delta_dprime: float) -> float:
    return min(delta_prime, delta_dprime, delta ** 2 / 2 * delta ** 3 / (delta ** 3 + 64))


def alpha_bounds(src, delta: float, n_samples: int):
    """(sup |alpha/a|, inf |alpha(xi)/a - alpha(-xi)/a|) on a uniform grid."""
    cc = as_cocycle(src)
    keys = co.grid(n_samples)
    opp = [ang.add(k, Fraction(1, 2)) for k in keys]
    v = cc.values(keys + opp) / cc.a
    n = len(keys)
    return float(np.max(np.abs(v[:n]))), float(np.min(np.abs(v[:n] - v[n:])))


def compute_constants(src, n_samples: int = 1024, ladder=(1, 10, 100)) -> GroupConstants:
    """delta from the polynomial; delta', delta'' as the largest tested |a| keeping
    the two bounds on alpha on the grid (0 when the bound fails at the working a)."""
    cc = as_cocycle(src)
    delta = pd.delta_inf_gamma(pd.context(cc.ref_c))
    sup_v, inf_v = alpha_bounds(cc, delta, n_samples)
    d1 = d2 = 0.0
    ok1 = ok2 = True
    for mult in ladder:
        if mult == 1:
            s, i = sup_v, inf_v
            aa = abs(cc.a)
        else:
            scaled = _scaled(cc, mult)
            if scaled is None:
                break
            s, i = alpha_bounds(scaled, delta, n_samples)
            aa = abs(scaled.a)
        ok1 = ok1 and s < 2 / delta ** 2
        ok2 = ok2 and i > delta / 8
        if ok1:
            d1 = aa
        if ok2:
            d2 = aa
    return GroupConstants(delta, d1, d2, a0_formula(delta, d1, d2), sup_v, inf_v, abs(cc.a))


def _scaled(cc, mult):
    if isinstance(cc, HenonCocycle):
        a = cc.h.a * mult
        if abs(a) > cl.CONTINUATION_CEILING:
            return None
        return HenonCocycle(HenonParams(cc.h.c, a, cc.h.ref_c))
    if isinstance(cc, LimitCocycle):
        return LimitCocycle(cc.ref_c, cc.a * mult)
    return None


@dataclass
class GrowthReport:
    j: int
    k: int
    theta: tuple
    z: complex
    lhs: float
    rhs: float
    margin: float


def growth_check(src, consts: GroupConstants, j: int, k: int, theta, z,
                 enforce: bool = True) -> GrowthReport:
    if j % 2 == 0:
        raise PreconditionUnmet("j must be odd")
    if k < consts.k0(abs(z)):
        raise PreconditionUnmet(f"k = {k} is below k0 = {consts.k0(abs(z))}")
    if enforce and not consts.abs_a < consts.a0:
        raise PreconditionUnmet(f"|a| = {consts.abs_a} is not below a0 = {consts.a0:.3e}")
    p, q = pq_closed_form(src, j, k, theta)
    lhs = abs(p * z + q)
    rhs = consts.delta ** 3 / 32 * consts.ratio ** (k - 1) - abs(z)
    return GrowthReport(j, k, ang.key(theta), complex(z), lhs, rhs, lhs - rhs)


# --------------------------------------------------- separating neighborhood

def _circ(x: Fraction) -> Fraction:
    x = x % 1
    return min(x, 1 - x)


def separating_neighborhood(src, consts: GroupConstants, theta0, z0, sample_budget: int = 1000,
                            k_max: int | None = None, seed: int = 0, enforce: bool = True) -> dict:
    """Empirical certificate that gamma(U) misses U for non-identity gamma with k <= k_max.

    U = V0 x U0 with U0 the disc of radius delta^3/32 about z0 and V0 the arc of
    half-width 2^-k0 about theta0.
    """
    if enforce and not consts.abs_a < consts.a0:
        raise PreconditionUnmet(f"|a| = {consts.abs_a} is not below a0 = {consts.a0:.3e}")
    cc = as_cocycle(src)
    k0 = consts.k0_certificate(abs(z0))
    if k_max is None:
        k_max = k0 + 4
    half = Fraction(1, 2 ** k0)
    rho = consts.delta ** 3 / 32
    t0 = ang.as_fraction(theta0)
    angular = 0
    need = []
    for k in range(1, k_max + 1):
        for j in range(1, 2 ** k, 2):
            rot = _circ(Fraction(j, 2 ** k))
            if rot >= 2 * half:
                angular += 1
            else:
                need.append((j, k))
    rng = np.random.default_rng(seed)
    per = max(4, sample_budget // max(1, len(need)))
    res = 2 ** 24
    samples = []
    for j, k in need:
        offs = [-half + Fraction(1, res), Fraction(0), half - Fraction(1, res)]
        offs += [Fraction(int(m), res) for m in rng.integers(-int(half * res) + 1, int(half * res), per)]
        for i, off in enumerate(offs[:per]):
            phi = rng.uniform(0, 2 * math.pi)
            r = rho * (1 - 1e-12) * (1.0 if i % 2 == 0 else rng.uniform(0, 1))
            samples.append((j, k, t0 + off, z0 + r * np.exp(1j * phi)))
    # one batched evaluation of alpha along every orbit the transforms need
    keys = []
    for j, k, th, _ in samples:
        t = ang.key(th)
        keys += ang.orbit(t, k - 1) + ang.orbit(ang.add(t, Fraction(j, 2 ** k)), k - 1)
    cc.values(list(dict.fromkeys(keys)))
    worst = math.inf
    for j, k, th, z in samples:
        tt, zz = deck_apply(cc, j, k, th, z)
        dist = abs(zz - z0)
        if _circ(ang.to_fraction(tt) - t0) < half:
            worst = min(worst, dist / rho)
            if dist < rho:
                raise CertificateFailure(f"gamma_{j}/2^{k} maps a point of U into U",
                                         witness={"j": j, "k": k, "theta": th, "z": z,
                                                  "image": (tt, zz)})
    checked = len(samples)
    return {"k0": k0, "k_max": k_max, "half_width": float(half), "radius": rho,
            "angular_elements": angular, "sampled_elements": len(need), "points": checked,
            "min_displacement_over_radius": float(worst), "passed": True}


# ------------------------------------------------------------ orbit relation

def orbit_equivalent(src, p1, p2, k_max: int = 8, tol: float = 1e-6):
    """Witness (m, k) with gamma_{m/2^k}(theta2, z2) = (theta'', z1) and gamma(theta1) = gamma(theta'')."""
    cc = as_cocycle(src)
    ctx = pd.context(cc.ref_c)
    (th1, z1), (th2, z2) = p1, p2
    k1 = ang.key(th1)
    for k in range(0, k_max + 1):
        ms = [1] if k == 0 else range(1, 2 ** k, 2)
        for m in ms:
            tt, zz = deck_apply(cc, m, k, th2, z2)
            if abs(zz - z1) > tol * (1 + abs(z1)):
                continue
            if tt == k1 or pd.landing_identified(ctx, k1, tt):
                return (m, k)
    return None
