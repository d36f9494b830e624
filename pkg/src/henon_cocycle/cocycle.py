"""The cocycle alpha of the lifted map (xi, z) -> (xi^2, alpha(xi) z + beta(xi)).

In the standard trivialization c0(xi) has coordinate 0 and c_{-1}(xi) has
coordinate 1 on the leaf of xi, which forces beta = -alpha and

    alpha(xi) = ratio(H c0(xi), c0(xi^2), c_{-1}(xi^2)).

Other trivializations send c0 to 0 and c_{-1} to u(xi); alpha changes by
u(xi^2)/u(xi) and beta becomes -u(xi) alpha.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import angles as ang
from . import critical_locus as cl
from . import henon_core as hc
from . import polynomial_dynamics as pd
from .errors import (MatchFailure, NoConvergence, NotIdentified, NotPeriodic, ZeroGauge,
                     ZeroJacobian)
from .henon_core import HenonParams

STANDARD, BOETTCHER_SQUARED, CUSTOM = "standard", "boettcher_squared", "custom"


@dataclass
class CocycleSample:
    theta: tuple
    alpha: complex
    beta: complex
    trivialization: str = STANDARD
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class GaugeFunction:
    """u: exact angle key -> nonzero complex number."""

    u: Callable
    name: str = CUSTOM

    def __call__(self, k) -> complex:
        val = complex(self.u(ang.key(k)))
        if val == 0 or not cmath.isfinite(val):
            raise ZeroGauge(f"gauge vanishes at {k}")
        return val


@dataclass
class LyapunovReport:
    n_samples: int
    mean_log_abs_alpha: float
    target: float
    gap: float
    n_failed: int = 0


# ---------------------------------------------------------------- alpha table

_ALPHA: dict = {}


def _table(h):
    t = _ALPHA.get(h)
    if t is None:
        if len(_ALPHA) > 64:
            _ALPHA.clear()
        t = _ALPHA[h] = {}
    return t


def prefetch(h: HenonParams, thetas) -> dict:
    """Compute alpha for many angles in one batched pass; results are cached."""
    table = _table(h)
    keys = [ang.key(t) for t in thetas]
    want = [k for k in dict.fromkeys(keys) if k not in table]
    if want:
        need = set()
        for k in want:
            need.update(ang.orbit(k, 2))
        c0 = cl.c0_orbits(h, sorted(need))
        for k in want:
            k2 = ang.double(k)
            k4 = ang.double(k2)
            A = c0[k].orbit.image()
            B = c0[k2].orbit
            C = c0[k4].orbit.preimage(h)
            res = cl.affine_ratio(h, A, B, C)
            flags = {c0[j].flag for j in (k, k2, k4)} - {"ok"}
            table[k] = (res, ",".join(sorted(flags)) or "ok")
    return {k: table[k] for k in keys}


def alpha_std(h: HenonParams, theta) -> CocycleSample:
    k = ang.key(theta)
    res, flag = prefetch(h, [k])[k]
    return CocycleSample(k, res.value, -res.value, STANDARD,
                         {"iterations": res.iterations, "last_correction": res.last_correction,
                          "flag": flag})


def alpha_values(h: HenonParams, thetas) -> np.ndarray:
    tab = prefetch(h, thetas)
    return np.array([tab[ang.key(t)][0].value for t in thetas], complex)


def alpha_flags(h: HenonParams, thetas) -> list:
    tab = prefetch(h, thetas)
    return [tab[ang.key(t)][1] for t in thetas]


def alpha_gauge(h: HenonParams, theta, u: GaugeFunction) -> CocycleSample:
    s = alpha_std(h, theta)
    k = s.theta
    uk = u(k)
    al = s.alpha * u(ang.double(k)) / uk
    return CocycleSample(k, al, -uk * al, u.name, s.diagnostics)


def boettcher_squared_gauge(h: HenonParams) -> GaugeFunction:
    ctx = cl.locus(h).ctx

    def u(k):
        return pd.caratheodory(ctx, k) ** 2

    return GaugeFunction(u, BOETTCHER_SQUARED)


def alpha_normalized(h: HenonParams, theta) -> CocycleSample:
    return alpha_gauge(h, theta, boettcher_squared_gauge(h))


def gauge_values(h: HenonParams, thetas, u: GaugeFunction | None) -> np.ndarray:
    """Vectorized alpha in gauge u (standard when u is None)."""
    al = alpha_values(h, thetas)
    if u is None:
        return al
    keys = [ang.key(t) for t in thetas]
    if u.name == BOETTCHER_SQUARED:
        ctx = cl.locus(h).ctx
        g = pd.caratheodory_many(ctx, keys)
        g2 = pd.caratheodory_many(ctx, [ang.double(k) for k in keys])
        return al * g2 ** 2 / g ** 2
    return al * np.array([u(ang.double(k)) / u(k) for k in keys])


# ------------------------------------------------------ periodic multipliers

def _periodic_orbit(theta):
    k = ang.key(theta)
    n = ang.period(k)
    if n is None:
        raise NotPeriodic(f"{k} is not periodic under doubling")
    return ang.orbit(k, n - 1)


def periodic_product(h: HenonParams, theta, u: GaugeFunction | None = None) -> complex:
    orb = _periodic_orbit(theta)
    prefetch(h, orb)
    prod = 1 + 0j
    for k in orb:
        prod *= (alpha_std(h, k) if u is None else alpha_gauge(h, k, u)).alpha
    return prod


def matched_periodic_point(h: HenonParams, theta) -> hc.PeriodicPointRecord:
    """Hénon periodic point continued from the polynomial point where the ray of theta lands."""
    orb = _periodic_orbit(theta)
    k = len(orb)
    ctx = cl.locus(h).ctx
    land = pd.landing_values(ctx, orb)
    prev = land[orb[-1]]
    seed = (land[orb[0]], prev)
    try:
        rec = hc.continued_periodic_point(h, k, seed)
    except NoConvergence as exc:
        raise MatchFailure("continuation from the landing cycle failed") from exc
    if abs(rec.point.x - seed[0]) + abs(rec.point.y - seed[1]) > cl.TRAP_RADIUS:
        raise MatchFailure("continued point is too far from its polynomial seed")
    near = [r for r in hc.periodic_points(h, k)
            if abs(r.point.x - seed[0]) + abs(r.point.y - seed[1]) < cl.TRAP_RADIUS]
    if len(near) > 1:
        raise MatchFailure("several periodic points sit near the polynomial seed")
    return rec


def check_multiplier(h: HenonParams, theta) -> dict:
    orb = _periodic_orbit(theta)
    prod = periodic_product(h, theta)
    rec = matched_periodic_point(h, theta)
    lam = rec.eigen_small
    ak = h.a ** len(orb)
    return {"product": prod, "eigen_small": lam, "eigen_large": rec.eigen_large,
            "rel_error": abs(prod - lam) / abs(lam),
            "det_error": abs(np.linalg.det(hc.orbit_derivative(h, rec.point, len(orb))) - ak)
            / abs(ak),
            "point": rec.point}


# ---------------------------------------------------------------- averages

def grid(n: int) -> list:
    return [ang.key((m, n)) for m in range(n)]


def lyapunov_integral(h: HenonParams, n_samples: int, u: GaugeFunction | None = None,
                      max_failed: float = 0.01) -> LyapunovReport:
    if n_samples < 256 or n_samples & (n_samples - 1):
        raise ValueError("n_samples must be a power of two, at least 256")
    keys = grid(n_samples)
    al = gauge_values(h, keys, u)
    ok = np.array([f == "ok" for f in alpha_flags(h, keys)]) & np.isfinite(al) & (al != 0)
    failed = int((~ok).sum())
    if failed > max_failed * n_samples:
        raise NoConvergence(f"{failed} of {n_samples} angles failed")
    mean = float(np.mean(np.log(np.abs(al[ok]))))
    target = math.log(abs(h.a)) - math.log(2)
    return LyapunovReport(n_samples, mean, target, abs(mean - target), failed)


def limit_ratio(c, thetas) -> np.ndarray:
    """gamma(xi) / (2 gamma(xi^2)^2), the a -> 0 limit of alpha / a."""
    ctx = pd.context(c)
    keys = [ang.key(t) for t in thetas]
    g = pd.caratheodory_many(ctx, keys)
    g2 = pd.caratheodory_many(ctx, [ang.double(k) for k in keys])
    return g / (2 * g2 ** 2)


def degeneracy_error(c, a_list, n_grid: int = 64) -> list:
    """[(a, sup over the grid of |alpha/a - limit|)] for each a."""
    keys = grid(n_grid)
    lim = limit_ratio(c, keys)
    out = []
    for a in a_list:
        h = HenonParams(c, a)
        out.append((a, float(np.max(np.abs(alpha_values(h, keys) / a - lim)))))
    return out


def identification_check(h: HenonParams, theta1, theta2, tol: float = 1e-5) -> dict:
    ctx = cl.locus(h).ctx
    if not pd.landing_identified(ctx, theta1, theta2):
        raise NotIdentified(f"rays {theta1} and {theta2} land at different points")
    a1 = alpha_std(h, theta1).alpha
    a2 = alpha_std(h, theta2).alpha
    rel = abs(a1 - a2) / abs(a1)
    return {"alpha_1": a1, "alpha_2": a2, "rel_error": rel, "passed": rel < tol}


def winding(values) -> float:
    """Winding number of a closed sampled curve around 0 (sum of wrapped increments)."""
    v = np.asarray(values, complex)
    d = np.angle(np.roll(v, -1) / v)
    return float(d.sum() / (2 * math.pi))


def max_increment(values) -> float:
    v = np.asarray(values, complex)
    return float(np.max(np.abs(np.angle(np.roll(v, -1) / v))))


# ------------------------------------------------------- semi-parabolic curve

def p_lambda_fixed_point(lam, a) -> complex:
    return lam / 2 + a / (2 * lam)


def p_lambda_params(lam, a, q: int | None = None) -> HenonParams:
    """Parameters on the curve where H has a fixed point with eigenvalue lam."""
    lam = complex(lam)
    if abs(abs(lam) - 1) > 1e-12:
        raise ValueError("lambda must lie on the unit circle")
    if q is not None and abs(lam ** q - 1) > 1e-9:
        raise ValueError(f"lambda is not a root of unity of order {q}")
    t = p_lambda_fixed_point(lam, a)
    c = (1 + a) * t - t * t
    c_ref = lam / 2 - lam * lam / 4
    if a == 0:
        c = c_ref
    return HenonParams(c, a, c_ref)


def semiparabolic_alpha_check(lam, a) -> dict:
    """Compare alpha(1) with the small eigenvalue at the fixed point where angle 0 lands.

    For lam = 1 that fixed point is the semi-parabolic one.  Slow convergence
    is reported through the flag, never raised.
    """
    if a == 0:
        raise ZeroJacobian("the degenerate map has no cocycle")
    h = p_lambda_params(lam, a)
    ctx = cl.locus(h).ctx
    fp = hc.fixed_point_near(h, ctx.poly.beta)
    ev = sorted(np.linalg.eigvals(hc.derivative(h, fp)), key=abs)
    mu = complex(ev[0])
    out = {"mu": mu, "eigen_large": complex(ev[1]),
           "det_error": abs(ev[0] * ev[1] - h.a) / abs(h.a),
           "semi_parabolic": abs(fp.x - p_lambda_fixed_point(complex(lam), a)) < 1e-6}
    try:
        s = alpha_std(h, 0)
        out.update(alpha_1=s.alpha, rel_error=abs(s.alpha - mu) / abs(mu),
                   convergence_flag=s.diagnostics["flag"])
    except Exception as exc:  # best effort: report, never raise
        out.update(alpha_1=complex("nan"), rel_error=math.inf,
                   convergence_flag=f"failed: {type(exc).__name__}")
    return out
