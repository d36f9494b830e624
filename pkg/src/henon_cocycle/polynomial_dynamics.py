"""Böttcher coordinates, external rays and the Carathéodory loop of z^2 + c.

Rays are traced by a log-radius ladder: the point gamma(w) is obtained by
pulling back gamma(w^(2^N)) ~ w^(2^N), and every square-root branch is
chosen against the same level at the previous (slightly larger) radius.

Landing points on the unit circle are not obtained as radial limits.
Instead the exact relation gamma(xi) = +-sqrt(gamma(xi^2) - c) is pulled
back along the doubling orbit of the angle from a point known exactly
(the beta fixed point, or a Newton-polished periodic cycle), using a ray
point at radius exp(ref_log_radius) only to decide each sign.  This is
exact up to rounding, whatever the Hölder exponent of the loop.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from . import angles as ang
from .errors import BranchFailure, NonEscaping, PrecisionLoss, SlowConvergence

TWO_PI_I = 2j * math.pi


@dataclass(frozen=True)
class QuadraticPoly:
    c: complex

    def __call__(self, z):
        return z * z + self.c

    def iterate(self, z, n: int):
        for _ in range(n):
            z = z * z + self.c
        return z

    @property
    def beta(self) -> complex:
        """Fixed point where the ray of angle 0 lands."""
        return (1 + cmath.sqrt(1 - 4 * complex(self.c))) / 2


@dataclass(frozen=True, eq=False)
class BoettcherContext:
    poly: QuadraticPoly
    escape_radius: float = 0.0
    big_radius: float = 1e8
    max_iter: int = 2000
    tol: float = 1e-12
    ray_steps: int = 4
    ref_log_radius: float = 1e-6
    # write-once cache of landing points keyed by exact angle
    _landing: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        floor = max(2.0, abs(self.poly.c)) + 1.0
        if self.escape_radius < floor:
            object.__setattr__(self, "escape_radius", floor)
        if self.big_radius < 1e8:
            raise ValueError("big_radius must be at least 1e8")

    @property
    def c(self) -> complex:
        return complex(self.poly.c)


def context(c, **kw) -> BoettcherContext:
    return BoettcherContext(QuadraticPoly(complex(c)), **kw)


def escape_time(ctx: BoettcherContext, z: complex) -> int | None:
    c = ctx.c
    for n in range(ctx.max_iter + 1):
        if abs(z) > ctx.escape_radius:
            return n
        z = z * z + c
    return None


# --------------------------------------------------------------------- rays

def _asymptotic_gamma(c, W):
    return W - c / (2 * W)


def ray_points(c: complex, t, theta, steps_per_halving: int = 4, big: float = 1e8):
    """gamma(exp(t + 2 pi i theta)) for arrays of log-radii t > 0 and angles (turns)."""
    t, theta = np.broadcast_arrays(np.asarray(t, float), np.asarray(theta, float))
    shape = t.shape
    t = t.ravel().copy()
    theta = theta.ravel() % 1.0
    P = t.size
    if P == 0:
        return np.zeros(shape, complex)
    if np.any(t <= 0):
        raise ValueError("ray points need |w| > 1")
    T = math.log(big)
    S = steps_per_halving
    n_p = np.maximum(0, np.ceil(S * np.log2(T / t))).astype(int)
    n_max = int(n_p.max())
    n_lev = int(max(1, math.ceil(math.log2(T / t.min())) + 2))
    A = np.empty((P, n_lev + 1))
    A[:, 0] = theta
    for k in range(n_lev):
        A[:, k + 1] = (2.0 * A[:, k]) % 1.0
    phase = np.exp(TWO_PI_I * A)
    rows = np.arange(P)
    Z = np.zeros((P, n_lev + 1), complex)
    for i in range(n_max + 1):
        j = i - (n_max - n_p)
        act = j >= 0
        if not act.any():
            continue
        ia = rows[act]
        tj = t[act] * 2.0 ** ((n_p[act] - j[act]) / S)
        N = np.maximum(0, np.ceil(np.log2(T / tj))).astype(int)
        N = np.minimum(N, n_lev)
        ref = Z[ia].copy()
        new = ref.copy()
        W = np.exp(tj * 2.0 ** N) * phase[ia, N]
        new[np.arange(ia.size), N] = _asymptotic_gamma(c, W)
        for k in range(int(N.max()) - 1, -1, -1):
            m = k < N
            if not m.any():
                continue
            r = np.sqrt(new[m, k + 1] - c)
            rk = ref[m, k]
            flip = np.abs(r - rk) > np.abs(r + rk)
            r[flip] = -r[flip]
            new[m, k] = r
        Z[ia] = new
    return Z[:, 0].reshape(shape)


def boettcher_inverse(ctx: BoettcherContext, w):
    """Böttcher coordinate gamma(w) for |w| > 1 (scalar or array)."""
    scalar = np.isscalar(w)
    w = np.asarray(w, complex)
    mod = np.abs(w)
    if np.any(mod <= 1):
        raise ValueError("boettcher_inverse needs |w| > 1")
    t = np.log(mod)
    if np.any(t < 4e-16):
        raise PrecisionLoss("|w| too close to 1; use caratheodory instead")
    n_needed = np.ceil(np.log2(math.log(ctx.big_radius) / np.minimum(t, math.log(ctx.big_radius))))
    if np.any(n_needed > ctx.max_iter):
        raise PrecisionLoss("pullback depth exceeds max_iter")
    theta = np.angle(w) / (2 * math.pi)
    out = ray_points(ctx.c, t, theta, ctx.ray_steps, ctx.big_radius)
    return complex(out) if scalar else out


def boettcher_phi(ctx: BoettcherContext, z):
    """Böttcher map phi(z) outside K_p (scalar or array).

    Once an iterate satisfies |z_n| >= rho (rho = max(R, 2 sqrt|c|)), every
    later factor 1 + c/z_m^2 lies within 1/4 of 1 and the principal-branch
    telescoping sum is exact.  Earlier levels are undone by square roots
    whose sign is decided by comparing gamma(candidate) with z_n.
    """
    scalar = np.isscalar(z)
    z = np.atleast_1d(np.asarray(z, complex)).ravel()
    c = ctx.c
    rho = max(ctx.escape_radius, 2 * math.sqrt(abs(c)))
    orbit = [z]
    cur = z
    done = np.abs(cur) > ctx.big_radius
    n = 0
    while not done.all():
        if n >= ctx.max_iter:
            raise NonEscaping("orbit did not escape within max_iter")
        cur = np.where(done, cur, cur * cur + c)
        orbit.append(cur)
        done = done | (np.abs(cur) > ctx.big_radius)
        n += 1
    orb = np.array(orbit)  # (n+1, P), frozen after escape
    big = np.abs(orb) > ctx.big_radius
    n_end = np.argmax(big, axis=0)
    safe = np.abs(orb) >= rho
    n0 = np.argmax(safe, axis=0)
    P = z.size
    cols = np.arange(P)
    lam = np.log(orb[n_end, cols])
    for k in range(int(n_end.max()) - 1, -1, -1):
        tele = (k < n_end) & (k >= n0)
        if tele.any():
            zk = orb[k, tele]
            zn = orb[k + 1, tele]
            lam[tele] = np.log(zk) + 0.5 * np.log1p(c / (zk * zk)) + 0.5 * (lam[tele] - np.log(zn))
        pull = (k < n0)
        if pull.any():
            cand = lam[pull] / 2
            w = np.exp(cand)
            g = ray_points(c, np.log(np.abs(w)), np.angle(w) / (2 * math.pi),
                           ctx.ray_steps, ctx.big_radius)
            zk = orb[k, pull]
            d_plus = np.abs(g - zk)
            d_minus = np.abs(g + zk)
            if np.any(np.minimum(d_plus, d_minus) > 1e-6 * (1 + np.abs(zk))):
                raise BranchFailure("no square-root branch of phi reproduces the orbit point")
            cand = np.where(d_plus <= d_minus, cand, cand + math.pi * 1j)
            lam[pull] = cand
    out = np.exp(lam)
    return complex(out[0]) if scalar else out


# ------------------------------------------------------------ landing points

def _pick(root, ref):
    """Choose +root or -root, whichever is nearer ref; also return the ambiguity ratio."""
    dp = np.abs(root - ref)
    dm = np.abs(root + ref)
    out = np.where(dp <= dm, root, -root)
    ratio = np.minimum(dp, dm) / np.maximum(np.maximum(dp, dm), 1e-300)
    return out, ratio


def _solve_cycle(ctx: BoettcherContext, cyc: list, refs: dict) -> dict:
    c = ctx.c
    if cyc == [(0, 1)]:
        return {(0, 1): ctx.poly.beta}
    k = len(cyc)
    vals = {a: refs[a] for a in cyc}
    for _ in range(4):
        for i in range(k - 1, -1, -1):
            nxt = vals[cyc[(i + 1) % k]]
            v, ratio = _pick(np.sqrt(complex(nxt) - c), refs[cyc[i]])
            if ratio > 0.9:
                raise BranchFailure(f"ambiguous branch on cycle through {cyc[0]}")
            vals[cyc[i]] = complex(v)
    z = vals[cyc[0]]
    for _ in range(100):
        f, d = z, 1.0 + 0j
        for _ in range(k):
            d = 2 * f * d
            f = f * f + c
        step = (f - z) / (d - 1)
        z = z - step
        if abs(step) < 1e-17 * (1 + abs(z)):
            break
    out = {}
    for a in cyc:
        out[a] = z
        z = z * z + c
    return out


def landing_values(ctx: BoettcherContext, keys: Iterable) -> dict:
    """Landing points gamma(e^{2 pi i theta}) for exact angle keys, cached on ctx."""
    cache = ctx._landing
    want = [k for k in keys if k not in cache]
    if not want:
        return cache
    succ = ang.closure(want)
    todo = [k for k in succ if k not in cache]
    theta = np.array([ang.to_float(k) for k in todo])
    ref_vals = ray_points(ctx.c, np.full(theta.shape, ctx.ref_log_radius), theta,
                          ctx.ray_steps, ctx.big_radius)
    refs = dict(zip(todo, ref_vals))
    # periodic angles (odd denominators) sit on cycles
    seen = set()
    for k in todo:
        if k[1] % 2 == 0 or k in seen or k in cache:
            continue
        cyc = [k]
        nxt = succ[k]
        while nxt != k:
            cyc.append(nxt)
            nxt = succ[nxt]
        seen.update(cyc)
        cache.update(_solve_cycle(ctx, cyc, refs))
    # remaining angles, in order of increasing distance to resolved ones
    depth = {}
    for k in todo:
        if k in cache:
            continue
        chain = []
        cur = k
        while cur not in cache and cur not in depth:
            chain.append(cur)
            cur = succ[cur]
        base = depth.get(cur, 0)
        for i, a in enumerate(reversed(chain)):
            depth[a] = base + i + 1
    levels: dict[int, list] = {}
    for a, d in depth.items():
        levels.setdefault(d, []).append(a)
    c = ctx.c
    for d in sorted(levels):
        batch = levels[d]
        img = np.array([cache[succ[a]] for a in batch])
        rf = np.array([refs[a] for a in batch])
        v, ratio = _pick(np.sqrt(img - c), rf)
        if np.any(ratio > 0.9):
            raise BranchFailure("ambiguous branch while pulling back landing points")
        cache.update(zip(batch, v.tolist()))
    return cache


def caratheodory(ctx: BoettcherContext, theta) -> complex:
    k = ang.key(theta)
    return complex(landing_values(ctx, [k])[k])


def caratheodory_many(ctx: BoettcherContext, thetas) -> np.ndarray:
    keys = [ang.key(t) for t in thetas]
    table = landing_values(ctx, keys)
    return np.array([table[k] for k in keys], complex)


def caratheodory_radial(ctx: BoettcherContext, theta, eps0: float = 1e-2,
                        tol: float = 1e-10, max_steps: int = 40):
    """Radial limit of gamma along r_m = 1 + eps0 2^-m with Aitken acceleration.

    Returns (value, last_gap).  Raises SlowConvergence carrying the best
    value when the Cauchy criterion is not met; expected where the loop
    is only weakly Hölder.
    """
    th = float(ang.as_fraction(theta))
    eps = eps0 * 2.0 ** -np.arange(max_steps)
    vals = ray_points(ctx.c, np.log1p(eps), np.full(eps.shape, th), ctx.ray_steps, ctx.big_radius)
    prev = None
    gap = math.inf
    best = vals[0]
    for m in range(2, max_steps):
        x0, x1, x2 = vals[m - 2], vals[m - 1], vals[m]
        den = x2 - 2 * x1 + x0
        acc = x2 - (x2 - x1) ** 2 / den if abs(den) > 1e-300 else x2
        if prev is not None:
            gap = abs(acc - prev)
            best = acc
            if gap < tol:
                return complex(acc), gap
        prev = acc
    raise SlowConvergence("radial Carathéodory limit did not settle", value=complex(best), gap=gap)


def delta_inf_gamma(ctx: BoettcherContext, n_samples: int = 512, refine_iter: int = 30) -> float:
    """inf |gamma| over the circle: grid minimum refined by golden-section search."""
    keys = [ang.key((m, n_samples)) for m in range(n_samples)]
    vals = np.abs(caratheodory_many(ctx, keys))
    best = float(vals.min())
    g = (math.sqrt(5) - 1) / 2

    def f(th):
        return abs(caratheodory(ctx, float(th) % 1.0))

    for i in np.argsort(vals)[:3]:
        lo, hi = (i - 1) / n_samples, (i + 1) / n_samples
        x1 = hi - g * (hi - lo)
        x2 = lo + g * (hi - lo)
        f1, f2 = f(x1), f(x2)
        for _ in range(refine_iter):
            if f1 < f2:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - g * (hi - lo)
                f1 = f(x1)
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + g * (hi - lo)
                f2 = f(x2)
        best = min(best, f1, f2)
    return best


def landing_identified(ctx: BoettcherContext, theta1, theta2, tol: float = 1e-7) -> bool:
    return abs(caratheodory(ctx, theta1) - caratheodory(ctx, theta2)) < tol
