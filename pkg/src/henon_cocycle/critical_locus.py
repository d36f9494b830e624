"""Leaves of the forward escaping foliation, their tangencies with the backward
foliation (the primary critical component c0) and the leafwise affine ratio.

A leaf with label xi is represented by the forward orbit of a point on it.
Writing x_k for the first coordinate of H^k(q) and x_{-1} = y(q), the orbit
solves the three-term recurrence

    x_{k+1} = x_k^2 + c - a x_{k-1},

and the leaf is selected by a terminal condition x_K = T (a Hénon fixed or
periodic point when |xi| = 1, the asymptotic value of the Böttcher chart when
|xi| > 1).  The boundary-value problem is solved by square-root sweeps that
follow the polynomial landing data, then polished by Newton with a backward
elimination.  The elimination multipliers m_k = a / (2 x_k - m_{k+1}) give the
leaf slope dx/dy for free, and the same recursion yields the affine ratio of
three points on a leaf without any subtraction of nearly equal numbers.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import angles as ang
from . import henon_core as hc
from . import polynomial_dynamics as pd
from .errors import (ContinuationStall, DegenerateTriple, MatchFailure, NoConvergence,
                     NotSameLeaf, SlowConvergence, WrongComponent, ZeroJacobian)
from .henon_core import HenonParams, Point2

TRAP_RADIUS = 0.5
CONTINUATION_CEILING = 0.3
EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class LeafLabel:
    theta: tuple  # exact angle key
    radius: float = 1.0

    def __post_init__(self):
        if self.radius < 1:
            raise ValueError("leaf radius must be at least 1")

    @classmethod
    def of(cls, theta, radius: float = 1.0) -> "LeafLabel":
        return cls(ang.key(theta), float(radius))

    @property
    def xi(self) -> complex:
        return self.radius * cmath.exp(2j * math.pi * ang.to_float(self.theta))


@dataclass
class LeafOrbit:
    """Forward orbit of a leaf point: q = (xs[0], y0), H^k q has first coordinate xs[k]."""

    y0: complex
    xs: np.ndarray
    slope: complex = complex("nan")

    @property
    def point(self) -> Point2:
        return Point2(complex(self.xs[0]), complex(self.y0))

    def image(self) -> "LeafOrbit":
        return LeafOrbit(complex(self.xs[0]), self.xs[1:])

    def preimage(self, h: HenonParams) -> "LeafOrbit":
        if h.a == 0:
            raise ZeroJacobian("preimage needs a != 0")
        x0, y0 = complex(self.xs[0]), complex(self.y0)
        return LeafOrbit((y0 * y0 + h.c - x0) / h.a, np.concatenate([[y0], self.xs]))


@dataclass
class TangencyPoint:
    label: LeafLabel
    q: Point2
    residual_leaf: float
    residual_tangency: float
    iterations: int
    orbit: LeafOrbit | None = None
    flag: str = "ok"


@dataclass
class AffineRatioResult:
    value: complex
    iterations: int
    last_correction: float


# ------------------------------------------------------------- leaf tangents

def _normalize(v):
    v = np.asarray(v, complex)
    v = v / np.linalg.norm(v)
    for comp in v:
        if abs(comp) > 1e-14:
            return v * (abs(comp) / comp)
    return v


def _fd_gradient(f, Q):
    """Central differences of a holomorphic function of two variables."""
    g = []
    for i in (0, 1):
        step = 1e-7 * (1 + abs(Q[i]))
        e = [0, 0]
        e[i] = step
        fp = f((Q[0] + e[0], Q[1] + e[1]))
        fm = f((Q[0] - e[0], Q[1] - e[1]))
        g.append((fp - fm) / (2 * step))
    return np.array(g)


def covector_plus(h: HenonParams, q, N: int | None = None, method: str = "analytic"):
    """Differential of log phi+ o H^N at q (scaled by 2^-N when analytic)."""
    if method == "analytic":
        _, _, g = hc.green_plus_covector(h, q, N)
        return np.array(g)
    if N is None:
        hit = hc.first_entry_forward(h, q)
        if hit is None:
            raise hc.NotEscaping("orbit does not reach V+")
        N = hit[0]
    Q = hc.iterate(h, q, N)
    g = _fd_gradient(lambda p: complex(hc.log_phi_plus(h, p)), Q)
    return (g @ hc.orbit_derivative(h, q, N)) * 2.0 ** -N


def covector_minus(h: HenonParams, q, M: int | None = None, method: str = "analytic"):
    if h.a == 0:
        raise ZeroJacobian("backward foliation needs a != 0")
    if method == "analytic":
        _, _, g = hc.green_minus_covector(h, q, M)
        return np.array(g)
    if M is None:
        hit = hc.first_entry_backward(h, q)
        if hit is None:
            raise hc.NotEscapingBackward("orbit does not reach V-")
        M = hit[0]
    Q = hc.iterate(h, q, -M)
    g = _fd_gradient(lambda p: complex(hc.log_phi_minus(h, p)), Q)
    D = np.eye(2, dtype=complex)
    p = Point2(*q)
    for _ in range(M):
        Dinv = np.array([[0, 1], [-1 / h.a, 2 * p.y / h.a]], dtype=complex)
        D = Dinv @ D
        p = hc.apply_inverse(h, p)
    return (g @ D) * 2.0 ** -M


def _kernel(g):
    return _normalize([g[1], -g[0]])


def leaf_tangent_plus(h, q, N=None, method="analytic"):
    return _kernel(covector_plus(h, q, N, method))


def leaf_tangent_minus(h, q, M=None, method="analytic"):
    return _kernel(covector_minus(h, q, M, method))


def tangency_residual(h, q, N=None, M=None, method="analytic") -> complex:
    gp = covector_plus(h, q, N, method)
    gm = covector_minus(h, q, M, method)
    det = gp[0] * gm[1] - gp[1] * gm[0]
    return complex(det / (np.linalg.norm(gp) * np.linalg.norm(gm)))


# ------------------------------------------------------------ shadow solver

def shadow_orbits(h: HenonParams, L: np.ndarray, T: np.ndarray, y0: np.ndarray,
                  X0: np.ndarray | None = None, sweeps: int = 4, max_newton: int = 40):
    """Solve x_{k+1} = x_k^2 + c - a x_{k-1}, x_{-1} = y0, x_K = T for each row.

    L holds reference values for x_0..x_{K-1} that pick the square-root
    branches.  Returns (X with K+1 columns, slope dx_0/dy0, max residual).
    """
    c, a = h.c, h.a
    P, K = L.shape
    y0 = np.asarray(y0, complex)
    if X0 is None:
        X = np.empty((P, K + 1), complex)
        X[:, :K] = L
        X[:, K] = T
        for _ in range(sweeps):
            for k in range(K - 1, -1, -1):
                prev = y0 if k == 0 else X[:, k - 1]
                r = np.sqrt(X[:, k + 1] - c + a * prev)
                X[:, k] = np.where(np.abs(r - L[:, k]) <= np.abs(r + L[:, k]), r, -r)
    else:
        X = X0.copy()
        X[:, K] = T
    m = np.zeros((P, K + 1), complex)
    for it in range(max_newton):
        prevs = np.concatenate([y0[:, None], X[:, :K - 1]], axis=1)
        F = X[:, 1:] - X[:, :K] ** 2 - c + a * prevs
        n = np.zeros(P, complex)
        mm = np.zeros(P, complex)
        nn = np.empty((P, K), complex)
        for k in range(K - 1, -1, -1):
            d = 2 * X[:, k] - mm
            mm = a / d
            n = (n + F[:, k]) / d
            m[:, k] = mm
            nn[:, k] = n
        dx = np.zeros(P, complex)
        big = 0.0
        for k in range(K):
            dx = m[:, k] * dx + nn[:, k]
            X[:, k] += dx
            big = max(big, float(np.max(np.abs(dx) / (1 + np.abs(X[:, k])))))
        if big < 1e-15:
            break
    prevs = np.concatenate([y0[:, None], X[:, :K - 1]], axis=1)
    F = X[:, 1:] - X[:, :K] ** 2 - c + a * prevs
    res = np.max(np.abs(F) / (1 + np.abs(X[:, 1:])), axis=1)
    # slope from a fresh elimination at the final iterate
    mm = np.zeros(P, complex)
    for k in range(K - 1, -1, -1):
        mm = a / (2 * X[:, k] - mm)
    return X, mm, res


class _Locus:
    """Per-parameter caches: polynomial landing data, Hénon cycles, c0 orbits."""

    def __init__(self, h: HenonParams, extra: int = 40):
        self.h = h
        self.ctx = pd.context(h.ref_c)
        self.extra = extra
        self.cycle_x: dict = {}
        self.c0: dict = {}

    def landing(self, keys):
        return pd.landing_values(self.ctx, keys)

    def cycle_of(self, k):
        """(preperiod, cycle list) of an exact angle under doubling."""
        seen = {}
        cur = k
        i = 0
        while cur not in seen:
            seen[cur] = i
            cur = ang.double(cur)
            i += 1
        start = seen[cur]
        cyc = [cur]
        nxt = ang.double(cur)
        while nxt != cur:
            cyc.append(nxt)
            nxt = ang.double(nxt)
        return start, cyc

    def terminal_x(self, k) -> complex:
        if k in self.cycle_x:
            return self.cycle_x[k]
        _, cyc = self.cycle_of(k)
        h = self.h
        if cyc == [(0, 1)]:
            self.cycle_x[(0, 1)] = complex(hc.fixed_point_near(h, self.ctx.poly.beta).x)
            return self.cycle_x[(0, 1)]
        land = self.landing(cyc)
        p = len(cyc)
        seed = (land[cyc[0]], land[cyc[-1]])
        try:
            rec = hc.continued_periodic_point(h, p, seed)
        except NoConvergence as exc:
            raise MatchFailure(f"no Hénon cycle continues the landing cycle of {cyc[0]}") from exc
        q = rec.point
        for a_key in cyc:
            if abs(q.x - land[a_key]) > TRAP_RADIUS:
                raise MatchFailure(f"Hénon cycle strays from the landing point of {a_key}")
            self.cycle_x[a_key] = complex(q.x)
            q = hc.apply(h, q)
        return self.cycle_x[k]


_LOCI: dict = {}


def locus(h: HenonParams) -> _Locus:
    loc = _LOCI.get(h)
    if loc is None:
        if len(_LOCI) > 64:
            _LOCI.clear()
        loc = _LOCI[h] = _Locus(h)
    return loc


def _boundary_data(h: HenonParams, keys: list, K: int | None = None):
    """References L (P x K) and terminals T for leaves of radius 1."""
    loc = locus(h)
    depth = max(loc.cycle_of(k)[0] for k in keys)
    if K is None:
        K = depth + loc.extra
    orbits = [ang.orbit(k, K) for k in keys]
    land = loc.landing({a for o in orbits for a in o})
    L = np.array([[land[a] for a in o[:K]] for o in orbits], complex)
    T = np.array([loc.terminal_x(o[K]) for o in orbits], complex)
    return L, T


def _escaping_data(h: HenonParams, keys: list, radius: float, big: float = 1e8):
    """References and terminals for leaves with radius > 1."""
    t = math.log(radius)
    K = max(1, math.ceil(math.log2(math.log(big) / t)))
    loc = locus(h)
    orbits = [ang.orbit(k, K) for k in keys]
    th = np.array([[ang.to_float(a) for a in o] for o in orbits])
    tt = t * 2.0 ** np.arange(K + 1)
    L = pd.ray_points(h.ref_c, np.broadcast_to(tt[:K], (len(keys), K)), th[:, :K],
                      loc.ctx.ray_steps, max(big, loc.ctx.big_radius) * 10)
    logW = tt[K] + 2j * math.pi * th[:, K]
    W = np.exp(logW)
    T = W - (h.c - h.a * L[:, K - 1]) / (2 * W)
    return L, T


def leaf_data(h, keys, radius=1.0):
    if radius == 1.0:
        return _boundary_data(h, keys)
    return _escaping_data(h, keys, radius)


def leaf_points(h: HenonParams, theta, ys, radius: float = 1.0) -> list[LeafOrbit]:
    """Points of the leaf with label (theta, radius) above the given y-coordinates."""
    ys = np.atleast_1d(np.asarray(ys, complex))
    k = ang.key(theta)
    L, T = leaf_data(h, [k], radius)
    L = np.repeat(L, ys.size, axis=0)
    T = np.repeat(T, ys.size)
    X, slope, _ = shadow_orbits(h, L, T, ys)
    return [LeafOrbit(complex(y), X[i], complex(slope[i])) for i, y in enumerate(ys)]


def _tangency_function(h, X, slope, y):
    q = (X[:, 0], y)
    _, _, g = hc.green_minus_covector(h, q)
    f = g[0] * slope + g[1]
    scale = np.sqrt(np.abs(g[0]) ** 2 + np.abs(g[1]) ** 2) * np.sqrt(1 + np.abs(slope) ** 2)
    return f, np.abs(f) / scale


def c0_leaves(h: HenonParams, keys: list, radius: float = 1.0, tol: float = 1e-14,
              max_iter: int = 40, strict: bool = True) -> dict:
    """Tangency points c0 on the leaves of the given angles (vectorized).

    The leaf is parametrized by y; the tangency is the zero of the derivative
    of log phi- along the leaf, found by Newton in y started at y = 0.
    """
    if h.a == 0:
        raise ZeroJacobian("the critical locus needs a != 0")
    keys = list(keys)
    L, T = leaf_data(h, keys, radius)
    P = len(keys)
    y = np.zeros(P, complex)
    X, slope, res = shadow_orbits(h, L, T, y)
    f, rel = _tangency_function(h, X, slope, y)
    its = 0
    for its in range(1, max_iter + 1):
        dy = 1e-6 * (1 + np.abs(y))
        Xd, sd, _ = shadow_orbits(h, L, T, y + dy, X0=X)
        fd, _ = _tangency_function(h, Xd, sd, y + dy)
        step = -f * dy / (fd - f)
        step = np.where(np.isfinite(step), step, 0)
        y = y + step
        X, slope, res = shadow_orbits(h, L, T, y, X0=X)
        f, rel = _tangency_function(h, X, slope, y)
        if np.all(np.abs(step) < tol * (1 + np.abs(y))):
            break
    out = {}
    for i, k in enumerate(keys):
        lab = LeafLabel(k, radius)
        flag = "ok" if rel[i] < 1e-9 and res[i] < 1e-9 else "unconverged"
        if abs(X[i, 0] - L[i, 0]) > TRAP_RADIUS:
            if strict:
                raise WrongComponent(f"tangency for angle {k} left the trapping region")
            flag = "wrong_component"
        orb = LeafOrbit(complex(y[i]), X[i].copy(), complex(slope[i]))
        out[k] = TangencyPoint(lab, orb.point, float(res[i]), float(rel[i]), its, orb, flag)
    return out


def c0_orbits(h: HenonParams, keys) -> dict:
    """Cached c0 orbits on boundary leaves, keyed by exact angle."""
    loc = locus(h)
    want = [k for k in dict.fromkeys(keys) if k not in loc.c0]
    if want:
        loc.c0.update(c0_leaves(h, want, strict=False))
    return {k: loc.c0[k] for k in keys}


def c0_on_circle(h: HenonParams, theta, eps_schedule=None, method: str = "shadow") -> TangencyPoint:
    """c0 on the boundary leaf of angle theta.

    ``shadow`` solves on the boundary leaf directly.  ``extrapolate`` solves on
    leaves of radius 1 + eps and Aitken-extrapolates to eps = 0, stopping on a
    Cauchy gap below 1e-7; it is kept as an independent route.
    """
    k = ang.key(theta)
    if method == "shadow":
        return c0_orbits(h, [k])[k]
    if eps_schedule is None:
        eps_schedule = [1e-1 * 2.0 ** -m for m in range(13)]
    vals = []
    prev = None
    gap = math.inf
    for eps in eps_schedule:
        tp = c0_leaves(h, [k], radius=1 + eps)[k]
        vals.append(np.array(tp.q))
        if len(vals) >= 3:
            x0, x1, x2 = vals[-3:]
            den = x2 - 2 * x1 + x0
            safe = np.abs(den) > 1e-300
            acc = np.where(safe, x2 - (x2 - x1) ** 2 / np.where(safe, den, 1), x2)
            if prev is not None:
                gap = float(np.max(np.abs(acc - prev)))
                if gap < 1e-7:
                    return TangencyPoint(LeafLabel(k, 1.0), Point2(*acc), gap, tp.residual_tangency,
                                         len(vals), None, "extrapolated")
            prev = acc
    raise SlowConvergence("radius extrapolation of c0 did not settle",
                          value=Point2(*(prev if prev is not None else vals[-1])), gap=gap)


def solve_c0(h: HenonParams, label: LeafLabel, seed=None, steps: int = 4,
             ceiling: float = CONTINUATION_CEILING, max_iter: int = 30) -> TangencyPoint:
    """c0 on an escaping leaf by Newton in C^2 on (leaf label, tangency).

    Continued in a along a_m = a m / steps from the seed (gamma(xi), 0).
    """
    if not 1 < label.radius <= 2:
        raise ValueError("solve_c0 takes radii in (1, 2]")
    if abs(h.a) > ceiling:
        raise ContinuationStall(f"|a| above the continuation ceiling {ceiling}")
    ctx = locus(h).ctx
    xi = label.xi
    g0 = pd.boettcher_inverse(ctx, xi)
    q = np.array(seed if seed is not None else (g0, 0.0), complex)
    log_xi = math.log(label.radius) + 2j * math.pi * ang.to_float(label.theta)
    total = 0
    E = None
    for m in range(1, steps + 1):
        hm = HenonParams(h.ref_c + (h.c - h.ref_c) * m / steps, h.a * m / steps, h.ref_c)
        N = hc.first_entry_forward(hm, Point2(*q))[0] + 1

        def eqs(v):
            p = Point2(v[0], v[1])
            n_, lv, gp = hc.green_plus_covector(hm, p, N)
            gm = covector_minus(hm, p)
            lab = (lv - 2 ** N * log_xi)
            lab = complex(lab.real, (lab.imag + math.pi) % (2 * math.pi) - math.pi) / 2 ** N
            return np.array([lab, gp[0] * gm[1] - gp[1] * gm[0]])

        for it in range(max_iter):
            E = eqs(q)
            J = np.empty((2, 2), complex)
            for i in (0, 1):
                e = np.zeros(2, complex)
                e[i] = 1e-7 * (1 + abs(q[i]))
                J[:, i] = (eqs(q + e) - eqs(q - e)) / (2 * e[i])
            step = np.linalg.solve(J, -E)
            lam = 1.0
            while lam > 1e-4:
                try:
                    if np.linalg.norm(eqs(q + lam * step)) < np.linalg.norm(E) or lam < 2e-4:
                        break
                except (hc.NotEscaping, hc.NotEscapingBackward):
                    pass
                lam *= 0.5
            else:
                raise ContinuationStall("step halving exhausted")
            q = q + lam * step
            total += 1
            if np.linalg.norm(lam * step) < 1e-14 * (1 + np.linalg.norm(q)):
                break
    p = Point2(complex(q[0]), complex(q[1]))
    if abs(p.x - g0) > TRAP_RADIUS:
        raise WrongComponent("solution left the trapping region around the x-axis")
    E = eqs(q)
    tres = abs(tangency_residual(h, p))
    return TangencyPoint(label, p, float(abs(E[0])), float(tres), total)


# ------------------------------------------------------------- affine ratio

def _as_orbit(h: HenonParams, p, n_steps: int = 60) -> LeafOrbit:
    if isinstance(p, LeafOrbit):
        return p
    x, y = complex(p[0]), complex(p[1])
    xs = [x]
    for _ in range(n_steps):
        x, y = x * x + h.c - h.a * y, x
        if not cmath.isfinite(x) or abs(x) > hc.BIG:
            break
        xs.append(x)
    return LeafOrbit(complex(p[1]), np.array(xs))


def _riccati(a, s):
    r = np.empty(len(s), complex)
    nxt = 0j
    for k in range(len(s) - 1, -1, -1):
        nxt = a / (s[k] - nxt)
        r[k] = nxt
    return r


def affine_ratio(h: HenonParams, A, B, C, naive: bool = False, leaf_tol: float = 1e-6,
                 max_steps: int = 80) -> AffineRatioResult:
    """Ratio (A - B)/(B - C) in the affine structure of the leaf through A, B, C.

    Points may be Point2 (orbits are then iterated forward) or LeafOrbit.
    For a pair of points on one leaf the differences d_k of first
    coordinates solve d_{k+1} = s_k d_k - a d_{k-1}, s_k = sum of the two
    first coordinates, and are the decaying solution; hence d_k = r_k d_{k-1}
    with r_k = a / (s_k - r_{k+1}) computed backward from the tail.
    ``naive`` instead propagates the recurrence forward.  Rounding excites the
    growing solution, which gains a factor near 4|x|^2/|a| per step, so this
    is only a diagnostic.
    """
    oa, ob, oc = (_as_orbit(h, p) for p in (A, B, C))
    scale = 1 + max(abs(o.xs[0]) + abs(o.y0) for o in (oa, ob, oc))
    if abs(ob.xs[0] - oc.xs[0]) + abs(ob.y0 - oc.y0) < 1e-13 * scale \
            or abs(oa.xs[0] - ob.xs[0]) + abs(oa.y0 - ob.y0) < 1e-13 * scale:
        raise DegenerateTriple("two of the three points coincide")
    if abs(ob.y0 - oc.y0) < 1e-13 * scale:
        raise DegenerateTriple("B and C share a y-coordinate, so they are not on one leaf")
    n = min(len(oa.xs), len(ob.xs), len(oc.xs))
    a = h.a
    if naive:
        return _naive_ratio(a, oa, ob, oc, min(n, max_steps))
    xa, xb, xc = oa.xs[:n], ob.xs[:n], oc.xs[:n]
    r_ab = _riccati(a, xa + xb)
    r_bc = _riccati(a, xb + xc)
    for r, p, q in ((r_ab, oa, ob), (r_bc, ob, oc)):
        d0 = p.xs[0] - q.xs[0]
        pred = r[0] * (p.y0 - q.y0)
        # floor: first coordinates carry absolute roundoff of a few ulps
        floor = 64 * EPS * (abs(p.xs[0]) + abs(q.xs[0]) + abs(r[0] * (p.y0 - q.y0)))
        defect = max(abs(d0 - pred) - floor, 0.0) / max(abs(d0), abs(pred), 1e-300)
        if defect > leaf_tol:
            raise NotSameLeaf(f"points are not on one leaf (defect {defect:.2e})")
    q = r_ab / r_bc
    val = (oa.y0 - ob.y0) / (ob.y0 - oc.y0) * np.prod(q)
    tail = abs(np.prod(q[max(0, n - 10):]) - 1)
    return AffineRatioResult(complex(val), n, float(tail))


def _naive_ratio(a, oa, ob, oc, n):
    d = [[oa.y0 - ob.y0, oa.xs[0] - ob.xs[0]], [ob.y0 - oc.y0, ob.xs[0] - oc.xs[0]]]
    prev = d[0][1] / d[1][1]
    corr = math.inf
    for k in range(n - 1):
        sab = oa.xs[k] + ob.xs[k]
        sbc = ob.xs[k] + oc.xs[k]
        d[0] = [d[0][1], sab * d[0][1] - a * d[0][0]]
        d[1] = [d[1][1], sbc * d[1][1] - a * d[1][0]]
        cur = d[0][1] / d[1][1]
        corr = abs(cur - prev)
        prev = cur
        if corr < 1e-10 * (1 + abs(cur)):
            return AffineRatioResult(complex(cur), k + 1, float(corr))
    return AffineRatioResult(complex(prev), n, float(corr))


def c_minus_one(h: HenonParams, theta) -> LeafOrbit:
    """Orbit of c_{-1}(xi) = H^-1(c0(xi^2))."""
    k2 = ang.double(ang.key(theta))
    return c0_orbits(h, [k2])[k2].orbit.preimage(h)


def leaf_coordinate(h: HenonParams, q, theta) -> complex:
    """Standard affine coordinate on the leaf of theta: 0 at c0, 1 at c_{-1}."""
    k = ang.key(theta)
    c0 = c0_orbits(h, [k])[k].orbit
    cm1 = c_minus_one(h, k)
    if tuple(_as_orbit(h, q, 0).point) == tuple(c0.point):
        return 0j
    return -affine_ratio(h, q, c0, cm1).value
