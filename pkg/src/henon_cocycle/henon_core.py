"""The complex Hénon map H(x, y) = (x^2 + c - a y, x) and its escape functions.

Everything here accepts numpy arrays for the coordinates as well as scalars.
Gradients of log phi+ and log phi- are propagated in forward mode along the
orbit, so they are exact to rounding.
"""
from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (NoConvergence, NotEscaping, NotEscapingBackward, NotInUplus,
                     SubdivisionLimit, ZeroJacobian)

log = logging.getLogger(__name__)

BIG = 1e8


class Point2(NamedTuple):
    x: complex
    y: complex


@dataclass(frozen=True)
class HenonParams:
    """Map coefficients.  ``ref_c`` is the polynomial whose landing data seed
    leaf computations; it differs from ``c`` only on perturbed parabolic curves."""

    c: complex
    a: complex
    ref_c: complex | None = None

    def __post_init__(self):
        object.__setattr__(self, "c", complex(self.c))
        object.__setattr__(self, "a", complex(self.a))
        if self.ref_c is None:
            object.__setattr__(self, "ref_c", self.c)
        else:
            object.__setattr__(self, "ref_c", complex(self.ref_c))

    @property
    def R(self) -> float:
        s = 1 + abs(self.a)
        return max(3.0, (s + math.sqrt(s * s + 4 * abs(self.c))) / 2 + 0.5)


def apply(h: HenonParams, q) -> Point2:
    x, y = q
    return Point2(x * x + h.c - h.a * y, x)


def apply_inverse(h: HenonParams, q) -> Point2:
    if h.a == 0:
        raise ZeroJacobian("the degenerate map is not invertible")
    x, y = q
    return Point2(y, (y * y + h.c - x) / h.a)


def iterate(h: HenonParams, q, n: int) -> Point2:
    step = apply if n >= 0 else apply_inverse
    for _ in range(abs(n)):
        q = step(h, q)
    return Point2(*q)


def derivative(h: HenonParams, q) -> np.ndarray:
    return np.array([[2 * q[0], -h.a], [1, 0]], dtype=complex)


def orbit_derivative(h: HenonParams, q, k: int) -> np.ndarray:
    D = np.eye(2, dtype=complex)
    for _ in range(k):
        D = derivative(h, q) @ D
        q = apply(h, q)
    return D


# -------------------------------------------------------------- filtration

V, VPLUS, VMINUS = "V", "Vplus", "Vminus"


def classify(h: HenonParams, q) -> str:
    ax, ay = abs(q[0]), abs(q[1])
    R = h.R
    if ax >= max(ay, R):
        return VPLUS
    if ay >= max(ax, R):
        return VMINUS
    return V


def in_vplus(h: HenonParams, x, y):
    ax = np.abs(x)
    return (ax >= np.abs(y)) & (ax >= h.R)


def in_vminus(h: HenonParams, x, y):
    ay = np.abs(y)
    return (ay >= np.abs(x)) & (ay >= h.R)


def first_entry_forward(h: HenonParams, q, max_iter: int = 10_000):
    q = Point2(*q)
    for n in range(max_iter + 1):
        if classify(h, q) == VPLUS:
            return n, q
        if not (np.isfinite(q.x) and np.isfinite(q.y)):
            return None
        q = apply(h, q)
    return None


def first_entry_backward(h: HenonParams, q, max_iter: int = 10_000):
    q = Point2(*q)
    for n in range(max_iter + 1):
        if classify(h, q) == VMINUS:
            return n, q
        q = apply_inverse(h, q)
    return None


# --------------------------------------------------------- escape functions

def _tele_plus(h, x, y, dx=None, dy=None):
    """Telescoping sum for log phi+ from points already in V+ (arrays).

    Returns (log value, gradient pair or None).  The gradient is taken with
    respect to whatever variables dx, dy are derivatives with respect to.
    """
    c, a = h.c, h.a
    val = np.log(x)
    grad = None
    if dx is not None:
        grad = [dx[0] / x, dx[1] / x]
    w = 0.5
    live = np.abs(x) <= BIG
    while np.any(live):
        u = (c - a * y) / (x * x)
        term = np.log1p(u)
        val = val + np.where(live, w * term, 0)
        if dx is not None:
            du = [(-a * dy[i]) / (x * x) - 2 * (c - a * y) * dx[i] / (x * x * x) for i in (0, 1)]
            for i in (0, 1):
                grad[i] = grad[i] + np.where(live, w * du[i] / (1 + u), 0)
            ndx = [np.where(live, 2 * x * dx[i] - a * dy[i], dx[i]) for i in (0, 1)]
            dy = [np.where(live, dx[i], dy[i]) for i in (0, 1)]
            dx = ndx
        nx = np.where(live, x * x + c - a * y, x)
        y = np.where(live, x, y)
        x = nx
        w *= 0.5
        live = live & (np.abs(x) <= BIG)
    return val, grad


def _tele_minus(h, x, y, dx=None, dy=None):
    c, a = h.c, h.a
    val = np.log(y)
    grad = None
    if dx is not None:
        grad = [dy[0] / y, dy[1] / y]
    w = 0.5
    live = np.abs(y) <= BIG
    while np.any(live):
        u = (c - x) / (y * y)
        term = np.log1p(u)
        val = val + np.where(live, w * term, 0)
        if dx is not None:
            du = [-dx[i] / (y * y) - 2 * (c - x) * dy[i] / (y * y * y) for i in (0, 1)]
            for i in (0, 1):
                grad[i] = grad[i] + np.where(live, w * du[i] / (1 + u), 0)
            ndy = [np.where(live, (2 * y * dy[i] - dx[i]) / a, dy[i]) for i in (0, 1)]
            dx = [np.where(live, dy[i], dx[i]) for i in (0, 1)]
            dy = ndy
        ny = np.where(live, (y * y + c - x) / a, y)
        x = np.where(live, y, x)
        y = ny
        w *= 0.5
        live = live & (np.abs(y) <= BIG)
    return val, grad


def log_phi_plus(h: HenonParams, q):
    """log phi+ at q in V+ (scalar or array coordinates)."""
    x = np.asarray(q[0], complex)
    y = np.asarray(q[1], complex)
    if not np.all(in_vplus(h, x, y)):
        raise NotEscaping("log_phi_plus needs points in V+")
    val, _ = _tele_plus(h, x, y)
    return val[()] if val.ndim == 0 else val


def phi_plus(h: HenonParams, q):
    return np.exp(log_phi_plus(h, q))


def phi_plus_iterated(h: HenonParams, q, max_iter: int = 10_000):
    """(N, phi+(H^N q)) with N the first entry time into V+; no 2^N-th root is taken."""
    hit = first_entry_forward(h, q, max_iter)
    if hit is None:
        raise NotEscaping("orbit does not reach V+")
    N, Q = hit
    return N, complex(phi_plus(h, Q))


def log_phi_minus(h: HenonParams, q):
    if h.a == 0:
        raise ZeroJacobian("phi- needs a != 0")
    x = np.asarray(q[0], complex)
    y = np.asarray(q[1], complex)
    if not np.all(in_vminus(h, x, y)):
        raise NotEscapingBackward("log_phi_minus needs points in V-")
    val, _ = _tele_minus(h, x, y)
    return val[()] if val.ndim == 0 else val


def phi_minus(h: HenonParams, q):
    """phi- at q in V-; satisfies a phi-(H^-1 q) = phi-(q)^2 and phi- ~ y."""
    return np.exp(log_phi_minus(h, q))


def green_plus_covector(h: HenonParams, q, N: int | None = None, max_iter: int = 500):
    """Covector of 2^-N log phi+(H^N .) at q, with forward-mode derivatives.

    N defaults to the first entry time (per point).  Returns (N, logvalue at
    H^N q, (d/dx, d/dy)).  Works on arrays; N is then an array.
    """
    x = np.atleast_1d(np.asarray(q[0], complex)).copy()
    y = np.atleast_1d(np.asarray(q[1], complex)).copy()
    one, zero = np.ones_like(x), np.zeros_like(x)
    dx, dy = [one, zero], [zero, one]
    n_req = None if N is None else np.broadcast_to(np.asarray(N), x.shape)
    Ns = np.full(x.shape, -1)
    out_val = np.zeros_like(x)
    out_g = [np.zeros_like(x), np.zeros_like(x)]
    pending = np.ones(x.shape, bool)
    for n in range(max_iter + 1):
        ready = pending & in_vplus(h, x, y)
        if n_req is not None:
            ready = pending & (n_req == n)
            if np.any(ready & ~in_vplus(h, x, y)):
                raise NotEscaping("H^N q is not in V+")
        if np.any(ready):
            sel = ready
            val, g = _tele_plus(h, x[sel], y[sel], [dx[0][sel], dx[1][sel]], [dy[0][sel], dy[1][sel]])
            out_val[sel] = val
            out_g[0][sel] = g[0] * 2.0 ** -n
            out_g[1][sel] = g[1] * 2.0 ** -n
            Ns[sel] = n
            pending &= ~sel
        if not pending.any():
            break
        nx = x * x + h.c - h.a * y
        ndx = [2 * x * dx[i] - h.a * dy[i] for i in (0, 1)]
        dy = dx
        dx = ndx
        y = x
        x = nx
    if pending.any():
        raise NotEscaping("some points never reached V+")
    if np.ndim(q[0]) == 0:
        return int(Ns[0]), complex(out_val[0]), (complex(out_g[0][0]), complex(out_g[1][0]))
    return Ns, out_val, (out_g[0], out_g[1])


def green_minus_covector(h: HenonParams, q, M: int | None = None, max_iter: int = 500):
    """Covector of 2^-M log phi-(H^-M .) at q (backward analogue of green_plus_covector)."""
    if h.a == 0:
        raise ZeroJacobian("backward escape needs a != 0")
    x = np.atleast_1d(np.asarray(q[0], complex)).copy()
    y = np.atleast_1d(np.asarray(q[1], complex)).copy()
    one, zero = np.ones_like(x), np.zeros_like(x)
    dx, dy = [one, zero], [zero, one]
    m_req = None if M is None else np.broadcast_to(np.asarray(M), x.shape)
    Ms = np.full(x.shape, -1)
    out_val = np.zeros_like(x)
    out_g = [np.zeros_like(x), np.zeros_like(x)]
    pending = np.ones(x.shape, bool)
    for n in range(max_iter + 1):
        ready = pending & in_vminus(h, x, y)
        if m_req is not None:
            ready = pending & (m_req == n)
            if np.any(ready & ~in_vminus(h, x, y)):
                raise NotEscapingBackward("H^-M q is not in V-")
        if np.any(ready):
            sel = ready
            val, g = _tele_minus(h, x[sel], y[sel], [dx[0][sel], dx[1][sel]], [dy[0][sel], dy[1][sel]])
            out_val[sel] = val
            out_g[0][sel] = g[0] * 2.0 ** -n
            out_g[1][sel] = g[1] * 2.0 ** -n
            Ms[sel] = n
            pending &= ~sel
        if not pending.any():
            break
        ny = (y * y + h.c - x) / h.a
        ndy = [(2 * y * dy[i] - dx[i]) / h.a for i in (0, 1)]
        dx = dy
        dy = ndy
        x = y
        y = ny
    if pending.any():
        raise NotEscapingBackward("some points never reached V-")
    if np.ndim(q[0]) == 0:
        return int(Ms[0]), complex(out_val[0]), (complex(out_g[0][0]), complex(out_g[1][0]))
    return Ms, out_val, (out_g[0], out_g[1])


# ---------------------------------------------------------------- eta index

class DyadicIndex(NamedTuple):
    value: float
    nearest_dyadic: tuple
    distance: float


def _reduce_dyadic(m: int, k: int):
    if m == 0:
        return (0, 0)
    while k > 0 and m % 2 == 0:
        m //= 2
        k -= 1
    return (m, k)


def eta_index(h: HenonParams, loop: Sequence, max_iter: int = 200,
              max_segments: int = 2 ** 20) -> DyadicIndex:
    """Dyadic winding index of a closed polyline in U+ (last vertex joins the first)."""
    pts = np.array([[complex(p[0]), complex(p[1])] for p in loop])
    if len(pts) == 0:
        raise ValueError("empty loop")
    entries = []
    for p in pts:
        hit = first_entry_forward(h, p, max_iter)
        if hit is None:
            raise NotInUplus(f"vertex {tuple(p)} does not escape")
        entries.append(hit[0])
    N = max(entries)
    while N <= max_iter:
        try:
            wind = _winding_after(h, pts, N, max_segments)
            break
        except _NotYet:
            N += 1
    else:
        raise NotInUplus("loop does not map into V+")
    m = int(round(wind))
    value = wind / 2 ** N
    return DyadicIndex(value, _reduce_dyadic(m, N), abs(value - m / 2 ** N))


class _NotYet(Exception):
    pass


def _push(h, P, N):
    x, y = P[:, 0].copy(), P[:, 1].copy()
    for _ in range(N):
        x, y = x * x + h.c - h.a * y, x
    if not np.all(in_vplus(h, x, y)):
        raise _NotYet
    return log_phi_plus(h, (x, y)).imag


def _winding_after(h, pts, N, max_segments):
    P = pts
    args = _push(h, P, N)
    while True:
        nxt = np.roll(args, -1)
        inc = (nxt - args + math.pi) % (2 * math.pi) - math.pi
        bad = np.abs(inc) >= math.pi / 2
        if not bad.any():
            return float(inc.sum() / (2 * math.pi))
        if len(P) + bad.sum() > max_segments:
            raise SubdivisionLimit("winding accumulation needs more than the segment budget")
        idx = np.nonzero(bad)[0]
        mids = 0.5 * (P[idx] + P[(idx + 1) % len(P)])
        margs = _push(h, mids, N)
        P = np.insert(P, idx + 1, mids, axis=0)
        args = np.insert(args, idx + 1, margs)


# ----------------------------------------------------------- periodic points

class PeriodicPointRecord(NamedTuple):
    point: Point2
    period: int
    eigen_small: complex
    eigen_large: complex
    residual: float


def polynomial_periodic_points(c: complex, k: int) -> np.ndarray:
    """Roots of p^k(x) - x for p = x^2 + c (all points of period dividing k)."""
    P = np.polynomial.Polynomial([0, 1])
    for _ in range(k):
        P = P * P + c
    return (P - np.polynomial.Polynomial([0, 1])).roots()


def newton_periodic(h: HenonParams, k: int, seed, tol: float = 1e-12, max_iter: int = 50):
    q = np.array([complex(seed[0]), complex(seed[1])])

    def F(v):
        w = iterate(h, Point2(v[0], v[1]), k)
        return np.array([w.x, w.y]) - v

    f = F(q)
    for _ in range(max_iter):
        if np.linalg.norm(f) < tol * (1 + np.linalg.norm(q)):
            break
        J = orbit_derivative(h, Point2(q[0], q[1]), k) - np.eye(2)
        step = np.linalg.solve(J, -f)
        lam = 1.0
        for _ in range(30):
            cand = q + lam * step
            fc = F(cand)
            if np.linalg.norm(fc) <= np.linalg.norm(f) or lam < 1e-6:
                break
            lam *= 0.5
        q, f = cand, fc
    res = float(np.linalg.norm(F(q)))
    if not np.isfinite(res) or res > 1e-11 * max(1.0, float(np.linalg.norm(q))):
        raise NoConvergence(f"Newton for period {k} did not converge from {seed}")
    return Point2(complex(q[0]), complex(q[1])), res


def periodic_record(h: HenonParams, k: int, q: Point2, residual: float) -> PeriodicPointRecord:
    ev = np.linalg.eigvals(orbit_derivative(h, q, k))
    large = complex(max(ev, key=abs))
    # the determinant is exactly a^k; dividing avoids the cancellation that
    # costs the small eigenvalue its leading digits when |a|^k is tiny
    return PeriodicPointRecord(q, k, h.a ** k / large, large, residual)


def periodic_points(h: HenonParams, k: int, seeds=None) -> list[PeriodicPointRecord]:
    if h.a == 0:
        raise ZeroJacobian("periodic points are solved for invertible maps")
    if seeds is None:
        xs = polynomial_periodic_points(h.ref_c, k)
        seeds = []
        for x in xs:
            prev = x
            for _ in range(k - 1):
                prev = prev * prev + h.ref_c
            seeds.append((x, prev))
    found: list[PeriodicPointRecord] = []
    for s in seeds:
        try:
            q, res = newton_periodic(h, k, s)
        except NoConvergence as exc:
            log.info("skipped seed: %s", exc)
            continue
        if any(abs(q.x - r.point.x) + abs(q.y - r.point.y) < 1e-6 for r in found):
            continue
        found.append(periodic_record(h, k, q, res))
    return found


def continued_periodic_point(h: HenonParams, k: int, seed, steps: int = 8) -> PeriodicPointRecord:
    """Follow a periodic point from the degenerate map (a = 0, c = ref_c) to h by Newton continuation."""
    q = Point2(complex(seed[0]), complex(seed[1]))
    res = 0.0
    for m in range(1, steps + 1):
        s = m / steps
        hm = HenonParams(h.ref_c + s * (h.c - h.ref_c), h.a * s, h.ref_c)
        q, res = newton_periodic(hm, k, q)
    return periodic_record(h, k, q, res)


def fixed_point_near(h: HenonParams, x0: complex) -> Point2:
    """Fixed point of H whose x-coordinate is the root of x^2 - (1 + a) x + c nearest x0."""
    s = 1 + h.a
    d = cmath.sqrt(s * s - 4 * h.c)
    roots = [(s + d) / 2, (s - d) / 2]
    x = min(roots, key=lambda r: abs(r - x0))
    return Point2(x, x)
