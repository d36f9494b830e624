"""Command-line runner for rendering and verifying the cocycle.

Rendering subcommands write alpha on the circle as CSV and PNG; the others
run verification suites or print derived parameters.

Configuration is layered: built-in defaults, then a flat ``key=value`` file
(``--config``), then command-line flags.  Every effective value is echoed
into the report.
"""
from __future__ import annotations

import argparse
import cmath
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from fractions import Fraction

import numpy as np

from . import angles as ang
from . import cocycle as co
from . import critical_locus as cl
from . import deck_group as dg
from . import henon_core as hc
from . import polynomial_dynamics as pd
from .errors import (CertificateFailure, DynamicsError, NotIdentified, PreconditionUnmet,
                     SlowConvergence)
from .pngwrite import Canvas, auto_view

CSV_HEADER = "theta,re,im,abs,arg,flag"

# Thresholds used by ``verify``; each can be overridden as ``tol.<name>=value``.
TOLERANCES = {
    "boettcher": 1e-10,
    "caratheodory": 1e-7,
    "phi_plus": 1e-9,
    "phi_plus_degenerate": 1e-10,
    "eta": 1e-8,
    "multiplier": 1e-2,
    "lyapunov": 5e-3,
    "degeneracy_ratio": 0.2,
    "intertwining": 1e-8,
    "closed_vs_recursive": 1e-10,
    "identification": 1e-5,
    "semiconjugacy": 1e-6,
    "semiparabolic": 5e-2,
}

SUITES = ("functional", "multiplier", "lyapunov", "degree", "identification",
          "degeneracy", "group", "neighborhood", "semiconjugacy", "semiparabolic")
DEFAULT_SUITE = ("functional", "multiplier", "lyapunov", "degree", "identification", "group",
                 "semiconjugacy")


class UsageError(Exception):
    pass


def parse_complex(s) -> complex:
    if isinstance(s, (int, float, complex)):
        return complex(s)
    t = str(s).strip().replace(" ", "").replace("i", "j")
    try:
        return complex(t)
    except ValueError as exc:
        raise UsageError(f"not a complex number: {s!r}") from exc


def parse_bool(s) -> bool:
    if isinstance(s, bool):
        return s
    v = str(s).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {s!r}")


def fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, complex):
        return f"{v.real!r}{'+' if v.imag >= 0 or math.isnan(v.imag) else '-'}{abs(v.imag)!r}j"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (tuple, list)):
        return ",".join(fmt(x) for x in v)
    return str(v)


@dataclass
class ExperimentConfig:
    c: complex = -1 + 0j
    a: complex = 1e-3 + 0j
    triv: str = "std"
    n: int = 1024
    out: str = "out"
    workers: int = 1
    seed: int = 0
    suite: str = "default"
    strict: bool = False
    synthetic: bool = False
    scale_by_a: bool = False
    z: float = 0.3
    samples: int = 20
    budget: int = 1000
    multiplier_thetas: str = "0"
    lam: complex = 1 + 0j
    tol: dict = field(default_factory=lambda: dict(TOLERANCES))

    def validate(self):
        if self.n < 2 or self.n & (self.n - 1):
            raise UsageError(f"n = {self.n} is not a power of two")
        if self.triv not in ("std", "norm"):
            raise UsageError("triv must be std or norm")
        if self.workers < 1:
            raise UsageError("workers must be positive")
        if self.a == 0 and not self.synthetic:
            raise UsageError("a = 0 has no cocycle; use synthetic mode")
        bad = set(self.suite_list()) - set(SUITES)
        if bad:
            raise UsageError(f"unknown suite(s): {', '.join(sorted(bad))}")

    def suite_list(self):
        if self.suite in ("default", ""):
            return list(DEFAULT_SUITE)
        if self.suite == "all":
            return list(SUITES)
        return [s.strip() for s in self.suite.split(",") if s.strip()]

    @property
    def params(self) -> hc.HenonParams:
        return hc.HenonParams(self.c, self.a)

    def items(self):
        for f in fields(self):
            if f.name == "tol":
                for k, v in sorted(self.tol.items()):
                    yield f"tol.{k}", v
            else:
                yield f.name, getattr(self, f.name)


_CONVERT = {"c": parse_complex, "a": parse_complex, "lam": parse_complex, "n": int,
            "workers": int, "seed": int, "samples": int, "budget": int, "z": float,
            "strict": parse_bool, "synthetic": parse_bool, "scale_by_a": parse_bool}


def apply_setting(cfg: ExperimentConfig, key: str, value):
    key = key.strip().replace("-", "_")
    if key.startswith("tol."):
        name = key[4:]
        if name not in TOLERANCES:
            raise UsageError(f"unknown tolerance {name!r}")
        cfg.tol[name] = float(value)
        return
    if key not in {f.name for f in fields(cfg)} or key == "tol":
        raise UsageError(f"unknown config key {key!r}")
    conv = _CONVERT.get(key, str)
    try:
        setattr(cfg, key, conv(value))
    except ValueError as exc:
        raise UsageError(f"bad value for {key}: {value!r}") from exc


def read_config(path: str) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    for no, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{no}: expected key=value")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


# ------------------------------------------------------------------- curves

def normalize_arg(z) -> np.ndarray:
    """Argument in turns, in [-1/2, 1/2)."""
    t = np.angle(np.asarray(z, complex)) / (2 * math.pi)
    return np.where(t >= 0.5, t - 1.0, t)


def _curve_chunk(c, a, triv, synthetic, keys):
    """Worker body: alpha and flags for one contiguous block of angles."""
    if synthetic:
        if c == 0:
            th = np.array([ang.to_float(k) for k in keys])
            g = np.exp(2j * math.pi * th)
            g2 = g * g
        else:
            ctx = pd.context(c)
            g = pd.caratheodory_many(ctx, keys)
            g2 = pd.caratheodory_many(ctx, [ang.double(k) for k in keys])
        scale = a if a != 0 else 1.0
        al = scale * g / (2 * g2 ** 2)
        if triv == "norm":
            al = al * g2 ** 2 / g ** 2
        return al, ["ok"] * len(keys)
    h = hc.HenonParams(c, a)
    try:
        u = co.boettcher_squared_gauge(h) if triv == "norm" else None
        al = co.gauge_values(h, keys, u)
        return al, co.alpha_flags(h, keys)
    except DynamicsError:
        pass
    # fall back to one angle at a time so a single bad angle leaves a gap
    al = np.full(len(keys), complex("nan"))
    flags = []
    for i, k in enumerate(keys):
        try:
            u = co.boettcher_squared_gauge(h) if triv == "norm" else None
            al[i] = co.gauge_values(h, [k], u)[0]
            flags.append(co.alpha_flags(h, [k])[0])
        except DynamicsError as exc:
            flags.append("failed_" + type(exc).__name__)
    return al, flags


def compute_curve(cfg: ExperimentConfig):
    """Rows (theta, alpha, flag) on the grid m/n, sharded over ``cfg.workers`` processes."""
    keys = co.grid(cfg.n)
    if cfg.workers == 1:
        al, flags = _curve_chunk(cfg.c, cfg.a, cfg.triv, cfg.synthetic, keys)
    else:
        bounds = np.linspace(0, len(keys), cfg.workers + 1).astype(int)
        parts = [keys[bounds[i]:bounds[i + 1]] for i in range(cfg.workers)]
        with ProcessPoolExecutor(cfg.workers) as pool:
            futs = [pool.submit(_curve_chunk, cfg.c, cfg.a, cfg.triv, cfg.synthetic, p)
                    for p in parts if p]
            res = [f.result() for f in futs]
        al = np.concatenate([r[0] for r in res])
        flags = [f for r in res for f in r[1]]
    th = np.array([ang.to_float(k) for k in keys])
    return th, np.asarray(al, complex), list(flags)


def write_csv(path, th, al, flags):
    ar = normalize_arg(al)
    with open(path, "w", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for t, z, g, f in zip(th, al, ar, flags):
            z = complex(z)
            fh.write(f"{float(t)!r},{z.real!r},{z.imag!r},{abs(z)!r},{float(g)!r},{f}\n")


def read_csv(path):
    with open(path) as fh:
        head = fh.readline().strip()
        if head != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {head!r}")
        rows = []
        for line in fh:
            t, re, im, ab, ar, f = line.rstrip("\n").split(",")
            rows.append((float(t), float(re), float(im), float(ab), float(ar), f))
    return rows


def _ensure_dir(path):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror}") from exc


def _gaps(flags, values):
    bad = np.array([not f.startswith("ok") for f in flags]) | ~np.isfinite(values)
    return bad | np.roll(bad, -1)


def render_alpha(cfg: ExperimentConfig, log=print) -> dict:
    _ensure_dir(cfg.out)
    th, al, flags = compute_curve(cfg)
    csv_path = os.path.join(cfg.out, "alpha.csv")
    png_path = os.path.join(cfg.out, "alpha.png")
    write_csv(csv_path, th, al, flags)
    v = al / cfg.a if (cfg.scale_by_a and cfg.a != 0) else al
    closed = np.append(v, v[:1])
    cut = np.append(_gaps(flags, v), False)
    cv = Canvas()
    cv.set_view(*auto_view(closed.real, closed.imag, square=True))
    cv.axes()
    cv.polyline(closed.real, closed.imag, breaks=cut)
    cv.save(png_path)
    out = {"csv": csv_path, "png": png_path, "rows": len(th),
           "failed": sum(1 for f in flags if not f.startswith("ok")),
           "winding": co.winding(al) if np.all(np.isfinite(al)) else float("nan")}
    for k, val in out.items():
        log(f"render.{k}={fmt(val)}")
    return out


def render_mod_arg(cfg: ExperimentConfig, log=print) -> dict:
    _ensure_dir(cfg.out)
    th, al, flags = compute_curve(cfg)
    csv_path = os.path.join(cfg.out, "alpha.csv")
    write_csv(csv_path, th, al, flags)
    v = al / cfg.a if (cfg.scale_by_a and cfg.a != 0) else al
    paths = {}
    for name, ys in (("abs", np.abs(v)), ("arg", normalize_arg(v))):
        cv = Canvas(900, 500)
        lo, hi = (-0.5, 0.5) if name == "arg" else (0.0, float(np.nanmax(ys)) * 1.05)
        cv.set_view(0.0, 1.0, lo, hi)
        cv.axes()
        # raw normalized values; no unwrapping, so argument jumps show
        cut = _gaps(flags, v)[:-1]
        if name == "arg":
            cut = cut | (np.abs(np.diff(ys)) > 0.5)
        cv.polyline(th, ys, breaks=cut)
        p = os.path.join(cfg.out, f"{name}.png")
        cv.save(p)
        paths[name] = p
    out = {"csv": csv_path, "png_abs": paths["abs"], "png_arg": paths["arg"], "rows": len(th),
           "winding": co.winding(al) if np.all(np.isfinite(al)) else float("nan")}
    for k, val in out.items():
        log(f"render.{k}={fmt(val)}")
    return out


# ------------------------------------------------------------------- verify

class Report:
    """Collects key=value lines and pass/warn/fail outcomes."""

    def __init__(self, strict: bool = False):
        self.lines = []
        self.hard = 0
        self.warn = 0
        self.strict = strict

    def put(self, key, value):
        self.lines.append(f"{key}={fmt(value)}")

    def check(self, key, value, threshold, ok: bool, soft: bool = False):
        self.put(f"{key}.value", value)
        self.put(f"{key}.threshold", threshold)
        if ok:
            status = "pass"
        elif soft and not self.strict:
            status = "warn"
            self.warn += 1
        else:
            status = "fail"
            self.hard += 1
        self.put(f"{key}.status", status)
        return ok

    def error(self, key, exc, soft=False):
        self.put(f"{key}.error", f"{type(exc).__name__}: {exc}")
        if soft and not self.strict:
            self.warn += 1
            self.put(f"{key}.status", "warn")
        else:
            self.hard += 1
            self.put(f"{key}.status", "fail")


def _suite_functional(cfg, rep, rng):
    tol = cfg.tol
    ctx = pd.context(cfg.c)
    z = (ctx.escape_radius * (1 + 3 * rng.random(200))) * np.exp(2j * math.pi * rng.random(200))
    pz = ctx.poly(z)
    err = np.max(np.abs(pd.boettcher_phi(ctx, pz) - pd.boettcher_phi(ctx, z) ** 2)
                 / np.abs(pd.boettcher_phi(ctx, pz)))
    rep.check("functional.boettcher", float(err), tol["boettcher"], err < tol["boettcher"])
    keys = co.grid(256)
    g = pd.caratheodory_many(ctx, keys)
    g2 = pd.caratheodory_many(ctx, [ang.double(k) for k in keys])
    err = float(np.max(np.abs(g2 - ctx.poly(g))))
    rep.check("functional.caratheodory", err, tol["caratheodory"], err < tol["caratheodory"])

    h = cfg.params
    R = h.R
    x = (R + 1 + 6 * rng.random(200)) * np.exp(2j * math.pi * rng.random(200))
    y = x * rng.random(200) * np.exp(2j * math.pi * rng.random(200))
    Hq = hc.apply(h, (x, y))
    lhs = hc.phi_plus(h, Hq)
    err = float(np.max(np.abs(lhs - hc.phi_plus(h, (x, y)) ** 2) / np.abs(lhs)))
    rep.check("functional.phi_plus", err, tol["phi_plus"], err < tol["phi_plus"])
    h0 = hc.HenonParams(cfg.c, 0)
    err = float(np.max(np.abs(hc.phi_plus(h0, (x, y)) - pd.boettcher_phi(ctx, x))
                       / np.abs(x)))
    rep.check("functional.phi_plus_degenerate", err, tol["phi_plus_degenerate"],
              err < tol["phi_plus_degenerate"])

    loop = [(2 * R * cmath.exp(2j * math.pi * s / 64), 0j) for s in range(64)]
    e1 = hc.eta_index(h, loop)
    e2 = hc.eta_index(h, [hc.apply_inverse(h, q) for q in loop])
    d1, d2 = abs(e1.value - 1), abs(e2.value - 0.5)
    rep.check("functional.eta_loop", d1, tol["eta"], d1 < tol["eta"])
    rep.check("functional.eta_preimage", d2, tol["eta"], d2 < tol["eta"])


def _thetas(s: str):
    return [Fraction(t.strip()) for t in s.split(",") if t.strip()]


def _suite_multiplier(cfg, rep, rng):
    h = cfg.params
    for th in _thetas(cfg.multiplier_thetas):
        key = f"multiplier.theta_{th.numerator}_{th.denominator}"
        try:
            r = co.check_multiplier(h, th)
        except DynamicsError as exc:
            rep.error(key, exc)
            continue
        rep.put(f"{key}.product", r["product"])
        rep.put(f"{key}.eigen_small", r["eigen_small"])
        rep.check(key, r["rel_error"], cfg.tol["multiplier"],
                  r["rel_error"] < cfg.tol["multiplier"])


def _suite_lyapunov(cfg, rep, rng):
    n = max(cfg.n, 256)
    u = co.boettcher_squared_gauge(cfg.params) if cfg.triv == "norm" else None
    r = co.lyapunov_integral(cfg.params, n, u)
    rep.put("lyapunov.n_samples", n)
    rep.put("lyapunov.mean_log_abs_alpha", r.mean_log_abs_alpha)
    rep.put("lyapunov.target", r.target)
    rep.put("lyapunov.n_failed", r.n_failed)
    rep.check("lyapunov.gap", r.gap, cfg.tol["lyapunov"], r.gap < cfg.tol["lyapunov"])


def _suite_degree(cfg, rep, rng):
    h = cfg.params
    keys = co.grid(max(cfg.n, 256))
    std = co.gauge_values(h, keys, None)
    nrm = co.gauge_values(h, keys, co.boettcher_squared_gauge(h))
    for name, vals, want in (("standard", std, -3), ("normalized", nrm, -1)):
        w = co.winding(vals)
        inc = co.max_increment(vals)
        rep.put(f"degree.{name}.max_increment", inc)
        # an increment near pi makes the integer ambiguous
        rep.check(f"degree.{name}", w, want, abs(w - want) < 1e-9 and inc < 0.75 * math.pi)


def _suite_identification(cfg, rep, rng):
    h = cfg.params
    try:
        r = co.identification_check(h, Fraction(1, 3), Fraction(2, 3), cfg.tol["identification"])
    except NotIdentified:
        rep.put("identification.status", "skip_not_identified")
        return
    rep.check("identification.rel_error", r["rel_error"], cfg.tol["identification"], r["passed"])


def _suite_degeneracy(cfg, rep, rng):
    a1 = abs(cfg.a)
    pts = co.degeneracy_error(cfg.c, [a1, a1 / 100], 64)
    (_, e1), (_, e2) = pts
    rep.put("degeneracy.sup_error_a", e1)
    rep.put("degeneracy.sup_error_a_over_100", e2)
    ratio = e2 / e1
    ok = math.isfinite(e1) and math.isfinite(e2) and ratio < cfg.tol["degeneracy_ratio"]
    rep.check("degeneracy.ratio", ratio, cfg.tol["degeneracy_ratio"], ok)


def _random_dyadics(rng, count, depth=24):
    return [ang.key(Fraction(int(m), 2 ** depth)) for m in rng.integers(0, 2 ** depth, count)]


def _suite_group(cfg, rep, rng):
    src = dg.HenonCocycle(cfg.params)
    thetas = _random_dyadics(rng, cfg.samples)
    co.prefetch(cfg.params, [t for th in thetas for t in ang.orbit(th, 7)])
    worst_i = worst_c = 0.0
    for th in thetas:
        k = int(rng.integers(1, 7))
        j = int(rng.choice([m for m in range(1, 2 ** k, 2)]))
        z = complex(rng.normal(), rng.normal())
        worst_i = max(worst_i, dg.intertwining_residual(src, j, k, th, z))
        p1, q1 = dg.pq_closed_form(src, j, k, th)
        p2, q2 = dg.pq_recursive(src, j, k, th)
        worst_c = max(worst_c, abs(p1 - p2) / abs(p1), abs(q1 - q2) / max(abs(q1), 1e-300))
    rep.check("group.intertwining", worst_i, cfg.tol["intertwining"],
              worst_i < cfg.tol["intertwining"])
    rep.check("group.closed_vs_recursive", worst_c, cfg.tol["closed_vs_recursive"],
              worst_c < cfg.tol["closed_vs_recursive"])

    consts = dg.compute_constants(src)
    for f in fields(consts):
        rep.put(f"group.constants.{f.name}", getattr(consts, f.name))
    premise = consts.abs_a < consts.a0
    rep.put("group.premise_abs_a_below_a0", premise)
    k0 = consts.k0(abs(cfg.z))
    rep.put("group.k0", k0)
    worst = math.inf
    for th in _random_dyadics(rng, cfg.samples):
        for k in range(k0, k0 + 4):
            worst = min(worst, dg.growth_check(src, consts, 1, k, th, cfg.z, enforce=False).margin)
    # without the premise the bound is not promised, so a negative margin only warns
    rep.check("group.growth_min_margin", worst, 0.0, worst > 0, soft=not premise)


def _suite_neighborhood(cfg, rep, rng):
    src = dg.HenonCocycle(cfg.params)
    consts = dg.compute_constants(src)
    premise = consts.abs_a < consts.a0
    rep.put("neighborhood.premise_abs_a_below_a0", premise)
    try:
        r = dg.separating_neighborhood(src, consts, 0, 0j, cfg.budget, seed=cfg.seed,
                                       enforce=False)
    except CertificateFailure as exc:
        rep.error("neighborhood.certificate", exc, soft=not premise)
        return
    for k in ("k0", "k_max", "angular_elements", "sampled_elements", "points"):
        rep.put(f"neighborhood.{k}", r[k])
    rep.check("neighborhood.min_displacement_over_radius", r["min_displacement_over_radius"],
              1.0, r["passed"])


def _suite_semiconjugacy(cfg, rep, rng):
    h = cfg.params
    worst = 0.0
    count = 0
    thetas = [Fraction(int(m), 64) for m in rng.integers(0, 64, 8)]
    for th in thetas:
        s = co.alpha_std(h, th)
        ys = cl.c0_orbits(h, [ang.key(th)])[ang.key(th)].q.y
        pts = cl.leaf_points(h, th, ys + 0.05 * (rng.random(3) - 0.5 + 1j * (rng.random(3) - 0.5)))
        for p in pts:
            try:
                z = cl.leaf_coordinate(h, p, th)
                zz = cl.leaf_coordinate(h, p.image(), ang.double(ang.key(th)))
            except DynamicsError:
                continue
            worst = max(worst, abs(zz - (s.alpha * z + s.beta)))
            count += 1
    rep.put("semiconjugacy.points", count)
    rep.check("semiconjugacy.max_error", worst, cfg.tol["semiconjugacy"],
              count > 0 and worst < cfg.tol["semiconjugacy"])


def _suite_semiparabolic(cfg, rep, rng):
    h0 = co.p_lambda_params(cfg.lam, 0)
    rep.put("semiparabolic.c_at_a0", h0.c)
    a = cfg.a if cfg.a != 0 else 0.05
    h = co.p_lambda_params(cfg.lam, a)
    fp = hc.Point2(co.p_lambda_fixed_point(cfg.lam, a), co.p_lambda_fixed_point(cfg.lam, a))
    ev = np.linalg.eigvals(hc.derivative(h, fp))
    err = float(np.min(np.abs(ev - cfg.lam)))
    rep.check("semiparabolic.eigenvalue", err, 1e-10, err < 1e-10)
    r = co.semiparabolic_alpha_check(cfg.lam, a)
    rep.put("semiparabolic.mu", r["mu"])
    rep.put("semiparabolic.alpha_1", r["alpha_1"])
    rep.put("semiparabolic.flag", r["convergence_flag"])
    rep.check("semiparabolic.alpha_vs_mu", r["rel_error"], cfg.tol["semiparabolic"],
              r["rel_error"] < cfg.tol["semiparabolic"], soft=True)


_SUITE_FUNCS = {name: globals()[f"_suite_{name}"] for name in SUITES}


def verify(cfg: ExperimentConfig, log=print) -> int:
    rep = Report(cfg.strict)
    for k, v in cfg.items():
        rep.put(f"config.{k}", v)
    for name in cfg.suite_list():
        rng = np.random.default_rng(cfg.seed)
        t0 = time.perf_counter()
        try:
            _SUITE_FUNCS[name](cfg, rep, rng)
        except SlowConvergence as exc:
            rep.error(f"{name}.run", exc, soft=True)
        except (DynamicsError, ValueError, PreconditionUnmet) as exc:
            rep.error(f"{name}.run", exc)
        rep.put(f"{name}.seconds", round(time.perf_counter() - t0, 3))
    rep.put("summary.hard_failures", rep.hard)
    rep.put("summary.warnings", rep.warn)
    for line in rep.lines:
        log(line)
    return 1 if rep.hard else 0


# ----------------------------------------------------------- small commands

def constants(cfg: ExperimentConfig, log=print) -> dict:
    src = dg.LimitCocycle(cfg.c, cfg.a) if cfg.synthetic else dg.HenonCocycle(cfg.params)
    consts = dg.compute_constants(src)
    out = {f.name: getattr(consts, f.name) for f in fields(consts)}
    out["premise_abs_a_below_a0"] = consts.abs_a < consts.a0
    try:
        out["k0"] = consts.k0(abs(cfg.z))
        out["k0_certificate"] = consts.k0_certificate(abs(cfg.z))
    except PreconditionUnmet as exc:
        out["k0"] = f"undefined ({exc})"
    for k, v in out.items():
        log(f"constants.{k}={fmt(v)}")
    return out


def p_lambda(cfg: ExperimentConfig, log=print) -> dict:
    h = co.p_lambda_params(cfg.lam, cfg.a)
    t = co.p_lambda_fixed_point(cfg.lam, cfg.a)
    ev = np.linalg.eigvals(hc.derivative(h, hc.Point2(t, t)))
    ev = sorted((complex(e) for e in ev), key=abs)
    out = {"lambda": complex(cfg.lam), "a": h.a, "c": h.c, "ref_c": h.ref_c,
           "fixed_point": complex(t), "eigen_small": ev[0], "eigen_large": ev[1],
           "fixed_point_residual": abs(t * t + h.c - h.a * t - t)}
    for k, v in out.items():
        log(f"p_lambda.{k}={fmt(v)}")
    return out


# --------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--c", help="polynomial parameter, e.g. -1 or 0.1i")
    common.add_argument("--a", help="Jacobian")
    common.add_argument("--triv", choices=["std", "norm"], help="trivialization")
    common.add_argument("--n", type=int, help="number of angles (power of two)")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int, help="worker processes for the angle grid")
    common.add_argument("--seed", type=int, help="random seed for sampled checks")
    common.add_argument("--suite", help=f"comma list of {', '.join(SUITES)}; or default/all")
    common.add_argument("--strict", action="store_true", default=None,
                        help="treat soft failures as hard")
    common.add_argument("--synthetic", action="store_true", default=None,
                        help="use the small-Jacobian limit formula instead of the map")
    common.add_argument("--scale-by-a", action="store_true", default=None, dest="scale_by_a",
                        help="plot alpha/a")
    common.add_argument("--lam", help="eigenvalue for p-lambda")
    common.add_argument("--z", type=float, help="|z| used for k0")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="any config key, e.g. tol.lyapunov=1e-2")

    p = argparse.ArgumentParser(prog="henon-cocycle", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, hlp in (("render-alpha", "CSV and PNG of alpha on the circle"),
                      ("render-mod-arg", "CSV and PNG graphs of |alpha| and arg alpha"),
                      ("verify", "run verification suites, key=value report"),
                      ("constants", "print the group constants"),
                      ("p-lambda", "print parameters on the semi-parabolic curve")):
        sub.add_parser(name, parents=[common], help=hlp)
    return p


def config_from_args(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.config:
        for k, v in read_config(args.config).items():
            apply_setting(cfg, k, v)
    for name in ("c", "a", "triv", "n", "out", "workers", "seed", "suite", "strict",
                 "synthetic", "scale_by_a", "lam", "z"):
        v = getattr(args, name)
        if v is not None:
            apply_setting(cfg, name, v)
    for item in args.set:
        if "=" not in item:
            raise UsageError(f"--set expects KEY=VALUE, got {item!r}")
        apply_setting(cfg, *item.split("=", 1))
    if args.command != "p-lambda":
        cfg.validate()
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    try:
        if args.command == "render-alpha":
            render_alpha(cfg)
        elif args.command == "render-mod-arg":
            render_mod_arg(cfg)
        elif args.command == "verify":
            return verify(cfg)
        elif args.command == "constants":
            constants(cfg)
        else:
            p_lambda(cfg)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DynamicsError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
