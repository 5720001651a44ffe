"""The escaping-orbit cascade: radii r_n, domains D_n, annuli A_n,
inverse branches phi_n, graphs Gamma_n, and an escaping point pulled
back through the tower.

Scale strategy.  Level 0 runs on honest scaled arithmetic (values like
e^3200 carry a float log).  From level 1 up, radii grow doubly
exponentially, so absolute coordinates leave binary64 entirely; every
level-n quantity the construction needs is an O(1) offset in the
h-chart eta = N_n (log z - log zeta_n), where the monomial model is
exact far below float resolution (its error is ~1/N_n < e^-2000 at any
screen-passing radius).  Levels are therefore stored as per-level
floats (annulus offset d_n, anchor angle theta_n, image phase psi_n,
rho_n = r_n/N_n) plus iterated-exponential markers for the absolute
scales.  Whatever cannot be resolved at float precision is an exact
zero of the local model, not a measurement, and results carry a mode
tag saying which of the two they are.

Level-n data sources:
  level 0       -- measured (max-modulus sampling + residual screen)
  level 1       -- measured through the function's log-evaluator on the
                   scaled circle (needs log r_1 to fit a float)
  deeper levels -- the function's asymptotics record (exp-type maps)
Functions providing neither fail with DepthUnrepresentable at the first
level beyond their reach.
"""

from __future__ import annotations

import cmath
import math
import threading
from dataclasses import dataclass, field
from typing import Optional

from . import entire, numeric, wiman
from .entire import EntireFunction
from .errors import (BranchNewtonFailed, DepthUnrepresentable,
                     MagnitudeOverflow, NoAdmissibleRadius, OutsideDomain,
                     PullbackOutsideDomain, SearchBudgetExceeded,
                     ValidationError)
from .henon import HenonMap, OrbitRecord, Point2
from .numeric import (LOG_MAX, ScaledComplex, from_cartesian, from_real,
                      imag_part_scaled, real_part_scaled, wrap_angle)

DEFAULT_MARGIN = 0.1
# |Im log f| beyond this cannot be reduced mod 2 pi in binary64
PHASE_MOD_LIMIT = 2.0 ** 45
BRANCH_TOL = 1e-11
H_RECT_RE = 2.0        # h-chart rectangle: |Re eta| <= 2
H_RECT_IM = 4.0 * math.pi
SLOPE_H = 0.05         # log-radius step for the central-index slope
GROWTH_FLOOR_LOG = math.log(1e6)  # required M(r)/r at accepted radii


@dataclass(frozen=True)
class Tower:
    """exp applied `height` times to `top`; height 0 is a plain float."""
    height: int
    top: float

    def exp(self) -> "Tower":
        return Tower(self.height + 1, self.top)

    def add_small(self, c: float) -> "Tower":
        if self.height == 0:
            return Tower(0, self.top + c)
        return self  # below resolution at any greater height

    def as_float(self) -> Optional[float]:
        t = self.top
        for _ in range(self.height):
            if t > LOG_MAX:
                return None
            t = math.exp(t)
        return t

    def json(self):
        v = self.as_float()
        if v is not None:
            return v
        obj = self.top
        for _ in range(self.height):
            obj = {"exp_of": obj}
        return obj

    def __str__(self):
        if self.height == 0:
            return repr(self.top)
        return f"exp^{self.height}({self.top!r})"


@dataclass(frozen=True)
class DeepLevel:
    n: int
    d: float                  # log r_n - log M_{n-1}
    theta: float              # anchor angle Arg zeta_n
    psi: float                # arg f(zeta_n)
    rho: float                # r_n / N_n
    inv_N: float              # 1/N_n as a float (0.0 when underflowed)
    margin: float             # 1 - |d| - 2/N_n, the D_n in A_n margin
    delta_log: float          # log-scale width of the delta-neighborhood
    anchor_mode: str          # "sampled" | "asymptotic"
    log_r: Tower
    log_N: Tower              # log N_n
    log_M: Tower              # log M_n
    log_M_scaled: Optional[ScaledComplex]  # None once even this overflows
    sup_log_phi_prime: float  # bound for log |phi_n'|; -inf = below floats


@dataclass
class Cascade:
    map: HenonMap
    depth: int
    frame0: wiman.WVFrame
    report0: wiman.WVResidualReport
    levels: list            # DeepLevel for n = 1..depth
    orbit_eta: list         # h-chart orbit offsets, index n-1 for level n
    z0: ScaledComplex       # the level-0 orbit point
    delta_nbhd: float       # ambient |delta|
    coverage0: dict         # measured level-0 annulus coverage
    bound_C: float = math.nan
    _phi1_cache: dict = field(default_factory=dict)
    _phi1_lock: threading.Lock = field(default_factory=threading.Lock)

    def level(self, n: int) -> DeepLevel:
        if not 1 <= n <= self.depth:
            raise ValidationError(f"level {n} outside 1..{self.depth}")
        return self.levels[n - 1]

    @property
    def annuli(self) -> list:
        """A_n = {M_{n-1}/e < |z| < e M_{n-1}} in log scale, n = 1..depth."""
        out = []
        prev = Tower(0, self.frame0.log_M)
        for lvl in self.levels:
            out.append({"log_inner": prev.add_small(-1.0),
                        "log_outer": prev.add_small(1.0)})
            prev = lvl.log_M
        return out

    @property
    def f(self) -> EntireFunction:
        return self.map.f


@dataclass(frozen=True)
class GammaGraph:
    level: int
    samples: list  # (z, w) pairs of ScaledComplex with w = phi_level(z)


# ---------------------------------------------------------------------------
# scaled-circle measurement (level 1)
# ---------------------------------------------------------------------------

def _scaled_log_M(f: EntireFunction, log_r: float, samples: int = 512):
    """(log M as a scaled real, theta) on the circle log|z| = log_r,
    through the function's log-evaluator."""

    def val(theta: float) -> ScaledComplex:
        return real_part_scaled(f.log_evaluator(ScaledComplex(log_r, theta)))

    step = numeric.TWO_PI / samples
    angles = [-math.pi + (k + 1) * step for k in range(samples)]
    best_th = angles[0]
    best = val(best_th)
    for t in angles[1:]:
        v = val(t)
        if v.real_cmp(best) > 0:
            best, best_th = v, t
    lo, hi = best_th - step, best_th + step
    for _ in range(120):
        m1 = lo + (hi - lo) / 3.0
        m2 = hi - (hi - lo) / 3.0
        if val(m1).real_cmp(val(m2)) >= 0:
            hi = m2
        else:
            lo = m1
    theta = 0.5 * (lo + hi)
    for snap in (0.0, math.pi / 2, -math.pi / 2, math.pi):
        if abs(wrap_angle(snap - theta)) <= 2.0 * step \
                and val(snap).real_cmp(val(theta)) >= 0:
            theta = snap
            break
    return val(theta), theta


def _sampled_level(f: EntireFunction, n: int, log_M_prev: float, d: float,
                   delta_abs: float, phi_prime_log: float) -> DeepLevel:
    log_r = log_M_prev + d
    log_M_sc, theta = _scaled_log_M(f, log_r)
    if log_M_sc.sign <= 0:
        raise DepthUnrepresentable(
            f"level {n}: log M came out nonpositive at log r = {log_r}")

    # psi = Im log f(zeta); resolvable only while it fits the 2 pi modulus
    log_f_zeta = f.log_evaluator(ScaledComplex(log_r, theta))
    im = imag_part_scaled(log_f_zeta)
    if im.is_zero:
        psi = 0.0
    elif im.log_abs <= math.log(PHASE_MOD_LIMIT):
        psi = wrap_angle(im.to_float())
    elif f.asymptotics is not None:
        psi = f.asymptotics.psi
    else:
        raise DepthUnrepresentable(
            f"level {n}: anchor phase ~ e^{im.log_abs:.4g} cannot be "
            "reduced mod 2 pi")

    # central index from the slope of log M in log r
    up, _ = _scaled_log_M(f, log_r + SLOPE_H)
    dn, _ = _scaled_log_M(f, log_r - SLOPE_H)
    n_hat = (up - dn) * from_real(1.0 / (2.0 * SLOPE_H))
    if n_hat.sign <= 0:
        raise DepthUnrepresentable(f"level {n}: log M slope not positive")
    rho = (ScaledComplex(log_r, 0.0) / n_hat).to_float()
    log_N_val = n_hat.log_abs
    if log_N_val < -LOG_MAX:
        raise DepthUnrepresentable(
            f"level {n}: central-index estimate is degenerate "
            f"(log N = {log_N_val:.4g})")
    inv_N = 0.0 if log_N_val > 745.0 else math.exp(-log_N_val)

    return DeepLevel(
        n=n, d=d, theta=theta, psi=psi, rho=rho, inv_N=inv_N,
        margin=1.0 - abs(d) - 2.0 * inv_N,
        delta_log=min(delta_abs * math.exp(-min(log_r, LOG_MAX)),
                      0.5 * (1.0 - abs(d))),
        anchor_mode="sampled",
        log_r=Tower(0, log_r),
        log_N=Tower(0, log_N_val),
        log_M=Tower(1, log_M_sc.log_abs),
        log_M_scaled=log_M_sc,
        sup_log_phi_prime=phi_prime_log,
    )


def _asymptotic_level(f: EntireFunction, n: int, prev: DeepLevel,
                      d: float) -> DeepLevel:
    asym = f.asymptotics
    log_r = prev.log_M.add_small(d)
    scaled = None
    if log_r.height == 1 and log_r.top <= LOG_MAX:
        scaled = ScaledComplex(math.exp(log_r.top), 0.0)
    return DeepLevel(
        n=n, d=d, theta=asym.theta, psi=asym.psi, rho=asym.rho_limit,
        inv_N=0.0,
        margin=1.0 - abs(d),
        delta_log=0.0,
        anchor_mode="asymptotic",
        log_r=log_r,
        log_N=log_r,          # N(r) ~ r for the asymptotic family
        log_M=log_r.exp(),    # log M(r) ~ r for the asymptotic family
        log_M_scaled=scaled,
        sup_log_phi_prime=-math.inf,
    )


# ---------------------------------------------------------------------------
# the level-0 inverse branch (phi_1)
# ---------------------------------------------------------------------------

def _log_f_scaled(f: EntireFunction, z: complex) -> complex:
    v = entire.evaluate_scaled(f, from_cartesian(z))
    if v.is_zero:
        raise BranchNewtonFailed(f"{f.name} vanishes at {z}")
    return complex(v.log_abs, v.arg)


def _phi1_solve(cascade: Cascade, log_w: complex) -> complex:
    """Solve log f(z) = log_w (mod 2 pi i) for z in the level-0 domain,
    Newton seeded from the inverse of the linear h-chart."""
    f = cascade.f
    fr = cascade.frame0
    seed = fr.zeta * cmath.exp(
        complex(log_w.real - fr.log_M, wrap_angle(log_w.imag - fr.psi))
        / fr.N)
    z = seed
    for _ in range(60):
        L = _log_f_scaled(f, z)
        res = complex(L.real - log_w.real, wrap_angle(L.imag - log_w.imag))
        if abs(res) < BRANCH_TOL:
            dom = fr.domain
            if not dom.contains(math.log(abs(z)), math.atan2(z.imag, z.real),
                                tol=4.0 / fr.N):
                raise BranchNewtonFailed(
                    f"branch solution {z} left the level-0 domain")
            return z
        zs = from_cartesian(z)
        logderiv = entire.derivative_scaled(f, zs, 1) \
            / entire.evaluate_scaled(f, zs)
        step = res / numeric.to_cartesian(logderiv)
        if abs(step) > 0.25 * abs(fr.zeta):
            step *= 0.25 * abs(fr.zeta) / abs(step)
        z = z - step
    raise BranchNewtonFailed(f"phi_1 Newton stalled targeting {log_w}")


def branch_eval(cascade: Cascade, n: int, w: ScaledComplex) -> ScaledComplex:
    """phi_n(w): inverse branch of f - delta phi_{n-1} anchored on the
    cascade.  Level 1 solves honestly; deeper levels have no
    float-representable inputs and live in h-chart offsets internally."""
    if n == 1:
        lvl = cascade.level(1)
        if abs(w.log_abs - (cascade.frame0.log_M + lvl.d)) \
                > 1.0 + DEFAULT_MARGIN:
            raise OutsideDomain(
                f"log|w| = {w.log_abs} outside the level-1 annulus")
        key = (w.log_abs, w.arg)
        with cascade._phi1_lock:
            hit = cascade._phi1_cache.get(key)
        if hit is not None:
            return hit
        z = _phi1_solve(cascade, complex(w.log_abs, w.arg))
        out = from_cartesian(z)
        with cascade._phi1_lock:
            cascade._phi1_cache[key] = out
        return out
    if not 1 <= n <= cascade.depth:
        raise ValidationError(f"no branch at level {n}")
    raise OutsideDomain(
        f"level-{n} points have no float representation; deep branches act "
        "on h-chart offsets internally")


def phi1_derivative_log_abs(cascade: Cascade, w: ScaledComplex) -> float:
    """log |phi_1'(w)| = -log |f'(phi_1(w))|, measured."""
    z = branch_eval(cascade, 1, w)
    return -entire.derivative_scaled(cascade.f, z, 1).log_abs


def sup_phi_prime_log(cascade: Cascade, n: int) -> float:
    """Upper bound for log |phi_n'| on its level, measured where floats
    reach (level 1) and the h-chart certificate beyond (-inf marker:
    below every float log)."""
    if n == 1:
        lvl = cascade.level(1)
        probe = ScaledComplex(cascade.frame0.log_M + lvl.d, lvl.theta)
        return phi1_derivative_log_abs(cascade, probe)
    cascade.level(n)  # validates the index
    return cascade.level(n).sup_log_phi_prime


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _coverage_level0(cascade: Cascade, samples: int = 240) -> dict:
    """Measured image of the level-0 domain in log scale: radial reach
    past the annulus edges, and the unwrapped angular height of the
    image along the mid-radius sweep (>= 3 pi means the image winds
    around the annulus at least 1.5 times)."""
    f, fr = cascade.f, cascade.frame0
    dom = fr.domain

    re_vals = []
    for dth in (-dom.theta_halfwidth, 0.0, dom.theta_halfwidth):
        for lu in (dom.log_r_lo, dom.log_r_hi):
            z = cmath.rect(math.exp(lu), dom.theta_center + dth)
            re_vals.append(_log_f_scaled(f, z).real - fr.log_M)

    height = 0.0
    prev = None
    for k in range(samples):
        dth = -dom.theta_halfwidth + 2 * dom.theta_halfwidth * k / (samples - 1)
        z = cmath.rect(fr.r, dom.theta_center + dth)
        arg = _log_f_scaled(f, z).imag
        if prev is not None:
            height += wrap_angle(arg - prev)
        prev = arg
    return {"re_lo": min(re_vals), "re_hi": max(re_vals),
            "im_span": abs(height), "mode": "measured"}


def build_cascade(map: HenonMap, r0_seed: float, depth: int,
                  d_offsets: Optional[list] = None,
                  margin: float = DEFAULT_MARGIN,
                  grid: int = 12) -> Cascade:
    """Construct the tower of levels and the escaping-orbit offsets."""
    if depth < 1:
        raise ValidationError("cascade depth must be >= 1")
    f = map.f
    try:
        r0 = wiman.admissible_radius(f, r0_seed, 1, grid=grid)
    except SearchBudgetExceeded as err:
        raise NoAdmissibleRadius(str(err)) from None
    except MagnitudeOverflow as err:
        raise DepthUnrepresentable(
            f"cannot even screen radii for {f.name}: {err}") from None
    frame0 = wiman.build_frame(f, r0)
    report0 = wiman.residual_report(f, frame0, grid)
    delta_abs = abs(map.delta)

    # growth floor: the shear term must be negligible against M(r)
    if frame0.log_M - math.log(r0) < GROWTH_FLOOR_LOG:
        raise NoAdmissibleRadius(
            f"M(r)/r = e^{frame0.log_M - math.log(r0):.4g} below the "
            "growth floor at the admissible radius")

    offsets = list(d_offsets) if d_offsets is not None else [0.0] * depth
    if len(offsets) != depth:
        raise ValidationError("d_offsets must carry one entry per level")
    for d in offsets:
        if abs(d) > 1.0 - margin:
            raise ValidationError(
                f"annulus offset {d} leaves no {margin} margin")

    phi1_prime_log = -(frame0.log_M + math.log(frame0.N) - math.log(frame0.r))
    levels = []
    prev_log_M_float: Optional[float] = frame0.log_M
    prev_level: Optional[DeepLevel] = None
    for n in range(1, depth + 1):
        d = offsets[n - 1]
        if prev_log_M_float is not None and f.log_evaluator is not None:
            lvl = _sampled_level(f, n, prev_log_M_float, d, delta_abs,
                                 phi1_prime_log if n == 1 else -math.inf)
        elif f.asymptotics is not None and prev_level is not None:
            lvl = _asymptotic_level(f, n, prev_level, d)
        else:
            need = ("a log-evaluator" if prev_log_M_float is not None
                    else "an asymptotics record")
            raise DepthUnrepresentable(
                f"level {n} of the {f.name} cascade needs {need}; values "
                f"reach e^(e^{frame0.log_M:.6g}) scale")
        if lvl.margin < margin:
            raise NoAdmissibleRadius(
                f"level {n} margin {lvl.margin} below {margin}")
        levels.append(lvl)
        prev_level = lvl
        prev_log_M_float = lvl.log_M.as_float()
        if prev_log_M_float is not None and prev_log_M_float > 1e306:
            prev_log_M_float = None

    # escaping orbit in h-chart offsets, pulled down from the top anchor:
    # the level-n offset targets the level-(n+1) anchor, with the deeper
    # corrections below float resolution
    orbit_eta = [0j] * depth
    for n in range(depth - 1, 0, -1):
        nxt = levels[n]
        here = levels[n - 1]
        orbit_eta[n - 1] = complex(nxt.d, wrap_angle(nxt.theta - here.psi))

    cascade = Cascade(map=map, depth=depth, frame0=frame0, report0=report0,
                      levels=levels, orbit_eta=orbit_eta, z0=numeric.ZERO,
                      delta_nbhd=delta_abs, coverage0={})

    # z_0 = phi_1(z_1): the eta_1 shift of log z_1 is below float
    # resolution, so the target is the level-1 anchor itself
    lvl1 = levels[0]
    z0 = _phi1_solve(cascade, complex(frame0.log_M + lvl1.d, lvl1.theta))
    cascade.z0 = from_cartesian(z0)

    cov = _coverage_level0(cascade)
    cascade.coverage0 = cov
    if cov["re_lo"] > -1.0 - margin or cov["re_hi"] < 1.0 + margin \
            or cov["im_span"] < 3.0 * math.pi:
        raise BranchNewtonFailed(
            f"level-0 image does not cover the first annulus: {cov}")

    bounds = bound_report(cascade)
    cascade.bound_C = max(bounds["C_upper"], 1.0 / bounds["C_lower"])
    return cascade


# ---------------------------------------------------------------------------
# the escaping point and its verification
# ---------------------------------------------------------------------------

def annulus_memberships(cascade: Cascade) -> list:
    """Re(log z_n - log M_{n-1}) for n = 1..depth.  Level 1 is measured
    by re-evaluating f at z_0; deeper levels apply the h-chart transfer
    to the stored orbit offsets."""
    out = []
    z1 = entire.evaluate_scaled(cascade.f, cascade.z0)
    out.append({"n": 1, "re_lambda": z1.log_abs - cascade.frame0.log_M,
                "mode": "measured"})
    for n in range(2, cascade.depth + 1):
        here = cascade.level(n - 1)
        # log z_n - log M_{n-1} = eta_{n-1} + i psi_{n-1} (+ corrections
        # below float resolution)
        lam = cascade.orbit_eta[n - 2] + complex(0.0, here.psi)
        out.append({"n": n, "re_lambda": lam.real, "mode": "local-model"})
    for item in out:
        item["in_annulus"] = abs(item["re_lambda"]) <= 1.0 + 1e-9
    return out


def escaping_point(cascade: Cascade) -> OrbitRecord:
    """P_0 = (z_0, 0) on the innermost graph; forward annulus checks run
    first, then the representable prefix of the orbit is recorded."""
    if cascade.depth < 1:
        raise ValidationError("cascade has no levels")
    for item in annulus_memberships(cascade):
        if not item["in_annulus"]:
            raise PullbackOutsideDomain(
                f"forward image at level {item['n']} misses its annulus: "
                f"Re lambda = {item['re_lambda']}")
    p = Point2(cascade.z0, numeric.ZERO)
    points = [p]
    delta = from_cartesian(cascade.map.delta)
    for _ in range(cascade.depth):
        try:
            fz = entire.evaluate_scaled(cascade.f, p.z)
        except MagnitudeOverflow:
            break
        p = Point2(fz - delta * p.w, p.z)
        points.append(p)
    radius = cascade.frame0.log_M - 1.0
    escaped_at = None
    for k, q in enumerate(points):
        if q.z.log_abs > radius:
            escaped_at = k
            break
    return OrbitRecord(points=points, escaped_at=escaped_at,
                       log_escape_radius=radius)


def bound_report(cascade: Cascade, grid: int = 12) -> dict:
    """Ratio of |f' - delta phi_n'| to M_n N_n / r_n per level; level 0
    sampled in scaled arithmetic, deeper levels reduced to
    exp(Re eta + log rho) over the h-rectangle (the monomial model's
    exact content at those scales)."""
    f = cascade.f
    fr = cascade.frame0
    per_level = []

    lo, hi = math.inf, -math.inf
    scale0 = fr.log_M + math.log(fr.N) - math.log(fr.r)
    for z in wiman.domain_grid(fr, grid):
        d1 = entire.derivative_scaled(f, from_cartesian(z), 1)
        ratio_log = d1.log_abs - scale0
        lo, hi = min(lo, ratio_log), max(hi, ratio_log)
    per_level.append({"n": 0, "ratio_min": math.exp(lo),
                      "ratio_max": math.exp(hi), "mode": "measured"})

    for n in range(1, cascade.depth):
        lvl = cascade.level(n)
        per_level.append({
            "n": n,
            "ratio_min": math.exp(-H_RECT_RE + math.log(lvl.rho)),
            "ratio_max": math.exp(H_RECT_RE + math.log(lvl.rho)),
            "mode": "local-model",
        })

    return {"C_lower": min(e["ratio_min"] for e in per_level),
            "C_upper": max(e["ratio_max"] for e in per_level),
            "per_level": per_level}


def gamma_graph(cascade: Cascade, n: int, n_samples: int = 9) -> GammaGraph:
    """Sampled graph {(z, phi_n(z))}.  At screen-passing scales the
    level-1 domain collapses to its anchor in float, so the distinct
    sample count reflects the honest resolution."""
    if n != 1:
        raise ValidationError(
            "only the level-1 graph has float-representable points")
    lvl = cascade.level(1)
    log_r = cascade.frame0.log_M + lvl.d
    samples = []
    for k in range(n_samples):
        u = -2.0 * lvl.inv_N + 4.0 * lvl.inv_N * k / max(n_samples - 1, 1)
        z = ScaledComplex(log_r + u, lvl.theta)
        samples.append((z, branch_eval(cascade, 1, z)))
    return GammaGraph(level=1, samples=samples)


def cascade_summary(cascade: Cascade) -> dict:
    bounds = bound_report(cascade)
    ratio_by_level = {e["n"]: e for e in bounds["per_level"]}
    levels = [{
        "n": 0,
        "log_r": math.log(cascade.frame0.r),
        "N": cascade.frame0.N,
        "log_M": cascade.frame0.log_M,
        "annulus": None,
        "c_ratio": [ratio_by_level[0]["ratio_min"],
                    ratio_by_level[0]["ratio_max"]],
    }]
    for lvl in cascade.levels:
        prev_log_M = (Tower(0, cascade.frame0.log_M) if lvl.n == 1
                      else cascade.level(lvl.n - 1).log_M)
        r = ratio_by_level.get(lvl.n)
        levels.append({
            "n": lvl.n,
            "log_r": lvl.log_r.json(),
            "N": lvl.log_N.exp().json(),
            "log_M": lvl.log_M.json(),
            "annulus": [prev_log_M.add_small(-1.0).json(),
                        prev_log_M.add_small(1.0).json()],
            "margin": lvl.margin,
            "anchor_mode": lvl.anchor_mode,
            "c_ratio": None if r is None else [r["ratio_min"],
                                               r["ratio_max"]],
        })
    return {"depth": cascade.depth, "delta_nbhd": cascade.delta_nbhd,
            "bound_C": cascade.bound_C, "levels": levels}
