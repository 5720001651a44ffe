"""Wiman-Valiron frames and the admissibility screen.

A frame packages the data attached to one radius r: the max-modulus
point zeta_r, log M(r), the central index N(r), the sector domain D on
which f behaves like the monomial (z/zeta)^N f(zeta), and the flag
recording that D sits inside the disk of radius r/N^alpha around zeta.

The exceptional set of radii where the monomial model degrades is not
computable; it is replaced by an empirical screen: residual suprema
below thresholds plus the containment flag.  admissible_radius walks
radii multiplicatively until the screen passes.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass

from . import entire, numeric
from .entire import EntireFunction, central_index, max_modulus
from .errors import OutsideDomain, SearchBudgetExceeded, ValidationError
from .numeric import ScaledComplex, from_cartesian, wrap_angle

DEFAULT_ALPHA = 2.0 / 3.0
DEFAULT_TAU0 = 0.25
DEFAULT_TAU1 = 0.25
RADIUS_WALK_FACTOR = math.exp(1.0 / 8.0)
RADIUS_WALK_BUDGET = 200
DOMAIN_TOL = 1e-12


@dataclass(frozen=True)
class SectorDomain:
    """The sector {r e^{-2/N} < |z| < r e^{2/N}, |Arg z - theta| < hw}."""
    log_r_lo: float
    log_r_hi: float
    theta_center: float
    theta_halfwidth: float
    clipped: bool

    def contains(self, log_abs_z: float, arg_z: float,
                 tol: float = DOMAIN_TOL) -> bool:
        if not (self.log_r_lo - tol <= log_abs_z <= self.log_r_hi + tol):
            return False
        return abs(wrap_angle(arg_z - self.theta_center)) \
            <= self.theta_halfwidth + tol


@dataclass(frozen=True)
class WVFrame:
    r: float
    zeta: complex
    theta: float          # Arg zeta
    log_M: float
    psi: float            # arg f(zeta)
    N: int
    alpha: float
    domain: SectorDomain
    wv_disk_radius: float     # r / N^alpha
    contained: bool           # D inside the disk around zeta
    max_offset: float         # measured max |z - zeta| over the corners


@dataclass(frozen=True)
class WVResidualReport:
    r: float
    sup_eps0: float
    sup_eps1: float
    sup_eps2: float       # -1 when not computed
    sample_count: int
    admissible: bool
    N: int
    log_M: float
    tau0: float
    tau1: float


def _corner_max_offset(r: float, N: int, halfwidth: float) -> float:
    u = 2.0 / N
    worst = 0.0
    for uu in (-u, u):
        for dth in (-halfwidth, halfwidth):
            worst = max(worst, abs(cmath.rect(math.exp(uu), dth) - 1.0))
    return r * worst


def build_frame(f: EntireFunction, r: float,
                alpha: float = DEFAULT_ALPHA,
                samples: int = entire.DEFAULT_SAMPLES) -> WVFrame:
    if r <= 0:
        raise ValidationError("build_frame needs r > 0")
    if not 0.5 < alpha < 1.0:
        raise ValidationError("alpha must lie in (1/2, 1)")
    log_M, zeta = max_modulus(f, r, samples)
    N = central_index(f, r)
    theta = wrap_angle(math.atan2(zeta.imag, zeta.real))
    halfwidth = 4.0 * math.pi / N
    clipped = halfwidth > math.pi
    if clipped:
        halfwidth = math.pi
    log_r = math.log(r)
    domain = SectorDomain(log_r - 2.0 / N, log_r + 2.0 / N,
                          theta, halfwidth, clipped)
    disk = r / N ** alpha
    max_offset = _corner_max_offset(r, N, halfwidth)
    contained = (not clipped) and max_offset < disk
    fz = entire.evaluate_scaled(f, from_cartesian(zeta))
    return WVFrame(r=r, zeta=zeta, theta=theta, log_M=log_M, psi=fz.arg,
                   N=N, alpha=alpha, domain=domain, wv_disk_radius=disk,
                   contained=contained, max_offset=max_offset)


def _log_f(f: EntireFunction, z: complex) -> complex:
    """Principal-branch complex log of f(z) via scaled evaluation."""
    fz = entire.evaluate_scaled(f, from_cartesian(z))
    if fz.is_zero:
        raise ValidationError(f"{f.name} vanishes at {z}")
    return complex(fz.log_abs, fz.arg)


def _log_predict(frame: WVFrame, z: complex) -> complex:
    """log of the monomial model at z, continuous branch through zeta."""
    u = math.log(abs(z)) - math.log(frame.r)
    dth = wrap_angle(math.atan2(z.imag, z.real) - frame.theta)
    return complex(frame.log_M, frame.psi) + frame.N * complex(u, dth)


def wv_predict(frame: WVFrame, f: EntireFunction, z: complex) -> ScaledComplex:
    """(z/zeta)^N f(zeta) evaluated through logs; z must lie in D."""
    az = abs(z)
    if az == 0 or not frame.domain.contains(math.log(az),
                                            math.atan2(z.imag, z.real)):
        raise OutsideDomain(f"{z} outside the frame domain at r={frame.r}")
    p = _log_predict(frame, z)
    return ScaledComplex(p.real, wrap_angle(p.imag))


def _eps0(f: EntireFunction, frame: WVFrame, z: complex) -> complex:
    d = _log_f(f, z) - _log_predict(frame, z)
    return cmath.exp(complex(d.real, wrap_angle(d.imag))) - 1.0


def _epsj(f: EntireFunction, frame: WVFrame, z: complex, j: int) -> complex:
    zs = from_cartesian(z)
    fj = entire.derivative_scaled(f, zs, j)
    f0 = entire.evaluate_scaled(f, zs)
    if f0.is_zero:
        raise ValidationError(f"{f.name} vanishes at {z}")
    log_zeta = complex(math.log(frame.r), frame.theta)
    d = (complex(fj.log_abs, fj.arg) - complex(f0.log_abs, f0.arg)
         + j * log_zeta - j * math.log(frame.N))
    return cmath.exp(complex(d.real, wrap_angle(d.imag))) - 1.0


def domain_grid(frame: WVFrame, grid: int):
    """grid x grid points of D, row-major in (radial, angular) order."""
    d = frame.domain
    out = []
    for i in range(grid):
        lu = d.log_r_lo + (d.log_r_hi - d.log_r_lo) * i / (grid - 1)
        for k in range(grid):
            th = d.theta_center - d.theta_halfwidth \
                + 2.0 * d.theta_halfwidth * k / (grid - 1)
            out.append(cmath.rect(math.exp(lu), th))
    return out


def residual_report(f: EntireFunction, frame: WVFrame, grid: int,
                    tau0: float = DEFAULT_TAU0, tau1: float = DEFAULT_TAU1,
                    compute_eps2: bool = True) -> WVResidualReport:
    if grid < 8:
        raise ValidationError("residual grid must be at least 8")
    pts = domain_grid(frame, grid)
    sup0 = max(abs(_eps0(f, frame, z)) for z in pts)
    sup1 = max(abs(_epsj(f, frame, z, 1)) for z in pts)
    sup2 = max(abs(_epsj(f, frame, z, 2)) for z in pts) if compute_eps2 else -1.0
    admissible = (sup0 < tau0) and (sup1 < tau1) and not frame.domain.clipped
    return WVResidualReport(r=frame.r, sup_eps0=sup0, sup_eps1=sup1,
                            sup_eps2=sup2, sample_count=len(pts),
                            admissible=admissible, N=frame.N,
                            log_M=frame.log_M, tau0=tau0, tau1=tau1)


def admissible_radius(f: EntireFunction, r_seed: float, direction: int = 1,
                      alpha: float = DEFAULT_ALPHA, grid: int = 12,
                      tau0: float = DEFAULT_TAU0, tau1: float = DEFAULT_TAU1,
                      max_steps: int = RADIUS_WALK_BUDGET) -> float:
    """First radius on the e^{1/8} walk whose screen and containment pass."""
    if r_seed <= 0:
        raise ValidationError("admissible_radius needs r_seed > 0")
    if direction not in (1, -1):
        raise ValidationError("direction must be +1 or -1")
    r = r_seed
    for _ in range(max_steps):
        frame = build_frame(f, r, alpha)
        if frame.contained:
            report = residual_report(f, frame, grid, tau0, tau1,
                                     compute_eps2=False)
            if report.admissible:
                return r
        r = r * RADIUS_WALK_FACTOR if direction > 0 else r / RADIUS_WALK_FACTOR
    raise SearchBudgetExceeded(
        f"no admissible radius from {r_seed} in {max_steps} steps "
        f"(direction {direction:+d})")


def report_to_json(report: WVResidualReport) -> str:
    payload = {
        "r": report.r,
        "sup_eps0": report.sup_eps0,
        "sup_eps1": report.sup_eps1,
        "sup_eps2": report.sup_eps2,
        "N": report.N,
        "log_M": report.log_M,
        "admissible": report.admissible,
    }
    return json.dumps(payload, indent=2)
