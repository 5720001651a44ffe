"""The transcendental Henon map F(z, w) = (f(z) - delta w, z).

Forward/inverse steps work on scaled points so orbits can climb to
e^{e^{50}} before the double-exponential wall truncates them.  A
generic damped Newton finds periodic points of small order in native
precision.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

from . import entire
from .entire import EntireFunction
from .errors import (MagnitudeOverflow, NoConvergence, SingularJacobian,
                     ValidationError)
from .numeric import ScaledComplex, from_cartesian, to_cartesian

NEWTON_DAMPING_STEPS = 20
JACOBIAN_SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class HenonMap:
    f: EntireFunction
    delta: complex

    def __post_init__(self):
        if self.delta == 0:
            raise ValidationError("delta must be nonzero")


@dataclass(frozen=True)
class Point2:
    z: ScaledComplex
    w: ScaledComplex

    @staticmethod
    def from_complex(z: complex, w: complex) -> "Point2":
        return Point2(from_cartesian(z), from_cartesian(w))

    def to_complex(self) -> tuple[complex, complex]:
        return to_cartesian(self.z), to_cartesian(self.w)


@dataclass(frozen=True)
class OrbitRecord:
    points: list
    escaped_at: Optional[int]
    log_escape_radius: float


def forward(m: HenonMap, p: Point2) -> Point2:
    fz = entire.evaluate_scaled(m.f, p.z)
    return Point2(fz - from_cartesian(m.delta) * p.w, p.z)


def inverse(m: HenonMap, p: Point2) -> Point2:
    fw = entire.evaluate_scaled(m.f, p.w)
    return Point2(p.w, (fw - p.z) / from_cartesian(m.delta))


def iterate_orbit(m: HenonMap, p0: Point2, n_max: int,
                  log_escape_radius: float) -> OrbitRecord:
    """Iterate forward until escape, n_max, or the representable wall.

    Overflow is converted to truncation: the record simply ends at the
    last representable point with escaped_at responding only to the
    radius test.
    """
    if n_max < 1:
        raise ValidationError("n_max must be >= 1")
    points = [p0]
    escaped_at = None
    if p0.z.log_abs > log_escape_radius:
        escaped_at = 0
        return OrbitRecord(points, escaped_at, log_escape_radius)
    p = p0
    for n in range(1, n_max + 1):
        try:
            p = forward(m, p)
        except MagnitudeOverflow:
            break
        points.append(p)
        if p.z.log_abs > log_escape_radius:
            escaped_at = n
            break
    return OrbitRecord(points, escaped_at, log_escape_radius)


# ---------------------------------------------------------------------------
# periodic points by damped Newton on F^k - id
# ---------------------------------------------------------------------------

def _df(m: HenonMap, z: complex):
    return (entire.derivative(m.f, z, 1), -m.delta, 1.0 + 0j, 0j)


def _forward_native(m: HenonMap, z: complex, w: complex):
    return entire.evaluate(m.f, z) - m.delta * w, z


def _orbit_and_jacobian(m: HenonMap, z: complex, w: complex, k: int):
    """F^k(p) and the chain-rule Jacobian of F^k at p."""
    a, b, c, d = 1.0 + 0j, 0j, 0j, 1.0 + 0j
    for _ in range(k):
        ja, jb, jc, jd = _df(m, z)
        a, b, c, d = (ja * a + jb * c, ja * b + jb * d,
                      jc * a + jd * c, jc * b + jd * d)
        z, w = _forward_native(m, z, w)
    return (z, w), (a, b, c, d)


def _solve2(a, b, c, d, r1, r2):
    det = a * d - b * c
    if abs(det) < JACOBIAN_SINGULAR_TOL:
        raise SingularJacobian(f"|det DH| = {abs(det)} below tolerance")
    return (d * r1 - b * r2) / det, (a * r2 - c * r1) / det


def newton_periodic(m: HenonMap, k: int, seed: Point2, tol: float = 1e-12,
                    max_iter: int = 60) -> Point2:
    """Damped Newton on H(p) = F^k(p) - p from a native-range seed."""
    if not 1 <= k <= 8:
        raise ValidationError("period k must lie in [1, 8]")
    z, w = seed.to_complex()
    res = None
    for _ in range(max_iter):
        (fz, fw), (a, b, c, d) = _orbit_and_jacobian(m, z, w, k)
        h1, h2 = fz - z, fw - w
        res = math.hypot(abs(h1), abs(h2))
        if res < tol:
            return Point2.from_complex(z, w)
        dz, dw = _solve2(a - 1, b, c, d - 1, -h1, -h2)
        step = 1.0
        for _ in range(NEWTON_DAMPING_STEPS):
            zt, wt = z + step * dz, w + step * dw
            try:
                (fz2, fw2), _ = _orbit_and_jacobian(m, zt, wt, k)
            except MagnitudeOverflow:
                step *= 0.5
                continue
            if math.hypot(abs(fz2 - zt), abs(fw2 - wt)) < res:
                break
            step *= 0.5
        z, w = z + step * dz, w + step * dw
    raise NoConvergence(
        f"newton_periodic (k={k}) residual {res} after {max_iter} iterations")


def is_primitive(m: HenonMap, p: Point2, k: int, tol: float = 1e-6) -> bool:
    """True when F^j(p) stays away from p for every 1 <= j < k."""
    z0, w0 = p.to_complex()
    z, w = z0, w0
    for _ in range(1, k):
        z, w = _forward_native(m, z, w)
        if math.hypot(abs(z - z0), abs(w - w0)) <= tol:
            return False
    return True


# ---------------------------------------------------------------------------
# orbit CSV
# ---------------------------------------------------------------------------

ORBIT_CSV_COLUMNS = ["n", "re_z", "im_z", "re_w", "im_w", "log_abs_z", "arg_z"]


def _native_or_inf(s: ScaledComplex):
    try:
        c = to_cartesian(s)
        return c.real, c.imag
    except MagnitudeOverflow:
        c = math.cos(s.arg), math.sin(s.arg)
        return math.inf * c[0] if c[0] else 0.0, math.inf * c[1] if c[1] else 0.0


def write_orbit_csv(record: OrbitRecord, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(ORBIT_CSV_COLUMNS)
        for n, p in enumerate(record.points):
            re_z, im_z = _native_or_inf(p.z)
            re_w, im_w = _native_or_inf(p.w)
            writer.writerow([n, repr(re_z), repr(im_z), repr(re_w),
                             repr(im_w), repr(p.z.log_abs), repr(p.z.arg)])
