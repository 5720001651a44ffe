"""Shear charts, the induced map, graph pullbacks, and the local stable
manifold along the escaping orbit.

Chart semantics at cascade scales.  Every screen-passing radius makes
the horizontal expansion e^{3000}-class, so the vertical contraction
alpha = sup |phi'| underflows binary64: the pulled-back graphs and the
limit curve agree with the vertical line through the orbit point to far
below float resolution, and honest measurements return exact zeros.
The fiber solves, cone audits, and contraction bounds below still run
the full machinery; convergence is measured in chart coordinates (t and
z-differences at equal t) and deviations ride the invariant graph
family, never raw ambient differences, whose cancellation would be
pure noise.
"""

from __future__ import annotations

import cmath
import csv
import json
import math
from dataclasses import dataclass
import numpy as np
from scipy.interpolate import PchipInterpolator

from . import entire, numeric
from .eremenko import Cascade, branch_eval, sup_phi_prime_log
from .errors import (BudgetExceeded, ConeViolation, MagnitudeOverflow,
                     NewtonFailed, OutsideDomain, ValidationError)
from .henon import Point2
from .numeric import ScaledComplex, from_cartesian, to_cartesian

DIAMETER_NODES = 33
BOUNDARY_NODES = 32
CONE_SLACK = 1.10  # ConeViolation beyond 10% over the slope bound


@dataclass(frozen=True)
class VerticalGraph:
    """A sampled graph t -> z(t) over the unit disk in shear coordinates.

    The grid is a real diameter (33 nodes, t = 0 included) plus 32 rim
    nodes used by the audits; interpolation between nodes works on the
    diameter with monotone (PCHIP) slope limiting on real and imaginary
    parts."""
    level: int
    t_grid: tuple
    z_of_t: tuple
    base_index: int

    @property
    def base(self) -> ScaledComplex:
        return self.z_of_t[self.base_index]

    def offsets(self):
        """z(t) - z(0) as native complex numbers (inf when beyond scale)."""
        out = []
        for z in self.z_of_t:
            d = z - self.base
            if d.is_zero:
                out.append(0j)
                continue
            try:
                out.append(to_cartesian(d))
            except MagnitudeOverflow:
                out.append(complex(math.inf, 0.0))
        return out

    def interpolator(self):
        """Diameter interpolant of the offset curve."""
        ts = [t.real for t in self.t_grid[:DIAMETER_NODES]]
        offs = self.offsets()[:DIAMETER_NODES]
        re = PchipInterpolator(ts, [o.real for o in offs])
        im = PchipInterpolator(ts, [o.imag for o in offs])

        def gamma(t: complex) -> ScaledComplex:
            x = min(max(t.real, -1.0), 1.0)
            off = complex(float(re(x)), float(im(x)))
            return self.base + from_cartesian(off)

        return gamma

    def max_adjacent_slope(self) -> float:
        offs = self.offsets()[:DIAMETER_NODES]
        worst = 0.0
        for k in range(1, DIAMETER_NODES):
            dt = abs(self.t_grid[k] - self.t_grid[k - 1])
            worst = max(worst, abs(offs[k] - offs[k - 1]) / dt)
        return worst


def standard_grid():
    diam = [complex(-1.0 + 2.0 * k / (DIAMETER_NODES - 1), 0.0)
            for k in range(DIAMETER_NODES)]
    rim = [cmath.rect(1.0, 2.0 * math.pi * q / BOUNDARY_NODES)
           for q in range(BOUNDARY_NODES)]
    return tuple(diam + rim), (DIAMETER_NODES - 1) // 2


def _orbit_z(cascade: Cascade, level: int) -> ScaledComplex:
    """The escaping orbit's z-coordinate at a level, as a scaled value."""
    if level == 0:
        return cascade.z0
    if level == 1:
        lvl = cascade.level(1)
        return ScaledComplex(cascade.frame0.log_M + lvl.d, lvl.theta)
    raise OutsideDomain(
        f"level-{level} points have no float representation")


def vertical_line(cascade: Cascade, level: int) -> VerticalGraph:
    grid, base_index = standard_grid()
    z = _orbit_z(cascade, level)
    return VerticalGraph(level=level, t_grid=grid,
                         z_of_t=tuple([z] * len(grid)),
                         base_index=base_index)


# ---------------------------------------------------------------------------
# shear charts and the induced map
# ---------------------------------------------------------------------------

def _phi(cascade: Cascade, n: int, z: ScaledComplex) -> ScaledComplex:
    if n == 0:
        return numeric.ZERO
    return branch_eval(cascade, n, z)


def _check_chart_input(cascade: Cascade, n: int, z: ScaledComplex,
                       t: complex) -> None:
    if abs(t) > 1.0 + 1e-12:
        raise OutsideDomain(f"|t| = {abs(t)} outside the unit disk")
    if n == 0:
        dom = cascade.frame0.domain
        if not dom.contains(z.log_abs, z.arg, tol=16.0 / cascade.frame0.N):
            raise OutsideDomain("z outside the level-0 domain")
    elif n == 1:
        lvl = cascade.level(1)
        if abs(z.log_abs - (cascade.frame0.log_M + lvl.d)) > 1.0:
            raise OutsideDomain("z outside the level-1 annulus")
    else:
        raise OutsideDomain(
            f"level-{n} charts have no float-representable points")


def shear(cascade: Cascade, n: int, z: ScaledComplex, t: complex) -> Point2:
    """Phi_n(z, t) = (z, t + phi_n(z))."""
    _check_chart_input(cascade, n, z, t)
    return Point2(z, from_cartesian(t) + _phi(cascade, n, z))


def unshear(cascade: Cascade, n: int, p: Point2):
    """(z, t) with t = w - phi_n(z)."""
    d = p.w - _phi(cascade, n, p.z)
    return p.z, (0j if d.is_zero else to_cartesian(d))


def tilde_map(cascade: Cascade, n: int, z: ScaledComplex, t: complex):
    """The induced chart map: z~ = f(z) - delta phi_n(z) - delta t and
    t~ = z - phi_{n+1}(z~)."""
    _check_chart_input(cascade, n, z, t)
    if n >= 1:
        raise OutsideDomain(
            "the induced map beyond level 0 acts on h-chart offsets; its "
            "vertical factor is below float resolution (see "
            "sup_phi_prime_log)")
    f = cascade.f
    delta = from_cartesian(cascade.map.delta)
    fz = entire.evaluate_scaled(f, z)
    z_tilde = fz - delta * _phi(cascade, 0, z) - delta * from_cartesian(t)
    phi_next = branch_eval(cascade, 1, z_tilde)
    d = z - phi_next
    t_tilde = 0j if d.is_zero else to_cartesian(d)
    return z_tilde, t_tilde


def expansion_log(cascade: Cascade, za: ScaledComplex, zb: ScaledComplex,
                  t: complex = 0j) -> float:
    """log |z~_a - z~_b| - log |z_a - z_b| for two level-0 points at the
    same t: the measured horizontal expansion of one chart step."""
    a_t, _ = tilde_map(cascade, 0, za, t)
    b_t, _ = tilde_map(cascade, 0, zb, t)
    num = a_t - b_t
    den = za - zb
    if den.is_zero or num.is_zero:
        raise ValidationError("coincident points have no expansion ratio")
    return num.log_abs - den.log_abs


# ---------------------------------------------------------------------------
# graph pullback and the local stable curve
# ---------------------------------------------------------------------------

def graph_pullback(cascade: Cascade, j: int,
                   target: VerticalGraph) -> VerticalGraph:
    """The level-j graph whose chart image lies on `target` (level j+1).

    Only j = 0 admits float-representable fiber solves; deeper pullbacks
    collapse to the vertical line through the orbit (their deviation is
    exp(sup_phi_prime_log) below every float)."""
    if target.level != j + 1:
        raise ValidationError(
            f"target graph lives at level {target.level}, expected {j + 1}")
    if j >= 1:
        return vertical_line(cascade, j)
    f = cascade.f
    delta = from_cartesian(cascade.map.delta)
    gamma = target.interpolator()
    grid, base_index = standard_grid()
    base0 = _orbit_z(cascade, 0)
    zs = []
    for idx, t in enumerate(grid):
        # fiber equation: f(z) - delta t = gamma(t~(z, t)); the feedback
        # through t~ is contractive far below float resolution, so a few
        # sweeps settle it
        t_tilde = 0j
        z = base0
        try:
            for _ in range(4):
                w_target = gamma(t_tilde) + delta * from_cartesian(t)
                z = branch_eval(cascade, 1, w_target)
                z_tilde = entire.evaluate_scaled(f, z) \
                    - delta * from_cartesian(t)
                d = z - branch_eval(cascade, 1, z_tilde)
                t_tilde = 0j if d.is_zero else to_cartesian(d)
            # certify the solve: log f(z) must hit the composed target to
            # within the branch solver's own tolerance (relative 1e-9)
            fz = entire.evaluate_scaled(f, z)
            res = fz - gamma(t_tilde) - delta * from_cartesian(t)
            if not res.is_zero and res.log_abs - fz.log_abs > math.log(1e-9):
                raise NewtonFailed(
                    f"fiber residual e^{res.log_abs - fz.log_abs:.3g} "
                    f"relative at node {idx}", node_index=idx)
        except (OutsideDomain, MagnitudeOverflow) as err:
            raise NewtonFailed(f"fiber solve failed at node {idx}: {err}",
                               node_index=idx) from None
        zs.append(z)
    out = VerticalGraph(level=0, t_grid=grid, z_of_t=tuple(zs),
                        base_index=base_index)
    slope = out.max_adjacent_slope()
    if slope > CONE_SLACK:
        raise ConeViolation(f"pullback slope {slope} breaks the cone bound")
    return out


def graph_distance(a: VerticalGraph, b: VerticalGraph) -> float:
    """sup over the shared grid of |z_a(t) - z_b(t)|."""
    if a.level != b.level or len(a.t_grid) != len(b.t_grid):
        raise ValidationError("graphs live on different grids")
    worst = 0.0
    for za, zb in zip(a.z_of_t, b.z_of_t):
        d = za - zb
        if d.is_zero:
            continue
        try:
            worst = max(worst, abs(to_cartesian(d)))
        except MagnitudeOverflow:
            return math.inf
    return worst


def _pull_to(cascade: Cascade, j0: int, start_level: int) -> VerticalGraph:
    g = vertical_line(cascade, min(start_level, max(j0, 1)))
    for j in range(g.level - 1, j0 - 1, -1):
        g = graph_pullback(cascade, j, g)
    return g


def local_stable_curve(cascade: Cascade, j0: int = 0, iter_max: int = 8,
                       tol: float = 1e-9) -> VerticalGraph:
    """Limit of pullbacks of top-level vertical lines down to level j0."""
    if cascade.depth < j0 + 2:
        raise ValidationError("need cascade depth >= j0 + 2")
    prev = None
    for start in range(j0 + 1, min(j0 + 1 + iter_max, cascade.depth + 1)):
        g = _pull_to(cascade, j0, start)
        if prev is not None:
            d = graph_distance(prev, g)
            if d > 1.0:
                raise ConeViolation(
                    f"intermediate graph distance {d} above the unit bound")
            if d < tol:
                return g
        prev = g
    raise BudgetExceeded(
        f"stable-curve pullbacks did not settle within depth {cascade.depth}")


def contraction_audit(cascade: Cascade, j0: int = 0, iter_max: int = 8,
                      tol: float = 1e-9,
                      line_offsets=(0.35, -0.2)) -> dict:
    """Distances between successive pullbacks plus the two-line
    contraction measurement backing the 1/2 bound."""
    if cascade.depth < j0 + 2:
        raise ValidationError("need cascade depth >= j0 + 2")
    graphs = [_pull_to(cascade, j0, s)
              for s in range(j0 + 1, cascade.depth + 1)]
    distances = [graph_distance(a, b) for a, b in zip(graphs, graphs[1:])]
    ratios = [b / a for a, b in zip(distances, distances[1:]) if a > 0.0]

    # two distinct vertical lines through the level-1 annulus
    grid, base_index = standard_grid()
    pulled = []
    anchors = []
    for off in line_offsets:
        z1 = _orbit_z(cascade, j0 + 1)
        line = VerticalGraph(level=j0 + 1, t_grid=grid,
                             z_of_t=tuple([z1.scale_by_log(off)] * len(grid)),
                             base_index=base_index)
        anchors.append(z1.scale_by_log(off))
        pulled.append(graph_pullback(cascade, j0, line))
    d_in = anchors[0] - anchors[1]
    dist_in = math.inf
    if not d_in.is_zero:
        try:
            dist_in = abs(to_cartesian(d_in))
        except MagnitudeOverflow:
            dist_in = math.inf
    dist_out = graph_distance(*pulled)
    return {
        "distances": distances,
        "ratios": ratios,
        "line_distance_in": dist_in,
        "line_distance_out": dist_out,
        "line_ratio": (dist_out / dist_in) if dist_in > 0 else 0.0,
        "alpha_log_per_level": [sup_phi_prime_log(cascade, n)
                                for n in range(1, cascade.depth + 1)],
    }


# ---------------------------------------------------------------------------
# convergence along the manifold
# ---------------------------------------------------------------------------

def convergence_rate(cascade: Cascade, curve: VerticalGraph,
                     t_probe: complex, n_steps: int) -> dict:
    """Push the base and the probe forward through the charts, recording
    |t'_n| and the graph deviation |z'_n - z_n| at equal t.

    The first step is measured through the induced map; deeper steps
    apply the per-level contraction alpha = sup |phi'|, which underflows
    at cascade scales, so the recorded tail is exactly zero."""
    if abs(t_probe) > 0.5:
        raise ValidationError("probe must satisfy |t| <= 1/2")
    if n_steps > cascade.depth - curve.level:
        raise ValidationError("n_steps exceeds the available levels")
    gamma = curve.interpolator()
    z_q = gamma(t_probe)
    per_step = [{
        "n": 0,
        "t_abs": abs(t_probe),
        "z_dev": _graph_dev(z_q, curve.base),
        "mode": "measured",
    }]
    t_abs = abs(t_probe)
    delta_abs = abs(cascade.map.delta)
    for k in range(1, n_steps + 1):
        level = curve.level + k - 1
        if level == 0:
            _, t_tilde = tilde_map(cascade, 0, z_q, t_probe)
            t_abs = abs(t_tilde)
            # the probe rides the invariant family: its z-deviation at
            # equal t is bounded by the (measured zero) graph slope
            line = vertical_line(cascade, 1)
            z_next = line.interpolator()(complex(t_abs, 0.0))
            per_step.append({"n": k, "t_abs": t_abs,
                             "z_dev": _graph_dev(z_next, line.base),
                             "mode": "measured"})
            z_q = z_next
        else:
            alpha_log = sup_phi_prime_log(cascade, level + 1)
            if t_abs == 0.0 or alpha_log == -math.inf:
                t_abs = 0.0
            else:
                log_next = alpha_log + math.log(delta_abs) + math.log(t_abs)
                t_abs = math.exp(log_next) if log_next > -745.0 else 0.0
            per_step.append({"n": k, "t_abs": t_abs, "z_dev": 0.0,
                             "mode": "alpha-bound"})
    positives = [(s["n"], s["t_abs"]) for s in per_step if s["t_abs"] > 0.0]
    if len(positives) == len(per_step) and len(per_step) > 1:
        xs = np.array([n for n, _ in positives], dtype=float)
        ys = np.log(np.array([v for _, v in positives]))
        slope = np.polyfit(xs, ys, 1)[0]
        lam = float(math.exp(slope))
    else:
        lam = 0.0  # contraction beyond float resolution
    return {"lambda_fit": lam, "per_step": per_step}


def _graph_dev(za: ScaledComplex, zb: ScaledComplex) -> float:
    d = za - zb
    if d.is_zero:
        return 0.0
    try:
        return abs(to_cartesian(d))
    except MagnitudeOverflow:
        return math.inf


# ---------------------------------------------------------------------------
# globalization and serialization
# ---------------------------------------------------------------------------

def globalize(cascade: Cascade, curve: VerticalGraph,
              back_steps: int) -> list:
    """Ambient polyline of the local curve mapped through the inverse
    map back_steps times (the inverse contracts the escaping scale)."""
    if back_steps < 0:
        raise ValidationError("back_steps must be >= 0")
    if curve.level != 0:
        raise ValidationError("globalize expects the level-0 curve")
    from .henon import inverse
    pts = []
    for t, z in zip(curve.t_grid, curve.z_of_t):
        p = shear(cascade, curve.level, z, t)
        for _ in range(back_steps):
            p = inverse(cascade.map, p)
        pts.append(p)
    return pts


CURVE_CSV_COLUMNS = ["t_re", "t_im", "re_z", "im_z", "log_abs_z", "level"]


def write_curve_csv(curve: VerticalGraph, path: str) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CURVE_CSV_COLUMNS)
        for t, z in zip(curve.t_grid, curve.z_of_t):
            try:
                zc = to_cartesian(z)
                re_z, im_z = zc.real, zc.imag
            except MagnitudeOverflow:
                re_z = im_z = math.inf
            writer.writerow([repr(t.real), repr(t.imag), repr(re_z),
                             repr(im_z), repr(z.log_abs), curve.level])


def polyline_json(points: list) -> str:
    rows = []
    for p in points:
        rows.append({
            "log_abs_z": p.z.log_abs, "arg_z": p.z.arg,
            "log_abs_w": p.w.log_abs, "arg_w": p.w.arg,
        })
    return json.dumps({"points": rows}, indent=2)
