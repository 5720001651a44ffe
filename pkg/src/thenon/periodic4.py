"""Period-4 orbits of F(z, w) = (e^{g(z)} + w, z).

Pipeline: solve the scalar first-order equation g'(z) e^{g(z)} = pi i,
then refine (z0, z0) with Newton on the two-variable map

    G(z, w) = (g(w + e^{g(z)}) - g(w),  g(z - e^{g(w)}) - g(z))

to a root of G = (pi i, -pi i); any such root is a period-4 point of F.

For polynomial g the first-order solve is a grid-seeded Newton on
Phi(z) = g(z) + log g'(z) - (log pi + i pi/2 + 2 pi i k) with the log
branch continued along the path.  For transcendental g the same solve
is seeded through a Wiman-Valiron frame, but every screen-passing
radius puts the branch phase beyond what binary64 can reduce mod 2 pi,
so that route reports its precision limit instead of guessing.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional

from . import entire, wiman
from .entire import EntireFunction
from .errors import (DerivativeVanishes, MagnitudeOverflow, NoConvergence,
                     StepLeftDomain, ValidationError)
from .henon import Point2

PI_I = 1j * math.pi
LOG_TARGET_BASE = complex(math.log(math.pi), math.pi / 2.0)
# largest |Im| that float can still reduce mod 2 pi with ~1e-10 headroom
PHASE_MOD_LIMIT = 2.0 ** 45


@dataclass(frozen=True)
class FirstOrderSolution:
    z0: complex
    k: int
    frame: Optional[wiman.WVFrame]
    residual: float


@dataclass(frozen=True)
class Period4Report:
    residual: float
    primitive: bool


MAX_POLY_DEGREE = 256


def _poly_degree(g: EntireFunction) -> Optional[int]:
    if g.transcendental:
        return None
    n = 0
    for i in range(MAX_POLY_DEGREE + 1):
        if g.coeff_log_abs(i) != -math.inf:
            n = i
    return n


def first_order_residual(g: EntireFunction, z: complex) -> float:
    return abs(entire.derivative(g, z, 1) * cmath.exp(entire.evaluate(g, z))
               - PI_I)


def _continued_log(value: complex, prev: Optional[complex]) -> complex:
    """Principal log shifted onto the branch of the previous value."""
    L = cmath.log(value)
    if prev is None:
        return L
    turns = round((prev.imag - L.imag) / (2.0 * math.pi))
    return complex(L.real, L.imag + 2.0 * math.pi * turns)


def _phi_newton(g: EntireFunction, z: complex, target: complex,
                tol: float, max_iter: int = 80) -> complex:
    """Newton on Phi(z) = g(z) + log g'(z) - target, branch-continuous."""
    L = None
    for _ in range(max_iter):
        g1 = entire.derivative(g, z, 1)
        if g1 == 0:
            raise DerivativeVanishes(f"g' = 0 at {z}")
        L = _continued_log(g1, L)
        phi = entire.evaluate(g, z) + L - target
        if first_order_residual(g, z) < tol:
            return z
        dphi = g1 + entire.derivative(g, z, 2) / g1
        if dphi == 0:
            raise NoConvergence("Phi' vanished during the first-order solve")
        step = phi / dphi
        # damp oversized steps; the target sheet is 2 pi wide
        if abs(step) > 2.0:
            step *= 2.0 / abs(step)
        z = z - step
    raise NoConvergence(
        f"first-order Newton stalled at residual {first_order_residual(g, z)}")


def _poly_first_order(g: EntireFunction, r_max: Optional[float], tol: float,
                      branch_k: Optional[int]) -> FirstOrderSolution:
    deg = _poly_degree(g)
    if deg == 0:
        raise DerivativeVanishes("constant g has no first-order solution")
    if r_max is None:
        r_max = max(4.0, (abs(LOG_TARGET_BASE) + 8.0) ** (1.0 / deg) * 2.0)

    # sample Im[g + log g'] to find representable branches
    samples = []
    for i in range(12):
        rr = 0.25 + (r_max - 0.25) * i / 11
        for q in range(48):
            th = -math.pi + (q + 1) * 2.0 * math.pi / 48
            z = cmath.rect(rr, th)
            g1 = entire.derivative(g, z, 1)
            if g1 == 0:
                continue
            samples.append((z, entire.evaluate(g, z) + cmath.log(g1)))
    if not samples:
        raise DerivativeVanishes("g' vanishes on the whole search grid")

    ims = [v.imag for _, v in samples]
    lo, hi = min(ims), max(ims)
    if branch_k is None:
        ks = sorted(range(math.floor((lo - math.pi / 2) / (2 * math.pi)),
                          math.ceil((hi - math.pi / 2) / (2 * math.pi)) + 1),
                    key=abs)
        if not ks:
            ks = [0]
    else:
        ks = [branch_k]

    last_err = None
    for k in ks:
        target = LOG_TARGET_BASE + 2j * math.pi * k
        seed = min(samples, key=lambda sv: abs(sv[1] - target))[0]
        try:
            z0 = _phi_newton(g, seed, target, tol)
        except NoConvergence as err:
            last_err = err
            continue
        return FirstOrderSolution(z0=z0, k=k, frame=None,
                                  residual=first_order_residual(g, z0))
    raise last_err or NoConvergence("no branch produced a first-order root")


def _transcendental_first_order(g: EntireFunction, r_seed: float,
                                tol: float) -> FirstOrderSolution:
    r = wiman.admissible_radius(g, r_seed, 1)
    frame = wiman.build_frame(g, r)
    # The root sits where g is almost purely imaginary of size M(r);
    # resolving the branch needs Im g mod 2 pi, which binary64 loses
    # once M(r) passes ~2^45.  Every screen-passing radius does.
    if frame.log_M > math.log(PHASE_MOD_LIMIT):
        raise NoConvergence(
            f"first-order branch phase ~ e^{frame.log_M:.1f} cannot be "
            "reduced mod 2 pi in binary64; transcendental g is beyond "
            "native precision at every admissible radius")
    v0 = math.sqrt(max(math.exp(frame.log_M) ** 2
                       - math.log(math.pi * r / (frame.N
                                                 * math.exp(frame.log_M))) ** 2,
                       0.0))
    target_arg = math.atan2(v0, math.log(math.pi * r) - frame.log_M)
    h_target = complex(frame.log_M, target_arg)
    seed = frame.zeta * cmath.exp(
        (h_target - complex(frame.log_M, frame.psi)) / frame.N)
    z0 = _phi_newton(g, seed, LOG_TARGET_BASE, tol)
    return FirstOrderSolution(z0=z0, k=0, frame=frame,
                              residual=first_order_residual(g, z0))


def solve_first_order(g: EntireFunction, r: Optional[float] = None,
                      tol: float = 1e-10,
                      branch_k: Optional[int] = None) -> FirstOrderSolution:
    """Solve g'(z) e^{g(z)} = pi i.

    r bounds the search grid for polynomial g and seeds the
    admissible-radius walk for transcendental g.
    """
    if _poly_degree(g) is not None:
        return _poly_first_order(g, r, tol, branch_k)
    return _transcendental_first_order(g, r if r is not None else 10.0, tol)


# ---------------------------------------------------------------------------
# the two-variable refinement
# ---------------------------------------------------------------------------

def G_map(g: EntireFunction, z: complex, w: complex):
    egz = cmath.exp(entire.evaluate(g, z))
    egw = cmath.exp(entire.evaluate(g, w))
    if not all(map(math.isfinite, (egz.real, egz.imag, egw.real, egw.imag))):
        raise MagnitudeOverflow("e^{g} overflowed inside G")
    return (entire.evaluate(g, w + egz) - entire.evaluate(g, w),
            entire.evaluate(g, z - egw) - entire.evaluate(g, z))


def DG_matrix(g: EntireFunction, z: complex, w: complex):
    egz = cmath.exp(entire.evaluate(g, z))
    egw = cmath.exp(entire.evaluate(g, w))
    d = lambda u: entire.derivative(g, u, 1)
    return (d(w + egz) * egz * d(z), d(w + egz) - d(w),
            d(z - egw) - d(z), -d(z - egw) * egw * d(w))


def refine_period4(g: EntireFunction, seed: FirstOrderSolution,
                   tol: float = 1e-12, max_iter: int = 60,
                   max_drift: Optional[float] = None):
    """Newton on G - (pi i, -pi i) from the diagonal seed (z0, z0).

    Returns the period-4 point (z, w) of F(z, w) = (e^{g(z)} + w, z).
    """
    z, w = seed.z0, seed.z0
    if max_drift is None:
        max_drift = max(2.0, 4.0 * abs(cmath.exp(entire.evaluate(g, z))))
    res = None
    for _ in range(max_iter):
        G1, G2 = G_map(g, z, w)
        r1, r2 = G1 - PI_I, G2 + PI_I
        res = math.hypot(abs(r1), abs(r2))
        if res < tol:
            return Point2.from_complex(z, w)
        a, b, c, d = DG_matrix(g, z, w)
        det = a * d - b * c
        if det == 0:
            raise NoConvergence("singular DG during refinement")
        dz = (d * (-r1) - b * (-r2)) / det
        dw = (a * (-r2) - c * (-r1)) / det
        step = 1.0
        accepted = False
        for _ in range(30):
            zt, wt = z + step * dz, w + step * dw
            try:
                G1t, G2t = G_map(g, zt, wt)
            except MagnitudeOverflow:
                step *= 0.5
                continue
            if math.hypot(abs(G1t - PI_I), abs(G2t + PI_I)) < res:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            raise NoConvergence(f"refinement stalled at residual {res}")
        z, w = z + step * dz, w + step * dw
        if math.hypot(abs(z - seed.z0), abs(w - seed.z0)) > max_drift:
            raise StepLeftDomain(
                f"refinement drifted {max_drift}+ from the seed")
    raise NoConvergence(f"refinement residual {res} after {max_iter} steps")


def henon_step(g: EntireFunction, z: complex, w: complex):
    return cmath.exp(entire.evaluate(g, z)) + w, z


def orbit_points(g: EntireFunction, p) -> list:
    z, w = p.to_complex()
    out = [(z, w)]
    for _ in range(3):
        z, w = henon_step(g, z, w)
        out.append((z, w))
    return out


def verify_period4(g: EntireFunction, p, tol: float = 1e-9) -> Period4Report:
    z0, w0 = p.to_complex()
    z, w = z0, w0
    primitive = True
    for _ in range(3):
        z, w = henon_step(g, z, w)
        if math.hypot(abs(z - z0), abs(w - w0)) <= tol:
            primitive = False
    z, w = henon_step(g, z, w)
    residual = math.hypot(abs(z - z0), abs(w - w0))
    return Period4Report(residual=residual, primitive=primitive)
