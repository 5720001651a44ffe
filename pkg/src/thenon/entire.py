"""Entire functions: evaluation, derivatives, coefficients, maximum
modulus M(r) and central index N(r).

Each built-in carries closed-form evaluators plus a log-space
coefficient generator, and (where the function allows it) scaled
evaluators valid for astronomically large values.  Transcendental
functions that keep a usable closed form on circles beyond the native
range also expose a log-evaluator (the full complex log of f) and an
asymptotics record used by the escaping cascade at depths where direct
sampling is impossible.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

from . import numeric
from .errors import (MagnitudeOverflow, ScanBudgetExceeded, ValidationError)
from .numeric import ScaledComplex, exp_scaled, from_cartesian, wrap_angle

DEFAULT_SAMPLES = 1024
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
ANGLE_TOL = 1e-12
# Refined angles whose log-magnitudes agree within this are ties;
# the smallest angle in (-pi, pi] wins.
TIE_LOG_TOL = 1e-9
SCAN_BUDGET = 10 ** 7
SCAN_DROP = 100.0
SCAN_RUN = 50


@dataclass(frozen=True)
class Asymptotics:
    """Closed-form frame data on circles too large to sample.

    log_M and N map a radius r (as a real-valued ScaledComplex) to
    log M(r) and N(r) in the same representation; theta and psi are the
    max-modulus angle and arg f at the max-modulus point (radius-free,
    which is what restricts this record to exp-like functions).
    """
    log_M: Callable[[ScaledComplex], ScaledComplex]
    N: Callable[[ScaledComplex], ScaledComplex]
    theta: float
    psi: float
    rho_limit: float = 1.0    # limit of r/N(r) along the max direction


@dataclass(frozen=True)
class EntireFunction:
    name: str
    evaluator: Callable[[complex], complex]
    derivative_evaluator: Callable[[complex, int], complex]
    coeff_log_abs: Callable[[int], float]
    scaled_evaluator: Optional[Callable[[ScaledComplex], ScaledComplex]] = None
    scaled_derivative: Optional[Callable[[ScaledComplex, int], ScaledComplex]] = None
    log_evaluator: Optional[Callable[[ScaledComplex], ScaledComplex]] = None
    asymptotics: Optional[Asymptotics] = None
    transcendental: bool = True

    def __repr__(self):
        return f"EntireFunction({self.name})"


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def evaluate(f: EntireFunction, z: complex) -> complex:
    """f(z) in native precision; overflow raises MagnitudeOverflow."""
    try:
        w = f.evaluator(complex(z))
    except OverflowError:
        raise MagnitudeOverflow(
            f"{f.name}({z}) exceeds native range"
            + ("" if f.scaled_evaluator is None else "; use evaluate_scaled"))
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise MagnitudeOverflow(f"{f.name}({z}) is not finite")
    return w


def derivative(f: EntireFunction, z: complex, j: int) -> complex:
    """j-th derivative, 1 <= j <= 4."""
    if not 1 <= j <= 4:
        raise ValidationError(f"derivative order {j} outside [1, 4]")
    try:
        w = f.derivative_evaluator(complex(z), j)
    except OverflowError:
        raise MagnitudeOverflow(f"{f.name}^({j})({z}) exceeds native range")
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        raise MagnitudeOverflow(f"{f.name}^({j})({z}) is not finite")
    return w


def evaluate_scaled(f: EntireFunction, z: ScaledComplex) -> ScaledComplex:
    """f(z) in scaled arithmetic, falling back to the native evaluator."""
    if f.scaled_evaluator is not None:
        return f.scaled_evaluator(z)
    return from_cartesian(evaluate(f, numeric.to_cartesian(z)))


def derivative_scaled(f: EntireFunction, z: ScaledComplex, j: int) -> ScaledComplex:
    if f.scaled_derivative is not None:
        return f.scaled_derivative(z, j)
    return from_cartesian(derivative(f, numeric.to_cartesian(z), j))


# ---------------------------------------------------------------------------
# maximum modulus
# ---------------------------------------------------------------------------

def _log_abs_on_circle(f: EntireFunction, r: float):
    """Return theta -> log|f(r e^{i theta})| as a float."""
    use_scaled = f.scaled_evaluator is not None
    log_r = math.log(r)

    def g(theta: float) -> float:
        if use_scaled:
            w = f.scaled_evaluator(ScaledComplex(log_r, wrap_angle(theta)))
            return w.log_abs
        w = evaluate(f, cmath.rect(r, theta))
        a = abs(w)
        return math.log(a) if a > 0 else -math.inf

    return g


def _golden_max(g, lo: float, hi: float, tol: float) -> float:
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    gc, gd = g(c), g(d)
    while (b - a) > tol:
        if gc >= gd:
            b, d, gd = d, c, gc
            c = b - GOLDEN * (b - a)
            gc = g(c)
        else:
            a, c, gc = c, d, gd
            d = a + GOLDEN * (b - a)
            gd = g(d)
    return 0.5 * (a + b)

# Canonical angles tried after refinement so symmetric maxima land on
# exact floats (determinism across platforms).
_SNAP_ANGLES = (0.0, math.pi / 2.0, -math.pi / 2.0, math.pi)


def max_modulus(f: EntireFunction, r: float, samples: int = DEFAULT_SAMPLES):
    """Sample |f| on |z| = r, refine by golden-section search.

    Returns (log_M, zeta).  Ties within TIE_LOG_TOL resolve to the
    smallest angle in (-pi, pi].
    """
    if r <= 0:
        raise ValidationError("max_modulus needs r > 0")
    if samples < 256:
        raise ValidationError("max_modulus needs samples >= 256")
    g = _log_abs_on_circle(f, r)
    step = numeric.TWO_PI / samples
    angles = [-math.pi + (k + 1) * step for k in range(samples)]
    values = [g(t) for t in angles]
    best = max(values)
    if best == -math.inf:
        raise ValidationError(f"{f.name} vanishes on the sampled circle")

    # Refine every sampled angle statistically tied with the best; the
    # coarse grid resolves maxima to ~step^2 in log-magnitude.
    coarse_tol = max(abs(best) * 1e-12, 1e-7)
    candidates = []
    for k, v in enumerate(values):
        if v >= best - coarse_tol:
            theta = _golden_max(g, angles[k] - step, angles[k] + step,
                                ANGLE_TOL)
            candidates.append((wrap_angle(theta), g(theta)))
    for theta in _SNAP_ANGLES:
        candidates.append((theta, g(theta)))

    top = max(v for _, v in candidates)
    # canonical angles beat refinement noise in the flat top of the
    # maximum; among remaining ties the smallest angle in (-pi, pi] wins
    snapped = [t for t in _SNAP_ANGLES if g(t) >= top - TIE_LOG_TOL]
    if snapped:
        theta_star = min(snapped)
    else:
        theta_star = min(t for t, v in candidates if v >= top - TIE_LOG_TOL)
    return g(theta_star), cmath.rect(r, theta_star)


# ---------------------------------------------------------------------------
# central index
# ---------------------------------------------------------------------------

def central_index(f: EntireFunction, r: float) -> int:
    """Largest n maximizing log|a_n| + n log r.

    Scans until SCAN_RUN consecutive terms fall SCAN_DROP log-units
    below the running maximum; ties go to the larger index.
    """
    if r <= 0:
        raise ValidationError("central_index needs r > 0")
    log_r = math.log(r)
    best = -math.inf
    best_n = -1
    below = 0
    n = 0
    while n < SCAN_BUDGET:
        c = f.coeff_log_abs(n)
        t = c + n * log_r if c != -math.inf else -math.inf
        tie_eps = 1e-9 * max(1.0, abs(best))
        if t >= best - tie_eps:
            if t > best:
                best = t
            best_n = n
            below = 0
        elif t < best - SCAN_DROP:
            below += 1
            if below >= SCAN_RUN and best_n >= 0:
                return best_n
        else:
            below = 0
        n += 1
    raise ScanBudgetExceeded(
        f"no decisive maximal term for {f.name} at r={r} within {SCAN_BUDGET}")


# ---------------------------------------------------------------------------
# built-in library
# ---------------------------------------------------------------------------

def _sin_scaled(z: ScaledComplex) -> ScaledComplex:
    iz = z * ScaledComplex(0.0, math.pi / 2.0)
    half_over_i = ScaledComplex(math.log(0.5), -math.pi / 2.0)
    return (exp_scaled(iz) - exp_scaled(-iz)) * half_over_i


def _cos_scaled(z: ScaledComplex) -> ScaledComplex:
    iz = z * ScaledComplex(0.0, math.pi / 2.0)
    half = ScaledComplex(math.log(0.5), 0.0)
    return (exp_scaled(iz) + exp_scaled(-iz)) * half


def exp_function() -> EntireFunction:
    ident = lambda rr: rr
    return EntireFunction(
        name="exp",
        evaluator=cmath.exp,
        derivative_evaluator=lambda z, j: cmath.exp(z),
        coeff_log_abs=lambda n: -math.lgamma(n + 1),
        scaled_evaluator=exp_scaled,
        scaled_derivative=lambda z, j: exp_scaled(z),
        log_evaluator=lambda z: z,
        asymptotics=Asymptotics(log_M=ident, N=ident, theta=0.0, psi=0.0),
    )


def sin_function() -> EntireFunction:
    def deriv(z, j):
        return (cmath.sin, cmath.cos,
                lambda u: -cmath.sin(u), lambda u: -cmath.cos(u))[j % 4](z)

    def deriv_scaled(z, j):
        k = j % 4
        if k == 0:
            return _sin_scaled(z)
        if k == 1:
            return _cos_scaled(z)
        if k == 2:
            return -_sin_scaled(z)
        return -_cos_scaled(z)

    def coeff(n):
        return -math.lgamma(n + 1) if n % 2 == 1 else -math.inf

    return EntireFunction(
        name="sin",
        evaluator=cmath.sin,
        derivative_evaluator=deriv,
        coeff_log_abs=coeff,
        scaled_evaluator=_sin_scaled,
        scaled_derivative=deriv_scaled,
    )


def zexp_function() -> EntireFunction:
    """z e^z; derivatives (z + j) e^z, coefficients 1/(n-1)!."""
    def deriv(z, j):
        return (z + j) * cmath.exp(z)

    def coeff(n):
        return -math.lgamma(n) if n >= 1 else -math.inf

    def scaled(z):
        return z * exp_scaled(z)

    def scaled_deriv(z, j):
        return (z + from_cartesian(complex(j))) * exp_scaled(z)

    def log_eval(z):
        return z + numeric.log_scaled(z)

    def asym_log_M(r_scaled):
        # log M(r) = r + log r; the log r term is below scaled resolution
        # at the radii that need this path but kept for small ones.
        return r_scaled + numeric.log_scaled(r_scaled)

    def asym_N(r_scaled):
        return r_scaled + numeric.ONE

    return EntireFunction(
        name="zexp",
        evaluator=lambda z: z * cmath.exp(z),
        derivative_evaluator=deriv,
        coeff_log_abs=coeff,
        scaled_evaluator=scaled,
        scaled_derivative=scaled_deriv,
        log_evaluator=log_eval,
        asymptotics=Asymptotics(log_M=asym_log_M, N=asym_N,
                                theta=0.0, psi=0.0),
    )


def poly_function(coeffs, name: str = None) -> EntireFunction:
    coeffs = [complex(c) for c in coeffs]
    while len(coeffs) > 1 and coeffs[-1] == 0:
        coeffs = coeffs[:-1]
    if not coeffs:
        coeffs = [0j]
    deg = len(coeffs) - 1

    def horner(cs, z):
        acc = 0j
        for c in reversed(cs):
            acc = acc * z + c
        return acc

    deriv_coeffs = [coeffs]
    for _ in range(4):
        prev = deriv_coeffs[-1]
        deriv_coeffs.append([k * prev[k] for k in range(1, len(prev))] or [0j])

    def deriv(z, j):
        return horner(deriv_coeffs[j], z)

    def coeff(n):
        if n > deg or coeffs[n] == 0:
            return -math.inf
        return math.log(abs(coeffs[n]))

    def scaled(z):
        acc = numeric.ZERO
        for c in reversed(coeffs):
            acc = acc * z + from_cartesian(c)
        return acc

    def scaled_deriv(z, j):
        acc = numeric.ZERO
        for c in reversed(deriv_coeffs[j]):
            acc = acc * z + from_cartesian(c)
        return acc

    return EntireFunction(
        name=name or f"poly(deg={deg})",
        evaluator=lambda z: horner(coeffs, z),
        derivative_evaluator=deriv,
        coeff_log_abs=coeff,
        scaled_evaluator=scaled,
        scaled_derivative=scaled_deriv,
        transcendental=False,
    )


def identity_function() -> EntireFunction:
    return poly_function([0, 1], name="id")


class _ExpOfSeries:
    """Power-series coefficients of e^{g} for polynomial g, computed in
    scaled arithmetic via u' = g' u so factorial-scale indices never
    overflow or underflow."""

    def __init__(self, g_coeffs):
        self.b = [from_cartesian(c) for c in g_coeffs]
        self.deg = len(g_coeffs) - 1
        u0 = exp_scaled(self.b[0]) if not self.b[0].is_zero else numeric.ONE
        self.u = [u0]

    def coeff(self, n: int) -> ScaledComplex:
        while len(self.u) <= n:
            m = len(self.u)  # computing u_m
            acc = numeric.ZERO
            for j in range(1, min(self.deg, m) + 1):
                acc = acc + from_cartesian(complex(j)) * self.b[j] * self.u[m - j]
            self.u.append(acc * from_cartesian(complex(1.0 / m)))
        return self.u[n]


def exp_of_function(g_coeffs, scale=1.0, offset=0.0,
                    name: str = None) -> EntireFunction:
    """a e^{g(z)} + c for polynomial g given by coefficients."""
    g_coeffs = [complex(c) for c in g_coeffs]
    a = complex(scale)
    c0 = complex(offset)
    if a == 0:
        raise ValidationError("exp_of needs a nonzero scale")
    g = poly_function(g_coeffs, name="g")
    series = _ExpOfSeries(g_coeffs)
    log_a = from_cartesian(a)

    def gv(z, j=0):
        return g.evaluator(z) if j == 0 else g.derivative_evaluator(z, j)

    # Bell-polynomial prefactors of d^j/dz^j e^{g}.
    def prefactor(z, j):
        g1 = gv(z, 1)
        if j == 1:
            return g1
        g2 = gv(z, 2)
        if j == 2:
            return g2 + g1 * g1
        g3 = gv(z, 3)
        if j == 3:
            return g3 + 3 * g1 * g2 + g1 ** 3
        g4 = gv(z, 4)
        return g4 + 4 * g1 * g3 + 3 * g2 * g2 + 6 * g1 * g1 * g2 + g1 ** 4

    def evaluator(z):
        return a * cmath.exp(gv(z)) + c0

    def deriv(z, j):
        return a * prefactor(z, j) * cmath.exp(gv(z))

    def coeff(n):
        u = series.coeff(n)
        term = log_a * u
        if n == 0:
            term = term + from_cartesian(c0)
        return term.log_abs

    def scaled(z):
        G = g.scaled_evaluator(z)
        return log_a * exp_scaled(G) + from_cartesian(c0)

    def scaled_deriv(z, j):
        G = g.scaled_evaluator(z)
        zc = numeric.to_cartesian(z)  # prefactors are polynomial in z
        return log_a * from_cartesian(prefactor(zc, j)) * exp_scaled(G)

    return EntireFunction(
        name=name or "exp_of(g)",
        evaluator=evaluator,
        derivative_evaluator=deriv,
        coeff_log_abs=coeff,
        scaled_evaluator=scaled,
        scaled_derivative=scaled_deriv,
    )


# ---------------------------------------------------------------------------
# function-spec grammar (config/CLI surface)
# ---------------------------------------------------------------------------

def _parse_number(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v)
    if (isinstance(v, (list, tuple)) and len(v) == 2
            and all(isinstance(x, (int, float)) for x in v)):
        return complex(v[0], v[1])
    raise ValidationError(f"{where}: expected number or [re, im], got {v!r}")


def from_spec(spec: dict) -> EntireFunction:
    """Build a function from the grammar:
    {"kind": "exp"} | {"kind": "sin"} | {"kind": "poly", "coeffs": [...]}
    | {"kind": "exp_of", "g": {...}, "scale": a, "offset": c}
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ValidationError(f"function spec must be an object with 'kind': {spec!r}")
    kind = spec["kind"]
    if kind == "exp":
        _reject_unknown(spec, {"kind"})
        return exp_function()
    if kind == "sin":
        _reject_unknown(spec, {"kind"})
        return sin_function()
    if kind == "poly":
        _reject_unknown(spec, {"kind", "coeffs"})
        coeffs = spec.get("coeffs")
        if not isinstance(coeffs, list) or not coeffs:
            raise ValidationError("poly spec needs a nonempty 'coeffs' list")
        return poly_function([_parse_number(c, "poly.coeffs") for c in coeffs])
    if kind == "exp_of":
        _reject_unknown(spec, {"kind", "g", "scale", "offset"})
        gspec = spec.get("g")
        if not isinstance(gspec, dict) or gspec.get("kind") != "poly":
            raise ValidationError("exp_of spec needs g of kind 'poly'")
        gcoeffs = [_parse_number(c, "exp_of.g.coeffs")
                   for c in gspec.get("coeffs", [])]
        if not gcoeffs:
            raise ValidationError("exp_of.g needs coefficients")
        scale = _parse_number(spec.get("scale", 1.0), "exp_of.scale")
        offset = _parse_number(spec.get("offset", 0.0), "exp_of.offset")
        return exp_of_function(gcoeffs, scale=scale, offset=offset)
    raise ValidationError(f"unknown function kind {kind!r}")


def _reject_unknown(spec: dict, allowed: set):
    extra = set(spec) - allowed
    if extra:
        raise ValidationError(f"unknown keys in function spec: {sorted(extra)}")
