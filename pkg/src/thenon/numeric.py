"""Log-scaled complex arithmetic.

A ScaledComplex stores a complex number as (log-magnitude, argument) so
orbits and maximum-modulus data of size e^{e^{50}} stay representable.
Zero is encoded with log_abs = -inf and arg = 0; it is absorbing for
mul and neutral for add.  All values are immutable and thread-safe.
"""

from __future__ import annotations

import cmath
import math
import sys
from dataclasses import dataclass

from .errors import MagnitudeOverflow

LOG_MAX = math.log(sys.float_info.max)  # ~709.78, ceiling for native floats
TWO_PI = 2.0 * math.pi

# Below this log-unit gap the smaller addend is under native epsilon and
# is dropped exactly.
ADD_DROP_GAP = 40.0


def wrap_angle(theta: float) -> float:
    """Reduce an angle to (-pi, pi]."""
    if math.isnan(theta):
        return theta
    t = math.remainder(theta, TWO_PI)
    if t <= -math.pi:
        t += TWO_PI
    return t


@dataclass(frozen=True)
class ScaledComplex:
    log_abs: float
    arg: float

    @property
    def is_zero(self) -> bool:
        return self.log_abs == -math.inf

    def __mul__(self, other: "ScaledComplex") -> "ScaledComplex":
        if self.is_zero or other.is_zero:
            return ZERO
        return ScaledComplex(self.log_abs + other.log_abs,
                             wrap_angle(self.arg + other.arg))

    def __truediv__(self, other: "ScaledComplex") -> "ScaledComplex":
        if other.is_zero:
            raise ZeroDivisionError("division by scaled zero")
        if self.is_zero:
            return ZERO
        return ScaledComplex(self.log_abs - other.log_abs,
                             wrap_angle(self.arg - other.arg))

    def __neg__(self) -> "ScaledComplex":
        if self.is_zero:
            return ZERO
        return ScaledComplex(self.log_abs, wrap_angle(self.arg + math.pi))

    def __add__(self, other: "ScaledComplex") -> "ScaledComplex":
        if self.is_zero:
            return other
        if other.is_zero:
            return self
        if self.log_abs >= other.log_abs:
            big, small = self, other
        else:
            big, small = other, self
        gap = big.log_abs - small.log_abs
        if gap > ADD_DROP_GAP:
            return big
        dphi = wrap_angle(small.arg - big.arg)
        if dphi == 0.0:
            ratio = complex(math.exp(-gap), 0.0)
        elif dphi == math.pi:
            ratio = complex(-math.exp(-gap), 0.0)
        else:
            ratio = cmath.rect(math.exp(-gap), dphi)
        s = 1.0 + ratio
        if s == 0:
            return ZERO
        return ScaledComplex(big.log_abs + math.log(abs(s)),
                             wrap_angle(big.arg + math.atan2(s.imag, s.real)))

    def __sub__(self, other: "ScaledComplex") -> "ScaledComplex":
        return self + (-other)

    def pow_int(self, n: int) -> "ScaledComplex":
        if self.is_zero:
            if n <= 0:
                raise ZeroDivisionError("0 ** nonpositive")
            return ZERO
        return ScaledComplex(self.log_abs * n, wrap_angle(self.arg * n))

    def scale_by_log(self, dlog: float) -> "ScaledComplex":
        """Multiply by e^{dlog} without touching the argument."""
        if self.is_zero:
            return ZERO
        return ScaledComplex(self.log_abs + dlog, self.arg)

    # -- real-line helpers (values with arg 0 or pi) ----------------------
    @property
    def is_real(self) -> bool:
        return self.is_zero or self.arg == 0.0 or self.arg == math.pi

    @property
    def sign(self) -> int:
        """Sign of a real-valued ScaledComplex (-1, 0, 1)."""
        if self.is_zero:
            return 0
        return -1 if self.arg == math.pi else 1

    def real_cmp(self, other: "ScaledComplex") -> int:
        """Order two real-valued ScaledComplex numbers."""
        sa, sb = self.sign, other.sign
        if sa != sb:
            return -1 if sa < sb else 1
        if sa == 0:
            return 0
        if self.log_abs == other.log_abs:
            return 0
        bigger_mag = self.log_abs > other.log_abs
        if sa > 0:
            return 1 if bigger_mag else -1
        return -1 if bigger_mag else 1

    def to_float(self) -> float:
        """Real-valued ScaledComplex to float; overflow raises."""
        if self.is_zero:
            return 0.0
        if not self.is_real:
            raise ValueError("not a real-valued scaled number")
        if self.log_abs > LOG_MAX:
            raise MagnitudeOverflow(
                f"scaled real exp({self.log_abs}) exceeds float range")
        return self.sign * math.exp(self.log_abs)


ZERO = ScaledComplex(-math.inf, 0.0)
ONE = ScaledComplex(0.0, 0.0)


def from_cartesian(z: complex) -> ScaledComplex:
    z = complex(z)
    if z.real == 0.0 and z.imag == 0.0:
        return ZERO
    # math.atan2 handles subnormals where cmath.phase raises; hypot can
    # overflow near the float ceiling, so rescale in that corner.
    arg = wrap_angle(math.atan2(z.imag, z.real))
    try:
        r = math.hypot(z.real, z.imag)
    except OverflowError:
        r = math.inf
    if math.isinf(r):
        return ScaledComplex(
            math.log(math.hypot(z.real / 4.0, z.imag / 4.0)) + math.log(4.0),
            arg)
    return ScaledComplex(math.log(r), arg)


def from_real(x: float) -> ScaledComplex:
    if x == 0.0:
        return ZERO
    return ScaledComplex(math.log(abs(x)), 0.0 if x > 0 else math.pi)


def from_polar(log_abs: float, arg: float) -> ScaledComplex:
    if log_abs == -math.inf:
        return ZERO
    return ScaledComplex(log_abs, wrap_angle(arg))


def to_cartesian(z: ScaledComplex) -> complex:
    if z.is_zero:
        return 0j
    if z.log_abs > LOG_MAX:
        raise MagnitudeOverflow(
            f"|z| = exp({z.log_abs}) exceeds native complex range")
    return cmath.rect(math.exp(z.log_abs), z.arg)


def exp_scaled(z: ScaledComplex) -> ScaledComplex:
    """e^z for a scaled argument: log|e^z| = Re z, arg = Im z mod 2pi.

    Needs Re z and Im z as native floats, so it fails once |z| itself
    leaves the native range (the double-exponential wall).
    """
    if z.is_zero:
        return ONE
    if z.log_abs > LOG_MAX:
        raise MagnitudeOverflow(
            "exp of a value whose real part exceeds the float range "
            f"(log|z| = {z.log_abs}); cascade depth limit")
    m = math.exp(z.log_abs)
    re = m * math.cos(z.arg)
    im = m * math.sin(z.arg)
    return ScaledComplex(re, wrap_angle(im))


def log_scaled(z: ScaledComplex) -> ScaledComplex:
    """Principal log of a scaled value, returned scaled.

    log z = log|z| + i arg z with both parts native floats.
    """
    if z.is_zero:
        raise ValueError("log of zero")
    return from_cartesian(complex(z.log_abs, z.arg))


def log_as_complex(z: ScaledComplex) -> complex:
    """Principal log of a scaled value as a native complex."""
    if z.is_zero:
        raise ValueError("log of zero")
    return complex(z.log_abs, z.arg)


def real_part_scaled(z: ScaledComplex) -> ScaledComplex:
    """Re of the represented value, as a (real-valued) ScaledComplex."""
    if z.is_zero:
        return ZERO
    c = math.cos(z.arg)
    if c == 0.0:
        return ZERO
    return ScaledComplex(z.log_abs + math.log(abs(c)),
                         0.0 if c > 0 else math.pi)


def imag_part_scaled(z: ScaledComplex) -> ScaledComplex:
    if z.is_zero:
        return ZERO
    s = math.sin(z.arg)
    if s == 0.0:
        return ZERO
    return ScaledComplex(z.log_abs + math.log(abs(s)),
                         0.0 if s > 0 else math.pi)
