import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thenon import numeric
from thenon.errors import MagnitudeOverflow
from thenon.numeric import (ScaledComplex, exp_scaled, from_cartesian,
                            from_polar, from_real, to_cartesian, wrap_angle)


def close(a: complex, b: complex, rel: float) -> bool:
    scale = max(abs(a), abs(b))
    if scale == 0:
        return True
    return abs(a - b) <= rel * scale


def test_from_cartesian_unit():
    s = from_cartesian(1 + 0j)
    assert s.log_abs == 0.0 and s.arg == 0.0


def test_from_cartesian_zero():
    s = from_cartesian(0j)
    assert s.is_zero and s.arg == 0.0


def test_from_cartesian_minus_e():
    s = from_cartesian(-math.e + 0j)
    assert abs(s.log_abs - 1.0) < 1e-15
    assert s.arg == math.pi


def test_mul_units():
    one = from_cartesian(1)
    assert (one * one).log_abs == 0.0
    assert (one * one).arg == 0.0


def test_mul_large_i_squared():
    a = ScaledComplex(100.0, math.pi / 2)
    p = a * a
    assert p.log_abs == 200.0
    assert p.arg == math.pi


def test_mul_two_three():
    p = from_real(2.0) * from_real(3.0)
    assert abs(p.log_abs - math.log(6)) < 1e-15
    assert p.arg == 0.0


def test_add_one_plus_one():
    s = from_real(1.0) + from_real(1.0)
    assert abs(s.log_abs - math.log(2)) < 1e-15


def test_add_underflow_drops_small_term():
    big = ScaledComplex(1000.0, 0.0)
    s = big + from_real(1.0)
    assert s == big


def test_add_three_plus_four_i():
    s = from_real(3.0) + from_polar(math.log(4), math.pi / 2)
    assert abs(s.log_abs - math.log(5)) < 1e-14
    assert abs(s.arg - math.atan2(4, 3)) < 1e-14


def test_exp_scaled_zero():
    e = exp_scaled(numeric.ZERO)
    assert e.log_abs == 0.0 and e.arg == 0.0


def test_exp_scaled_huge_real():
    z = from_real(math.exp(50))
    e = exp_scaled(z)
    assert e.log_abs == math.exp(50)
    assert e.arg == 0.0


def test_exp_scaled_i_pi():
    e = exp_scaled(from_cartesian(1j * math.pi))
    assert abs(e.log_abs) < 1e-12
    assert abs(e.arg - math.pi) < 1e-12


def test_exp_scaled_overflow_signals_depth_limit():
    z = ScaledComplex(800.0, 0.0)  # value e^800, Re beyond float range
    with pytest.raises(MagnitudeOverflow):
        exp_scaled(z)


def test_to_cartesian_round_trip_extremes():
    for mag in (1e-300, 1e-12, 1.0, 1e12, 1e300):
        z = complex(mag * 0.6, -mag * 0.8)
        back = to_cartesian(from_cartesian(z))
        assert close(z, back, 1e-12)


magnitudes = st.floats(math.log(1e-10), math.log(1e10)).map(math.exp)
angles = st.floats(-math.pi * 0.999, math.pi)


@given(magnitudes, angles, magnitudes, angles)
@settings(max_examples=300)
def test_ops_match_native(ma, ta, mb, tb):
    a, b = cmath.rect(ma, ta), cmath.rect(mb, tb)
    sa, sb = from_cartesian(a), from_cartesian(b)
    assert close(to_cartesian(sa * sb), a * b, 1e-10)
    s = sa + sb
    got = to_cartesian(s) if not s.is_zero else 0j
    # relative to the operand scale: cancellation cannot preserve
    # accuracy relative to the result in any finite representation
    assert abs(got - (a + b)) <= 1e-10 * max(abs(a), abs(b))


def test_mul_associative_on_random_sample():
    import random
    rng = random.Random(7)
    worst = 0.0
    for _ in range(10_000):
        vals = [from_polar(rng.uniform(-23, 23), rng.uniform(-3.1, 3.1))
                for _ in range(3)]
        p1 = (vals[0] * vals[1]) * vals[2]
        p2 = vals[0] * (vals[1] * vals[2])
        worst = max(worst, abs(p1.log_abs - p2.log_abs),
                    abs(wrap_angle(p1.arg - p2.arg)))
    assert worst < 1e-12


def test_exp_matches_native_below_500():
    import random
    rng = random.Random(11)
    for _ in range(500):
        z = complex(rng.uniform(-500, 500), rng.uniform(-50, 50))
        got = exp_scaled(from_cartesian(z))
        want = cmath.exp(z)
        assert abs(got.log_abs - math.log(abs(want))) < 1e-10 * max(1, abs(z))
        assert abs(wrap_angle(got.arg - cmath.phase(want))) < 1e-10


def test_real_helpers():
    z = from_cartesian(3 - 4j)
    re = numeric.real_part_scaled(z)
    im = numeric.imag_part_scaled(z)
    assert abs(re.to_float() - 3) < 1e-12
    assert abs(im.to_float() + 4) < 1e-12
    assert from_real(-2.0).real_cmp(from_real(1.0)) == -1
    assert from_real(5.0).real_cmp(from_real(2.0)) == 1


def test_neg_and_sub():
    a = from_real(5.0)
    b = from_real(3.0)
    d = a - b
    assert abs(d.to_float() - 2.0) < 1e-12
    assert (-a).arg == math.pi


def test_pow_int():
    z = from_cartesian(1 + 1j)
    p = z.pow_int(4)
    assert close(to_cartesian(p), (1 + 1j) ** 4, 1e-12)
