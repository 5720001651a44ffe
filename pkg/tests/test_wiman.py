import cmath
import math

import pytest

from thenon import entire, numeric, wiman
from thenon.entire import exp_function, poly_function, sin_function
from thenon.errors import OutsideDomain, SearchBudgetExceeded
from thenon.numeric import from_cartesian
from thenon.wiman import (admissible_radius, build_frame, domain_grid,
                          residual_report, wv_predict)


def corner_offset_oracle(r, N, halfwidth):
    # maximize |z - zeta| over the domain corners directly
    best = 0.0
    for u in (-2.0 / N, 2.0 / N):
        for dth in (-halfwidth, halfwidth):
            z = r * math.exp(u) * cmath.exp(1j * dth)
            best = max(best, abs(z - r))
    return best


def test_build_frame_exp_4000():
    f = exp_function()
    frame = build_frame(f, 4000.0)
    assert frame.N == 4000
    assert frame.zeta == 4000 + 0j
    assert abs(frame.log_M - 4000.0) < 1e-9
    assert abs(frame.wv_disk_radius - 4000.0 ** (1 / 3)) < 1e-12
    oracle = corner_offset_oracle(4000.0, 4000, 4 * math.pi / 4000)
    assert abs(frame.max_offset - oracle) < 1e-9
    assert frame.max_offset < frame.wv_disk_radius
    assert frame.contained


def test_build_frame_exp_40_rejected():
    frame = build_frame(exp_function(), 40.0)
    assert abs(frame.max_offset - 13.0) < 0.1  # domain reaches ~13 from zeta
    assert abs(frame.wv_disk_radius - 40 ** (1 / 3)) < 1e-12
    assert not frame.contained


def test_build_frame_cubic_clips_angle():
    frame = build_frame(poly_function([0, 0, 0, 1]), 10.0)
    assert frame.N == 3
    assert frame.domain.clipped
    assert frame.domain.theta_halfwidth == math.pi
    report = residual_report(poly_function([0, 0, 0, 1]), frame, 8)
    assert not report.admissible  # clipped frames never pass the screen


@pytest.mark.parametrize("f,r", [
    (exp_function(), 4000.0),
    (sin_function(), 50.0),
    (poly_function([1, 0, 2]), 7.0),
    (entire.zexp_function(), 30.0),
    (entire.exp_of_function([0, 0, 1]), 9.0),
])
def test_wv_predict_exact_at_zeta(f, r):
    frame = build_frame(f, r)
    got = wv_predict(frame, f, frame.zeta)
    want = entire.evaluate_scaled(f, from_cartesian(frame.zeta))
    assert abs(got.log_abs - want.log_abs) < 1e-9 * max(1, abs(want.log_abs))
    assert abs(numeric.wrap_angle(got.arg - want.arg)) < 1e-9


def test_wv_predict_angular_corner_residual():
    # closed form: log f - log pred at r e^{i 4pi/N} has size ~ r theta^2/2
    f = exp_function()
    r = 4000.0
    frame = build_frame(f, r)
    th = 4.0 * math.pi / frame.N
    z = cmath.rect(r, th)
    pred = wv_predict(frame, f, z)
    log_res = complex(z.real - pred.log_abs,
                      numeric.wrap_angle(z.imag - pred.arg))
    expected = 8 * math.pi ** 2 / r
    assert abs(abs(log_res) - expected) < 0.15 * expected


def test_wv_predict_radial_edge_residual():
    f = exp_function()
    r = 4000.0
    frame = build_frame(f, r)
    z = cmath.rect(r * math.exp(2.0 / frame.N), 0.0)
    pred = wv_predict(frame, f, z)
    fz = entire.evaluate_scaled(f, from_cartesian(z))
    rel = abs(cmath.exp(complex(fz.log_abs - pred.log_abs,
                                numeric.wrap_angle(fz.arg - pred.arg))) - 1)
    assert rel < 0.001


def test_wv_predict_outside_domain():
    f = exp_function()
    frame = build_frame(f, 4000.0)
    with pytest.raises(OutsideDomain):
        wv_predict(frame, f, 4000j)


def test_residuals_exp_4000():
    f = exp_function()
    frame = build_frame(f, 4000.0)
    report = residual_report(f, frame, 16)
    assert report.sup_eps0 < 0.05
    assert report.sup_eps1 < 0.05
    assert report.admissible


def test_eps0_identically_zero_for_monomial():
    f = poly_function([0, 0, 0, 1])
    frame = build_frame(f, 10.0)
    for z in domain_grid(frame, 8):
        assert abs(wiman._eps0(f, frame, z)) < 1e-12


def test_sup_eps0_decreases_with_radius():
    f = exp_function()
    sups = []
    for r in (3200.0, 6400.0, 12800.0):
        frame = build_frame(f, r)
        sups.append(residual_report(f, frame, 16).sup_eps0)
    assert sups[0] > sups[1] > sups[2]


def test_univalence_surrogate_grid_injective():
    # with sup_eps1 < 1 the sampled log f is injective on the grid
    f = exp_function()
    frame = build_frame(f, 3200.0)
    report = residual_report(f, frame, 12)
    assert report.sup_eps1 < 1.0
    pts = domain_grid(frame, 12)
    values = [wiman._log_f(f, z) for z in pts]
    for i in range(len(values)):
        for k in range(i + 1, len(values)):
            if abs(values[i] - values[k]) < 1e-9:
                assert abs(pts[i] - pts[k]) < 1e-12


def test_admissible_radius_already_admissible():
    f = exp_function()
    assert admissible_radius(f, 4000.0, 1) == 4000.0


def test_admissible_radius_walk_from_40():
    # containment needs the corner reach sqrt(4 + 16 pi^2) r/N below
    # r/N^{2/3}, i.e. N >= (4 + 16 pi^2)^{3/2} ~ 2059; first walk hit
    # is 40 e^4
    f = exp_function()
    r = admissible_radius(f, 40.0, 1)
    assert abs(r - 40.0 * math.exp(4.0)) < 1e-9
    threshold = (4 + 16 * math.pi ** 2) ** 1.5
    assert entire.central_index(f, r) >= threshold
    prev = r / wiman.RADIUS_WALK_FACTOR
    assert not build_frame(f, prev).contained


def test_admissible_radius_sin_regression_anchor():
    f = sin_function()
    r = admissible_radius(f, 50.0, 1)
    assert r <= 50.0 * math.exp(25.0)
    # frozen from the first run of this screen
    assert abs(r - 50.0 * math.exp(3.75)) < 1e-9
    frame = build_frame(f, r)
    assert frame.contained
    assert residual_report(f, frame, 12).admissible


def test_admissible_radius_downward_direction():
    f = exp_function()
    assert admissible_radius(f, 4000.0, -1) == 4000.0
    with pytest.raises(Exception):
        admissible_radius(f, 4000.0, 0)


def test_admissible_radius_budget():
    f = poly_function([0, 0, 0, 1])  # never admissible: N stays 3
    with pytest.raises(SearchBudgetExceeded):
        admissible_radius(f, 1.0, 1, max_steps=25)


def test_report_json_round_trip():
    import json
    f = exp_function()
    frame = build_frame(f, 4000.0)
    report = residual_report(f, frame, 8)
    payload = json.loads(wiman.report_to_json(report))
    assert payload["N"] == 4000
    assert payload["admissible"] is True
    assert set(payload) == {"r", "sup_eps0", "sup_eps1", "sup_eps2", "N",
                            "log_M", "admissible"}
