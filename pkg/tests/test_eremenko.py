import json
import math

import pytest

from thenon import entire, eremenko, numeric
from thenon.entire import exp_function, sin_function
from thenon.eremenko import (Tower, annulus_memberships, bound_report,
                             branch_eval, build_cascade, cascade_summary,
                             escaping_point, gamma_graph, sup_phi_prime_log)
from thenon.errors import (DepthUnrepresentable, OutsideDomain,
                           ValidationError)
from thenon.henon import HenonMap
from thenon.numeric import ScaledComplex, from_cartesian

EXP_MAP = HenonMap(exp_function(), 1.0)


@pytest.fixture(scope="module")
def depth1():
    return build_cascade(EXP_MAP, 3200.0, 1)


@pytest.fixture(scope="module")
def depth3():
    return build_cascade(EXP_MAP, 3200.0, 3)


def test_tower_basics():
    t = Tower(0, 3200.0)
    assert t.as_float() == 3200.0
    assert t.exp().as_float() is None  # e^3200 has no float value
    assert t.exp().json() == {"exp_of": 3200.0}
    assert Tower(0, 2.0).exp().as_float() == math.exp(2.0)
    assert Tower(1, 3200.0).add_small(0.5) == Tower(1, 3200.0)


def test_depth1_layout(depth1):
    c = depth1
    assert c.frame0.r == 3200.0
    assert abs(c.frame0.log_M - 3200.0) < 1e-8
    lvl = c.level(1)
    # for exp, N(r) = floor(r), so log r_1 ~ log M_0 and rho ~ 1
    assert abs(lvl.log_r.top - c.frame0.log_M) < 1e-12
    assert abs(lvl.rho - 1.0) < 2e-3
    assert lvl.theta == 0.0
    assert lvl.psi == 0.0
    assert lvl.anchor_mode == "sampled"
    assert lvl.inv_N == 0.0  # 1/N_1 ~ e^-3200 underflows, honestly zero
    assert lvl.margin >= 0.9


def test_depth3_tower_growth(depth3):
    c = depth3
    l1, l2, l3 = c.level(1), c.level(2), c.level(3)
    assert l1.log_r.height == 0
    assert l2.log_r.height == 1
    assert l3.log_r.height == 2
    # log r_{n+1} ~ e^{log r_n}: the tower climbs one exp per level
    assert abs(l2.log_r.top - l1.log_M.top) < 1e-12
    assert abs(l3.log_r.top - l2.log_r.top) < 1e-12
    assert l2.anchor_mode == "asymptotic"
    assert l3.anchor_mode == "asymptotic"


def test_depth3_margins(depth3):
    for lvl in depth3.levels:
        assert lvl.margin >= 0.1
        assert lvl.margin >= depth3.level(lvl.n).delta_log


def test_annuli_log_scale(depth3):
    annuli = depth3.annuli
    assert len(annuli) == 3
    a1 = annuli[0]
    assert abs(a1["log_inner"].as_float()
               - (depth3.frame0.log_M - 1.0)) < 1e-9
    assert abs(a1["log_outer"].as_float()
               - (depth3.frame0.log_M + 1.0)) < 1e-9
    assert annuli[1]["log_inner"].height == 1
    assert annuli[2]["log_inner"].height == 2


def test_sin_depth2_unrepresentable():
    m = HenonMap(sin_function(), 1.0)
    with pytest.raises(DepthUnrepresentable):
        build_cascade(m, 2000.0, 2)


def test_depth_zero_rejected():
    with pytest.raises(ValidationError):
        build_cascade(EXP_MAP, 3200.0, 0)


def test_branch_eval_is_log_branch(depth1):
    c = depth1
    lvl = c.level(1)
    w = ScaledComplex(c.frame0.log_M + lvl.d, 0.3)
    z = branch_eval(c, 1, w)
    back = entire.evaluate_scaled(c.f, z)
    assert abs(back.log_abs - w.log_abs) < 1e-9
    assert abs(numeric.wrap_angle(back.arg - w.arg)) < 1e-9
    # for exp the branch is the logarithm into the level-0 domain
    zc = numeric.to_cartesian(z)
    assert abs(zc - complex(w.log_abs, w.arg)) < 1e-6


def test_branch_round_trip_from_domain(depth1):
    c = depth1
    z = c.frame0.zeta * math.exp(1.0 / c.frame0.N)
    w = entire.evaluate_scaled(c.f, from_cartesian(z))
    z_back = branch_eval(c, 1, w)
    assert abs(numeric.to_cartesian(z_back) - z) < 1e-8 * abs(z)


def test_branch_outside_domain(depth1):
    with pytest.raises(OutsideDomain):
        branch_eval(depth1, 1, ScaledComplex(depth1.frame0.log_M + 5.0, 0.0))


def test_phi1_derivative_below_one(depth1):
    c = depth1
    lvl = c.level(1)
    w = ScaledComplex(c.frame0.log_M + lvl.d, 0.0)
    log_d = eremenko.phi1_derivative_log_abs(c, w)
    # |phi_1'| = 1/|f'| ~ e^{-3200} << 1
    assert log_d < -3000
    assert sup_phi_prime_log(c, 1) < 0


def test_deep_phi_prime_markers(depth3):
    for n in (2, 3):
        assert sup_phi_prime_log(depth3, n) == -math.inf


def test_escaping_point_depth1(depth1):
    rec = escaping_point(depth1)
    assert rec.points[0].w.is_zero
    z0 = numeric.to_cartesian(rec.points[0].z)
    dom = depth1.frame0.domain
    assert dom.contains(math.log(abs(z0)), math.atan2(z0.imag, z0.real),
                        tol=1e-6)
    assert rec.escaped_at == 1
    checks = annulus_memberships(depth1)
    assert checks[0]["mode"] == "measured"
    assert abs(checks[0]["re_lambda"]) < 1e-6


def test_escaping_point_depth3(depth3):
    checks = annulus_memberships(depth3)
    assert [c["n"] for c in checks] == [1, 2, 3]
    assert all(c["in_annulus"] for c in checks)
    assert checks[1]["mode"] == "local-model"
    rec = escaping_point(depth3)
    # points beyond the double-exponential wall are truncated
    assert 2 <= len(rec.points) <= 4
    assert rec.escaped_at == 1


def test_log_log_growth_pattern(depth3):
    # log log |z_2| ~ log |z_1| for the exp tower
    rec = escaping_point(depth3)
    if len(rec.points) >= 3:
        z1, z2 = rec.points[1].z, rec.points[2].z
        assert abs(math.log(z2.log_abs) - z1.log_abs) < 1.0


def test_bound_report_level0_near_unity(depth1):
    rep = bound_report(depth1)
    lvl0 = rep["per_level"][0]
    assert lvl0["mode"] == "measured"
    assert 0.1 < lvl0["ratio_min"] < 1.0 < lvl0["ratio_max"] < 10.0


def test_bound_report_depth3_within_decade(depth3):
    rep = bound_report(depth3)
    assert 0.1 <= rep["C_lower"] <= rep["C_upper"] <= 10.0
    assert len(rep["per_level"]) == 3
    assert {e["mode"] for e in rep["per_level"]} == {"measured",
                                                     "local-model"}


def test_distinct_offsets_distinct_points():
    c_a = build_cascade(EXP_MAP, 3200.0, 1, d_offsets=[0.0])
    c_b = build_cascade(EXP_MAP, 3200.0, 1, d_offsets=[0.25])
    za = numeric.to_cartesian(escaping_point(c_a).points[0].z)
    zb = numeric.to_cartesian(escaping_point(c_b).points[0].z)
    assert abs(za - zb) > 1e-6


def test_orbit_eta_tracks_offsets():
    c = build_cascade(EXP_MAP, 3200.0, 3, d_offsets=[0.0, 0.3, -0.2])
    assert abs(c.orbit_eta[0] - 0.3) < 1e-12
    assert abs(c.orbit_eta[1] + 0.2) < 1e-12
    assert c.orbit_eta[2] == 0j
    checks = annulus_memberships(c)
    assert abs(checks[1]["re_lambda"] - 0.3) < 1e-12
    assert abs(checks[2]["re_lambda"] + 0.2) < 1e-12


def test_gamma_graph_branch_identity(depth1):
    g = gamma_graph(depth1, 1, n_samples=5)
    for z, w in g.samples:
        back = entire.evaluate_scaled(depth1.f, w)
        assert abs(back.log_abs - z.log_abs) < 1e-9
        assert abs(numeric.wrap_angle(back.arg - z.arg)) < 1e-9


def test_coverage_measured(depth1):
    cov = depth1.coverage0
    assert cov["mode"] == "measured"
    assert cov["re_lo"] < -1.1
    assert cov["re_hi"] > 1.1
    assert cov["im_span"] >= 3 * math.pi


def test_branch_cache_concurrent_identical(depth1):
    from concurrent.futures import ThreadPoolExecutor
    c = depth1
    targets = [ScaledComplex(c.frame0.log_M + c.level(1).d, 0.1 * k)
               for k in range(-3, 4)]
    with ThreadPoolExecutor(max_workers=8) as pool:
        results = list(pool.map(
            lambda w: branch_eval(c, 1, w), targets * 8))
    for k, w in enumerate(targets):
        expected = branch_eval(c, 1, w)
        for rep in range(8):
            assert results[rep * len(targets) + k] == expected


def test_summary_json_serializable(depth3):
    payload = cascade_summary(depth3)
    text = json.dumps(payload)
    back = json.loads(text)
    assert back["depth"] == 3
    assert len(back["levels"]) == 4
    deep = back["levels"][3]
    assert deep["log_r"] == {"exp_of": back["levels"][2]["log_r"]}
