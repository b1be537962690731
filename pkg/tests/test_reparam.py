import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.boundary_geom import busemann, cross_ratio, dynamical_cross_ratio, frame_towards
from geoflow.fuchsian import constant_observable, liouville_sample
from geoflow.lie_core import CONVENTION, GroupElement, base_points, endpoints, flow_array, psl_distance
from geoflow.reparam import (Quadrilateral, QuadratureSpec, ToleranceError,
                             busemann_psi, cross_ratio_psi, dynamical_cross_ratio_psi, flow_integral,
                             gromov_product_psi, h_delta, pair_integral, parry_cocycle, reparam_flow,
                             reparam_times, solve_flow_time, stable_holonomy_psi, tau_delta, tau_parts,
                             unstable_holonomy_psi)

from conftest import random_frames


def test_quadrature_rule_integrates_polynomials():
    spec = QuadratureSpec(step=0.3, nodes=2)
    x, w = spec.rule(1.0)
    assert w.sum() == pytest.approx(1.0)
    assert w @ x ** 3 == pytest.approx(0.25, abs=1e-15)
    assert spec.rule(0.0)[0].size == 0


def test_horizon_from_tail_bound():
    spec = QuadratureSpec(tail_tolerance=1e-10, max_time=60)
    t = spec.horizon(2.0)
    assert 2.0 * math.exp(-t) == pytest.approx(1e-10)
    assert spec.horizon(1e-12) == 0.0
    assert spec.with_time(5.0).horizon(100.0) == 5.0
    with pytest.raises(ToleranceError):
        QuadratureSpec(tail_tolerance=1e-30, max_time=10).horizon(1.0)


def test_reparam_flow_constant_cases():
    rng = np.random.default_rng(0)
    frames = random_frames(rng, 5)
    np.testing.assert_allclose(reparam_flow(frames, 1.5, constant_observable(1.0)),
                               flow_array(frames, "Z", 1.5))
    out = reparam_flow(frames, 1.5, constant_observable(2.5))
    assert psl_distance(out, flow_array(frames, "Z", 0.6)).max() <= 1e-14


def test_reparam_flow_group_property(psi, near_frames):
    a = reparam_flow(reparam_flow(near_frames, 0.7, psi), 1.1, psi)
    b = reparam_flow(near_frames, 1.8, psi)
    assert psl_distance(a, b).max() <= 1e-9


def test_time_is_psi_length_of_orbit(psi, near_frames):
    for t in (0.5, 2.0, -1.0):
        _, sigma = reparam_flow(near_frames, t, psi, return_sigma=True)
        np.testing.assert_allclose(flow_integral(psi, near_frames, sigma), t, atol=1e-9)


def test_reparam_times_matches_ode(psi):
    frames = liouville_sample(200, 1)
    grid = np.array([0.0, 0.5, 3.0, 8.0])
    sig = reparam_times(frames, grid, psi)
    for j, t in enumerate(grid):
        _, ref = reparam_flow(frames, t, psi, return_sigma=True)
        np.testing.assert_allclose(sig[:, j], ref, atol=1e-8)
    with pytest.raises(ValueError):
        reparam_times(frames, [-1.0], psi)


def test_solve_flow_time(psi, near_frames):
    sigma = solve_flow_time(psi, near_frames, 1.2)
    np.testing.assert_allclose(flow_integral(psi, near_frames, sigma), 1.2, atol=1e-12)


def test_pair_integral_decay_bound(psi, near_frames):
    # raises if any integrand node exceeds |r| |psi|_C1 e^{-s}
    for side in ("stable", "unstable"):
        pair_integral(psi, near_frames, 0.05, side, check_decay=True)


def test_parry_cocycles_vanish_for_constants():
    frames = liouville_sample(10, 2)
    for side in "+-":
        assert np.all(parry_cocycle(frames, constant_observable(2.0), side) == 0)


def test_parry_cocycles_against_difference_quotients(psi, near_frames):
    r = 1e-3
    hp = parry_cocycle(near_frames, psi, "+")
    sp = (pair_integral(psi, near_frames, r, "stable") - pair_integral(psi, near_frames, -r, "stable")) / (2 * r)
    np.testing.assert_allclose(hp, sp, atol=r * r * psi.c2_norm)
    hm = parry_cocycle(near_frames, psi, "-")
    um = (pair_integral(psi, near_frames, r, "unstable") - pair_integral(psi, near_frames, -r, "unstable")) / (2 * r)
    np.testing.assert_allclose(hm, -um, atol=r * r * psi.c2_norm)
    # one-sided quotients are first order in r
    one = pair_integral(psi, near_frames, r, "stable") / r
    assert np.abs(one - hp).max() <= 10 * r * psi.c2_norm


def test_parry_truncation_consistency(psi, near_frames):
    for side in "+-":
        a = parry_cocycle(near_frames, psi, side, horizon=6.0)
        b = parry_cocycle(near_frames, psi, side, horizon=12.0)
        assert np.abs(a - b).max() <= math.exp(-6.0) * psi.c1_norm


def test_parry_cocycle_transport_identity(psi, near_frames):
    # G h+ = h+ - X+ psi along the flow (G = Z/2 moves frames by flow time)
    h = 1e-4
    hp = parry_cocycle(near_frames, psi, "+")
    dp = (parry_cocycle(flow_array(near_frames, "Z", h), psi, "+")
          - parry_cocycle(flow_array(near_frames, "Z", -h), psi, "+")) / (2 * h)
    np.testing.assert_allclose(dp, hp - psi.evaluate(near_frames, "X+"), atol=1e-6)
    hm = parry_cocycle(near_frames, psi, "-")
    dm = (parry_cocycle(flow_array(near_frames, "Z", h), psi, "-")
          - parry_cocycle(flow_array(near_frames, "Z", -h), psi, "-")) / (2 * h)
    np.testing.assert_allclose(dm, -hm - psi.evaluate(near_frames, "X-"), atol=1e-6)


def test_busemann_psi_constants():
    p, q, xi = 0.3 + 1.2j, -0.4 + 0.5j, 1.7
    assert busemann_psi(p, q, xi, constant_observable(1.0)) == pytest.approx(busemann(p, q, xi), abs=1e-12)
    assert busemann_psi(p, q, xi, constant_observable(2.5)) == pytest.approx(2.5 * busemann(p, q, xi), abs=1e-12)


def test_busemann_psi_level_set(psi):
    rng = np.random.default_rng(3)
    pts = base_points(random_frames(rng, 12, 0.6))
    for p, q in zip(pts[:3], pts[3:6]):
        xi = float(rng.normal())
        b = busemann_psi(p, q, xi, psi)
        w = reparam_flow(frame_towards(q, xi), b, psi)
        assert busemann_psi(p, w.base_point(), xi, psi) == pytest.approx(0.0, abs=1e-8)


def test_busemann_psi_cocycle(psi):
    rng = np.random.default_rng(4)
    p, q, r = base_points(random_frames(rng, 3, 0.6))
    xi = 0.8
    lhs = busemann_psi(p, q, xi, psi) + busemann_psi(q, r, xi, psi)
    assert lhs == pytest.approx(busemann_psi(p, r, xi, psi), abs=1e-9)


def test_gromov_psi_independent_of_point_on_geodesic(psi):
    p, xi, eta = 0.2 + 0.9j, -0.7, 1.3
    from geoflow.boundary_geom import geodesic_frame
    from geoflow.lie_core import flow
    a = gromov_product_psi(p, xi, eta, psi)
    for s in (-1.0, 0.4, 2.0):
        q = flow(geodesic_frame(xi, eta), "Z", s).base_point()
        assert gromov_product_psi(p, xi, eta, psi, q=q) == pytest.approx(a, abs=1e-9)


def test_cross_ratio_psi_constant_and_degenerate(psi):
    pts = (-1.0, 0.5, 2.0, 4.0)
    assert cross_ratio_psi(*pts, constant_observable(1.0)) == pytest.approx(cross_ratio(*pts), abs=1e-12)
    assert cross_ratio_psi(-1.0, 0.5, 2.0, 2.0, psi) == 0.0


def test_cross_ratio_psi_base_point_independent(psi):
    pts = (-0.6, 0.3, 1.1, 2.4)
    a = cross_ratio_psi(*pts, psi, p=1j)
    b = cross_ratio_psi(*pts, psi, p=0.4 + 0.6j)
    assert a == pytest.approx(b, abs=1e-8)


def test_dynamical_cross_ratio_psi(psi):
    rng = np.random.default_rng(5)
    for g in random_frames(rng, 2, 0.3):
        v = GroupElement.from_matrix(g)
        w = GroupElement.from_matrix(g @ random_frames(rng, 1, 0.4)[0])
        (a, c), (b, d) = endpoints(v), endpoints(w)
        t = dynamical_cross_ratio_psi(a, b, c, d, psi, v1=v)
        assert t == pytest.approx(-cross_ratio_psi(a, b, c, d, psi, p=v.base_point()), abs=1e-7)
        one = dynamical_cross_ratio_psi(a, b, c, d, constant_observable(1.0), v1=v)
        assert one == pytest.approx(dynamical_cross_ratio(a, b, c, d, v1=v)[0], abs=1e-9)


def test_holonomy_lands_on_target_geodesic(psi, near_frames):
    v = GroupElement.from_matrix(near_frames[0])
    w, _ = stable_holonomy_psi(v, 3.0, psi)
    assert endpoints(w)[0] == pytest.approx(3.0) and endpoints(w)[1] == pytest.approx(endpoints(v)[1])
    u, _ = unstable_holonomy_psi(v, -3.0, psi)
    assert endpoints(u)[1] == pytest.approx(-3.0) and endpoints(u)[0] == pytest.approx(endpoints(v)[0])


def test_quadrilateral_build():
    q = Quadrilateral.build(liouville_sample(20, 6), 0.05)
    assert q.closure_gap() <= 1e-12
    assert q.d5 == pytest.approx(CONVENTION.delta5_scale * math.log(1 + 0.05 ** 2))
    with pytest.raises(ValueError):
        Quadrilateral.build(np.eye(2), 0.3)


def test_tau_and_h_for_constants():
    frames = liouville_sample(5, 7)
    d5 = Quadrilateral.build(frames, 0.05).d5
    for c in (1.0, 1.7):
        psi = constant_observable(c)
        assert np.all(tau_delta(frames, 0.05, psi) == 0)
        for route in ("integral", "crossratio"):
            np.testing.assert_allclose(h_delta(frames, 0.05, psi, route=route), c * d5, atol=1e-12)


def test_h_delta_routes_agree(psi, near_frames):
    for d in (0.08, 0.05):
        a = h_delta(near_frames, d, psi, route="integral")
        b = h_delta(near_frames, d, psi, route="crossratio")
        np.testing.assert_allclose(a, b, atol=1e-6)
    with pytest.raises(ValueError):
        h_delta(near_frames, 0.05, psi, route="magic")


def test_tau_truncation_bound(psi, near_frames):
    d = 0.02
    gap = np.abs(tau_delta(near_frames, d, psi, truncated=True) - tau_delta(near_frames, d, psi))
    assert np.all(gap <= 4 * psi.c1_norm * d ** 3)


def test_fourth_leg_matches_shifted_start(psi, near_frames):
    # v4 = f^{d5} v, so the stable pair (v4, v3) equals the one started from the flowed v
    q = Quadrilateral.build(near_frames, 0.05)
    flowed = flow_array(near_frames, "Z", q.d5)
    a = pair_integral(psi, q.v3, q.deltas[3], "stable")
    b = pair_integral(psi, flowed, -q.deltas[3], "stable")
    np.testing.assert_allclose(a, -b, atol=1e-10)


def test_tau_parts_sum(psi, near_frames):
    tp, tm = tau_parts(near_frames, 0.05, psi)
    np.testing.assert_allclose(tp + tm, tau_delta(near_frames, 0.05, psi), atol=0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.005, 0.1), st.integers(0, 10 ** 6))
def test_constant_observable_scales_h_property(d, seed):
    frames = liouville_sample(2, seed)
    d5 = Quadrilateral.build(frames, d).d5
    np.testing.assert_allclose(h_delta(frames, d, constant_observable(0.8)), 0.8 * d5, atol=1e-13)
