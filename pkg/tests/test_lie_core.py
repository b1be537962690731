import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from geoflow.lie_core import (CONVENTION, X_MINUS, X_PLUS, Z, AlgebraVector, DegenerateInputError,
                              DomainError, FlowKind, GroupElement, cubic_quintuple, endpoints,
                              exp_array, exp_generator, flow, flow_array, frame_distance,
                              holonomy_closure_check, inverse_array, psl_distance,
                              quadrilateral_close, renormalize)

from conftest import random_frames

small = st.floats(-1.0, 1.0, allow_nan=False)
times = st.floats(-5.0, 5.0, allow_nan=False)
coords = st.tuples(small, small, small)


def _frame(c):
    from scipy.linalg import expm
    cm, c0, cp = c
    return GroupElement.from_matrix(expm(np.array([[0.5 * c0, cp], [cm, -0.5 * c0]])))


def test_exp_generator_closed_forms():
    assert exp_generator(FlowKind.XPLUS, 0.0).is_close(GroupElement.identity())
    np.testing.assert_array_equal(exp_generator("X+", 0.7).matrix, [[1, 0.7], [0, 1]])
    np.testing.assert_array_equal(exp_generator("X-", 0.7).matrix, [[1, 0], [0.7, 1]])
    np.testing.assert_allclose(exp_generator("Z", 2 * math.log(2)).matrix, np.diag([2, 0.5]),
                               atol=1e-15)


def test_exp_generator_rejects_non_finite():
    with pytest.raises(DomainError):
        exp_generator("X+", math.inf)
    with pytest.raises(DomainError):
        exp_generator("Z", math.nan)


def test_flow_kind_aliases():
    assert FlowKind.parse("z-flow") is FlowKind.Z
    assert FlowKind.parse("stable") is FlowKind.XPLUS
    assert FlowKind.parse("unstable") is FlowKind.XMINUS
    with pytest.raises(ValueError):
        FlowKind.parse("sideways")


def test_group_element_is_projective():
    g = _frame((0.3, -0.2, 0.5))
    minus = GroupElement.from_matrix(-g.matrix)
    assert g == minus
    assert abs(g.det - 1.0) <= 1e-12


def test_bracket_table():
    assert Z.bracket(X_PLUS).is_close(2 * X_PLUS, 0.0)
    assert Z.bracket(X_MINUS).is_close(-2 * X_MINUS, 0.0)
    assert X_PLUS.bracket(X_MINUS).is_close(Z, 0.0)


def test_geodesic_generator_and_rates():
    assert CONVENTION.geodesicGenerator == AlgebraVector(0.0, 0.5, 0.0)
    for t in (0.5, 1.0, 3.0):
        assert CONVENTION.contraction_rate(X_PLUS, t) == pytest.approx(math.exp(-t), rel=1e-14)
        assert CONVENTION.contraction_rate(X_MINUS, t) == pytest.approx(math.exp(t), rel=1e-14)


@given(coords, times)
def test_pushforward_of_stable_direction(c, t):
    # Ad(a_t^{-1}) X+ computed by matrix conjugation equals e^{-t} X+
    a = exp_generator("Z", t).matrix
    image = X_PLUS.adjoint(np.linalg.inv(a))
    assert image.is_close(math.exp(-t) * X_PLUS, 1e-12 * math.exp(abs(t)))


@given(coords, times, times)
def test_flow_is_one_parameter_group(c, s, t):
    v = _frame(c)
    for kind in ("Z", "X+", "X-"):
        lhs = flow(flow(v, kind, s), kind, t)
        rhs = flow(v, kind, s + t)
        assert lhs.distance(rhs) <= 1e-12 * max(1.0, np.abs(lhs.matrix).max()) * math.exp(abs(s) + abs(t))


@given(coords, st.floats(-1.0, 1.0))
def test_flow_inverse(c, r):
    v = _frame(c)
    assert flow(flow(v, "X+", r), "X+", -r).is_close(v, 1e-13)
    assert flow(v, "Z", 0.0) == v


@given(coords, times, st.floats(-1.0, 1.0))
def test_flow_commutation(c, t, r):
    # a horocycle step of r taken before flowing for time t is a step of e^{-t} r after it
    v = _frame(c)
    lhs = flow(flow(v, "X+", r), "Z", t)
    rhs = flow(flow(v, "Z", t), "X+", math.exp(-t) * r)
    assert lhs.distance(rhs) <= 1e-11 * max(1.0, np.abs(lhs.matrix).max())


def test_endpoints_reference_frames():
    assert endpoints(GroupElement.identity()) == (0.0, math.inf)
    for t in (-2.0, 0.5, 3.0):
        assert endpoints(exp_generator("Z", t)) == (0.0, math.inf)


def test_stable_horocycle_keeps_forward_endpoint():
    rng = np.random.default_rng(1)
    for g in random_frames(rng, 100):
        v = GroupElement.from_matrix(g)
        r = rng.normal()
        assert endpoints(flow(v, "X+", r))[1] == pytest.approx(endpoints(v)[1], rel=1e-10, abs=1e-10)
        assert endpoints(flow(v, "X-", r))[0] == pytest.approx(endpoints(v)[0], rel=1e-10, abs=1e-10)


def test_array_forms_match_scalar_forms():
    rng = np.random.default_rng(2)
    g = random_frames(rng, 20)
    t = rng.normal(size=20)
    for kind in ("Z", "X+", "X-"):
        batch = flow_array(g, kind, t)
        for k in range(20):
            single = flow(GroupElement.from_matrix(g[k]), kind, t[k])
            assert psl_distance(batch[k], single.matrix) <= 1e-12
        np.testing.assert_allclose(exp_array(kind, t)[3], exp_generator(kind, t[3]).matrix)
    np.testing.assert_allclose(inverse_array(g) @ g, np.broadcast_to(np.eye(2), g.shape), atol=1e-12)


def test_renormalize_controls_long_chains():
    # 10^6 flow steps arranged in closed commutator loops, so the exact product is the identity
    rng = np.random.default_rng(3)
    g = np.eye(2)[None]
    params = rng.uniform(-0.5, 0.5, size=(250_000, 2))
    for k, (t, r) in enumerate(params):
        g = flow_array(g, "Z", t)
        g = flow_array(g, "X+", r)
        g = flow_array(g, "Z", -t)
        g = flow_array(g, "X+", -math.exp(t) * r)
        if k % 64 == 0:
            g = renormalize(g)
    g = renormalize(g)
    assert abs(np.linalg.det(g[0]) - 1.0) <= 1e-12
    assert psl_distance(g[0], np.eye(2)) <= 1e-9


@pytest.mark.parametrize("d", [0.1, 0.01, 0.001])
def test_quadrilateral_closed_forms(d):
    d3, d4, d5 = quadrilateral_close(d, d)
    assert abs(d3 + d / (1 + d * d)) <= 1e-13
    assert abs(d4 + d * (1 + d * d)) <= 1e-13
    assert abs(d5 - CONVENTION.delta5_scale * math.log(1 + d * d)) <= 1e-13


def test_quadrilateral_examples():
    assert quadrilateral_close(0.0, 0.0) == (0.0, 0.0, 0.0)
    d3, d4, _ = quadrilateral_close(0.1, 0.1)
    kappa = 0.01 * 0.1 / (1 + 0.01)
    assert d3 == pytest.approx(-0.1 + kappa, abs=1e-16)
    assert d4 == pytest.approx(-0.101, abs=1e-15)
    assert abs(d4 + (0.1 + 0.1 ** 3 / 2)) == pytest.approx(0.1 ** 3 / 2, abs=1e-15)


def test_quadrilateral_brute_force_product():
    for d1, d2 in ((0.1, 0.1), (0.3, -0.2), (-0.05, 0.4)):
        d3, d4, d5 = quadrilateral_close(d1, d2)
        m = np.eye(2)
        for kind, r in (("X-", d1), ("X+", d2), ("X-", d3), ("X+", d4)):
            m = m @ exp_generator(kind, r).matrix
        np.testing.assert_allclose(m, exp_generator("Z", d5).matrix, atol=1e-14)


def test_quadrilateral_degenerate():
    with pytest.raises(DegenerateInputError):
        quadrilateral_close(1.0, -1.0)


def test_holonomy_closure_everywhere():
    rng = np.random.default_rng(4)
    for d in (0.1, 0.01):
        q = (d, d) + quadrilateral_close(d, d)
        assert holonomy_closure_check(GroupElement.identity(), *q) <= 1e-12
        gaps = [holonomy_closure_check(GroupElement.from_matrix(g), *q) for g in random_frames(rng, 100)]
        assert max(gaps) <= 1e-12


@pytest.mark.parametrize("d", [0.1, 0.01, 0.001])
def test_cubic_quintuple_window(d):
    q = cubic_quintuple(d)
    for x in q[:4]:
        assert abs(abs(x) - d) <= d ** 3
    assert abs(q[4] / CONVENTION.delta5_scale - d * d) <= d ** 3
    rng = np.random.default_rng(5)
    for g in random_frames(rng, 10, 2.0):
        gap = holonomy_closure_check(GroupElement.from_matrix(g), *q, metric="frame")
        assert gap <= 2 * d ** 3


def test_frame_distance_is_left_invariant():
    rng = np.random.default_rng(6)
    a, b, h = random_frames(rng, 3, 0.3)
    assert frame_distance(h @ a, h @ b) == pytest.approx(frame_distance(a, b), rel=1e-10)
