import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoflow.fuchsian import (Bump, ConfigurationError, InvariantObservable, constant_observable,
                              default_domain, liouville_sample, max_bump_radius, octagon_group,
                              reduce)
from geoflow.lie_core import GroupElement, flow_array, frame_distance, psl_distance

from conftest import random_frames


def test_octagon_relation_and_generators():
    group = octagon_group()
    assert group.relation_residual() <= 1e-9
    traces = [abs(np.trace(m)) for m in group.generator_matrices]
    assert min(traces) > 2
    assert max(traces) - min(traces) <= 1e-12
    # Bolza surface systole: 2 arccosh(1 + sqrt 2)
    assert group.systole == pytest.approx(2 * math.acosh(1 + math.sqrt(2)), rel=1e-12)


def test_word_ball_is_discrete():
    for word, m in octagon_group().word_ball(2):
        if word:
            assert psl_distance(m, np.eye(2)) > 1e-6


def test_reduction_examples():
    domain = default_domain()
    g = GroupElement.identity()
    gamma, g0 = reduce(g)
    assert gamma.is_close(g) and g0.is_close(g)
    rng = np.random.default_rng(0)
    frames = random_frames(rng, 100, 2.0)
    words = [m for _, m in octagon_group().word_ball(3)]
    g0 = domain.reduce_array(frames)
    assert np.all(domain.contains(g0))
    np.testing.assert_allclose(domain.reduce_array(g0), g0)
    gamma, g0b = domain.reduce_array(frames, return_gamma=True)
    assert psl_distance(gamma @ g0b, frames).max() <= 1e-9
    for k, g in enumerate(frames):
        moved = words[rng.integers(len(words))] @ g
        h0 = domain.reduce_array(moved[None])[0]
        # forming gamma g loses digits in proportion to its squared size
        tol = max(1e-10, 1e-15 * ((moved ** 2).sum() + (g ** 2).sum()))
        assert frame_distance(h0, g0[k]) <= tol


def test_reduced_base_point_is_nearest_to_i():
    domain = default_domain()
    rng = np.random.default_rng(1)
    g0 = domain.reduce_array(random_frames(rng, 50, 3.0))
    def cosh_dist(m):
        return (m ** 2).sum(axis=(-2, -1)) / 2
    for s in octagon_group().generator_matrices:
        assert np.all(cosh_dist(s @ g0) >= cosh_dist(g0) * (1 - 1e-12))


def test_constant_observable():
    psi = constant_observable(1.3)
    frames = liouville_sample(100, 0)
    assert np.all(psi.evaluate(frames) == 1.3)
    for d in ("X-", "X+", "Z", ("X+", "X-")):
        assert np.all(psi.evaluate(frames, d) == 0.0)
    assert psi.is_constant


def test_observable_validation():
    with pytest.raises(ConfigurationError):
        InvariantObservable(0.0)
    with pytest.raises(ConfigurationError):
        InvariantObservable(1.0, [Bump(GroupElement.identity(), 1.2, 0.5)])
    with pytest.raises(ConfigurationError):
        InvariantObservable(1.0, [Bump(GroupElement.identity(), 0.1, max_bump_radius() + 0.01)])
    with pytest.raises(ValueError):
        InvariantObservable(1.0, [Bump(GroupElement.identity(), 0.1, 0.5)]).evaluate(
            np.eye(2), ("X+", "X-", "Z"))


def test_exact_invariance(psi):
    rng = np.random.default_rng(2)
    frames = random_frames(rng, 200, 0.6)
    words = [m for _, m in octagon_group().word_ball(3)]
    moved = np.stack([words[rng.integers(len(words))] @ g for g in frames])
    # roundoff of the product gamma g, amplified by the derivative bounds
    size = (moved ** 2).sum(axis=(1, 2))
    for d, bound in ((None, psi.c1_norm), ("X+", psi.c2_norm), ("X-", psi.c2_norm), ("Z", psi.c2_norm)):
        tol = np.maximum(1e-12, 1e-15 * size * bound)
        assert np.all(np.abs(psi.evaluate(moved, d) - psi.evaluate(frames, d)) <= tol)


def test_positive_and_bounded(psi):
    vals = psi.evaluate(liouville_sample(20_000, 3))
    assert vals.min() >= psi.lower_bound > 0
    assert vals.max() <= psi.sup
    # the bump peaks at the identity frame
    assert psi.evaluate(np.eye(2)) == pytest.approx(1.1)


@pytest.mark.parametrize("direction", ["X-", "X+", "Z"])
def test_derivatives_match_richardson_differences(psi, near_frames, direction):
    def diff(h):
        return (psi.evaluate(flow_array(near_frames, direction, h))
                - psi.evaluate(flow_array(near_frames, direction, -h))) / (2 * h)
    # the frame field G = Z/2 generates flow_array(., "Z", t)
    est = (4 * diff(5e-5) - diff(1e-4)) / 3
    np.testing.assert_allclose(psi.evaluate(near_frames, direction), est, atol=1e-8)


def test_one_sided_difference_is_first_order(psi, near_frames):
    exact = psi.evaluate(near_frames, "X-")
    errs = [np.abs((psi.evaluate(flow_array(near_frames, "X-", h)) - psi.evaluate(near_frames)) / h
                   - exact).max() for h in (1e-4, 5e-5)]
    assert errs[1] < errs[0] and errs[1] <= 1e-3


def test_second_derivatives(psi, near_frames):
    h = 1e-4
    for a in ("X-", "Z", "X+"):
        for b in ("X-", "X+"):
            est = (psi.evaluate(flow_array(near_frames, a, h), b)
                   - psi.evaluate(flow_array(near_frames, a, -h), b)) / (2 * h)
            np.testing.assert_allclose(psi.evaluate(near_frames, (a, b)), est, atol=1e-5)


def test_derivative_bounds_dominate_samples(psi):
    frames = liouville_sample(20_000, 4)
    d1, d2 = psi.derivative_bounds
    for d in ("X-", "X+", "Z"):
        assert np.abs(psi.evaluate(frames, d)).max() <= d1
    assert psi.c1_norm >= psi.sup and psi.c2_norm >= psi.c1_norm


def test_flipped_observable(psi):
    frames = liouville_sample(100, 5)
    k = np.array([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_array_equal(psi.flipped().evaluate(frames), psi.evaluate(frames @ k))
    assert psi.flipped().flipped() is psi


def test_liouville_sampling_properties(psi):
    a = liouville_sample(500, 7)
    np.testing.assert_array_equal(a, liouville_sample(500, 7))
    assert np.all(default_domain().contains(a))
    _, eff = liouville_sample(1000, 8, return_efficiency=True)
    assert eff > 1e-3
    with pytest.raises(ValueError):
        liouville_sample(0, 1)


def _mean_err(x):
    return x.mean(), x.std(ddof=1) / math.sqrt(len(x))


@pytest.mark.parametrize("kind", ["Z", "X+", "X-"])
def test_liouville_measure_is_flow_invariant(psi, kind):
    frames = liouville_sample(100_000, 9)
    m0, e0 = _mean_err(psi.evaluate(frames))
    m1, e1 = _mean_err(psi.evaluate(flow_array(frames, kind, 1.0)))
    assert abs(m1 - m0) <= 3 * math.hypot(e0, e1)


def test_two_seeds_agree(psi):
    m0, e0 = _mean_err(psi.evaluate(liouville_sample(100_000, 10)))
    m1, e1 = _mean_err(psi.evaluate(liouville_sample(100_000, 11)))
    assert abs(m1 - m0) <= 3 * math.hypot(e0, e1)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_reduction_idempotent_property(c):
    from scipy.linalg import expm
    g = expm(np.array([[0.5 * c[1], c[2]], [c[0], -0.5 * c[1]]]))
    domain = default_domain()
    g0 = domain.reduce_array(g[None])
    np.testing.assert_array_equal(domain.reduce_array(g0), g0)
