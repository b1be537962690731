"""Ideal-boundary geometry of the upper half-plane for the geodesic flow.

Boundary points are floats with ``math.inf`` standing for the point at
infinity; base points are complex numbers with positive imaginary part.
"""
from __future__ import annotations

import math

import numpy as np

from .lie_core import (DomainError, FlowKind, GroupElement, as_array, endpoints,
                       exp_generator, moebius)

INF = math.inf
_FAR = 1e6
# z -> -1/z
_INVERSION = np.array([[0.0, -1.0], [1.0, 0.0]])


class DegenerateGeodesicError(ValueError):
    """Two endpoints of a requested geodesic coincide."""


class NotHyperbolicError(ValueError):
    pass


class NoTransversalError(ValueError):
    """The target geodesic does not cross the requested leaf."""


def _check_base(z) -> complex:
    z = complex(z)
    if not (z.imag > 0 and math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"{z} is not a point of the upper half-plane")
    return z


def _check_boundary(xi) -> float:
    if isinstance(xi, complex):
        if xi.imag != 0:
            raise DomainError(f"{xi} is not on the boundary")
        xi = xi.real
    xi = float(xi)
    if math.isnan(xi) or xi == -INF:
        raise DomainError(f"{xi} is not on the boundary")
    return xi


def act(m, z: complex) -> complex:
    m = as_array(m)
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


def same_point(x, y, tol=1e-12) -> bool:
    if math.isinf(x) or math.isinf(y):
        return math.isinf(x) and math.isinf(y)
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def hyperbolic_distance(z, w) -> float:
    z, w = _check_base(z), _check_base(w)
    return math.acosh(1.0 + abs(z - w) ** 2 / (2.0 * z.imag * w.imag))


def busemann(p, q, xi) -> float:
    """b_p(q, xi): horospherical displacement of q relative to p towards xi."""
    p, q = _check_base(p), _check_base(q)
    xi = _check_boundary(xi)
    if not math.isinf(xi) and abs(xi) > _FAR:
        p, q = act(_INVERSION, p), act(_INVERSION, q)
        xi = -1.0 / xi
    if math.isinf(xi):
        return math.log(p.imag / q.imag)
    return math.log((abs(q - xi) ** 2 / q.imag) * (p.imag / abs(p - xi) ** 2))


def geodesic_point(xi, eta) -> complex:
    """Reference point on the geodesic (xi, eta): the apex, or x + i for vertical lines."""
    xi, eta = _check_boundary(xi), _check_boundary(eta)
    if same_point(xi, eta, 0.0):
        raise DegenerateGeodesicError("geodesic endpoints coincide")
    if math.isinf(xi):
        return complex(eta, 1.0)
    if math.isinf(eta):
        return complex(xi, 1.0)
    return complex(0.5 * (xi + eta), 0.5 * abs(xi - eta))


def geodesic_frame(xi, eta) -> GroupElement:
    """Frame on the geodesic from xi (backward) to eta (forward), at its reference point."""
    xi, eta = _check_boundary(xi), _check_boundary(eta)
    if same_point(xi, eta, 0.0):
        raise DegenerateGeodesicError("geodesic endpoints coincide")
    if math.isinf(eta):
        m = np.array([[1.0, xi], [0.0, 1.0]])
    elif math.isinf(xi):
        m = np.array([[eta, -1.0], [1.0, 0.0]])
    else:
        # columns are multiples of (eta, 1) and (xi, 1) so that g.inf = eta, g.0 = xi
        s = 1.0 / math.sqrt(abs(eta - xi))
        if eta > xi:
            m = np.array([[eta * s, xi * s], [s, s]])
        else:
            m = np.array([[-eta * s, xi * s], [-s, s]])
    g = GroupElement.from_matrix(m)
    # slide along the geodesic so that the base point is the reference point
    z = act(np.linalg.inv(g.matrix), geodesic_point(xi, eta))
    return g @ exp_generator(FlowKind.Z, math.log(z.imag))


def frame_towards(z, xi) -> GroupElement:
    """Frame based at z whose geodesic runs forward to xi."""
    z = _check_base(z)
    xi = _check_boundary(xi)
    s = math.sqrt(z.imag)
    gz = np.array([[s, z.real / s], [0.0, 1.0 / s]])
    if math.isinf(xi):
        return GroupElement.from_matrix(gz)
    u = moebius(np.linalg.inv(gz), xi)
    # rotation about i sending inf to u: k(th).inf = cot(th/2)
    th = 2.0 * math.atan2(1.0, u)
    k = np.array([[math.cos(th / 2), -math.sin(th / 2)], [math.sin(th / 2), math.cos(th / 2)]])
    return GroupElement.from_matrix(gz @ k)


def project_to_geodesic(p, xi, eta) -> complex:
    """Closest point to p on the geodesic (xi, eta)."""
    g = geodesic_frame(xi, eta).matrix
    w = act(np.linalg.inv(g), _check_base(p))
    return act(g, 1j * abs(w))


def gromov_product(p, xi, eta, variant="abs", q=None) -> float:
    """Gromov product at p of two boundary points.

    ``variant="raw"`` returns b_p(q, xi) + b_p(q, eta) for q on the geodesic
    (xi, eta); ``"abs"`` returns its absolute value.  The raw sum is never
    positive, so ``abs`` equals ``-raw``.
    """
    xi, eta = _check_boundary(xi), _check_boundary(eta)
    if same_point(xi, eta, 0.0):
        raise DegenerateGeodesicError("Gromov product of a point with itself")
    if q is None:
        q = geodesic_point(xi, eta)
    raw = busemann(p, q, xi) + busemann(p, q, eta)
    if variant == "raw":
        return raw
    if variant == "abs":
        return abs(raw)
    raise ValueError(f"unknown variant {variant!r}")


def cross_ratio(xi, xi2, eta, eta2, p=1j, variant="abs") -> float:
    """[xi, xi2, eta, eta2] = (b(xi,eta2) + b(xi2,eta)) - (b(xi,eta) + b(xi2,eta2)).

    ``xi, xi2`` play the role of backward endpoints and ``eta, eta2`` of
    forward endpoints in the dynamical interpretation.
    """
    vals = [_check_boundary(x) for x in (xi, xi2, eta, eta2)]
    xi, xi2, eta, eta2 = vals
    if same_point(xi, xi2, 0.0) or same_point(eta, eta2, 0.0):
        return 0.0

    def beta(a, b):
        return gromov_product(p, a, b, variant=variant)

    return (beta(xi, eta2) + beta(xi2, eta)) - (beta(xi, eta) + beta(xi2, eta2))


def axis(gamma) -> tuple:
    """(repelling fixed point, attracting fixed point, translation length)."""
    m = as_array(gamma)
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    tr = abs(a + d)
    if tr <= 2.0:
        raise NotHyperbolicError(f"|trace| = {tr} <= 2")
    length = 2.0 * math.acosh(tr / 2.0)
    scale = max(abs(a), abs(b), abs(c), abs(d))
    if abs(c) <= 1e-15 * scale:
        x = b / (d - a)
        # inf is attracting iff |a| > |d|
        return (x, INF, length) if abs(a) > abs(d) else (INF, x, length)
    disc = math.sqrt((d - a) ** 2 + 4.0 * b * c)
    roots = [((a - d) + disc) / (2 * c), ((a - d) - disc) / (2 * c)]
    # derivative of the Moebius map at a fixed point x is (cx + d)^{-2}
    gain = [abs(c * x + d) for x in roots]
    if gain[0] > gain[1]:
        return roots[1], roots[0], length
    return roots[0], roots[1], length


def leaf_intersection(v: GroupElement, target, kind="stable") -> GroupElement:
    """Point where the strong stable/unstable leaf of v meets a geodesic.

    stable: the geodesic (target, v+); the result is v.exp(r X+).
    unstable: the geodesic (v-, target); the result is v.exp(r X-).
    Both stay on the horosphere through the base point of v, so the relevant
    Busemann function vanishes at the answer.
    """
    target = _check_boundary(target)
    m = v.matrix
    local = moebius(np.linalg.inv(m), target)
    kind = FlowKind.parse(kind)
    if kind is FlowKind.XPLUS:
        if math.isinf(local):
            raise NoTransversalError("target coincides with the forward endpoint")
        return v @ exp_generator(FlowKind.XPLUS, local)
    if kind is FlowKind.XMINUS:
        if local == 0.0:
            raise NoTransversalError("target coincides with the backward endpoint")
        r = 0.0 if math.isinf(local) else 1.0 / local
        return v @ exp_generator(FlowKind.XMINUS, r)
    raise DomainError("leaf_intersection needs a stable or unstable kind")


def flow_time_between(v: GroupElement, w: GroupElement, tol=1e-9) -> float:
    """t with w = v.a_t, checking that w really lies on the orbit of v."""
    m = np.linalg.inv(v.matrix) @ w.matrix
    if m[0, 0] < 0:
        m = -m
    off = max(abs(m[0, 1]), abs(m[1, 0]))
    if off > tol * max(1.0, abs(m[0, 0]), abs(m[1, 1])):
        raise NoTransversalError(f"frames are not on a common orbit (off-diagonal {off:.3g})")
    return 2.0 * math.log(m[0, 0])


def dynamical_cross_ratio(xi, xi2, eta, eta2, v1=None) -> tuple:
    """Holonomy circuit around the four geodesics; returns (time, v1, v5).

    v1 on (xi, eta) -> stable to (xi2, eta) -> unstable to (xi2, eta2)
    -> stable to (xi, eta2) -> unstable back to (xi, eta) = v1 . a_time.
    """
    if v1 is None:
        v1 = geodesic_frame(xi, eta)
    v2 = leaf_intersection(v1, xi2, "stable")
    v3 = leaf_intersection(v2, eta2, "unstable")
    v4 = leaf_intersection(v3, xi, "stable")
    v5 = leaf_intersection(v4, eta, "unstable")
    return flow_time_between(v1, v5), v1, v5


__all__ = ["INF", "act", "axis", "busemann", "cross_ratio", "dynamical_cross_ratio",
           "endpoints", "flow_time_between", "frame_towards", "geodesic_frame",
           "geodesic_point", "gromov_product", "hyperbolic_distance", "leaf_intersection",
           "project_to_geodesic", "same_point"]
