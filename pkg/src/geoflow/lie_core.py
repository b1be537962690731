"""Exact algebra of PSL(2, R) viewed as the unit tangent bundle of H^2.

A frame is a unit-determinant real 2x2 matrix modulo sign.  Flows act by
right multiplication:

* geodesic flow      g -> g @ diag(e^{t/2}, e^{-t/2})
* stable horocycle   g -> g @ [[1, r], [0, 1]]      (generator X+)
* unstable horocycle g -> g @ [[1, 0], [r, 1]]      (generator X-)

With this normalisation the geodesic flow contracts X+ and expands X- at
rate exactly one.  Base point and endpoints come from the Moebius action
of the frame on i, infinity and 0.

Besides the scalar :class:`GroupElement` most routines have an array twin
working on stacks of matrices of shape ``(..., 2, 2)``; the heavy orbit
computations elsewhere in the package only use the array forms.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

DET_DRIFT = 1e-13


class DomainError(ValueError):
    """Raised for non-finite or otherwise invalid numerical input."""


class DegenerateInputError(ValueError):
    """Raised when a closed-form solve has no solution."""


class FlowKind(str, Enum):
    Z = "Z"
    XPLUS = "X+"
    XMINUS = "X-"

    @classmethod
    def parse(cls, kind) -> "FlowKind":
        if isinstance(kind, cls):
            return kind
        aliases = {"z": cls.Z, "z-flow": cls.Z, "flow": cls.Z, "geodesic": cls.Z,
                   "x+": cls.XPLUS, "xplus": cls.XPLUS, "stable": cls.XPLUS,
                   "x-": cls.XMINUS, "xminus": cls.XMINUS, "unstable": cls.XMINUS}
        try:
            return aliases[str(kind).lower()]
        except KeyError:
            raise DomainError(f"unknown flow kind {kind!r}") from None


class GroupElement:
    """Element of PSL(2, R) stored as a sign-normalised 2x2 matrix."""

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d, normalize=True):
        entries = (float(a), float(b), float(c), float(d))
        if not all(math.isfinite(x) for x in entries):
            raise DomainError("group element entries must be finite")
        a, b, c, d = entries
        if normalize:
            det = a * d - b * c
            if det <= 0:
                raise DomainError(f"determinant {det} is not positive")
            if abs(det - 1.0) > DET_DRIFT:
                s = math.sqrt(det)
                a, b, c, d = a / s, b / s, c / s, d / s
            big = max((a, b, c, d), key=abs)
            if big < 0:
                a, b, c, d = -a, -b, -c, -d
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d", d)

    def __setattr__(self, name, value):
        raise AttributeError("GroupElement is immutable")

    @classmethod
    def identity(cls) -> "GroupElement":
        return cls(1.0, 0.0, 0.0, 1.0)

    @classmethod
    def from_matrix(cls, m) -> "GroupElement":
        m = np.asarray(m, dtype=float)
        return cls(m[0, 0], m[0, 1], m[1, 0], m[1, 1])

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]])

    @property
    def det(self) -> float:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> float:
        return self.a + self.d

    def __matmul__(self, other: "GroupElement") -> "GroupElement":
        return GroupElement(self.a * other.a + self.b * other.c,
                            self.a * other.b + self.b * other.d,
                            self.c * other.a + self.d * other.c,
                            self.c * other.b + self.d * other.d)

    def inverse(self) -> "GroupElement":
        return GroupElement(self.d, -self.b, -self.c, self.a)

    def distance(self, other: "GroupElement") -> float:
        """Max-entry distance modulo the sign ambiguity."""
        m, n = self.matrix, other.matrix
        return float(min(np.abs(m - n).max(), np.abs(m + n).max()))

    def is_close(self, other: "GroupElement", tol=1e-12) -> bool:
        return self.distance(other) <= tol

    def moebius(self, x):
        """Action on the boundary R u {inf} (``math.inf`` is the point at infinity)."""
        return moebius(self.matrix, x)

    def base_point(self) -> complex:
        return complex(*_act_on_i(self.a, self.b, self.c, self.d))

    def __repr__(self):
        return f"GroupElement([[{self.a:.17g}, {self.b:.17g}], [{self.c:.17g}, {self.d:.17g}]])"

    def __eq__(self, other):
        return isinstance(other, GroupElement) and self.distance(other) == 0.0

    def __hash__(self):
        return hash((self.a, self.b, self.c, self.d))


def _act_on_i(a, b, c, d):
    den = c * c + d * d
    return (a * c + b * d) / den, (a * d - b * c) / den


def as_array(g) -> np.ndarray:
    """Matrix stack for a GroupElement, a list of them, or an array."""
    if isinstance(g, GroupElement):
        return g.matrix
    if isinstance(g, (list, tuple)) and g and isinstance(g[0], GroupElement):
        return np.stack([x.matrix for x in g])
    return np.asarray(g, dtype=float)


def moebius(m, x):
    """Moebius action of the matrix ``m`` on a boundary point ``x``."""
    a, b, c, d = m[0][0], m[0][1], m[1][0], m[1][1]
    if math.isinf(x):
        return math.inf if c == 0 else a / c
    den = c * x + d
    if den == 0:
        return math.inf
    return (a * x + b) / den


@dataclass(frozen=True)
class AlgebraVector:
    """Element cMinus*X- + cZ*Z + cPlus*X+ of sl(2, R), Z = diag(1, -1)."""

    cMinus: float = 0.0
    cZ: float = 0.0
    cPlus: float = 0.0

    @classmethod
    def from_matrix(cls, m) -> "AlgebraVector":
        m = np.asarray(m, dtype=float)
        return cls(float(m[1, 0]), float(0.5 * (m[0, 0] - m[1, 1])), float(m[0, 1]))

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.cZ, self.cPlus], [self.cMinus, -self.cZ]])

    def frame_coords(self) -> tuple:
        """Coordinates against (X-, G, X+) where G = Z/2 generates the geodesic flow."""
        return (self.cMinus, 2.0 * self.cZ, self.cPlus)

    def bracket(self, other: "AlgebraVector") -> "AlgebraVector":
        a, b = self.matrix, other.matrix
        return AlgebraVector.from_matrix(a @ b - b @ a)

    def adjoint(self, g) -> "AlgebraVector":
        """Ad(g) applied to this vector, i.e. g X g^{-1}."""
        m = as_array(g)
        return AlgebraVector.from_matrix(m @ self.matrix @ np.linalg.inv(m))

    def __add__(self, other):
        return AlgebraVector(self.cMinus + other.cMinus, self.cZ + other.cZ, self.cPlus + other.cPlus)

    def __mul__(self, s):
        return AlgebraVector(s * self.cMinus, s * self.cZ, s * self.cPlus)

    __rmul__ = __mul__

    def is_close(self, other, tol=1e-12) -> bool:
        return max(abs(self.cMinus - other.cMinus), abs(self.cZ - other.cZ),
                   abs(self.cPlus - other.cPlus)) <= tol


X_MINUS = AlgebraVector(1.0, 0.0, 0.0)
Z = AlgebraVector(0.0, 1.0, 0.0)
X_PLUS = AlgebraVector(0.0, 0.0, 1.0)


@dataclass(frozen=True)
class FlowConvention:
    """The frozen flow normalisation used throughout the package.

    ``delta5_scale`` converts a closing time written for the rate-two,
    opposite-orientation normalisation (flow time ``log(1 + d1*d2)``) into
    the time of this convention, ``-2 log(1 + d1*d2)``.
    """

    geodesicGenerator: AlgebraVector = AlgebraVector(0.0, 0.5, 0.0)
    stableGenerator: AlgebraVector = X_PLUS
    unstableGenerator: AlgebraVector = X_MINUS
    delta5_scale: float = -2.0

    def contraction_rate(self, generator: AlgebraVector, t: float = 1.0) -> float:
        """Factor c with Ad(a_t^{-1}) X = c X for a frame generator X."""
        m = exp_generator(FlowKind.Z, -t).matrix
        image = generator.adjoint(m)
        ref = generator.cPlus if generator.cPlus else generator.cMinus
        got = image.cPlus if generator.cPlus else image.cMinus
        return got / ref


CONVENTION = FlowConvention()


def _check_finite(r):
    if not math.isfinite(r):
        raise DomainError(f"parameter {r!r} is not finite")


def exp_generator(kind, r: float) -> GroupElement:
    """Closed-form one-parameter subgroup for the geodesic or a horocycle generator."""
    kind = FlowKind.parse(kind)
    r = float(r)
    _check_finite(r)
    if kind is FlowKind.Z:
        e = math.exp(0.5 * r)
        return GroupElement(e, 0.0, 0.0, 1.0 / e)
    if kind is FlowKind.XPLUS:
        return GroupElement(1.0, r, 0.0, 1.0)
    return GroupElement(1.0, 0.0, r, 1.0)


def flow(v: GroupElement, kind, t: float) -> GroupElement:
    return v @ exp_generator(kind, t)


def endpoints(v: GroupElement) -> tuple:
    """(v-, v+) = (v.0, v.inf)."""
    m = v.matrix
    return moebius(m, 0.0), moebius(m, math.inf)


# ---------------------------------------------------------------- array forms

def exp_array(kind, r) -> np.ndarray:
    """Stack of closed-form exponentials, one per entry of ``r``."""
    kind = FlowKind.parse(kind)
    r = np.asarray(r, dtype=float)
    out = np.zeros(r.shape + (2, 2))
    if kind is FlowKind.Z:
        e = np.exp(0.5 * r)
        out[..., 0, 0] = e
        out[..., 1, 1] = 1.0 / e
    else:
        out[..., 0, 0] = 1.0
        out[..., 1, 1] = 1.0
        if kind is FlowKind.XPLUS:
            out[..., 0, 1] = r
        else:
            out[..., 1, 0] = r
    return out


def flow_array(g: np.ndarray, kind, t) -> np.ndarray:
    """Right-multiply each frame by the matching exponential (broadcasting ``t``)."""
    kind = FlowKind.parse(kind)
    g = np.asarray(g, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.empty(np.broadcast_shapes(g.shape, t.shape + (2, 2)))
    if kind is FlowKind.Z:
        e = np.exp(0.5 * t)
        out[..., :, 0] = g[..., :, 0] * e[..., None]
        out[..., :, 1] = g[..., :, 1] / e[..., None]
    elif kind is FlowKind.XPLUS:
        out[..., :, 0] = g[..., :, 0]
        out[..., :, 1] = g[..., :, 1] + t[..., None] * g[..., :, 0]
    else:
        out[..., :, 0] = g[..., :, 0] + t[..., None] * g[..., :, 1]
        out[..., :, 1] = g[..., :, 1]
    return out


def renormalize(g: np.ndarray) -> np.ndarray:
    """Divide by sqrt(det) wherever the determinant drifted by more than DET_DRIFT."""
    det = g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]
    bad = np.abs(det - 1.0) > DET_DRIFT
    if np.any(bad):
        g = g.copy()
        g[bad] /= np.sqrt(det[bad])[..., None, None]
    return g


def inverse_array(g: np.ndarray) -> np.ndarray:
    out = np.empty_like(g)
    out[..., 0, 0] = g[..., 1, 1]
    out[..., 1, 1] = g[..., 0, 0]
    out[..., 0, 1] = -g[..., 0, 1]
    out[..., 1, 0] = -g[..., 1, 0]
    return out


def base_points(g: np.ndarray) -> np.ndarray:
    """Complex base points g.i of a stack of frames."""
    a, b, c, d = g[..., 0, 0], g[..., 0, 1], g[..., 1, 0], g[..., 1, 1]
    den = c * c + d * d
    return ((a * c + b * d) + 1j * (a * d - b * c)) / den


def psl_distance(g: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Max-entry distance modulo sign for matrix stacks."""
    d1 = np.abs(g - h).max(axis=(-2, -1))
    d2 = np.abs(g + h).max(axis=(-2, -1))
    return np.minimum(d1, d2)


def frame_log(g) -> AlgebraVector:
    """Logarithm of a frame close to the identity (sign chosen so trace > 0)."""
    m = as_array(g)
    if m[0, 0] + m[1, 1] < 0:
        m = -m
    half = 0.5 * (m[0, 0] + m[1, 1])
    k = m - half * np.eye(2)
    if half > 1.0:
        th = math.acosh(half)
        s = th / math.sinh(th)
    elif half < 1.0:
        th = math.acos(max(-1.0, half))
        s = th / math.sin(th) if th > 0 else 1.0
    else:
        s = 1.0
    return AlgebraVector.from_matrix(s * k)


def frame_distance(v, w) -> float:
    """Left-invariant distance proxy: Euclidean norm of log(v^{-1} w) in (X-, G, X+) coordinates."""
    m = np.linalg.inv(as_array(v)) @ as_array(w)
    return float(np.linalg.norm(frame_log(m).frame_coords()))


# ------------------------------------------------------- closing quadrilateral

def quadrilateral_close(d1: float, d2: float) -> tuple:
    """Exact (d3, d4, d5) closing exp(d1 X-) exp(d2 X+) exp(d3 X-) exp(d4 X+) = a_{d5}.

    Solved from the 2x2 product: the lower-left entry fixes d3, the
    upper-right entry fixes d4 and the remaining diagonal matrix is read
    off as a geodesic time.
    """
    _check_finite(d1)
    _check_finite(d2)
    p = exp_generator(FlowKind.XMINUS, d1).matrix @ exp_generator(FlowKind.XPLUS, d2).matrix
    if p[1, 1] == 0:
        raise DegenerateInputError("product cannot be brought to diagonal form")
    d3 = -p[1, 0] / p[1, 1]
    q = p @ np.array([[1.0, 0.0], [d3, 1.0]])
    if q[0, 0] == 0:
        raise DegenerateInputError("product cannot be brought to diagonal form")
    d4 = -q[0, 1] / q[0, 0]
    lam = q[0, 0]
    if lam <= 0:
        raise DegenerateInputError("closing element is not a geodesic translation")
    return float(d3), float(d4), float(2.0 * math.log(lam))


def cubic_quintuple(delta: float) -> tuple:
    """Approximate symmetric quintuple with the cubic-order closing values.

    d3 = -d + k(d) with k(x) = d^2 x / (1 + d x), d4 = -(d + d^3/2) and the
    closing time log(1 + d^2) rescaled into this package's convention.
    """
    kappa = delta ** 2 * delta / (1.0 + delta * delta)
    d3 = -delta + kappa
    d4 = -(delta + delta ** 3 / 2.0)
    d5 = CONVENTION.delta5_scale * math.log(1.0 + delta * delta)
    return delta, delta, d3, d4, d5


def holonomy_closure_check(w: GroupElement, d1, d2, d3, d4, d5, metric="matrix") -> float:
    """Gap between the four horocycle moves applied at w and the time-d5 geodesic image of w.

    ``metric="matrix"`` is the max-entry distance of the two matrices, which
    grows with the size of w; ``"frame"`` is the left-invariant
    :func:`frame_distance`, the same for every w.
    """
    path = w.matrix
    for kind, r in ((FlowKind.XMINUS, d1), (FlowKind.XPLUS, d2),
                    (FlowKind.XMINUS, d3), (FlowKind.XPLUS, d4)):
        path = path @ exp_generator(kind, r).matrix
    target = w.matrix @ exp_generator(FlowKind.Z, d5).matrix
    if metric == "frame":
        return frame_distance(target, path)
    if metric != "matrix":
        raise ValueError(f"unknown metric {metric!r}")
    return float(psl_distance(path, target))
