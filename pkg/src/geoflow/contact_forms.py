"""Frame 1-forms on SM, their line integrals and exterior derivatives.

A 1-form is stored by its coefficients against the coframe (a-, a, a+)
dual to the frame (X-, G, X+), where G = Z/2 generates the geodesic flow.
The frame brackets

    [X-, G] = X-,   [G, X+] = X+,   [X-, X+] = -2 G

give, for theta = (a-, a0, a+),

    d theta(X-, G)  = X-(a0) - G(a-) - a-
    d theta(X-, X+) = X-(a+) - X+(a-) + 2 a0
    d theta(G, X+)  = G(a+) - X+(a0) - a+

so that d alpha+ = alpha+ ^ alpha, d alpha- = -alpha- ^ alpha and
d alpha = -2 alpha+ ^ alpha-.

The invariant form alpha_psi of the time change is only continuous; its
line integrals along flow and horocycle segments are evaluated with the
orbit-pair integrals of :mod:`geoflow.reparam`, and everything about its
exterior derivative is read off loop circulations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm, logm

from .fuchsian import liouville_sample
from .lie_core import AlgebraVector, FlowKind, as_array, exp_array, flow_array, psl_distance
from .reparam import (DEFAULT_SPEC, QuadratureSpec, Quadrilateral, flow_integral, pair_integral,
                      parry_cocycle, reparam_flow)

_DIRS = ("X-", "Z", "X+")
_KIND = {"X-": FlowKind.XMINUS, "Z": FlowKind.Z, "X+": FlowKind.XPLUS}


class UnsupportedPathError(ValueError):
    pass


class GeometryError(ValueError):
    pass


# ----------------------------------------------------------- coefficients

class Coefficient:
    """Function on frames with derivatives along X-, G ("Z") and X+."""

    def __call__(self, g) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, g, direction: str, h=1e-4) -> np.ndarray:
        """Central difference along the frame field with one Richardson step."""
        kind = _KIND[direction]

        def central(step):
            return (self(flow_array(g, kind, step)) - self(flow_array(g, kind, -step))) / (2 * step)

        return (4.0 * central(h / 2) - central(h)) / 3.0

    def is_zero(self) -> bool:
        return False


class ConstantCoefficient(Coefficient):
    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, g):
        return np.full(len(g), self.value)

    def derivative(self, g, direction, h=1e-4):
        return np.zeros(len(g))

    def is_zero(self):
        return self.value == 0.0


class ObservableCoefficient(Coefficient):
    """scale * psi with analytic frame derivatives."""

    def __init__(self, psi, scale=1.0):
        self.psi, self.scale = psi, float(scale)

    def __call__(self, g):
        return self.scale * self.psi.evaluate(g)

    def derivative(self, g, direction, h=1e-4):
        return self.scale * self.psi.evaluate(g, direction)

    def is_zero(self):
        return self.scale == 0.0


class FunctionCoefficient(Coefficient):
    """Arbitrary vectorised function of a frame stack (derivatives by differences)."""

    def __init__(self, fn, step=1e-4):
        self.fn, self.step = fn, step

    def __call__(self, g):
        return np.asarray(self.fn(g), dtype=float)

    def derivative(self, g, direction, h=None):
        return Coefficient.derivative(self, g, direction, self.step if h is None else h)


class _Combination(Coefficient):
    def __init__(self, terms):
        self.terms = [(float(c), f) for c, f in terms if c != 0 and not f.is_zero()]

    def __call__(self, g):
        out = np.zeros(len(g))
        for c, f in self.terms:
            out += c * f(g)
        return out

    def derivative(self, g, direction, h=1e-4):
        out = np.zeros(len(g))
        for c, f in self.terms:
            out += c * f.derivative(g, direction, h)
        return out

    def is_zero(self):
        return not self.terms


def _coefficient(c) -> Coefficient:
    if isinstance(c, Coefficient):
        return c
    if isinstance(c, (int, float)):
        return ConstantCoefficient(c)
    if hasattr(c, "evaluate"):
        return ObservableCoefficient(c)
    if callable(c):
        return FunctionCoefficient(c)
    raise TypeError(f"cannot use {c!r} as a form coefficient")


# ------------------------------------------------------------------ forms

class FrameOneForm:
    """theta = aMinus alpha- + aZero alpha + aPlus alpha+."""

    def __init__(self, a_minus=0.0, a_zero=0.0, a_plus=0.0, name="form"):
        self.coeffs = (_coefficient(a_minus), _coefficient(a_zero), _coefficient(a_plus))
        self.name = name

    @property
    def a_minus(self):
        return self.coeffs[0]

    @property
    def a_zero(self):
        return self.coeffs[1]

    @property
    def a_plus(self):
        return self.coeffs[2]

    def coefficients(self, g) -> np.ndarray:
        g = as_array(g).reshape(-1, 2, 2)
        return np.stack([c(g) for c in self.coeffs], axis=1)

    def __call__(self, g, vector: AlgebraVector):
        """theta_g(vector), vector given in the (X-, Z, X+) algebra basis."""
        scalar = as_array(g).ndim == 2
        w = np.array(vector.frame_coords())
        out = self.coefficients(g) @ w
        return float(out[0]) if scalar else out

    def __add__(self, other: "FrameOneForm") -> "FrameOneForm":
        return combine(1.0, self, 1.0, other)

    def __rmul__(self, s: float) -> "FrameOneForm":
        return combine(s, self, 0.0, self)

    def exterior(self, g, components=("-0", "-+", "0+"), h=1e-4) -> dict:
        """Requested values of d theta on frame pairs: "-0" = (X-, G), "-+" = (X-, X+), "0+" = (G, X+)."""
        g = as_array(g).reshape(-1, 2, 2)
        am, a0, ap = self.coeffs
        out = {}
        for comp in components:
            if comp == "-0":
                out[comp] = a0.derivative(g, "X-", h) - am.derivative(g, "Z", h) - am(g)
            elif comp == "-+":
                out[comp] = ap.derivative(g, "X-", h) - am.derivative(g, "X+", h) + 2.0 * a0(g)
            elif comp == "0+":
                out[comp] = ap.derivative(g, "Z", h) - a0.derivative(g, "X+", h) - ap(g)
            else:
                raise ValueError(f"unknown component {comp!r}")
        return out


def combine(c1: float, f1: FrameOneForm, c2: float, f2: FrameOneForm, name="combination"):
    """c1 f1 + c2 f2 with derivatives passed through linearly."""
    coeffs = [_Combination([(c1, a), (c2, b)]) for a, b in zip(f1.coeffs, f2.coeffs)]
    return FrameOneForm(*coeffs, name=name)


ALPHA = FrameOneForm(0.0, 1.0, 0.0, name="alpha")
ALPHA_PLUS = FrameOneForm(0.0, 0.0, 1.0, name="alpha+")
ALPHA_MINUS = FrameOneForm(1.0, 0.0, 0.0, name="alpha-")


def canonical_forms() -> dict:
    return {"alpha": ALPHA, "alpha+": ALPHA_PLUS, "alpha-": ALPHA_MINUS}


class _CocycleCoefficient(Coefficient):
    def __init__(self, psi, side, spec):
        self.psi, self.side, self.spec = psi, side, spec
        # fixed horizon so that difference quotients see one smooth function
        self.horizon = spec.horizon(psi.derivative_bounds[0]) if not psi.is_constant else 0.0

    def __call__(self, g):
        return -np.atleast_1d(parry_cocycle(g, self.psi, self.side, self.spec, self.horizon))

    def is_zero(self):
        return self.psi.is_constant


class AlphaPsi(FrameOneForm):
    """alpha_psi = psi alpha - h- alpha- - h+ alpha+, the canonical form of the time change."""

    def __init__(self, psi, spec: QuadratureSpec = DEFAULT_SPEC):
        self.psi, self.spec = psi, spec
        super().__init__(_CocycleCoefficient(psi, "-", spec), ObservableCoefficient(psi),
                         _CocycleCoefficient(psi, "+", spec), name="alpha_psi")

    def invariant_fields(self, g) -> tuple:
        """Frame coordinates (X-, G, X+) of X_{-,psi} = X- + h- Z_psi and X_{+,psi} = X+ + h+ Z_psi."""
        g = as_array(g).reshape(-1, 2, 2)
        hm = np.atleast_1d(parry_cocycle(g, self.psi, "-", self.spec))
        hp = np.atleast_1d(parry_cocycle(g, self.psi, "+", self.spec))
        psi = self.psi.evaluate(g)
        one, zero = np.ones(len(g)), np.zeros(len(g))
        return (np.stack([one, hm / psi, zero], axis=1), np.stack([zero, hp / psi, one], axis=1))


def alpha_psi(psi, spec: QuadratureSpec = DEFAULT_SPEC) -> AlphaPsi:
    return AlphaPsi(psi, spec)


# ------------------------------------------------------------------ paths

@dataclass(frozen=True)
class Segment:
    """Orbit piece of one frame field; "psi" segments run for time ``duration`` of F_psi."""

    kind: str
    start: np.ndarray
    duration: float
    sigma: float = float("nan")

    @property
    def geodesic_time(self) -> float:
        return self.sigma if self.kind == "psi" else self.duration

    @property
    def field(self) -> str:
        return "Z" if self.kind == "psi" else self.kind

    def end(self) -> np.ndarray:
        return flow_array(self.start, _KIND[self.field], self.geodesic_time)


def _kind_name(kind) -> str:
    if str(kind).lower() in ("psi", "psi-flow", "z_psi"):
        return "psi"
    return FlowKind.parse(kind).value


class SegmentPath:
    """Concatenation of frame-field segments."""

    def __init__(self, segments=()):
        self.segments = list(segments)
        self._cursor = None
        for a, b in zip(self.segments, self.segments[1:]):
            if psl_distance(a.end(), b.start) > 1e-11:
                raise UnsupportedPathError("consecutive segments do not match up")

    @classmethod
    def start_at(cls, v) -> "SegmentPath":
        path = cls()
        path._cursor = as_array(v).copy()
        return path

    @property
    def start(self) -> np.ndarray:
        if self.segments:
            return self.segments[0].start
        return self._cursor

    @property
    def end(self) -> np.ndarray:
        if self.segments:
            return self.segments[-1].end()
        return self._cursor

    def then(self, kind, duration: float, psi=None) -> "SegmentPath":
        kind = _kind_name(kind)
        if not math.isfinite(duration):
            raise UnsupportedPathError("segment durations must be finite")
        start = self.end
        if kind == "psi":
            if psi is None:
                raise UnsupportedPathError("a psi-flow segment needs the observable")
            _, sigma = reparam_flow(start, duration, psi, return_sigma=True)
            seg = Segment(kind, start, float(duration), float(sigma))
        else:
            seg = Segment(kind, start, float(duration))
        out = SegmentPath(self.segments + [seg])
        return out

    def __add__(self, other: "SegmentPath") -> "SegmentPath":
        return SegmentPath(self.segments + other.segments)

    def reversed(self) -> "SegmentPath":
        segs = []
        for s in reversed(self.segments):
            if s.kind == "psi":
                segs.append(Segment("Z", s.end(), -s.sigma))
            else:
                segs.append(Segment(s.kind, s.end(), -s.duration))
        return SegmentPath(segs)

    def closure_gap(self) -> float:
        return float(psl_distance(self.start, self.end))

    def is_closed(self, tol=1e-10) -> bool:
        return self.closure_gap() <= tol


def quadrilateral_path(v, delta: float) -> SegmentPath:
    """Loop through v: geodesic segment of length d5, then the four horocycle legs backwards.

    With this orientation the alpha-circulation is d5 and the
    alpha_psi-circulation is the temporal distance h_delta(v).
    """
    q = Quadrilateral.build(v, delta)
    d1, d2, d3, d4, d5 = q.deltas
    path = SegmentPath.start_at(as_array(v))
    for kind, r in (("Z", d5), ("X+", -d4), ("X-", -d3), ("X+", -d2), ("X-", -d1)):
        path = path.then(kind, r)
    return path


def commutator_path(v, first: str, second: str, t: float, r: float) -> SegmentPath:
    """Closed loop: first by t, second by r, first by -t, then second by the closing amount.

    Only defined for first = "Z"; the conjugated horocycle step is scaled by e^{-+t}.
    """
    if first != "Z" or second not in ("X+", "X-"):
        raise UnsupportedPathError("closed commutator loops need a geodesic and a horocycle leg")
    back = -(math.exp(t) if second == "X+" else math.exp(-t)) * r
    return (SegmentPath.start_at(as_array(v)).then("Z", t).then(second, r).then("Z", -t)
            .then(second, back))


# ------------------------------------------------------------ integration

def _generic_segment_integrals(form: FrameOneForm, frames, fields, lengths, spec):
    """int_0^L theta_{g e^{sY}}(Y) ds for a batch of segments of assorted fields."""
    out = np.zeros(len(frames))
    for name in ("X-", "Z", "X+"):
        idx = np.nonzero(fields == name)[0]
        if len(idx) == 0:
            continue
        g, length = frames[idx], lengths[idx]
        top = np.abs(length).max()
        if top == 0:
            continue
        x, w = spec.rule(top)
        x, w = x / top, w / top
        col = _DIRS.index(name)
        pts = flow_array(g[None], _KIND[name], length[None, :] * x[:, None])
        vals = form.coeffs[col](pts.reshape(-1, 2, 2)).reshape(len(x), len(idx))
        total = w @ vals
        out[idx] = total * length
    return out


def _alpha_psi_segment_integrals(form: AlphaPsi, frames, fields, lengths):
    """Closed forms: Z -> int psi, X+ -> -S(g, r), X- -> +U(g, r)."""
    psi, spec = form.psi, form.spec
    out = np.zeros(len(frames))
    for name in ("X-", "Z", "X+"):
        idx = np.nonzero(fields == name)[0]
        if len(idx) == 0:
            continue
        g, length = frames[idx], lengths[idx]
        if name == "Z":
            out[idx] = flow_integral(psi, g, length, spec)
        elif name == "X+":
            out[idx] = -pair_integral(psi, g, length, "stable", spec)
        else:
            out[idx] = pair_integral(psi, g, length, "unstable", spec)
    return out


def segment_integrals(form: FrameOneForm, frames, fields, lengths, spec=DEFAULT_SPEC,
                      route="auto"):
    """Vectorised line integrals over a batch of frame-field segments."""
    frames = as_array(frames).reshape(-1, 2, 2)
    fields = np.asarray(fields)
    lengths = np.asarray(lengths, dtype=float)
    if route == "auto":
        route = "closed" if isinstance(form, AlphaPsi) else "quadrature"
    if route == "closed":
        if not isinstance(form, AlphaPsi):
            raise UnsupportedPathError("closed-form route only exists for alpha_psi")
        return _alpha_psi_segment_integrals(form, frames, fields, lengths)
    if route != "quadrature":
        raise ValueError(f"unknown route {route!r}")
    return _generic_segment_integrals(form, frames, fields, lengths, spec)


def line_integral(form: FrameOneForm, path: SegmentPath, spec: QuadratureSpec = DEFAULT_SPEC,
                  route="auto") -> float:
    """Integral of a frame 1-form along a segment path.

    ``route="closed"`` (alpha_psi only) integrates horocycle legs through
    orbit-pair integrals; ``route="quadrature"`` integrates the coefficient
    functions (for alpha_psi: the Parry cocycles) along every segment.
    psi-flow segments are integrated as the geodesic segment they trace.
    """
    if not path.segments:
        return 0.0
    frames = np.stack([s.start for s in path.segments])
    fields = np.array([s.field for s in path.segments])
    lengths = np.array([s.geodesic_time for s in path.segments])
    return float(segment_integrals(form, frames, fields, lengths, spec, route).sum())


# ------------------------------------------------------------- Stokes tiling

@dataclass(frozen=True)
class StokesResult:
    residual: float
    abs_residual: float
    circulation: float
    alpha_area: float
    psi_bar: float
    tiles: int

    def __float__(self):
        return self.residual


def _mean(psi, n=100_000, seed=0):
    if psi.is_constant:
        return psi.base
    return float(psi.evaluate(liouville_sample(n, seed)).mean())


def stokes_residual(v, side: float, delta_tile: float, psi, psi_bar=None,
                    spec: QuadratureSpec = DEFAULT_SPEC) -> StokesResult:
    """Tile the square {v e^{sX-} e^{uX+}: 0 <= s, u <= side} and compare circulations.

    Every tile edge is frame tangent: edges of constant s are X+ segments;
    an edge of constant u from (s, u) to (s + ds, u) is the exact zigzag
    e^{-uX+} e^{ds X-} e^{uX+} = e^{aX-} a_b e^{cX+}.  Edges are computed once
    and shared, so tile circulations telescope exactly.  The residual of a
    tile is its alpha_psi circulation minus psi_bar times its alpha
    circulation (its d alpha area).
    """
    n = int(round(side / delta_tile))
    if n < 1 or abs(n * delta_tile - side) > 1e-9 * side:
        raise GeometryError("delta_tile must divide the side length")
    if psi_bar is None:
        psi_bar = _mean(psi)
    v = as_array(v).reshape(2, 2)
    grid = np.arange(n + 1) * delta_tile
    form = AlphaPsi(psi, spec)
    # corners Phi(s_i, u_j)
    phi = np.empty((n + 1, n + 1, 2, 2))
    for i, s in enumerate(grid):
        row = flow_array(v, FlowKind.XMINUS, s)
        phi[i] = flow_array(np.broadcast_to(row, (n + 1, 2, 2)), FlowKind.XPLUS, grid)
    # vertical edges: X+ by delta_tile from Phi(s_i, u_j), j < n
    vstart = phi[:, :n].reshape(-1, 2, 2)
    # horizontal edges: zigzag from Phi(s_i, u_j), i < n
    u = np.broadcast_to(grid[None, :], (n, n + 1)).ravel()
    e = exp_array(FlowKind.XPLUS, -u) @ exp_array(FlowKind.XMINUS, delta_tile) @ \
        exp_array(FlowKind.XPLUS, u)
    lam = e[:, 0, 0]
    c_part, a_part, b_part = e[:, 0, 1] / lam, e[:, 1, 0] / lam, 2.0 * np.log(lam)
    h0 = phi[:n].reshape(-1, 2, 2)
    h1 = flow_array(h0, FlowKind.XMINUS, a_part)
    h2 = flow_array(h1, FlowKind.Z, b_part)
    if psl_distance(flow_array(h2, FlowKind.XPLUS, c_part), phi[1:].reshape(-1, 2, 2)).max() > 1e-11:
        raise GeometryError("zigzag edges do not close up")
    frames = np.concatenate([vstart, h0, h1, h2])
    fields = np.array(["X+"] * len(vstart) + ["X-"] * len(h0) + ["Z"] * len(h1) + ["X+"] * len(h2))
    lengths = np.concatenate([np.full(len(vstart), delta_tile), a_part, b_part, c_part])
    vals = segment_integrals(form, frames, fields, lengths, spec)
    m = len(vstart)
    k = len(h0)
    vert = vals[:m].reshape(n + 1, n)
    horiz = (vals[m:m + k] + vals[m + k:m + 2 * k] + vals[m + 2 * k:]).reshape(n, n + 1)
    horiz_alpha = b_part.reshape(n, n + 1)
    tile_psi = horiz[:, :-1] + vert[1:, :] - horiz[:, 1:] - vert[:-1, :]
    tile_alpha = horiz_alpha[:, :-1] - horiz_alpha[:, 1:]
    resid = tile_psi - psi_bar * tile_alpha
    return StokesResult(float(resid.sum()), float(np.abs(resid).sum()), float(tile_psi.sum()),
                        float(tile_alpha.sum()), float(psi_bar), n * n)


def flow_loop_circulations(psi, v, t: float, r: float, spec: QuadratureSpec = DEFAULT_SPEC) -> tuple:
    """alpha_psi circulations of the closed (Z, X+) and (Z, X-) commutator loops at v."""
    form = AlphaPsi(psi, spec)
    return tuple(line_integral(form, commutator_path(v, "Z", side, t, r), spec)
                 for side in ("X+", "X-"))


def reeb_defect(psi, v, delta: float, spec: QuadratureSpec | None = None) -> float:
    """max |circulation| / delta^2 over the delta-sized flow-tangent loops through v."""
    if spec is None:
        spec = QuadratureSpec(tail_tolerance=1e-14, max_time=80.0)
    circ = flow_loop_circulations(psi, v, delta, delta, spec)
    return max(abs(c) for c in circ) / delta ** 2


# --------------------------------------------------------------- CB criterion

def _wedge_with_d(theta: FrameOneForm, omega: FrameOneForm, g, h=1e-4) -> np.ndarray:
    """(theta ^ d omega)(X-, X+, G) at a stack of frames, differentiating only what is needed."""
    c = theta.coefficients(g)
    comps, weights = [], []
    # theta(X-) d omega(X+, G) - theta(X+) d omega(X-, G) + theta(G) d omega(X-, X+)
    for col, comp, sign in ((0, "0+", -1.0), (2, "-0", -1.0), (1, "-+", 1.0)):
        if np.any(c[:, col] != 0):
            comps.append(comp)
            weights.append(sign * c[:, col])
    if not comps:
        return np.zeros(len(g))
    d = omega.exterior(g, comps, h)
    return sum(w * d[k] for k, w in zip(comps, weights))


def cb_value(alpha_form: FrameOneForm, beta_form: FrameOneForm, v, h=1e-4):
    """(alpha ^ d beta + beta ^ d alpha)(X-, X+, G) at v."""
    g = as_array(v)
    scalar = g.ndim == 2
    g = g.reshape(-1, 2, 2)
    out = _wedge_with_d(alpha_form, beta_form, g, h) + _wedge_with_d(beta_form, alpha_form, g, h)
    return float(out[0]) if scalar else out


def contact_volume(form: FrameOneForm, v, h=1e-4):
    """(theta ^ d theta)(X-, X+, G)."""
    g = as_array(v)
    scalar = g.ndim == 2
    out = _wedge_with_d(form, form, g.reshape(-1, 2, 2), h)
    return float(out[0]) if scalar else out


def affine_volume(alpha_form, beta_form, v, t: float, C=lambda t: 1.0, B=lambda t: t):
    """B(t) [C(t) cb(alpha, beta) + B(t) beta ^ d beta] for integrable alpha."""
    b, c = B(t), C(t)
    return b * (c * cb_value(alpha_form, beta_form, v) + b * contact_volume(beta_form, v))


def reeb_pairing(form: FrameOneForm):
    """v -> form(Z) where Z (the field G here) is the Reeb field of alpha."""
    from .lie_core import CONVENTION

    def pairing(v):
        return form(v, CONVENTION.geodesicGenerator)

    return pairing


# --------------------------------------------------- difference oracle for d

_FRAME_MATRICES = {"X-": np.array([[0.0, 0.0], [1.0, 0.0]]),
                   "Z": np.array([[0.5, 0.0], [0.0, -0.5]]),
                   "X+": np.array([[0.0, 1.0], [0.0, 0.0]])}


def _segment_form_integral(form, g, vec: np.ndarray, nodes=8):
    """int_0^1 theta_{g exp(sY)}(Y) ds for a single algebra element Y (2x2 matrix)."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    x, w = 0.5 * (x + 1), 0.5 * w
    y = AlgebraVector.from_matrix(vec)
    pts = np.stack([g @ expm(s * vec) for s in x])
    return float(w @ form(pts, y))


def loop_exterior(form: FrameOneForm, v, a: str, b: str, eps=1e-3) -> float:
    """d theta(A, B) at v from circulations around small commutator loops.

    The loop v -> v e^{eA} -> v e^{eA} e^{eB} -> v e^{eA} e^{eB} e^{-eA} -> v e^{eA}e^{eB}e^{-eA}e^{-eB}
    is closed by the segment along the matrix logarithm back to v.  The
    circulation divided by e^2 is averaged over e and -e and extrapolated.
    """
    g = as_array(v)
    A, Bm = _FRAME_MATRICES[a], _FRAME_MATRICES[b]

    def circ(e):
        pts, total = g, 0.0
        for m in (e * A, e * Bm, -e * A, -e * Bm):
            total += _segment_form_integral(form, pts, m)
            pts = pts @ expm(m)
        back = np.real(logm(np.linalg.solve(pts, g)))
        total += _segment_form_integral(form, pts, back)
        return total / (e * e)

    def sym(e):
        return 0.5 * (circ(e) + circ(-e))

    return (4.0 * sym(eps / 2) - sym(eps)) / 3.0


def loop_contact_volume(form: FrameOneForm, v, eps=1e-3) -> float:
    """(theta ^ d theta)(X-, X+, G) with d theta from the loop oracle."""
    c = form.coefficients(v)[0]
    return (-c[0] * loop_exterior(form, v, "Z", "X+", eps)
            - c[2] * loop_exterior(form, v, "X-", "Z", eps)
            + c[1] * loop_exterior(form, v, "X-", "X+", eps))
