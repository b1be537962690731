"""The genus-two octagon group, its Dirichlet domain and invariant observables.

The group is generated by four hyperbolic translations pairing opposite
sides of the regular hyperbolic octagon with interior angles pi/4 centred
at i.  Frames are reduced into the domain by greedy wall crossing; an
observable is evaluated on the reduced frame, which makes it exactly
invariant under the left action of the group.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .lie_core import GroupElement, as_array, inverse_array

SQRT2 = math.sqrt(2.0)
# cosh of the inradius and circumradius of the regular octagon with angles pi/4
COSH_INRADIUS = 1.0 + SQRT2
COSH_CIRCUMRADIUS = (1.0 + SQRT2) ** 2
MAX_REDUCTION_STEPS = 10_000


class ReductionError(RuntimeError):
    """Greedy reduction failed to terminate."""


class ConfigurationError(ValueError):
    pass


def _rotation(theta: float) -> np.ndarray:
    """Rotation about i by angle theta."""
    return np.array([[math.cos(theta / 2), -math.sin(theta / 2)],
                     [math.sin(theta / 2), math.cos(theta / 2)]])


def _frobenius_sq(m):
    return (m ** 2).sum(axis=(-2, -1))


def _key(m: np.ndarray, digits=9) -> tuple:
    if m[np.unravel_index(np.abs(m).argmax(), m.shape)] < 0:
        m = -m
    return tuple(np.round(m.ravel(), digits) + 0.0)


class FuchsianGroup:
    """Side-pairing group of the regular octagon (Bolza surface)."""

    def __init__(self):
        ell = 2.0 * math.acosh(COSH_INRADIUS)
        a = np.diag([math.exp(ell / 2), math.exp(-ell / 2)])
        gens = []
        for k in range(4):
            r = _rotation(k * math.pi / 4)
            gens.append(r @ a @ np.linalg.inv(r))
        self.translation_length = ell
        self.pairings = [GroupElement.from_matrix(m) for m in gens]
        # generators and inverses, in the order g0, g0^-1, g1, g1^-1, ...
        self.names = []
        mats = []
        for k, g in enumerate(gens):
            self.names += [f"g{k}", f"g{k}^-1"]
            mats += [g, np.linalg.inv(g)]
        self.generator_matrices = np.array(mats)
        self.generators = [GroupElement.from_matrix(m) for m in mats]
        # g0 g1^-1 g2 g3^-1 g0^-1 g1 g2^-1 g3 = 1
        self.relation = ("g0", "g1^-1", "g2", "g3^-1", "g0^-1", "g1", "g2^-1", "g3")
        if self.relation_residual() > 1e-9:
            raise RuntimeError("octagon relation fails: construction bug")
        self._balls = {}

    def element(self, word) -> np.ndarray:
        m = np.eye(2)
        for name in word:
            m = m @ self.generator_matrices[self.names.index(name)]
        return m

    def relation_residual(self) -> float:
        m = self.element(self.relation)
        return float(min(np.abs(m - np.eye(2)).max(), np.abs(m + np.eye(2)).max()))

    def word_ball(self, length: int) -> list:
        """Distinct elements given by freely reduced words of length <= ``length``.

        Returns a list of (word, matrix) with the shortest word for each element.
        """
        if length in self._balls:
            return self._balls[length]
        inv = {i: i ^ 1 for i in range(8)}
        seen = {_key(np.eye(2)): ((), np.eye(2))}
        frontier = [((), np.eye(2), None)]
        for _ in range(length):
            nxt = []
            for word, m, last in frontier:
                for i in range(8):
                    if last is not None and i == inv[last]:
                        continue
                    mm = m @ self.generator_matrices[i]
                    k = _key(mm)
                    if k in seen:
                        continue
                    w = word + (self.names[i],)
                    seen[k] = (w, mm)
                    nxt.append((w, mm, i))
            frontier = nxt
        ball = list(seen.values())
        self._balls[length] = ball
        return ball

    def systole_estimate(self, length: int = 3) -> float:
        best = math.inf
        for word, m in self.word_ball(length):
            tr = abs(m[0, 0] + m[1, 1])
            if word and tr > 2.0:
                best = min(best, 2.0 * math.acosh(tr / 2.0))
        return best

    @cached_property
    def systole(self) -> float:
        return self.systole_estimate(3)


class DirichletDomain:
    """Dirichlet domain centred at i; walls are bisectors of i and s.i for generators s."""

    def __init__(self, group: FuchsianGroup):
        self.group = group
        self.center = GroupElement.identity()
        self.walls = list(group.generators)
        q = np.einsum("kji,kjl->kil", group.generator_matrices, group.generator_matrices)
        # |s g|_F^2 = q00 (a^2 + b^2) + 2 q01 (a c + b d) + q11 (c^2 + d^2)
        self._weights = np.stack([q[:, 0, 0], q[:, 0, 1], q[:, 1, 1]])
        self.inradius = math.acosh(COSH_INRADIUS)
        self.circumradius = math.acosh(COSH_CIRCUMRADIUS)

    def _wall_norms(self, g):
        a, b, c, d = g[:, 0, 0], g[:, 0, 1], g[:, 1, 0], g[:, 1, 1]
        feats = np.stack([a * a + b * b, 2.0 * (a * c + b * d), c * c + d * d], axis=1)
        return feats @ self._weights, feats[:, 0] + feats[:, 2]

    def reduce_array(self, g, return_gamma=False):
        """Reduce a stack of frames; returns g0 (and gamma with g = gamma g0)."""
        g = np.array(g, dtype=float, copy=True)
        shape = g.shape
        g = g.reshape(-1, 2, 2)
        gamma = np.broadcast_to(np.eye(2), g.shape).copy() if return_gamma else None
        idx = np.arange(len(g))
        mats = self.group.generator_matrices
        invs = inverse_array(mats)
        for _ in range(MAX_REDUCTION_STEPS):
            if idx.size == 0:
                break
            sub = g[idx]
            norms, cur = self._wall_norms(sub)
            j = norms.argmin(axis=1)
            best = norms[np.arange(len(idx)), j]
            move = best < cur * (1.0 - 1e-13)
            if not np.any(move):
                break
            idx, j = idx[move], j[move]
            g[idx] = np.einsum("kij,kjl->kil", mats[j], g[idx])
            if return_gamma:
                gamma[idx] = np.einsum("kij,kjl->kil", gamma[idx], invs[j])
        else:
            raise ReductionError("reduction did not terminate")
        g = g.reshape(shape)
        if return_gamma:
            return gamma.reshape(shape), g
        return g

    def reduce(self, g: GroupElement) -> tuple:
        gamma, g0 = self.reduce_array(g.matrix[None], return_gamma=True)
        return GroupElement.from_matrix(gamma[0]), GroupElement.from_matrix(g0[0])

    def contains(self, g, slack=1e-12) -> np.ndarray:
        g = as_array(g).reshape(-1, 2, 2)
        norms, cur = self._wall_norms(g)
        return norms.min(axis=1) >= cur * (1.0 - slack)


_GROUP = None
_DOMAIN = None


def octagon_group() -> FuchsianGroup:
    global _GROUP
    if _GROUP is None:
        _GROUP = FuchsianGroup()
    return _GROUP


def default_domain() -> DirichletDomain:
    global _DOMAIN
    if _DOMAIN is None:
        _DOMAIN = DirichletDomain(octagon_group())
    return _DOMAIN


def reduce(g: GroupElement, group=None, domain=None) -> tuple:
    domain = domain or (DirichletDomain(group) if group is not None else default_domain())
    return domain.reduce(g)


# ------------------------------------------------------------------ observables

_G_MATS = {
    "X-": np.array([[0.0, 0.0], [1.0, 0.0]]),
    "X+": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "Z": np.array([[0.5, 0.0], [0.0, -0.5]]),
}


def support_radius(radius: float) -> float:
    """Hyperbolic radius of the base-point shadow of a bump of matrix radius ``radius``.

    |M - I|_F < R forces |M|_F < sqrt2 + R and cosh d(i, M i) = |M|_F^2 / 2.
    """
    return math.acosh((SQRT2 + radius) ** 2 / 2.0)


def max_bump_radius(group=None) -> float:
    """Largest matrix radius whose support shadow stays below half the systole."""
    group = group or octagon_group()
    return math.sqrt(2.0 * math.cosh(group.systole / 2.0)) - SQRT2


@dataclass(frozen=True)
class Bump:
    """Amplitude times exp(1 - 1/(1 - s)), s = |c^{-1} g -+ I|_F^2 / radius^2."""

    center: GroupElement
    amplitude: float
    radius: float


def _profile(s):
    """Value and first two derivatives of exp(1 - 1/(1-s)) on s < 1."""
    u = 1.0 / (1.0 - s)
    f = np.exp(1.0 - u)
    f1 = -f * u * u
    f2 = f * (u ** 4 - 2.0 * u ** 3)
    return f, f1, f2


class InvariantObservable:
    """Positive Gamma-invariant function: base value plus compactly supported bumps."""

    def __init__(self, base: float, bumps=(), group=None, domain=None):
        base = float(base)
        if not (base > 0 and math.isfinite(base)):
            raise ConfigurationError("base value must be positive")
        self.group = group or octagon_group()
        self.domain = domain or (default_domain() if group is None else DirichletDomain(self.group))
        self.base = base
        self.bumps = tuple(bumps)
        budget = sum(abs(b.amplitude) for b in self.bumps)
        if base - budget <= 0:
            raise ConfigurationError("amplitudes can make the observable non-positive")
        rmax = max_bump_radius(self.group)
        for b in self.bumps:
            if not (0 < b.radius < rmax):
                raise ConfigurationError(
                    f"bump radius {b.radius} must lie in (0, {rmax:.6f}) so its support is "
                    "narrower than half the systole")
        self.lower_bound = base - budget
        self._translates = [self._truncation(b) for b in self.bumps]

    def _truncation(self, bump: Bump) -> np.ndarray:
        """Inverses of the translates gamma.c whose support can reach the domain.

        A translate is dropped when its support shadow lies beyond one of the
        wall bisectors: for the bisector of i and s.i the signed distance h of
        a point y satisfies cosh d(y, i) - cosh d(y, s.i) = 2 sinh(l/2) sinh h.
        """
        c0 = self.domain.reduce_array(bump.center.matrix[None])[0]
        rs = support_radius(bump.radius) + 1e-6
        reach = math.cosh(self.domain.circumradius + rs)
        gens = self.group.generator_matrices
        # wall generators move i by l with cosh l = |s|_F^2 / 2
        two_sinh = 2.0 * np.sinh(np.arccosh(_frobenius_sq(gens) / 2.0) / 2.0)
        out = []
        for _, m in self.group.word_ball(5):
            t = m @ c0
            ch = _frobenius_sq(t) / 2.0
            if ch > reach:
                continue
            # cosh d(t.i, s.i) = |s^{-1} t|_F^2 / 2
            ch_walls = _frobenius_sq(np.einsum("kij,jl->kil", inverse_array(gens), t)) / 2.0
            h = np.arcsinh((ch - ch_walls) / two_sinh)
            if h.max() < rs:
                out.append(np.linalg.inv(t))
        return np.array(out)

    @property
    def is_constant(self) -> bool:
        return not any(b.amplitude for b in self.bumps)

    @property
    def truncation_words(self) -> list:
        return [len(t) for t in self._translates]

    def __call__(self, g):
        return self.evaluate(g)

    def evaluate(self, g, derivative=None, reduced=False):
        """Value or frame derivative at g.

        ``derivative`` is None, one of "X-", "X+", "Z" (the geodesic field
        Z/2), or a pair (Y, X) meaning Y applied to X psi.
        """
        scalar = isinstance(g, GroupElement)
        g = as_array(g)
        single = g.ndim == 2
        g = g.reshape(-1, 2, 2)
        order = 0
        if derivative is not None:
            if isinstance(derivative, str):
                order, dx = 1, _G_MATS[_norm_kind(derivative)]
            else:
                if len(derivative) != 2:
                    raise ValueError("only first and second order derivatives are supported")
                order = 2
                dy, dx = (_G_MATS[_norm_kind(k)] for k in derivative)
        out = np.full(len(g), self.base if order == 0 else 0.0)
        if self.bumps:
            g0 = g if reduced else self.domain.reduce_array(g)
            for bump, trans in zip(self.bumps, self._translates):
                if bump.amplitude == 0:
                    continue
                r2 = bump.radius ** 2
                for cinv in trans:
                    m = np.einsum("ij,kjl->kil", cinv, g0)
                    tr = m[:, 0, 0] + m[:, 1, 1]
                    s = (_frobenius_sq(m) + 2.0 - 2.0 * np.abs(tr)) / r2
                    hit = s < 1.0
                    if not np.any(hit):
                        continue
                    mh = m[hit]
                    f, f1, f2 = _profile(s[hit])
                    if order == 0:
                        out[hit] += bump.amplitude * f
                        continue
                    sig = np.where(tr[hit] >= 0, 1.0, -1.0)
                    e = mh - sig[:, None, None] * np.eye(2)
                    mx = mh @ dx
                    sx = 2.0 * (e * mx).sum(axis=(1, 2)) / r2
                    if order == 1:
                        out[hit] += bump.amplitude * f1 * sx
                        continue
                    my = mh @ dy
                    sy = 2.0 * (e * my).sum(axis=(1, 2)) / r2
                    syx = 2.0 * ((my * mx).sum(axis=(1, 2)) + (e * (my @ dx)).sum(axis=(1, 2))) / r2
                    out[hit] += bump.amplitude * (f2 * sy * sx + f1 * syx)
        if scalar or single:
            return float(out[0])
        return out

    def flipped(self) -> "FlippedObservable":
        return FlippedObservable(self)

    # norms ------------------------------------------------------------
    def _unit_sups(self, radius: float) -> tuple:
        """Sampled sup of first and second frame derivatives of a unit-amplitude bump."""
        rng = np.random.default_rng(12345)
        n = 200_000
        # dense sample of the support: exp of random small algebra elements
        coeff = rng.uniform(-1.0, 1.0, size=(n, 3)) * radius
        x = np.zeros((n, 2, 2))
        x[:, 0, 0], x[:, 1, 1] = coeff[:, 1], -coeff[:, 1]
        x[:, 0, 1], x[:, 1, 0] = coeff[:, 2], coeff[:, 0]
        det = -(coeff[:, 1] ** 2 + coeff[:, 0] * coeff[:, 2])
        # closed-form exponential of a traceless matrix
        root = np.sqrt(np.abs(det))
        pos = det < 0
        ch = np.where(pos, np.cosh(root), np.cos(root))
        safe = np.where(root > 0, root, 1.0)
        sh = np.where(root > 0, np.where(pos, np.sinh(root), np.sin(root)) / safe, 1.0)
        m = ch[:, None, None] * np.eye(2) + sh[:, None, None] * x
        unit = InvariantObservable.__new__(InvariantObservable)
        unit.base, unit.bumps = 1.0, (Bump(GroupElement.identity(), 1.0, radius),)
        unit._translates = [np.eye(2)[None]]
        unit.domain = self.domain
        first = max(np.abs(unit.evaluate(m, k, reduced=True)).max() for k in ("X-", "X+", "Z"))
        second = max(np.abs(unit.evaluate(m, (a, b), reduced=True)).max()
                     for a in ("X-", "X+", "Z") for b in ("X-", "X+", "Z"))
        return first, second

    @cached_property
    def derivative_bounds(self) -> tuple:
        """(sup of first, sup of second) frame derivatives, padded by 2 percent."""
        d1 = d2 = 0.0
        for b in self.bumps:
            f, s = self._unit_sups(b.radius)
            d1 += abs(b.amplitude) * f
            d2 += abs(b.amplitude) * s
        return 1.02 * d1, 1.02 * d2

    @property
    def sup(self) -> float:
        return self.base + sum(abs(b.amplitude) for b in self.bumps)

    @property
    def c1_norm(self) -> float:
        return max(self.sup, self.derivative_bounds[0])

    @property
    def c2_norm(self) -> float:
        return max(self.c1_norm, self.derivative_bounds[1])


class FlippedObservable:
    """v -> psi(-v), where -v is the frame rotated by pi (same base point, reversed direction)."""

    _K = np.array([[0.0, -1.0], [1.0, 0.0]])

    def __init__(self, psi: InvariantObservable):
        self.psi = psi
        self.domain = psi.domain
        self.base = psi.base
        self.bumps = psi.bumps
        self.lower_bound = psi.lower_bound

    @property
    def is_constant(self):
        return self.psi.is_constant

    @property
    def c1_norm(self):
        return self.psi.c1_norm

    @property
    def c2_norm(self):
        return self.psi.c2_norm

    @property
    def derivative_bounds(self):
        return self.psi.derivative_bounds

    def evaluate(self, g, derivative=None, reduced=False):
        if derivative is not None:
            raise ValueError("derivatives of the flipped observable are not provided")
        scalar = isinstance(g, GroupElement)
        g = as_array(g)
        out = self.psi.evaluate(g @ self._K)
        return float(out) if scalar else out

    __call__ = evaluate

    def flipped(self):
        return self.psi


def _norm_kind(k: str) -> str:
    k = str(k)
    if k in _G_MATS:
        return k
    low = k.lower()
    table = {"x-": "X-", "x+": "X+", "z": "Z", "z-flow": "Z", "xminus": "X-", "xplus": "X+"}
    if low not in table:
        raise ValueError(f"unknown derivative direction {k!r}")
    return table[low]


def constant_observable(c: float) -> InvariantObservable:
    return InvariantObservable(c)


def liouville_sample(n: int, seed, domain=None, return_efficiency=False):
    """I.i.d. Haar-distributed frames with base point in the octagon.

    Frames are drawn as k(phi) a(r) k(theta) with density sinh(r) on the
    circumscribed disc and rejected outside the domain.
    """
    if n < 1:
        raise ValueError("need at least one sample")
    domain = domain or default_domain()
    rng = np.random.default_rng(seed)
    ch_max = COSH_CIRCUMRADIUS
    out = []
    have = drawn = 0
    while have < n:
        batch = max(1024, int(1.3 * (n - have) / 0.4))
        u, phi, theta = rng.random((3, batch))
        r = np.arccosh(1.0 + u * (ch_max - 1.0))
        phi *= 2.0 * np.pi
        theta *= 2.0 * np.pi
        g = np.einsum("kij,kjl->kil", _rotations(phi),
                      np.einsum("kij,kjl->kil", _diag(r), _rotations(theta)))
        keep = domain.contains(g)
        drawn += batch
        out.append(g[keep])
        have += int(keep.sum())
        if drawn > 1000 and have / drawn < 1e-3:
            raise ConfigurationError("rejection efficiency fell below 1e-3")
    sample = np.concatenate(out)[:n]
    if return_efficiency:
        return sample, have / drawn
    return sample


def _rotations(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2))
    out[..., 0, 0], out[..., 0, 1], out[..., 1, 0], out[..., 1, 1] = c, -s, s, c
    return out


def _diag(r):
    out = np.zeros(r.shape + (2, 2))
    out[..., 0, 0] = np.exp(r / 2)
    out[..., 1, 1] = np.exp(-r / 2)
    return out
