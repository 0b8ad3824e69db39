"""Model spaces, comparison quantities and numeric verifiers.

Spaces know how to turn uniform draws into 4-point samples and how to
measure distances between their points.  Coordinates:

* ``Euclidean(dim)`` -- a vector;
* ``Sphere(r)`` -- a vector of norm ``r`` in ``R^3``;
* ``Circle(r)`` -- an angle;
* ``Hyperbolic()`` -- hyperboloid coordinates ``(x0, x1, x2)`` with
  ``x0**2 - x1**2 - x2**2 = 1`` (curvature -1);
* ``Tripod()`` -- ``(leg, t)`` with ``leg`` in {0, 1, 2};
* ``Product(factors)`` -- concatenated factor coordinates, l2 distance;
* ``Scaled(base, lo, hi)`` -- ``base`` rescaled by a factor drawn once per
  sample, carried as an extra coordinate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import rng
from .errors import InvalidArgument, NotOnSide, UndefinedAngle
from .forms import FiniteSemimetric, LambdaArray, as_lambda, as_metric, negtype_value

NPTS = 4


# -- spaces ----------------------------------------------------------------

class Space:
    width: int
    draws: int
    name: str

    def points(self, u: np.ndarray) -> np.ndarray:
        """``(count, 4, width)`` points from ``(count, draws)`` uniforms."""
        raise NotImplementedError

    def dist(self, a, b) -> np.ndarray:
        raise NotImplementedError

    def validate(self, x) -> None:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.width:
            raise InvalidArgument(f"{self.name} points have {self.width} coordinates")

    def pairwise(self, pts: np.ndarray) -> np.ndarray:
        d = self.dist(pts[:, :, None, :], pts[:, None, :, :])
        idx = np.arange(pts.shape[1])
        d[:, idx, idx] = 0.0
        return d


@dataclass(frozen=True)
class Euclidean(Space):
    dim: int = 3
    box: float = 1.0

    @property
    def width(self):
        return self.dim

    @property
    def draws(self):
        return NPTS * self.dim

    @property
    def name(self):
        return f"euclidean({self.dim})"

    def points(self, u):
        return self.box * (2.0 * u.reshape(-1, NPTS, self.dim) - 1.0)

    def dist(self, a, b):
        return np.linalg.norm(np.asarray(a) - np.asarray(b), axis=-1)


@dataclass(frozen=True)
class Sphere(Space):
    r: float = 1.0
    width = 3
    draws = NPTS * 4

    @property
    def name(self):
        return f"sphere(r={self.r:g})"

    def points(self, u):
        g = rng.normals_from(u.reshape(-1, NPTS, 4))[..., :3]
        return self.r * g / np.linalg.norm(g, axis=-1, keepdims=True)

    def dist(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        chord = np.linalg.norm(a - b, axis=-1)
        anti = np.linalg.norm(a + b, axis=-1)
        return 2.0 * self.r * np.arctan2(chord, anti)

    def validate(self, x):
        super().validate(x)
        if abs(np.linalg.norm(x) - self.r) > 1e-12 * max(self.r, 1.0):
            raise InvalidArgument(f"point is not on the sphere of radius {self.r}")


@dataclass(frozen=True)
class Circle(Space):
    r: float = 1.0
    width = 1
    draws = NPTS

    @property
    def name(self):
        return f"circle(r={self.r:g})"

    def points(self, u):
        return 2.0 * np.pi * u.reshape(-1, NPTS, 1)

    def dist(self, a, b):
        gap = np.abs(np.asarray(a)[..., 0] - np.asarray(b)[..., 0]) % (2 * np.pi)
        return self.r * np.minimum(gap, 2 * np.pi - gap)


@dataclass(frozen=True)
class Hyperbolic(Space):
    """Hyperbolic plane, quadruples rejected unless their diameter is ``<= cap``."""

    cap: float = 1.0
    attempts: int = 32
    width = 3

    @property
    def draws(self):
        return self.attempts * NPTS * 2

    @property
    def name(self):
        return f"hyperbolic(cap={self.cap:g})"

    def points(self, u):
        u = u.reshape(-1, self.attempts, NPTS, 2)
        radius = 0.75 * self.cap * u[..., 0]
        pts = hyperbolic_polar(radius, 2.0 * np.pi * u[..., 1])
        d = self.dist(pts[..., :, None, :], pts[..., None, :, :])
        ok = d.max(axis=(-1, -2)) <= self.cap
        first = np.argmax(ok, axis=1)
        rows = np.arange(pts.shape[0])
        out = pts[rows, first]
        # no attempt accepted: shrink the first one into a ball of radius cap/2
        bad = ~ok[rows, first]
        if bad.any():
            out[bad] = hyperbolic_polar(0.5 * self.cap * u[bad, 0, :, 0],
                                        2.0 * np.pi * u[bad, 0, :, 1])
        return out

    def dist(self, a, b):
        diff = np.asarray(a) - np.asarray(b)
        q = -diff[..., 0] ** 2 + diff[..., 1] ** 2 + diff[..., 2] ** 2
        return 2.0 * np.arcsinh(0.5 * np.sqrt(np.clip(q, 0.0, None)))

    def validate(self, x):
        super().validate(x)
        x = np.asarray(x, dtype=float)
        if x[0] < 1.0 - 1e-12 or abs(x[0] ** 2 - x[1] ** 2 - x[2] ** 2 - 1.0) > 1e-12 * x[0] ** 2:
            raise InvalidArgument("point is not on the upper sheet of the hyperboloid")


@dataclass(frozen=True)
class Tripod(Space):
    length: float = 1.0
    width = 2
    draws = NPTS * 2

    @property
    def name(self):
        return f"tripod(L={self.length:g})"

    def points(self, u):
        u = u.reshape(-1, NPTS, 2)
        leg = np.floor(3.0 * u[..., 0])
        return np.stack([leg, self.length * u[..., 1]], axis=-1)

    def dist(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        same = a[..., 0] == b[..., 0]
        return np.where(same, np.abs(a[..., 1] - b[..., 1]), a[..., 1] + b[..., 1])

    def validate(self, x):
        super().validate(x)
        if x[0] not in (0, 1, 2) or x[1] < 0:
            raise InvalidArgument("tripod points are (leg in {0,1,2}, t >= 0)")


@dataclass(frozen=True)
class Scaled(Space):
    base: Space
    lo: float
    hi: float

    @property
    def width(self):
        return self.base.width + 1

    @property
    def draws(self):
        return self.base.draws + 1

    @property
    def name(self):
        return f"{self.base.name}@[{self.lo:g},{self.hi:g}]"

    def points(self, u):
        pts = self.base.points(u[:, :-1])
        s = self.lo + (self.hi - self.lo) * u[:, -1]
        s = np.broadcast_to(s[:, None, None], pts.shape[:2] + (1,))
        return np.concatenate([pts, s], axis=-1)

    def dist(self, a, b):
        a = np.asarray(a)
        return a[..., -1] * self.base.dist(a[..., :-1], np.asarray(b)[..., :-1])


@dataclass(frozen=True)
class Product(Space):
    factors: tuple

    @property
    def width(self):
        return sum(f.width for f in self.factors)

    @property
    def draws(self):
        return sum(f.draws for f in self.factors)

    @property
    def name(self):
        return "*".join(f.name for f in self.factors)

    def _split(self, x, sizes):
        out, start = [], 0
        for s in sizes:
            out.append(x[..., start:start + s])
            start += s
        return out

    def points(self, u):
        parts = self._split(u, [f.draws for f in self.factors])
        return np.concatenate([f.points(p) for f, p in zip(self.factors, parts)], axis=-1)

    def dist(self, a, b):
        widths = [f.width for f in self.factors]
        pa = self._split(np.asarray(a), widths)
        pb = self._split(np.asarray(b), widths)
        return np.sqrt(sum(f.dist(x, y) ** 2 for f, x, y in zip(self.factors, pa, pb)))


@dataclass(frozen=True)
class RandomMetric:
    """Uniform random symmetric tables repaired by shortest-path closure."""

    name = "random"
    draws = 6

    def distances(self, u):
        d = np.zeros((u.shape[0], NPTS, NPTS))
        iu = np.triu_indices(NPTS, 1)
        d[:, iu[0], iu[1]] = u
        d = d + d.transpose(0, 2, 1)
        return shortest_path_closure(d)


def shortest_path_closure(d: np.ndarray) -> np.ndarray:
    """Floyd-Warshall on a stack of distance tables."""
    d = np.array(d, dtype=float)
    n = d.shape[-1]
    for k in range(n):
        d = np.minimum(d, d[..., :, k:k + 1] + d[..., k:k + 1, :])
    return d


@dataclass(frozen=True)
class ModelPoint:
    space: Space
    coords: tuple

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float).ravel()
        self.space.validate(c)
        object.__setattr__(self, "coords", tuple(float(x) for x in c))


def model_distance(p: ModelPoint, q: ModelPoint) -> float:
    if p.space != q.space:
        raise InvalidArgument(f"points live in different spaces: {p.space.name} vs {q.space.name}")
    return float(p.space.dist(np.array(p.coords), np.array(q.coords)))


def hyperbolic_polar(radius, angle) -> np.ndarray:
    radius, angle = np.asarray(radius, dtype=float), np.asarray(angle, dtype=float)
    s = np.sinh(radius)
    return np.stack([np.cosh(radius), s * np.cos(angle), s * np.sin(angle)], axis=-1)


def hyperbolic_geodesic_point(p, q, s) -> np.ndarray:
    """Point at signed distance ``s`` from ``p`` on the geodesic through ``q``."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    d = Hyperbolic().dist(p, q)[..., None]
    tangent = (q - np.cosh(d) * p) / np.sinh(d)
    s = np.asarray(s, dtype=float)[..., None]
    return np.cosh(s) * p + np.sinh(s) * tangent


def sphere_arc_point(p, q, fraction) -> np.ndarray:
    """Point dividing the minor arc from ``p`` to ``q`` at ``fraction`` of its length."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    r = np.linalg.norm(p, axis=-1, keepdims=True)
    theta = Sphere(1.0).dist(p / r, q / r)[..., None]
    f = np.asarray(fraction, dtype=float)[..., None]
    return (np.sin((1 - f) * theta) * p + np.sin(f * theta) * q) / np.sin(theta)


# -- descriptors and sampling ----------------------------------------------

_FACTOR = re.compile(r"^\s*([a-z]+)\s*(?:\((.*)\))?\s*$")


def _params(text):
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if "=" in item:
            k, v = item.split("=", 1)
        else:
            k, v = "_", item
        out[k.strip()] = v.strip()
    return out


def _factor(text) -> Space | RandomMetric:
    m = _FACTOR.match(text)
    if not m:
        raise InvalidArgument(f"cannot parse space descriptor {text!r}")
    kind, params = m.group(1), _params(m.group(2))
    try:
        r = params.get("r", "1")
        scaled = ".." in r
        lo, hi = (float(x) for x in r.split("..")) if scaled else (float(r), float(r))
        if kind == "euclidean":
            return Euclidean(int(params.get("_", params.get("dim", "3"))))
        if kind == "sphere":
            return Scaled(Sphere(1.0), lo, hi) if scaled else Sphere(lo)
        if kind == "circle":
            return Scaled(Circle(1.0), lo, hi) if scaled else Circle(lo)
        if kind == "hyperbolic":
            return Hyperbolic(float(params.get("cap", "1")))
        if kind == "tripod":
            return Tripod(float(params.get("L", "1")))
        if kind == "random":
            return RandomMetric()
    except ValueError as exc:
        raise InvalidArgument(f"bad parameter in {text!r}: {exc}") from None
    raise InvalidArgument(f"unknown space {kind!r}")


def parse_space(descriptor) -> Space | RandomMetric:
    """Parse e.g. ``"circle(r=0.1..10)*euclidean(3)"`` or ``"hyperbolic(cap=1)"``."""
    if isinstance(descriptor, (Space, RandomMetric)):
        return descriptor
    parts = [_factor(p) for p in str(descriptor).split("*")]
    if len(parts) == 1:
        return parts[0]
    if any(isinstance(p, RandomMetric) for p in parts):
        raise InvalidArgument("random metrics cannot be factors of a product")
    return Product(tuple(parts))


def sample_distances(descriptor, count: int, seed: int, start: int = 0) -> np.ndarray:
    """``(count, 4, 4)`` distance tables of trials ``start .. start + count - 1``."""
    if count < 1:
        raise InvalidArgument("count must be >= 1")
    space = parse_space(descriptor)
    u = rng.uniforms(rng.trial_seeds(seed, count, start), space.draws)
    if isinstance(space, RandomMetric):
        return space.distances(u)
    return space.pairwise(space.points(u))


def sample(descriptor, count: int, seed: int) -> list[FiniteSemimetric]:
    return [FiniteSemimetric(d) for d in sample_distances(descriptor, count, seed)]


# -- comparison quantities -------------------------------------------------

def comparison_angle(a: float, b: float, c: float, curvature: int = 0) -> float:
    """Angle opposite side ``a`` in the model triangle with sides ``a, b, c``."""
    if curvature not in (0, -1):
        raise InvalidArgument("curvature must be 0 or -1")
    if min(a, b, c) < 0:
        raise InvalidArgument("side lengths must be nonnegative")
    if b == 0 or c == 0:
        raise UndefinedAngle("angle is undefined when an adjacent side vanishes")
    eps = 1e-12 * max(a, b, c)
    if a > b + c + eps or b > a + c + eps or c > a + b + eps:
        raise InvalidArgument(f"sides ({a}, {b}, {c}) violate the triangle inequality")
    if curvature == 0:
        cos = (b * b + c * c - a * a) / (2 * b * c)
    else:
        cos = (np.cosh(b) * np.cosh(c) - np.cosh(a)) / (np.sinh(b) * np.sinh(c))
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def heron_16a2(d12: float, d23: float, d31: float) -> float:
    """Sixteen times the squared area of the Euclidean triangle with these sides."""
    s2 = d12 ** 2 + d23 ** 2 + d31 ** 2
    s4 = d12 ** 4 + d23 ** 4 + d31 ** 4
    return s2 * s2 - 2.0 * s4


def model_area(d12: float, d23: float, d31: float) -> float:
    return float(np.sqrt(max(0.0, heron_16a2(d12, d23, d31))) / 4.0)


def point_on_side_value(m, alpha: float, tol: float = 1e-9) -> float:
    """``alpha d13^2 + (1-alpha) d23^2 - alpha(1-alpha) d12^2 - d34^2``.

    ``x4`` must realise ``alpha(1-alpha) d12^2 = alpha d14^2 + (1-alpha) d24^2``
    (for ``0 < alpha < 1``: ``x4`` on a geodesic ``[x1 x2]`` with
    ``d14 = (1-alpha) d12``; for ``alpha > 1``: ``x1`` on ``[x2 x4]`` with
    ``d14 = (alpha-1) d12``).  Nonpositive values mean the comparison holds.
    """
    m = as_metric(m)
    if m.n != 4:
        raise InvalidArgument("point-on-side comparison takes a 4-point array")
    d2 = m.squared()
    a = float(alpha)
    trig = a * (1 - a) * d2[0, 1] - a * d2[0, 3] - (1 - a) * d2[1, 3]
    scale = max(abs(a * (1 - a)) * d2[0, 1], abs(a) * d2[0, 3], abs(1 - a) * d2[1, 3], 1e-300)
    if abs(trig) > tol * scale:
        raise NotOnSide(f"x4 does not divide [x1 x2] at alpha={a}: residual {trig:.3g}")
    return float(a * d2[0, 2] + (1 - a) * d2[1, 2] - a * (1 - a) * d2[0, 1] - d2[2, 3])


@dataclass(frozen=True)
class ComparisonConfig:
    alpha: float
    beta: float
    k: int = 1

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise InvalidArgument("beta must lie in (0, 1)")
        if self.alpha <= 0.0 or self.alpha == 1.0:
            raise InvalidArgument("alpha must be positive and different from 1")
        if int(self.k) != self.k or self.k < 1:
            raise InvalidArgument("k must be a positive integer")

    @property
    def gamma(self) -> float:
        return self.beta ** self.k

    @property
    def regime(self) -> tuple[int, int]:
        return (3, 1) if self.alpha < 1.0 else (2, 2)

    def lam(self, power: int = 1) -> LambdaArray:
        g = self.beta ** power
        return LambdaArray([self.alpha * (1 - g), (1 - self.alpha) * (1 - g), g, -1.0])


@dataclass(frozen=True)
class Chain:
    """Distances for the points ``x1, x2`` and a geodesic chain ``x3 .. x(3+k)``.

    ``d1[j]`` and ``d2[j]`` are the distances from ``x1`` and ``x2`` to
    ``x(3+j)``; ``steps[j]`` is ``|x(3+j) - x(4+j)|``.
    """

    d12: float
    d1: tuple
    d2: tuple
    steps: tuple

    @property
    def k(self) -> int:
        return len(self.steps)


def _quad(d12, a1, a2, b1, b2, ab) -> FiniteSemimetric:
    return FiniteSemimetric([[0, d12, a1, b1], [d12, 0, a2, b2],
                             [a1, a2, 0, ab], [b1, b2, ab, 0]])


def telescoping_residual(cfg: ComparisonConfig, chain: Chain) -> float:
    """``|L' - (1-b^k)/(1-b) * sum_i b^(k-i) L(x1, x2, x(2+i), x(3+i))|``.

    ``L`` uses ``(a(1-b), (1-a)(1-b), b, -1)`` and ``L'`` the same array with
    ``b^k`` in place of ``b``.  The chain steps must shrink by the factor ``b``.
    """
    k, b = cfg.k, cfg.beta
    if chain.k != k or len(chain.d1) != k + 1 or len(chain.d2) != k + 1:
        raise InvalidArgument(f"chain does not have k = {k} steps")
    steps = np.asarray(chain.steps, dtype=float)
    if np.any(steps < 0) or not np.allclose(steps[1:], b * steps[:-1], rtol=1e-12, atol=0.0):
        raise InvalidArgument("chain steps are not in ratios beta : beta^2 : ... : beta^k")
    lam, lam_k = cfg.lam(1), cfg.lam(k)
    total = 0.0
    for i in range(1, k + 1):
        q = _quad(chain.d12, chain.d1[i - 1], chain.d2[i - 1], chain.d1[i], chain.d2[i], steps[i - 1])
        total += b ** (k - i) * negtype_value(q, lam)
    whole = _quad(chain.d12, chain.d1[0], chain.d2[0], chain.d1[k], chain.d2[k], float(steps.sum()))
    return abs(negtype_value(whole, lam_k) - (1 - b ** k) / (1 - b) * total)


def _normalized31(lam) -> LambdaArray:
    lam = as_lambda(lam)
    v = lam.values
    if lam.n != 4 or abs(v[3] + 1.0) > 1e-12 or np.any(v[:3] <= 0):
        raise InvalidArgument("expected a lambda array (l1, l2, l3, -1) with l1, l2, l3 > 0")
    return lam


def lemma_area_bound_residual(x, lam) -> float:
    """``(12 + 3 delta^2) l1 l2 l3 a^2 - sum_{i,j} l_i l_j d_ij^2``.

    ``x`` is four hyperbolic points (``ModelPoint`` or hyperboloid
    coordinates) or their distance table; ``delta`` is the diameter of
    ``x1 x2 x3`` and ``a`` the area of its Euclidean model triangle.
    """
    lam = _normalized31(lam)
    m = _as_hyperbolic_metric(x)
    v = lam.values
    d = m.d
    delta = max(d[0, 1], d[0, 2], d[1, 2])
    a2 = max(0.0, heron_16a2(d[0, 1], d[1, 2], d[2, 0])) / 16.0
    return float((12 + 3 * delta ** 2) * v[0] * v[1] * v[2] * a2 - negtype_value(m, lam))


def _as_hyperbolic_metric(x) -> FiniteSemimetric:
    if isinstance(x, FiniteSemimetric):
        return x
    if len(x) and isinstance(x[0], ModelPoint):
        return FiniteSemimetric([[model_distance(p, q) for q in x] for p in x])
    arr = np.asarray(x, dtype=float)
    if arr.shape == (4, 3):
        return FiniteSemimetric(Hyperbolic().pairwise(arr[None])[0])
    return as_metric(arr)


def weighted_31_error_value(m, lam, delta: float) -> float:
    """``sum l_i l_j d_ij^2 - 10 delta^2 l1 l2 l3 (d12^2 + d23^2 + d31^2)``."""
    m = as_metric(m)
    lam = as_lambda(lam)
    v = lam.values
    if lam.n != 4 or np.any(v[:3] <= 0):
        raise InvalidArgument("expected a lambda array (l1, l2, l3, l4) with l1, l2, l3 > 0")
    d2 = m.squared()
    side = d2[0, 1] + d2[1, 2] + d2[2, 0]
    return float(negtype_value(m, lam) - 10.0 * delta ** 2 * v[0] * v[1] * v[2] * side)
