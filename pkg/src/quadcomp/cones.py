"""Sign-pattern cones in ``V_4`` and exact minimisation of a form over them.

Every nonzero direction ``v`` of ``V_4`` has a zero-sum lambda array; its
sign pattern places ``v`` (up to sign) in one of seven open regions cut
out by the four equator planes ``lam_k(v) = 0``.  The four (3,1) patterns
are the triangles, the three (2,2) patterns are the quadrangles.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from .errors import InvalidArgument
from .forms import (
    PSD_TOL,
    AssociatedForm,
    LambdaArray,
    as_lambda,
    as_metric,
    form_from_metric,
    simplex_frame,
    vector_to_lambda,
)

MEMBERSHIP_TOL = 1e-10
SUPPORTED_TYPES = ((3, 1), (2, 2))


@dataclass(frozen=True)
class SignPattern:
    """Entries in {+1, -1, 0}, sign-normalised so that ``+`` is not outnumbered."""

    signs: tuple[int, ...]

    def __post_init__(self):
        s = tuple(int(np.sign(x)) for x in self.signs)
        pos, neg = s.count(1), s.count(-1)
        if pos == 0 or neg == 0:
            raise InvalidArgument(f"sign pattern {s} needs both signs")
        first = next(x for x in s if x)
        if neg > pos or (neg == pos and first < 0):
            s = tuple(-x for x in s)
        object.__setattr__(self, "signs", s)

    @property
    def negtype(self) -> tuple[int, int]:
        return (self.signs.count(1), self.signs.count(-1))

    @property
    def strict(self) -> bool:
        return 0 not in self.signs

    def flipped(self) -> SignPattern:
        return SignPattern(tuple(-x for x in self.signs))

    def __str__(self):
        return "(" + ",".join({1: "+", -1: "-", 0: "0"}[x] for x in self.signs) + ")"


def classify_lambda(lam) -> SignPattern:
    return SignPattern(tuple(as_lambda(lam).values))


def enumerate_cones(negtype, n: int = 4) -> list[SignPattern]:
    negtype = tuple(negtype)
    if n != 4 or negtype not in SUPPORTED_TYPES:
        raise InvalidArgument(f"unsupported cone type {negtype} for n={n}")
    return list(_cones(negtype))


@lru_cache(maxsize=None)
def _cones(negtype):
    if negtype == (3, 1):
        return tuple(SignPattern(tuple(-1 if i == k else 1 for i in range(4)))
                     for k in range(4))
    return tuple(SignPattern(tuple(1 if i in (0, j) else -1 for i in range(4)))
                 for j in (1, 2, 3))


@dataclass(frozen=True)
class ConeMinResult:
    min_value: float
    argmin_vector: np.ndarray
    argmin_lambda: LambdaArray
    face: tuple[int, ...]
    """Indices ``k`` with ``lam_k = 0`` at the argmin; empty means interior."""

    @property
    def face_kind(self) -> str:
        return {0: "interior", 1: "facet", 2: "edge"}[len(self.face)]


@lru_cache(maxsize=None)
def _face_bases():
    """Orthonormal bases of the subspaces ``{lam_k = 0, k in S}``, ``|S| <= 2``."""
    y = simplex_frame(4).y
    out = []
    for size in (2, 1, 0):
        for S in combinations(range(4), size):
            if S:
                _, _, vt = np.linalg.svd(y[list(S)])
                basis = vt[len(S):].T
            else:
                basis = np.eye(3)
            basis.setflags(write=False)
            out.append((S, basis))
    return tuple(out)


@dataclass(frozen=True)
class FaceCandidates:
    """Critical directions of ``rho`` restricted to every face subspace.

    Edges come first, then facets, then the interior; within each the order
    is fixed, so ties resolve deterministically to the lowest-dimensional face.
    """

    vectors: np.ndarray
    values: np.ndarray
    lambdas: np.ndarray
    radius: float


def face_candidates(M) -> FaceCandidates:
    M = np.asarray(M, dtype=float)
    vecs = []
    # bases of equal dimension are stacked so each size needs one eigh call
    for size in (2, 1, 0):
        B = np.stack([b for S, b in _face_bases() if len(S) == size])
        _, u = np.linalg.eigh(B.transpose(0, 2, 1) @ M @ B)
        vecs.append((B @ u).transpose(0, 2, 1).reshape(-1, 3))
    V = np.concatenate(vecs)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    vals = np.einsum("ki,ij,kj->k", V, M, V)
    lams = 2.0 * V @ simplex_frame(4).y.T
    radius = float(np.abs(vals[-3:]).max())
    return FaceCandidates(V, vals, lams, radius)


def _require_strict(p: SignPattern):
    if len(p.signs) != 4 or not p.strict or p.negtype not in SUPPORTED_TYPES:
        raise InvalidArgument(f"expected a strict (3,1) or (2,2) pattern, got {p}")


def min_form_on_cone(f, p: SignPattern, candidates: FaceCandidates | None = None) -> ConeMinResult:
    """Minimum of ``rho`` over unit vectors of the closed cone of pattern ``p``."""
    if not isinstance(f, AssociatedForm):
        f = form_from_metric(f)
    if f.n != 4:
        raise InvalidArgument("cone minimisation is implemented for n = 4 only")
    _require_strict(p)
    c = candidates if candidates is not None else face_candidates(f.M)
    signed = c.lambdas * np.asarray(p.signs, dtype=float)
    plus = np.all(signed >= -MEMBERSHIP_TOL, axis=1)
    minus = np.all(signed <= MEMBERSHIP_TOL, axis=1)
    admitted = plus | minus
    if not admitted.any():  # pragma: no cover - edge rays always belong to the cone
        raise InvalidArgument(f"no admissible direction in cone {p}")
    vals = np.where(admitted, c.values, np.inf)
    best = vals.min()
    k = int(np.flatnonzero(vals <= best + 1e-12 * max(c.radius, 1e-300))[0])
    v = c.vectors[k] if plus[k] else -c.vectors[k]
    lam = vector_to_lambda(v, f.frame)
    face = tuple(int(i) for i in np.flatnonzero(np.abs(lam.values) <= 10 * MEMBERSHIP_TOL))
    return ConeMinResult(float(c.values[k]), v, lam, face)


@dataclass(frozen=True)
class NegtypeVerdict:
    holds: bool
    min_value: float
    witness: LambdaArray | None = None
    pattern: SignPattern | None = None

    def __bool__(self):
        return self.holds


def all_negtype_hold(m, negtype, tol: float = PSD_TOL,
                     candidates: FaceCandidates | None = None) -> NegtypeVerdict:
    """Decide whether every inequality of the given negative type holds.

    ``m`` may be a 4-point semimetric or its associated form.  On failure the
    witness is the cone argmin, scaled so its most negative entry is ``-1``.
    """
    f = m if isinstance(m, AssociatedForm) else form_from_metric(as_metric(m))
    if f.n != 4:
        raise InvalidArgument("all_negtype_hold is implemented for n = 4 only")
    cands = candidates if candidates is not None else face_candidates(f.M)
    radius = cands.radius
    worst = None
    for p in enumerate_cones(negtype):
        res = min_form_on_cone(f, p, cands)
        if worst is None or res.min_value < worst[0].min_value:
            worst = (res, p)
    res, p = worst
    if res.min_value >= -tol * radius:
        return NegtypeVerdict(True, res.min_value)
    return NegtypeVerdict(False, res.min_value, res.argmin_lambda.normalized(), p)
