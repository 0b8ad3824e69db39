"""Associated quadratic forms of finite point arrays.

A semimetric on ``n`` points is encoded as a quadratic form ``rho`` on
``V_n = R^(n-1)``, determined by ``rho(y_i - y_j) = d_ij**2`` where the
``y_i`` are the vertices of a unit-edge regular simplex centred at the
origin.  Zero-sum coefficient arrays ``lam`` correspond to vectors
``v = sum_i lam_i y_i``, and

    sum_{i,j} lam_i lam_j d_ij**2 = -2 rho(v),

so an inequality of negative type is the same thing as ``rho(v) >= 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidArgument, NotASemimetric, NotEuclidean

PSD_TOL = 1e-9
SYMMETRY_TOL = 1e-12
RANK_TOL = 1e-12


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FiniteSemimetric:
    """Symmetric nonnegative distance table with zero diagonal.

    Triangle inequalities are not required; see
    :func:`quadcomp.wald.check_triangle`.
    """

    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InvalidArgument(f"distance table must be square, got shape {d.shape}")
        if d.shape[0] < 2:
            raise InvalidArgument("a semimetric needs at least 2 points")
        if not np.all(np.isfinite(d)):
            raise InvalidArgument("distances must be finite")
        scale = max(float(np.abs(d).max()), 1.0)
        if np.any(d < -SYMMETRY_TOL * scale):
            i, j = np.argwhere(d < -SYMMETRY_TOL * scale)[0]
            raise InvalidArgument(f"negative distance at ({i}, {j}): {d[i, j]!r}")
        if np.any(np.abs(np.diag(d)) > SYMMETRY_TOL * scale):
            raise InvalidArgument("diagonal of a distance table must vanish")
        asym = np.abs(d - d.T)
        if np.any(asym > SYMMETRY_TOL * scale):
            i, j = np.unravel_index(np.argmax(asym), asym.shape)
            raise InvalidArgument(
                f"distance table is not symmetric at ({i}, {j}): "
                f"{d[i, j]!r} != {d[j, i]!r}")
        d = np.clip(0.5 * (d + d.T), 0.0, None)
        np.fill_diagonal(d, 0.0)
        object.__setattr__(self, "d", _readonly(d))

    @property
    def n(self) -> int:
        return self.d.shape[0]

    @property
    def scale(self) -> float:
        return float(self.d.max())

    def squared(self) -> np.ndarray:
        return self.d ** 2

    def permuted(self, perm) -> FiniteSemimetric:
        perm = list(perm)
        return FiniteSemimetric(self.d[np.ix_(perm, perm)])

    def scaled(self, a: float) -> FiniteSemimetric:
        return FiniteSemimetric(a * self.d)

    def tolist(self):
        return self.d.tolist()

    @classmethod
    def from_points(cls, points) -> FiniteSemimetric:
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            p = p[:, None]
        diff = p[:, None, :] - p[None, :, :]
        return cls(np.sqrt((diff ** 2).sum(axis=-1)))


@dataclass(frozen=True)
class SimplexFrame:
    """Vertices ``y`` (rows) of the unit-edge regular simplex in ``R^(n-1)``.

    The centroid sits at the origin, so ``<y_i, y_j> = (n*[i==j] - 1) / (2n)``.
    """

    n: int
    y: np.ndarray

    def edge(self, i: int, j: int) -> np.ndarray:
        return self.y[i] - self.y[j]


@lru_cache(maxsize=None)
def simplex_frame(n: int) -> SimplexFrame:
    if int(n) != n or n < 2:
        raise InvalidArgument(f"simplex frame needs n >= 2, got {n!r}")
    n = int(n)
    # Helmert basis of the zero-sum hyperplane of R^n, columns orthonormal.
    h = np.zeros((n, n - 1))
    for k in range(1, n):
        h[:k, k - 1] = -1.0
        h[k, k - 1] = k
        # scaled by 1/sqrt(2) in the same division, so n = 2 gives exactly -1/2, 1/2
        h[:, k - 1] /= np.sqrt(2.0 * k * (k + 1))
    return SimplexFrame(n, _readonly(h))


@dataclass(frozen=True)
class LambdaArray:
    """Zero-sum coefficients of one inequality of negative type."""

    values: np.ndarray

    def __post_init__(self):
        lam = np.array(self.values, dtype=float).ravel()
        if lam.size < 2:
            raise InvalidArgument("a lambda array needs at least 2 entries")
        big = float(np.abs(lam).max())
        if big == 0.0:
            raise InvalidArgument("lambda array must not vanish identically")
        if abs(float(lam.sum())) > 1e-12 * big * lam.size:
            raise InvalidArgument(f"lambda entries must sum to zero, sum = {float(lam.sum())!r}")
        object.__setattr__(self, "values", _readonly(lam))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def negtype(self) -> tuple[int, int]:
        pos = int(np.sum(self.values > 0))
        neg = int(np.sum(self.values < 0))
        return (max(pos, neg), min(pos, neg))

    @property
    def type_pos(self) -> int:
        return self.negtype[0]

    @property
    def type_neg(self) -> int:
        return self.negtype[1]

    def normalized(self) -> LambdaArray:
        """Sign-normalised copy whose most negative entry equals -1.

        The global sign is chosen so that positive entries are at least as
        many as negative ones; ties go to a positive first nonzero entry.
        """
        lam = np.array(self.values)
        pos, neg = int(np.sum(lam > 0)), int(np.sum(lam < 0))
        first = lam[np.flatnonzero(lam)[0]]
        if neg > pos or (neg == pos and first < 0):
            lam = -lam
        return LambdaArray(lam / -lam.min())

    def tolist(self):
        return self.values.tolist()


def as_lambda(lam) -> LambdaArray:
    return lam if isinstance(lam, LambdaArray) else LambdaArray(lam)


def as_metric(m) -> FiniteSemimetric:
    return m if isinstance(m, FiniteSemimetric) else FiniteSemimetric(m)


@dataclass(frozen=True)
class AssociatedForm:
    """Matrix ``M`` of ``rho`` in the orthonormal coordinates of the frame."""

    M: np.ndarray
    frame: SimplexFrame = field(repr=False)

    def __post_init__(self):
        M = np.array(self.M, dtype=float)
        k = self.frame.n - 1
        if M.shape != (k, k):
            raise InvalidArgument(f"form matrix must be {k}x{k}, got {M.shape}")
        object.__setattr__(self, "M", _readonly(0.5 * (M + M.T)))

    @property
    def n(self) -> int:
        return self.frame.n

    def __call__(self, v) -> float:
        v = np.asarray(v, dtype=float)
        return float(v @ self.M @ v)

    def edge_values(self) -> np.ndarray:
        """Table of ``rho(y_i - y_j)``."""
        y = self.frame.y
        g = y @ self.M @ y.T
        g = 0.5 * (g + g.T)
        dg = np.diag(g)
        ev = dg[:, None] + dg[None, :] - 2.0 * g
        np.fill_diagonal(ev, 0.0)
        return ev

    def eigh(self):
        return np.linalg.eigh(self.M)

    @property
    def spectral_radius(self) -> float:
        return float(np.abs(np.linalg.eigvalsh(self.M)).max())

    def __add__(self, other: AssociatedForm) -> AssociatedForm:
        return AssociatedForm(self.M + other.M, self.frame)

    def __sub__(self, other: AssociatedForm) -> AssociatedForm:
        return AssociatedForm(self.M - other.M, self.frame)


def form_from_metric(m) -> AssociatedForm:
    m = as_metric(m)
    frame = simplex_frame(m.n)
    # For zero-sum lam, rho(Y^T lam) = -1/2 lam^T D2 lam; Y^T Y = I/2.
    y = frame.y
    M = -2.0 * y.T @ m.squared() @ y
    return AssociatedForm(M, frame)


def metric_from_form(f: AssociatedForm) -> FiniteSemimetric:
    ev = f.edge_values()
    scale = float(np.abs(ev).max())
    low = ev < -1e-12 * scale
    if np.any(low):
        i, j = np.argwhere(low)[0]
        raise NotASemimetric((int(i), int(j)), ev[i, j])
    return FiniteSemimetric(np.sqrt(np.clip(ev, 0.0, None)))


def lambda_to_vector(lam, frame: SimplexFrame | None = None) -> np.ndarray:
    lam = as_lambda(lam)
    frame = frame or simplex_frame(lam.n)
    if frame.n != lam.n:
        raise InvalidArgument(f"lambda has {lam.n} entries, frame has {frame.n} vertices")
    return frame.y.T @ lam.values


def vector_to_lambda(v, frame: SimplexFrame) -> LambdaArray:
    v = np.asarray(v, dtype=float)
    if v.shape != (frame.n - 1,):
        raise InvalidArgument(f"vector must have {frame.n - 1} components")
    if not np.any(v):
        raise InvalidArgument("the zero vector has no lambda array")
    # Y Y^T lam = lam / 2 for zero-sum lam.
    lam = 2.0 * frame.y @ v
    return LambdaArray(lam - lam.mean())


def negtype_value(m, lam) -> float:
    """Ordered double sum ``sum_{i,j} lam_i lam_j d_ij**2``.

    The inequality of negative type holds when this is ``<= 0``.  Each
    unordered pair is counted twice.
    """
    m, lam = as_metric(m), as_lambda(lam)
    if m.n != lam.n:
        raise InvalidArgument(f"metric has {m.n} points, lambda has {lam.n} entries")
    w = lam.values
    return float(w @ m.squared() @ w)


@dataclass(frozen=True)
class EuclideanCheck:
    euclidean: bool
    min_eigenvalue: float
    witness: LambdaArray | None = None

    def __bool__(self):
        return self.euclidean


def is_psd(M, tol: float = PSD_TOL) -> bool:
    w = np.linalg.eigvalsh(M)
    return bool(w[0] >= -tol * max(float(np.abs(w).max()), 0.0))


def is_euclidean(m, tol: float = PSD_TOL) -> EuclideanCheck:
    f = form_from_metric(m)
    w, u = f.eigh()
    radius = float(np.abs(w).max())
    if w[0] >= -tol * radius:
        return EuclideanCheck(True, float(w[0]))
    witness = vector_to_lambda(u[:, 0], f.frame).normalized()
    return EuclideanCheck(False, float(w[0]), witness)


def psd_factor(M, tol: float = PSD_TOL, scale: float | None = None) -> np.ndarray:
    """Rows ``F`` with ``F.T @ F == M`` for a PSD matrix, zero rows dropped.

    Eigenvalues below ``tol * scale`` are discarded; ``scale`` defaults to
    the spectral radius of ``M``.
    """
    w, u = np.linalg.eigh(np.asarray(M, dtype=float))
    if scale is None:
        scale = float(np.abs(w).max()) if w.size else 0.0
    keep = w > tol * scale
    u = u[:, keep]
    # fix eigenvector signs for reproducible coordinates
    for c in range(u.shape[1]):
        if u[np.argmax(np.abs(u[:, c])), c] < 0:
            u[:, c] = -u[:, c]
    return np.sqrt(w[keep])[:, None] * u.T


def euclidean_embed(m, tol: float = PSD_TOL) -> np.ndarray:
    """Coordinates (one row per point) realising ``m`` in ``R^k``, ``k <= n-1``."""
    m = as_metric(m)
    check = is_euclidean(m, tol)
    if not check:
        raise NotEuclidean(
            f"metric is not Euclidean; witness lambda {check.witness.tolist()}")
    f = form_from_metric(m)
    # keep every direction above rounding level, so only noise is discarded
    return frame_coordinates(f.frame, psd_factor(f.M, RANK_TOL))


def frame_coordinates(frame: SimplexFrame, F: np.ndarray) -> np.ndarray:
    """Images of the frame vertices under ``F``; a zero column when ``F`` is empty."""
    if F.shape[0] == 0:
        return np.zeros((frame.n, 1))
    return frame.y @ F.T
