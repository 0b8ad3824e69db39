"""Seeded property suites behind ``quadcomp verify``.

Trial ``i`` of a run draws its randomness from the sub-seed of ``(seed, i)``
only, so a trial can be replayed alone (``--start i --trials 1``) and the
report does not depend on evaluation order.  Each property turns a trial
into a nonnegative failure measure; the trial fails that property when the
measure exceeds the property's limit.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from . import models, rng
from .cones import all_negtype_hold, enumerate_cones, face_candidates, min_form_on_cone
from .errors import InvalidArgument, QuadcompError
from .forms import (
    AssociatedForm,
    FiniteSemimetric,
    LambdaArray,
    form_from_metric,
    lambda_to_vector,
    metric_from_form,
    negtype_value,
    simplex_frame,
    vector_to_lambda,
)
from .wald import check_triangle, classify4, embed_cat, embed_cbb, verify_embedding

MAX_WITNESSES = 10
CHUNK = 10_000


@dataclass
class VerificationReport:
    suite: str
    seed: int
    trials: int
    start: int = 0
    failures: int = 0
    witnesses: list = field(default_factory=list)
    worst: dict = field(default_factory=dict)
    limits: dict = field(default_factory=dict)
    duration: float = 0.0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_dict(self, include_duration: bool = False) -> dict:
        out = {
            "suite": self.suite,
            "seed": self.seed,
            "start": self.start,
            "trials": self.trials,
            "passed": self.passed,
            "failures": self.failures,
            "worst": self.worst,
            "limits": self.limits,
            "witnesses": self.witnesses,
        }
        if include_duration:
            out["duration_s"] = self.duration
        return out

    def to_json(self, include_duration: bool = False) -> str:
        return json.dumps(self.to_dict(include_duration), indent=2, allow_nan=False) + "\n"


class _Collector:
    def __init__(self, seed, start):
        self.seed = seed
        self.start = start
        self.order: dict[str, int] = {}
        self.worst: dict[str, float] = {}
        self.limits: dict[str, float] = {}
        self.failed: list = []
        self.count = 0

    def declare(self, prop, limit):
        self.order.setdefault(prop, len(self.order))
        self.limits[prop] = limit
        self.worst.setdefault(prop, 0.0)

    def add(self, prop, index, measure, record=None):
        measure = float(measure)
        if not np.isfinite(measure):
            measure = 1e300
        self.worst[prop] = max(self.worst[prop], measure)
        if measure > self.limits[prop]:
            self.count += 1
            if record is not None and len(self.failed) < 4 * MAX_WITNESSES:
                rec = record() if callable(record) else record
                self.failed.append((index, self.order[prop], prop, measure, rec))

    def add_batch(self, prop, first, measures, record):
        measures = np.asarray(measures, dtype=float)
        measures = np.where(np.isfinite(measures), measures, 1e300)
        if measures.size:
            self.worst[prop] = max(self.worst[prop], float(measures.max()))
        for j in np.flatnonzero(measures > self.limits[prop]):
            self.count += 1
            if len(self.failed) < 4 * MAX_WITNESSES:
                self.failed.append((first + int(j), self.order[prop], prop,
                                    float(measures[j]), record(int(j))))

    def report(self, suite, trials) -> VerificationReport:
        self.failed.sort(key=lambda t: (t[0], t[1]))
        witnesses = [{"property": p, "seed": self.seed, "index": i, "measure": m, "input": rec}
                     for i, _, p, m, rec in self.failed[:MAX_WITNESSES]]
        return VerificationReport(suite, self.seed, trials, self.start, self.count,
                                  witnesses, dict(self.worst), dict(self.limits))


def _chunks(seed, trials, start, draws, chunk=CHUNK):
    for s in range(start, start + trials, chunk):
        count = min(chunk, start + trials - s)
        yield s, rng.uniforms(rng.trial_seeds(seed, count, s), draws)


def _matrix(d):
    return {"n": int(np.shape(d)[0]), "d": np.asarray(d).tolist()}


# -- identities --------------------------------------------------------------

def _random_chain(u):
    k = 1 + int(10 * u[0])
    alpha = 1e-3 + (1 - 2e-3) * u[1]
    beta = 0.1 + 0.8 * u[2]
    cfg = models.ComparisonConfig(alpha, beta, k)
    steps = u[3] * beta ** np.arange(1, k + 1)
    chain = models.Chain(float(u[4]), tuple(u[5:6 + k]), tuple(u[16:17 + k]), tuple(steps))
    return cfg, chain


def suite_identities(seed, trials, start=0, col=None):
    col = col or _Collector(seed, start)
    col.declare("polarization", 1e-12)
    col.declare("lambda_roundtrip", 1e-12)
    col.declare("metric_roundtrip", 1e-12)
    col.declare("telescoping", 1e-10)
    for first, u in _chunks(seed, trials, start, 64):
        for j, row in enumerate(u):
            i = first + j
            n = 3 + int(5 * row[0])
            d = np.zeros((n, n))
            iu = np.triu_indices(n, 1)
            d[iu] = row[1:1 + len(iu[0])]
            m = FiniteSemimetric(d + d.T)
            lam = 2 * row[22:22 + n] - 1
            lam = LambdaArray(lam - lam.mean())
            scale = float(np.abs(lam.values) @ m.squared() @ np.abs(lam.values))
            value = negtype_value(m, lam)
            f = form_from_metric(m)
            v = lambda_to_vector(lam, f.frame)
            rec = {**_matrix(m.d), "lambda": lam.tolist()}
            col.add("polarization", i, abs(value + 2 * f(v)) / scale, rec)
            back = vector_to_lambda(v, f.frame).values
            col.add("lambda_roundtrip", i,
                    np.abs(back - lam.values).max() / np.abs(lam.values).max(), rec)
            # compare squares: sqrt amplifies rounding near zero distances
            col.add("metric_roundtrip", i,
                    np.abs(metric_from_form(f).squared() - m.squared()).max()
                    / max(m.scale ** 2, 1e-300), rec)
            cfg, chain = _random_chain(row[30:])
            col.add("telescoping", i, models.telescoping_residual(cfg, chain),
                    lambda: {"alpha": cfg.alpha, "beta": cfg.beta, "k": cfg.k,
                             "d12": chain.d12, "d1": list(chain.d1), "d2": list(chain.d2),
                             "steps": list(chain.steps)})
    return col


# -- lemma -------------------------------------------------------------------

def lemma_residuals(d: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Vectorised ``lemma_area_bound_residual`` over stacks of tables and arrays."""
    d2 = d ** 2
    lhs = np.einsum("ki,kij,kj->k", lam, d2, lam)
    delta = np.maximum(np.maximum(d[:, 0, 1], d[:, 0, 2]), d[:, 1, 2])
    s2 = d2[:, 0, 1] + d2[:, 1, 2] + d2[:, 2, 0]
    s4 = d2[:, 0, 1] ** 2 + d2[:, 1, 2] ** 2 + d2[:, 2, 0] ** 2
    a2 = np.maximum(s2 * s2 - 2 * s4, 0.0) / 16.0
    return (12 + 3 * delta ** 2) * lam[:, 0] * lam[:, 1] * lam[:, 2] * a2 - lhs


def lemma_scale(d: np.ndarray, lam: np.ndarray) -> np.ndarray:
    a = np.abs(lam)
    return np.maximum(np.einsum("ki,kij,kj->k", a, d ** 2, a), 1e-300)


def suite_lemma(seed, trials, start=0, col=None, cap=1.0):
    col = col or _Collector(seed, start)
    col.declare("lemma", 1e-9)
    space = models.Hyperbolic(cap)
    for first, u in _chunks(seed, trials, start, space.draws + 3):
        pts = space.points(u[:, :space.draws])
        d = space.pairwise(pts)
        w = 1.0 - u[:, space.draws:]
        w = w / w.sum(axis=1, keepdims=True)
        lam = np.concatenate([w, -np.ones((len(w), 1))], axis=1)
        measure = -lemma_residuals(d, lam) / lemma_scale(d, lam)
        col.add_batch("lemma", first, measure,
                      lambda j: {**_matrix(d[j]), "points": pts[j].tolist(),
                                 "lambda": lam[j].tolist()})
    return col


# -- cones -------------------------------------------------------------------

def _cone_samples(pattern, u):
    """Directions of the closed cone of ``pattern`` from ``(count, 4)`` uniforms."""
    signs = np.asarray(pattern.signs, dtype=float)
    pos = signs > 0
    lam = np.zeros_like(u)
    if pos.sum() == 3:
        w = u[:, :3] + 1e-12
        lam[:, pos] = w
        lam[:, ~pos] = -w.sum(axis=1, keepdims=True)
    else:
        a, b = u[:, :1], u[:, 1:2]
        lam[:, pos] = np.concatenate([a, 1 - a], axis=1)
        lam[:, ~pos] = -np.concatenate([b, 1 - b], axis=1)
    return lam @ simplex_frame(4).y


CONE_SAMPLES = 16
CONES = enumerate_cones((3, 1)) + enumerate_cones((2, 2))


def _random_form(u):
    g = rng.normals_from(u[:6])
    A = np.zeros((3, 3))
    A[np.triu_indices(3)] = g
    A = A + A.T
    return A * (10.0 * u[6] / np.abs(np.linalg.eigvalsh(A)).max())


def suite_cones(seed, trials, start=0, col=None):
    col = col or _Collector(seed, start)
    col.declare("cone_lower_bound", 1e-12)
    col.declare("argmin_in_cone", 1e-9)
    col.declare("verdict_witness", 0.0)
    col.declare("label_invariance", 1e-9)
    frame = simplex_frame(4)
    draws = 7 + len(CONES) * CONE_SAMPLES * 4 + 10
    for first, u in _chunks(seed, trials, start, draws):
        for j, row in enumerate(u):
            i = first + j
            M = _random_form(row)
            f = AssociatedForm(M, frame)
            cands = face_candidates(M)
            radius = max(cands.radius, 1e-300)
            rec = {"form": M.tolist()}
            low, outside = 0.0, 0.0
            for c, p in enumerate(CONES):
                res = min_form_on_cone(f, p, cands)
                off = 7 + c * CONE_SAMPLES * 4
                V = _cone_samples(p, row[off:off + CONE_SAMPLES * 4].reshape(-1, 4))
                vals = np.einsum("ki,ij,kj->k", V, M, V) / np.einsum("ki,ki->k", V, V)
                low = max(low, (res.min_value - vals.min()) / radius)
                lam = res.argmin_lambda.values
                signed = lam * np.asarray(p.signs) / np.abs(lam).max()
                outside = max(outside, float(-signed.min()))
            col.add("cone_lower_bound", i, low, rec)
            col.add("argmin_in_cone", i, outside, rec)

            m = models.RandomMetric().distances(row[-6:][None])[0]
            perm = np.argsort(row[-10:-6])
            rec = {**_matrix(m), "perm": perm.tolist()}
            bad, drift = 0.0, 0.0
            for t in ((3, 1), (2, 2)):
                verdict = all_negtype_hold(m, t)
                other = all_negtype_hold(m[np.ix_(perm, perm)], t)
                scale = max(m.max() ** 2, 1e-300)
                drift = max(drift, abs(verdict.min_value - other.min_value) / scale)
                if not verdict.holds:
                    w = verdict.witness
                    ok = w.negtype == t and negtype_value(m, w) > 0
                    bad = max(bad, 0.0 if ok else 1.0)
            col.add("verdict_witness", i, bad, rec)
            col.add("label_invariance", i, drift, rec)
    return col


# -- embeddings --------------------------------------------------------------

SOURCES = (
    ("circle", models.parse_space("circle(r=0.1..10)*euclidean(3)")),
    ("tripod", models.parse_space("tripod(L=1)*euclidean(3)")),
    ("random", models.RandomMetric()),
    ("hyperbolic", models.Hyperbolic(1.0)),
)


def _source_distances(seeds, source):
    u = rng.uniforms(seeds, source.draws)
    if isinstance(source, models.RandomMetric):
        return source.distances(u)
    return source.pairwise(source.points(u))


def _embed_measure(fn, m):
    try:
        emb = fn(m)
    except QuadcompError as exc:
        return 1.0, f"{type(exc).__name__}: {exc}"
    return verify_embedding(m, emb), None


def suite_embeddings(seed, trials, start=0, col=None):
    col = col or _Collector(seed, start)
    col.declare("converse_cbb", 0.0)
    col.declare("converse_cat", 0.0)
    col.declare("embed_cbb", 1e-6)
    col.declare("embed_cat", 1e-6)
    seeds = rng.trial_seeds(seed, trials, start)
    idx = np.arange(start, start + trials)
    for s, (name, source) in enumerate(SOURCES):
        mask = idx % len(SOURCES) == s
        if not mask.any():
            continue
        for i, d in zip(idx[mask], _source_distances(seeds[mask], source)):
            i = int(i)
            m = FiniteSemimetric(d)
            cls = classify4(m)
            rec = {**_matrix(m.d), "source": name}
            if name == "circle":
                col.add("converse_cbb", i, 0.0 if cls.cbb else 1.0, rec)
            if name == "tripod":
                col.add("converse_cat", i, 0.0 if cls.cat else 1.0, rec)
            for prop, ok, fn in (("embed_cbb", cls.cbb, embed_cbb), ("embed_cat", cls.cat, embed_cat)):
                if ok:
                    measure, err = _embed_measure(fn, m)
                    col.add(prop, i, measure, {**rec, "error": err} if err else rec)
    return col


# -- models ------------------------------------------------------------------

def _alpha(u):
    return 0.1 * (1 + int(9 * u))


def suite_models(seed, trials, start=0, col=None):
    col = col or _Collector(seed, start)
    for prop, limit in (("sphere_31", 1e-9), ("hyperbolic_22", 1e-9), ("circle_cbb", 0.0),
                        ("closure_triangle", 1e-12), ("heron", 1e-10),
                        ("point_on_side_euclidean", 1e-12), ("point_on_side_sphere", 1e-9),
                        ("point_on_side_hyperbolic", 1e-9)):
        col.declare(prop, limit)
    sphere, hyper, circle = models.Sphere(1.0), models.Hyperbolic(1.0), models.Circle(1.0)
    plane = models.Euclidean(2)
    parts = (sphere.draws, hyper.draws, circle.draws, 6, plane.draws, 3)
    offs = np.cumsum((0,) + parts)
    for first, u in _chunks(seed, trials, start, int(offs[-1])):
        block = [u[:, offs[k]:offs[k + 1]] for k in range(len(parts))]
        sp = sphere.points(block[0])
        hp = hyper.points(block[1])
        cd = circle.pairwise(circle.points(block[2]))
        rd = models.RandomMetric().distances(block[3])
        ep = plane.points(block[4])
        a_in = np.array([_alpha(x) for x in block[5][:, 0]])
        a_out = 1.0 + 2.0 * block[5][:, 1]

        # x4 divides [x1 x2] with d14 = (1 - alpha) d12
        s_on = np.concatenate([sp[:, :3], models.sphere_arc_point(sp[:, 0], sp[:, 1], 1 - a_in)[:, None]], 1)
        e_on = np.concatenate([ep[:, :3], (a_in[:, None] * ep[:, 0] + (1 - a_in[:, None]) * ep[:, 1])[:, None]], 1)
        # alpha > 1: x1 lies on [x2 x4] with d14 = (alpha - 1) d12
        h12 = hyper.dist(hp[:, 0], hp[:, 1])
        h_on = np.concatenate([hp[:, :3], models.hyperbolic_geodesic_point(
            hp[:, 0], hp[:, 1], -(a_out - 1) * h12)[:, None]], 1)
        sd, hd = sphere.pairwise(sp), hyper.pairwise(hp)
        sd_on, hd_on, ed_on = sphere.pairwise(s_on), hyper.pairwise(h_on), plane.pairwise(e_on)

        for j in range(len(u)):
            i = first + j
            for prop, d, t in (("sphere_31", sd[j], (3, 1)), ("hyperbolic_22", hd[j], (2, 2))):
                v = all_negtype_hold(d, t)
                col.add(prop, i, -v.min_value / max(form_from_metric(d).spectral_radius, 1e-300),
                        lambda d=d: _matrix(d))
            col.add("circle_cbb", i, 0.0 if classify4(cd[j]).cbb else 1.0, lambda: _matrix(cd[j]))
            tri = check_triangle(rd[j])
            col.add("closure_triangle", i, tri.violation / max(rd[j].max(), 1e-300),
                    lambda: _matrix(rd[j]))
            a, b, c = rd[j][0, 1], rd[j][1, 2], rd[j][2, 0]
            s = (a + b + c) / 2
            heron = models.heron_16a2(a, b, c)
            col.add("heron", i, abs(heron - 16 * s * (s - a) * (s - b) * (s - c)) / max((a * a + b * b + c * c) ** 2, 1e-300),
                    {"sides": [a, b, c]})
            for prop, d, al in (("point_on_side_euclidean", ed_on[j], a_in[j]),
                                ("point_on_side_sphere", sd_on[j], a_in[j]),
                                ("point_on_side_hyperbolic", hd_on[j], a_out[j])):
                rec = lambda d=d, al=al: {**_matrix(d), "alpha": float(al)}
                try:
                    value = models.point_on_side_value(d, al)
                except InvalidArgument as exc:
                    col.add(prop, i, np.inf, lambda: {**rec(), "error": str(exc)})
                    continue
                scale = max(d.max() ** 2, 1e-300)
                measure = abs(value) if prop.endswith("euclidean") else value / scale
                col.add(prop, i, max(measure, 0.0), rec)
    return col


SUITES = {
    "identities": suite_identities,
    "lemma": suite_lemma,
    "cones": suite_cones,
    "embeddings": suite_embeddings,
    "models": suite_models,
}


def run_suite(name: str, seed: int, trials: int, start: int = 0) -> VerificationReport:
    if name not in SUITES:
        raise InvalidArgument(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if trials < 1:
        raise InvalidArgument("trials must be >= 1")
    if start < 0:
        raise InvalidArgument("start must be >= 0")
    seed = int(seed)
    if not 0 <= seed < 2 ** 64:
        raise InvalidArgument("seed must be an unsigned 64-bit integer")
    t0 = time.perf_counter()
    col = SUITES[name](seed, trials, start)
    report = col.report(name, trials)
    report.duration = time.perf_counter() - t0
    return report
