"""Polygonal curves in a normed ambient: length, weighted path sums and
the ball/cover rerouting used to shorten detours."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PreconditionError, StructuralError
from .metric import FiniteMetricSpace


def _norm(diff: np.ndarray, kind: str) -> float:
    if kind == "max":
        return float(np.abs(diff).max()) if diff.size else 0.0
    return float(np.sqrt((diff * diff).sum()))


@dataclass(frozen=True)
class Polyline:
    """Vertex chain with a nondecreasing parameter list."""

    vertices: np.ndarray
    params: np.ndarray | None = None
    norm: str = "max"

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=np.float64))
        if v.shape[0] < 1:
            raise StructuralError("polyline needs at least one vertex")
        if self.params is None:
            seg = self.segment_lengths_of(v)
            p = np.concatenate([[0.0], np.cumsum(seg)])
        else:
            p = np.asarray(self.params, dtype=np.float64)
            if p.shape != (v.shape[0],):
                raise StructuralError("one parameter per vertex required")
            if np.any(np.diff(p) < 0):
                raise StructuralError("parameters must be nondecreasing")
        v.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "params", p)

    def segment_lengths_of(self, v):
        if v.shape[0] < 2:
            return np.zeros(0)
        d = np.diff(v, axis=0)
        if self.norm == "max":
            return np.abs(d).max(axis=1)
        return np.sqrt((d * d).sum(axis=1))

    def segment_lengths(self):
        return self.segment_lengths_of(self.vertices)

    def is_unit_speed_bounded(self, tol: float = 1e-12) -> bool:
        """Whether every segment moves no faster than its parameter span."""
        seg = self.segment_lengths()
        return bool(np.all(seg <= np.diff(self.params) + tol))


def length(poly: Polyline) -> float:
    """Total variation: the sum of segment norms."""
    return float(math.fsum(poly.segment_lengths()))


def path_integral(poly: Polyline, weight) -> float:
    """Upper-sum quadrature sum of ``weight`` along the curve.

    Each segment contributes its length times the larger endpoint weight,
    so the result dominates any sampling of the weight along segments with
    endpoint-monotone profiles and equals ``length`` for the unit weight.
    """
    v = poly.vertices
    w = np.array([float(weight(v[i])) for i in range(v.shape[0])])
    if np.any(w < 0):
        raise PreconditionError("path weights must be nonnegative")
    if v.shape[0] < 2:
        return 0.0
    seg = poly.segment_lengths()
    return float(math.fsum(seg * np.maximum(w[:-1], w[1:])))


@dataclass(frozen=True)
class Ball:
    """Closed norm ball; convex for both supported norms."""

    center: np.ndarray
    radius: float
    norm: str = "max"

    def __post_init__(self):
        if self.radius < 0:
            raise ParameterError("ball radius must be >= 0")
        c = np.asarray(self.center, dtype=np.float64)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)

    @property
    def diam(self) -> float:
        return 2.0 * self.radius

    def contains(self, x, tol: float = 0.0) -> bool:
        return _norm(np.asarray(x) - self.center, self.norm) <= self.radius + tol


def _segment_ball_interval(a, b, ball: Ball):
    """Parameter interval of [a, b] inside the ball, or None.

    Under the max norm this is exact per-coordinate interval arithmetic;
    under the euclidean norm it solves the quadratic.
    """
    a = np.asarray(a, dtype=np.float64)
    d = np.asarray(b, dtype=np.float64) - a
    c = ball.center
    r = ball.radius
    lo, hi = 0.0, 1.0
    if ball.norm == "max":
        # for every coordinate: |a_i - c_i + t d_i| <= r
        for ai, di, ci in zip(a, d, c):
            off = ai - ci
            if abs(di) < 1e-300:
                if abs(off) > r:
                    return None
                continue
            t0 = (-r - off) / di
            t1 = (r - off) / di
            if t0 > t1:
                t0, t1 = t1, t0
            lo = max(lo, t0)
            hi = min(hi, t1)
            if lo > hi:
                return None
        return (lo, hi)
    off = a - c
    qa = float(d @ d)
    qb = 2.0 * float(off @ d)
    qc = float(off @ off) - r * r
    if qa < 1e-300:
        return (lo, hi) if qc <= 0 else None
    disc = qb * qb - 4 * qa * qc
    if disc < 0:
        return None
    s = math.sqrt(disc)
    t0 = (-qb - s) / (2 * qa)
    t1 = (-qb + s) / (2 * qa)
    lo = max(lo, t0)
    hi = min(hi, t1)
    return (lo, hi) if lo <= hi else None


def measure_in_ball(poly: Polyline, ball: Ball) -> float:
    """Length of the curve portion inside a closed ball."""
    v = poly.vertices
    seg = poly.segment_lengths()
    total = 0.0
    for i in range(v.shape[0] - 1):
        hit = _segment_ball_interval(v[i], v[i + 1], ball)
        if hit is not None:
            total += seg[i] * (hit[1] - hit[0])
    return float(total)


def measure_in_ball_outside(poly: Polyline, ball: Ball, exclude: Ball) -> float:
    """Length of the portion inside ``ball`` but outside ``exclude``."""
    v = poly.vertices
    seg = poly.segment_lengths()
    total = 0.0
    for i in range(v.shape[0] - 1):
        hit = _segment_ball_interval(v[i], v[i + 1], ball)
        if hit is None:
            continue
        cut = _segment_ball_interval(v[i], v[i + 1], exclude)
        if cut is None:
            total += seg[i] * (hit[1] - hit[0])
            continue
        left = max(0.0, min(hit[1], cut[0]) - hit[0])
        right = max(0.0, hit[1] - max(hit[0], cut[1]))
        total += seg[i] * (left + right)
    return float(total)


def modify_through_convex(poly: Polyline, ball: Ball) -> Polyline:
    """Replace everything between first and last ball contact by the chord.

    Endpoints are preserved; the curve inside the ball becomes a single
    straight segment (length at most the ball diameter) and the material
    outside the ball is untouched.
    """
    v = poly.vertices
    p = poly.params
    m = v.shape[0]
    first = None
    last = None
    for i in range(m - 1):
        hit = _segment_ball_interval(v[i], v[i + 1], ball)
        if hit is not None:
            if first is None:
                first = (i, hit[0])
            last = (i, hit[1])
    if m == 1:
        if ball.contains(v[0]):
            return poly
        first = None
    if first is None:
        return poly

    def point_at(i, t):
        return v[i] * (1 - t) + v[i + 1] * t

    def param_at(i, t):
        return p[i] * (1 - t) + p[i + 1] * t

    (i0, t0), (i1, t1) = first, last
    head_v = [v[k] for k in range(i0 + 1)] + [point_at(i0, t0)]
    head_p = [p[k] for k in range(i0 + 1)] + [param_at(i0, t0)]
    tail_v = [point_at(i1, t1)] + [v[k] for k in range(i1 + 1, m)]
    tail_p = [param_at(i1, t1)] + [p[k] for k in range(i1 + 1, m)]
    new_v = np.array(head_v + tail_v)
    new_p = np.array(head_p + tail_p)
    return Polyline(new_v, new_p, poly.norm)


def modify_through_cover(poly: Polyline, cover) -> Polyline:
    """Sequential rerouting through a list of convex pieces, in order."""
    out = poly
    for ball in cover:
        out = modify_through_convex(out, ball)
    return out


@dataclass(frozen=True)
class CurveFragment:
    """Finite 1-Lipschitz witness: knots (t_i, point) in a metric space."""

    space: FiniteMetricSpace
    knots: tuple

    def __post_init__(self):
        ts = [t for t, _ in self.knots]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise StructuralError("knot parameters must be strictly increasing")
        idx = [self.space.index(x) for _, x in self.knots]
        for a in range(len(idx)):
            for b in range(a + 1, len(idx)):
                if self.space.dist[idx[a], idx[b]] > abs(ts[b] - ts[a]) + 1e-12:
                    raise PreconditionError(
                        f"knots {a} and {b} move faster than the parameter")

    def param_gap(self) -> float:
        """Parameter length not accounted for by consecutive distances."""
        ts = [t for t, _ in self.knots]
        if len(ts) < 2:
            return 0.0
        travelled = math.fsum(
            self.space.d(self.knots[k][1], self.knots[k + 1][1])
            for k in range(len(ts) - 1))
        return max(0.0, (ts[-1] - ts[0]) - travelled)
