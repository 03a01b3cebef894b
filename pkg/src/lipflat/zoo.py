"""Deterministic generators for the example spaces used as fixtures."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .errors import ParameterError, ResourceError
from .intervals import IntervalUnion
from .metric import FiniteMetricSpace, build_space, snowflake
from .urmetric import RECTIFIABLE, SIGMA_FINITE, ModelArc, Segment

# Hausdorff dimension of the middle-thirds set, at full float precision so
# that (3^-k)^BETA lands on 2^-k to machine accuracy.
BETA = math.log(2.0) / math.log(3.0)

MAX_CANTOR_LEVEL = 20


def _cantor_numerators(k: int):
    """Left endpoints of the level-k intervals as integers over 3^k."""
    starts = [0]
    for _ in range(k):
        starts = [3 * s for s in starts] + [3 * s + 2 for s in starts]
    return sorted(starts)


def cantor_interval_union(k: int) -> IntervalUnion:
    """Level-k outer approximation: 2^k closed intervals of length 3^-k."""
    if k < 0:
        raise ParameterError("level must be >= 0")
    if k > MAX_CANTOR_LEVEL:
        raise ResourceError(f"level {k} exceeds guard {MAX_CANTOR_LEVEL}")
    scale = 3.0 ** k
    return IntervalUnion(tuple((n / scale, (n + 1) / scale)
                               for n in _cantor_numerators(k)))


def cantor_endpoints(k: int):
    """The 2^(k+1) interval endpoints of the level-k approximation."""
    u = cantor_interval_union(k)
    out = []
    for a, b in u.intervals:
        out.append(a)
        out.append(b)
    return np.array(out)


def cantor_endpoint_sample(k: int) -> FiniteMetricSpace:
    """Level-k interval endpoints with line distances, based at 0."""
    pts = cantor_endpoints(k)
    dist = np.abs(pts[:, None] - pts[None, :])
    return build_space(tuple(pts.tolist()), dist, base=0.0,
                       coords=pts[:, None], norm="euclidean")


def snowflake_cantor_sample(k: int) -> FiniteMetricSpace:
    """Endpoint sample with distances |s-t|^beta; level-j pieces have
    diameter exactly 2^-j."""
    return snowflake(cantor_endpoint_sample(k), BETA)


def cantor_staircase(x: float) -> float:
    """Devil's staircase from the exact ternary expansion of the float.

    Monotone, fixes 0 and 1, constant across removed gaps; evaluated to 64
    ternary digits.
    """
    if not (0.0 <= x <= 1.0):
        raise ParameterError(f"staircase argument must be in [0, 1], got {x}")
    frac = Fraction(x)
    out = Fraction(0)
    half = Fraction(1, 2)
    for _ in range(64):
        frac *= 3
        digit = int(frac)
        frac -= digit
        if digit == 1:
            out += half
            break
        out += half * (digit // 2)
        half /= 2
    return float(out)


def filled_cantor_arc(k: int) -> ModelArc:
    """Arc model of the snowflaked set with its gaps bridged by geodesics.

    Breakpoints are the level-k endpoints under the snowflake distance;
    gap segments are rectifiable geodesics, level-k pieces are tagged as
    sigma-finite material of diameter 2^-k.
    """
    pts = cantor_endpoints(k)
    dist = np.abs(pts[:, None] - pts[None, :]) ** BETA
    segments = []
    for i in range(len(pts) - 1):
        if i % 2 == 0:
            segments.append(Segment(SIGMA_FINITE))
        else:
            segments.append(Segment(RECTIFIABLE, float(dist[i, i + 1])))
    return ModelArc(tuple(pts.tolist()), dist, tuple(segments))


def topologist_sine_sample(n: int) -> FiniteMetricSpace:
    """Planar sample of the oscillating curve plus its two limit points.

    Samples at x = 2/(j*pi), hitting the extrema and zeros alternately so
    polygonal lengths grow without bound as the sample refines.
    """
    if n < 0:
        raise ParameterError("sample count must be >= 0")
    ids = ["limit0", "limit1"]
    coords = [(0.0, 0.0), (0.0, 1.0)]
    for j in range(1, n + 1):
        xj = 2.0 / (j * math.pi)
        ids.append(f"s{j}")
        coords.append((xj, math.sin(1.0 / xj)))
    c = np.array(coords)
    diff = c[:, None, :] - c[None, :, :]
    dist = np.sqrt((diff * diff).sum(axis=2))
    return build_space(tuple(ids), dist, base="limit0", coords=c,
                       norm="euclidean")


def unit_interval_sample(n: int) -> FiniteMetricSpace:
    """n+1 equispaced points of [0, 1], based at 0."""
    if n < 1:
        raise ParameterError("need at least one subinterval")
    pts = np.arange(n + 1) / n
    dist = np.abs(pts[:, None] - pts[None, :])
    return build_space(tuple(pts.tolist()), dist, base=0.0,
                       coords=pts[:, None], norm="euclidean")
