"""Scalar Lipschitz toolkit: norms, difference quotients, extension,
lattice operations, flatness profiles and separation reporting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PreconditionError
from .intervals import merge_intervals
from .metric import FiniteMetricSpace


def as_field(space: FiniteMetricSpace, values) -> np.ndarray:
    """Coerce a dict or sequence of per-point values to an aligned array."""
    if isinstance(values, dict):
        try:
            arr = np.array([float(values[p]) for p in space.points])
        except KeyError as exc:
            raise ParameterError(f"field misses point {exc}") from None
    else:
        arr = np.asarray(values, dtype=np.float64)
        if arr.shape != (len(space),):
            raise ParameterError("field length does not match the space")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("field values must be finite")
    return arr


def field_to_dict(space: FiniteMetricSpace, f) -> dict:
    return {p: float(v) for p, v in zip(space.points, f)}


def _quotients(space, f):
    """|f(x)-f(y)| / d(x,y) with zeros on the diagonal."""
    d = space.dist
    num = np.abs(f[:, None] - f[None, :])
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(d > 0, num / np.where(d > 0, d, 1.0), 0.0)
    return q


def lip_norm(space: FiniteMetricSpace, values) -> float:
    """Largest pairwise difference quotient; 0 on a single point."""
    f = as_field(space, values)
    if len(space) < 2:
        return 0.0
    return float(_quotients(space, f).max())


def de_leeuw(space: FiniteMetricSpace, values) -> np.ndarray:
    """Signed quotient matrix (f(x)-f(y))/d(x,y), zero on the diagonal."""
    f = as_field(space, values)
    d = space.dist
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(d > 0, (f[:, None] - f[None, :]) / np.where(d > 0, d, 1.0), 0.0)
    return q


def mcshane_extend(space: FiniteMetricSpace, partial: dict, L: float) -> np.ndarray:
    """Largest L-Lipschitz extension: f(x) = min_y partial(y) + L d(x, y).

    Raises with a witnessing pair when the data is not L-Lipschitz on its
    own support.
    """
    if not partial:
        raise ParameterError("need at least one anchored value")
    anchors = [space.index(p) for p in partial]
    vals = np.array([float(partial[p]) for p in partial])
    d = space.dist
    for a in range(len(anchors)):
        for b in range(a + 1, len(anchors)):
            gap = abs(vals[a] - vals[b])
            allowed = L * d[anchors[a], anchors[b]]
            if gap > allowed + 1e-12 * max(1.0, allowed):
                pa = space.points[anchors[a]]
                pb = space.points[anchors[b]]
                raise PreconditionError(
                    f"data is not {L}-Lipschitz on its support: "
                    f"|f({pa})-f({pb})| = {gap} > {allowed}")
    return (vals[None, :] + L * d[:, anchors]).min(axis=1)


def lattice_join(space: FiniteMetricSpace, f, g) -> np.ndarray:
    """Pointwise maximum; never increases the larger Lipschitz constant."""
    out = np.maximum(as_field(space, f), as_field(space, g))
    bound = max(lip_norm(space, f), lip_norm(space, g))
    assert lip_norm(space, out) <= bound + 1e-9 * max(1.0, bound)
    return out


def lattice_meet(space: FiniteMetricSpace, f, g) -> np.ndarray:
    """Pointwise minimum; never increases the larger Lipschitz constant."""
    out = np.minimum(as_field(space, f), as_field(space, g))
    bound = max(lip_norm(space, f), lip_norm(space, g))
    assert lip_norm(space, out) <= bound + 1e-9 * max(1.0, bound)
    return out


@dataclass(frozen=True)
class FlatnessProfile:
    """Difference-quotient modulus per radius, nonincreasing toward 0."""

    radii: tuple
    omega: tuple

    def table(self):
        return list(zip(self.radii, self.omega))


def flatness_modulus(space: FiniteMetricSpace, values, radii) -> FlatnessProfile:
    """omega(r): largest quotient over pairs at distance at most r.

    Radii below the smallest positive distance report 0 (no pair exists to
    witness those scales).
    """
    f = as_field(space, values)
    rs = sorted((float(r) for r in radii), reverse=True)
    if any(r <= 0 for r in rs):
        raise ParameterError("radii must be positive")
    q = _quotients(space, f)
    d = space.dist
    omega = []
    for r in rs:
        mask = (d > 0) & (d <= r)
        omega.append(float(q[mask].max()) if np.any(mask) else 0.0)
    return FlatnessProfile(tuple(rs), tuple(omega))


@dataclass(frozen=True)
class SeparationReport:
    constant: float
    worst_pair: tuple | None
    min_ratio: float

    @property
    def separates(self) -> bool:
        return math.isfinite(self.constant)


def separation_report(space: FiniteMetricSpace, family) -> SeparationReport:
    """How well a family of fields separates pairs relative to distance.

    For each pair, take the best ratio |f(x)-f(y)|/d(x,y) over the family;
    the separation constant is the reciprocal of the worst pair's ratio.
    """
    n = len(space)
    if n < 2:
        return SeparationReport(1.0, None, math.inf)
    fields = [as_field(space, f) for f in family]
    best = np.zeros((n, n))
    for f in fields:
        best = np.maximum(best, _quotients(space, f))
    mask = space.dist > 0
    if not fields or not np.any(mask):
        return SeparationReport(math.inf, None, 0.0)
    ratios = np.where(mask, best, np.inf)
    i, j = np.unravel_index(np.argmin(ratios), ratios.shape)
    min_ratio = float(ratios[i, j])
    constant = math.inf if min_ratio == 0.0 else 1.0 / min_ratio
    return SeparationReport(constant, (space.points[i], space.points[j]),
                            min_ratio)


def image_null_estimate(positions, values, resolution: float) -> float:
    """Measure of the image of a field along an ordered line sample.

    The sample splits into blocks wherever consecutive positions jump by
    at least ``resolution``; each block contributes the interval between
    its extreme values, and overlaps merge before measuring.
    """
    pos = np.asarray(positions, dtype=np.float64)
    val = np.asarray(values, dtype=np.float64)
    if pos.shape != val.shape or pos.ndim != 1:
        raise ParameterError("positions and values must align")
    if resolution <= 0:
        raise ParameterError("resolution must be positive")
    if np.any(np.diff(pos) <= 0):
        raise ParameterError("positions must be strictly increasing")
    if pos.size == 0:
        return 0.0
    blocks = []
    start = 0
    for k in range(1, pos.size):
        if pos[k] - pos[k - 1] >= resolution:
            blocks.append((start, k))
            start = k
    blocks.append((start, pos.size))
    pairs = [(float(val[a:b].min()), float(val[a:b].max())) for a, b in blocks]
    return merge_intervals(pairs).total_length()
