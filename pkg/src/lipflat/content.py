"""Hausdorff 1-content: exact on line subsets and ordered arcs, greedy
upper bounds on general finite samples, and the upper-semicontinuity check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError, PreconditionError
from .intervals import IntervalUnion
from .metric import FiniteMetricSpace, hausdorff_distance
from .urmetric import ModelArc, span_cover_min


@dataclass(frozen=True)
class CoverPiece:
    members: tuple
    diam: float


@dataclass(frozen=True)
class CoverSolution:
    pieces: tuple
    total: float
    exact: bool

    @property
    def granularity(self) -> float:
        return max((p.diam for p in self.pieces), default=0.0)


def content_interval_union(u: IntervalUnion) -> float:
    """Total component length; equals the 1-content exactly for finite
    unions of closed intervals (the components are an optimal cover)."""
    return u.total_length()


def interval_union_cover(u: IntervalUnion) -> CoverSolution:
    pieces = tuple(CoverPiece((a, b), b - a) for a, b in u.intervals)
    return CoverSolution(pieces, u.total_length(), exact=True)


def _greedy_at_scale(n, dist, r):
    """Diameter-limited clustering in input order at scale r.

    Clusters are contiguous runs of the input order, so the diameter of a
    grown cluster is a single row-slice maximum.
    """
    clusters = []
    start = 0
    cur_diam = 0.0
    for t in range(1, n):
        grow = max(cur_diam, float(dist[t, start:t].max()))
        if grow <= r:
            cur_diam = grow
        else:
            clusters.append((list(range(start, t)), cur_diam))
            start = t
            cur_diam = 0.0
    clusters.append((list(range(start, n)), cur_diam))
    return clusters


def _merge_pass(clusters, dist, delta):
    """One left-to-right pass merging adjacent clusters when cheaper."""
    out = list(clusters)
    i = 0
    while i + 1 < len(out):
        a, da = out[i]
        b, db = out[i + 1]
        dm = max(da, db, float(dist[np.ix_(a, b)].max()))
        if dm < da + db and dm < delta:
            out[i] = (a + b, dm)
            del out[i + 1]
        else:
            i += 1
    return out


def content_upper_greedy(space: FiniteMetricSpace, members,
                         delta: float = math.inf) -> CoverSolution:
    """Greedy finite delta-cover of a sample subset by point clusters.

    Scans candidate cluster scales (pairwise distances down to the sample's
    nearest-neighbor resolution), clusters greedily in input order at each,
    applies one adjacent-merge improvement pass, and keeps the cheapest
    cover whose pieces all have diameter < delta.  The single-cluster cover
    is always among the candidates, so the total never exceeds the subset
    diameter when delta is infinite.  Below the sample resolution the only
    refinement left is the singleton cover: finite point sets carry no
    1-content of their own, so such a delta reports 0.
    """
    if delta <= 0:
        raise ParameterError("cover fineness must be positive")
    idx = space.subset_indices(members)
    pts = [space.points[i] for i in idx]
    if len(idx) == 1:
        return CoverSolution((CoverPiece((pts[0],), 0.0),), 0.0, exact=True)
    dist = space.dist[np.ix_(idx, idx)]
    off = dist + np.diag(np.full(len(idx), np.inf))
    resolution = float(off.min(axis=1).max())
    upper = dist[np.triu_indices(len(idx), 1)]
    upper = np.unique(upper[upper >= resolution])
    if len(upper) > 48:
        # cap the sweep: resolution, diameter and log-spaced scales between
        qs = np.exp(np.linspace(math.log(upper[0]), math.log(upper[-1]), 48))
        picks = np.unique(np.searchsorted(upper, qs).clip(0, len(upper) - 1))
        upper = upper[picks]
    scales = [float(v) for v in upper]
    best = None
    for r in scales:
        clusters = _merge_pass(_greedy_at_scale(len(idx), dist, r), dist, delta)
        total = math.fsum(d for _, d in clusters)
        feasible = all(d < delta for _, d in clusters)
        if feasible and (best is None or total < best[0] - 1e-15):
            best = (total, clusters)
    if best is None:
        # delta below the achievable piece scale: only singletons remain
        best = (0.0, [([k], 0.0) for k in range(len(idx))])
    total, clusters = best
    pieces = tuple(CoverPiece(tuple(pts[k] for k in c), d) for c, d in clusters)
    return CoverSolution(pieces, total, exact=False)


def content_on_ordered_arc(arc: ModelArc, target_segments,
                           target_points=(), use_dp: bool = True) -> CoverSolution:
    """Cover cost of mandatory segments of an arc by breakpoint spans.

    With ``use_dp`` the span-selection dynamic program returns the exact
    optimum; otherwise each mandatory segment is covered by its own span
    (a valid but unconsolidated upper bound).  Mandatory points are free:
    a degenerate subarc covers a point at zero diameter.
    """
    n = len(arc)
    for p in target_points:
        if not (0 <= int(p) < n):
            raise ParameterError(f"target point {p} outside the arc")
    targets = sorted({int(s) for s in target_segments})
    if any(s < 0 or s >= n - 1 for s in targets):
        raise ParameterError("target segment outside the arc")
    if not targets:
        pieces = tuple(CoverPiece((int(p), int(p)), 0.0) for p in target_points)
        return CoverSolution(pieces, 0.0, exact=True)
    if use_dp:
        total, spans = span_cover_min(arc.dist, targets, 0, n - 1)
    else:
        spans = [(s, s + 1) for s in targets]
        total = math.fsum(float(arc.dist[a, b]) for a, b in spans)
    pieces = tuple(CoverPiece((a, b), float(arc.dist[a, b])) for a, b in spans)
    return CoverSolution(pieces, total, exact=use_dp)


@dataclass(frozen=True)
class UscReport:
    content_limit: float
    contents: tuple
    tail_max: float
    slack: float
    excess: float
    passed: bool
    hausdorff_gaps: tuple


def check_usc(ambient: FiniteMetricSpace, k_seq, k_limit,
              delta: float = math.inf) -> UscReport:
    """Empirical upper-semicontinuity check along a Hausdorff-convergent
    sequence of subsets.

    Flags FAIL only when the tail of the greedy contents exceeds the limit
    set's content by more than three times the achieved cover granularity
    (the slack the covering argument loses when fattening each piece).
    """
    if not k_seq:
        raise PreconditionError("need a nonempty sequence of subsets")
    gaps = tuple(hausdorff_distance(ambient, kj, k_limit) for kj in k_seq)
    for a, b in zip(gaps, gaps[1:]):
        if b > a + 1e-9:
            raise PreconditionError(
                f"Hausdorff gaps must be nonincreasing, got {a} then {b}")
    limit_cover = content_upper_greedy(ambient, k_limit, delta)
    contents = tuple(content_upper_greedy(ambient, kj, delta).total
                     for kj in k_seq)
    tail = max(1, len(contents) // 4)
    tail_max = max(contents[-tail:])
    slack = 3.0 * limit_cover.granularity
    excess = tail_max - limit_cover.total
    return UscReport(limit_cover.total, contents, tail_max, slack, excess,
                     passed=bool(excess <= slack + 1e-12),
                     hausdorff_gaps=gaps)
