"""Gap pseudometric on line subsets, tagged arc/tree models and collapse.

The exact oracle lives on compact subsets of the line: the distance between
two member points is the total length of complement gaps between them, and
an explicit piecewise-linear certificate realizes it.  On ordered arc models
with per-segment rectifiability tags, a chain dynamic program computes the
one-step collapse quotient and a span-cover dynamic program computes the
limit distance directly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .errors import ParameterError, StructuralError
from .intervals import IntervalUnion
from .metric import FiniteMetricSpace, build_space, validate_metric

RECTIFIABLE = "rectifiable"
SIGMA_FINITE = "sigma_finite"
FAT = "fat"
_TAGS = (RECTIFIABLE, SIGMA_FINITE, FAT)

MATCH_TOL = 1e-12


# ---------------------------------------------------------------------------
# model arcs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Segment:
    """One piece of an arc between consecutive breakpoints."""

    tag: str
    length: float | None = None  # rectifiable segments carry their length

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise StructuralError(f"unknown segment tag {self.tag!r}")


@dataclass(frozen=True)
class ModelArc:
    """Ordered breakpoints with a distance matrix and tagged segments."""

    breakpoints: tuple
    dist: np.ndarray
    segments: tuple

    def __post_init__(self):
        bp = tuple(float(t) for t in self.breakpoints)
        if any(b <= a for a, b in zip(bp, bp[1:])):
            raise StructuralError("breakpoints must be strictly increasing")
        d = np.asarray(self.dist, dtype=np.float64)
        if d.shape != (len(bp), len(bp)):
            raise StructuralError("arc distance matrix has wrong shape")
        if len(self.segments) != max(0, len(bp) - 1):
            raise StructuralError("need exactly one segment per breakpoint gap")
        segs = tuple(s if isinstance(s, Segment) else Segment(**s)
                     for s in self.segments)
        for i, s in enumerate(segs):
            if s.tag == RECTIFIABLE:
                ell = d[i, i + 1] if s.length is None else s.length
                if ell < d[i, i + 1] - MATCH_TOL:
                    raise StructuralError(
                        f"segment {i}: rectifiable length {ell} below "
                        f"endpoint distance {d[i, i + 1]}")
                segs = segs[:i] + (Segment(RECTIFIABLE, float(ell)),) + segs[i + 1:]
        object.__setattr__(self, "breakpoints", bp)
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "segments", segs)

    def __len__(self):
        return len(self.breakpoints)

    def segment_diam(self, i: int) -> float:
        return float(self.dist[i, i + 1])

    def endpoint_distance(self) -> float:
        return float(self.dist[0, -1]) if len(self) > 1 else 0.0

    def to_json(self) -> dict:
        segs = []
        for s in self.segments:
            doc = {"tag": s.tag}
            if s.length is not None:
                doc["length"] = s.length
            segs.append(doc)
        return {"breakpoints": list(self.breakpoints),
                "dist": self.dist.tolist(), "segments": segs}

    def as_space(self) -> FiniteMetricSpace:
        return build_space([str(t) for t in self.breakpoints], self.dist,
                           require_valid=False)


def arc_from_json(doc: dict) -> ModelArc:
    try:
        return ModelArc(tuple(doc["breakpoints"]),
                        np.asarray(doc["dist"], dtype=np.float64),
                        tuple(Segment(s["tag"], s.get("length"))
                              for s in doc["segments"]))
    except KeyError as exc:
        raise StructuralError(f"arc document lacks {exc}") from None


def validate_arc(arc: ModelArc):
    """Metric axioms plus the bounded-turning chain law on the matrix."""
    problems = []
    space = arc.as_space()
    report = validate_metric(space)
    problems.extend(v.detail for v in report.violations)
    d = arc.dist
    n = len(arc)
    slack = MATCH_TOL * (d.max() if n > 1 else 1.0)
    for j in range(1, n - 1):
        left = d[:j, j]          # d(t_i, t_j), i < j
        right = d[j, j + 1:]     # d(t_j, t_k), k > j
        outer = d[:j, j + 1:]    # d(t_i, t_k)
        bad = np.maximum(left[:, None], right[None, :]) > outer + slack
        if np.any(bad):
            i, k = np.argwhere(bad)[0]
            problems.append(
                f"bounded-turning violation at ({i}, {j}, {j + 1 + k}): "
                f"max({left[i]}, {right[k]}) > {outer[i, k]}")
            break
    return problems


# ---------------------------------------------------------------------------
# exact oracle on subsets of the line
# ---------------------------------------------------------------------------

def dur_interval_union(u: IntervalUnion, x: float, y: float) -> float:
    """Total complement-gap length strictly between two member points."""
    return u.gap_length_between(x, y)


@dataclass(frozen=True)
class GapCertificate:
    """Piecewise-linear witness: slope 0 on the set, slope 1 off it.

    ``value`` integrates the complement indicator from 0, so differences of
    values between member points equal the gap distance exactly.
    """

    union: IntervalUnion

    def value(self, x: float) -> float:
        lo, hi = (x, 0.0) if x < 0.0 else (0.0, x)
        material = math.fsum(
            max(0.0, min(b, hi) - max(a, lo)) for a, b in self.union.intervals)
        total = (hi - lo) - material
        return -total if x < 0.0 else total

    def breakpoint_table(self):
        """(t, value, slope to the right) rows at every interval endpoint."""
        rows = []
        for a, b in self.union.intervals:
            rows.append((a, self.value(a), 0.0))
            rows.append((b, self.value(b), 1.0))
        rows[-1] = (rows[-1][0], rows[-1][1], 1.0)
        return rows

    def difference(self, x: float, y: float) -> float:
        return abs(self.value(y) - self.value(x))


def gap_certificate(u: IntervalUnion) -> GapCertificate:
    return GapCertificate(u)


def finite_dur(space: FiniteMetricSpace, x, y) -> float:
    """Least chain cost between two points of a finite space.

    Every finite metric space is already collapsed, so this coincides with
    the distance itself; computed as a shortest path over the complete
    chain graph as an executable witness.
    """
    n = len(space)
    ix, iy = space.index(x), space.index(y)
    if n == 1:
        return 0.0
    indptr = np.arange(n + 1, dtype=np.int64) * (n - 1)
    cols = np.empty(n * (n - 1), dtype=np.int64)
    costs = np.empty(n * (n - 1))
    k = 0
    for i in range(n):
        for j in range(n):
            if i != j:
                cols[k] = j
                costs[k] = space.dist[i, j]
                k += 1
    dist = _kernels.dijkstra_csr(indptr, cols, costs, ix)
    return float(dist[iy])


# ---------------------------------------------------------------------------
# collapse of tagged arcs
# ---------------------------------------------------------------------------

def _free_mask(arc: ModelArc) -> np.ndarray:
    return np.array([s.tag == RECTIFIABLE for s in arc.segments], dtype=bool)


def collapsed_matrix(arc: ModelArc) -> np.ndarray:
    """Chain-minimum distances: spans of rectifiable material are free."""
    if len(arc) == 1:
        return arc.dist.copy()
    return _kernels.chain_min(arc.dist, _free_mask(arc))


def collapse_step(arc: ModelArc) -> ModelArc:
    """One application of the collapse quotient to a tagged arc.

    Rectifiable segments contract to points (their breakpoints merge onto
    the lowest index), surviving segments keep their tags, and all pairwise
    distances are replaced by the chain minimum, which never increases them.
    """
    if len(arc) == 1:
        return arc
    dd = collapsed_matrix(arc)
    free = _free_mask(arc)
    # merge classes: maximal runs linked by free segments
    reps = [0]
    for i, f in enumerate(free):
        if not f:
            reps.append(i + 1)
    keep = np.array(reps, dtype=np.intp)
    new_bp = tuple(arc.breakpoints[i] for i in reps)
    new_segs = tuple(s for s in arc.segments if s.tag != RECTIFIABLE)
    new_dist = dd[np.ix_(keep, keep)]
    return ModelArc(new_bp, new_dist, new_segs)


@dataclass(frozen=True)
class CollapseTrace:
    stages: tuple
    stabilized_at: int | None

    def pairwise_monotone(self, tol: float = MATCH_TOL) -> bool:
        """Distances never increase stage to stage (on surviving points)."""
        for prev, cur in zip(self.stages, self.stages[1:]):
            pos = {t: i for i, t in enumerate(prev.breakpoints)}
            idx = [pos[t] for t in cur.breakpoints]
            sub = prev.dist[np.ix_(idx, idx)]
            if np.any(cur.dist > sub + tol):
                return False
        return True


def iterate_collapse(arc: ModelArc, max_steps: int = 16) -> CollapseTrace:
    """Apply the collapse until the matrix stops changing or steps run out."""
    stages = [arc]
    stabilized = None
    for step in range(max_steps):
        nxt = collapse_step(stages[-1])
        if len(nxt) == len(stages[-1]) and np.allclose(
                nxt.dist, stages[-1].dist, rtol=0.0, atol=MATCH_TOL):
            stabilized = step
            break
        stages.append(nxt)
    return CollapseTrace(tuple(stages), stabilized)


def is_p1u_fixedpoint(arc: ModelArc) -> bool:
    nxt = collapse_step(arc)
    return (len(nxt) == len(arc)
            and np.allclose(nxt.dist, arc.dist, rtol=0.0, atol=MATCH_TOL))


# ---------------------------------------------------------------------------
# span-cover dynamic program (exact on ordered arcs)
# ---------------------------------------------------------------------------

def span_cover_min(dist: np.ndarray, mandatory, lo: int, hi: int):
    """Cheapest cover of mandatory segments by breakpoint spans.

    A span ``[a, b]`` (breakpoint indices) costs ``dist[a, b]`` and covers
    the segments ``a .. b-1``.  Free material between mandatory segments may
    be skipped.  Returns ``(total, spans)``; exact by the bounded-turning
    monotonicity of span costs.
    """
    ms = sorted(m for m in mandatory if lo <= m < hi)
    if any(m < 0 or m >= dist.shape[0] - 1 for m in ms):
        raise ParameterError("mandatory segment outside the arc")
    if not ms:
        return 0.0, []

    @lru_cache(maxsize=None)
    def best(k: int):
        if k >= len(ms):
            return 0.0, ()
        a = ms[k]
        out = (math.inf, ())
        for b in range(a + 1, hi + 1):
            nxt = k
            while nxt < len(ms) and ms[nxt] < b:
                nxt += 1
            tail_cost, tail_spans = best(nxt)
            cost = float(dist[a, b]) + tail_cost
            if cost < out[0] - 1e-15:
                out = (cost, ((a, b),) + tail_spans)
        return out

    total, spans = best(0)
    best.cache_clear()
    return total, list(spans)


def dl_arc(arc: ModelArc, i: int, j: int) -> float:
    """Limit collapse distance between two breakpoints of a tagged arc.

    Only fat segments must be paid for; sigma-finite and rectifiable
    material is removable.  Solved exactly by the span-cover program.
    """
    if not (0 <= i < len(arc) and 0 <= j < len(arc)):
        raise ParameterError("breakpoint index out of range")
    if i > j:
        i, j = j, i
    fat = [k for k, s in enumerate(arc.segments) if s.tag == FAT]
    total, _ = span_cover_min(arc.dist, fat, i, j)
    return total


def encode_interval_union(u: IntervalUnion) -> ModelArc:
    """Faithful arc model of a line subset for the cross-oracle check.

    Components are traversable for free (rectifiable); gaps are absent
    material that any witness must pay for (fat, priced at the gap width).
    """
    bps = []
    segs = []
    for k, (a, b) in enumerate(u.intervals):
        if k > 0:
            segs.append(Segment(FAT))
        bps.append(a)
        if b > a:
            segs.append(Segment(RECTIFIABLE, b - a))
            bps.append(b)
    bp = np.array(bps)
    dist = np.abs(bp[:, None] - bp[None, :])
    return ModelArc(tuple(bps), dist, tuple(segs))


# ---------------------------------------------------------------------------
# model trees
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelTree:
    """Arcs glued at named junctions into a connected acyclic structure."""

    arc_ids: tuple
    arcs: tuple
    ends: tuple  # (junction_at_first_breakpoint, junction_at_last) per arc

    def __post_init__(self):
        if len({*self.arc_ids}) != len(self.arc_ids):
            raise StructuralError("arc ids must be distinct")
        if len(self.arcs) != len(self.ends) or len(self.arcs) != len(self.arc_ids):
            raise StructuralError("arcs, ids and ends must align")
        for arc, (a, b) in zip(self.arcs, self.ends):
            if len(arc) < 2 or a == b:
                raise StructuralError("tree arcs need two distinct junction ends")
        junctions = {j for pair in self.ends for j in pair}
        if self.arcs and len(junctions) != len(self.arcs) + 1:
            raise StructuralError("junction count must be arc count + 1 (tree)")
        # connectivity over the junction graph
        if self.arcs:
            adj = {j: set() for j in junctions}
            for (a, b) in self.ends:
                adj[a].add(b)
                adj[b].add(a)
            seen = {next(iter(junctions))}
            stack = list(seen)
            while stack:
                for nb in adj[stack.pop()]:
                    if nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
            if seen != junctions:
                raise StructuralError("junction graph is disconnected")

    def arc(self, arc_id) -> ModelArc:
        return self.arcs[self.arc_ids.index(arc_id)]

    def to_json(self) -> dict:
        return {"arcs": [dict(id=i, ends=list(e), **a.to_json())
                         for i, a, e in zip(self.arc_ids, self.arcs, self.ends)]}


def tree_from_json(doc: dict) -> ModelTree:
    ids, arcs, ends = [], [], []
    for entry in doc.get("arcs", []):
        ids.append(entry["id"])
        ends.append(tuple(entry["ends"]))
        arcs.append(arc_from_json(entry))
    return ModelTree(tuple(ids), tuple(arcs), tuple(ends))


def _tree_node_graph(tree: ModelTree):
    """Expanded breakpoint graph with junction nodes identified.

    Nodes are ``("node", arc_id, index)`` unified through junction labels;
    edges carry the within-arc adjacent distance and the segment reference.
    """
    label = {}

    def node(aid, idx, arc, end_pair):
        if idx == 0:
            return ("junction", end_pair[0])
        if idx == len(arc) - 1:
            return ("junction", end_pair[1])
        return ("bp", aid, idx)

    adj = {}
    for aid, arc, pair in zip(tree.arc_ids, tree.arcs, tree.ends):
        for idx in range(len(arc)):
            label.setdefault(node(aid, idx, arc, pair), []).append((aid, idx))
        for idx in range(len(arc) - 1):
            u = node(aid, idx, arc, pair)
            v = node(aid, idx + 1, arc, pair)
            w = arc.segment_diam(idx)
            adj.setdefault(u, []).append((v, w, (aid, idx)))
            adj.setdefault(v, []).append((u, w, (aid, idx, "rev")))
    return label, adj


def resolve_tree_node(tree: ModelTree, ref):
    """Accept ``("arc_id", index)`` pairs or junction name strings."""
    if isinstance(ref, (tuple, list)) and len(ref) == 2:
        aid, idx = ref
        arc = tree.arc(aid)
        idx = int(idx)
        if not (0 <= idx < len(arc)):
            raise ParameterError(f"breakpoint index {idx} outside arc {aid!r}")
        pair = tree.ends[tree.arc_ids.index(aid)]
        if idx == 0:
            return ("junction", pair[0])
        if idx == len(arc) - 1:
            return ("junction", pair[1])
        return ("bp", aid, idx)
    if ("junction", ref) in {("junction", j) for pair in tree.ends for j in pair}:
        return ("junction", ref)
    raise ParameterError(f"unknown tree node {ref!r}")


def _tree_path(tree: ModelTree, x, y):
    """Unique node path between two resolved nodes (BFS on the tree graph).

    Each path step is annotated with (arc_id, segment_index, reversed).
    Returns (nodes, steps) with len(steps) == len(nodes) - 1.
    """
    _, adj = _tree_node_graph(tree)
    if x == y:
        return [x], []
    prev = {x: (None, None)}
    queue = [x]
    found = False
    while queue and not found:
        cur = queue.pop(0)
        for nb, _, ref in adj.get(cur, ()):
            if nb not in prev:
                prev[nb] = (cur, ref)
                if nb == y:
                    found = True
                    break
                queue.append(nb)
    if y not in prev:
        raise ParameterError("nodes are not connected in the tree")
    nodes, steps = [y], []
    while prev[nodes[-1]][0] is not None:
        parent, ref = prev[nodes[-1]]
        steps.append((ref[0], ref[1], len(ref) == 3))
        nodes.append(parent)
    nodes.reverse()
    steps.reverse()
    # step orientation was recorded walking forward; BFS stored it from
    # parent to child already, so flip the reversal flag direction: a step
    # recorded as (aid, sidx) means parent held the lower breakpoint.
    return nodes, steps


def path_arc(tree: ModelTree, x, y) -> ModelArc:
    """Composite tagged arc along the unique tree path from x to y.

    Within a maximal run inside one source arc the original matrix entries
    are kept; distances across junctions compose additively.
    """
    rx = resolve_tree_node(tree, x)
    ry = resolve_tree_node(tree, y)
    nodes, steps = _tree_path(tree, rx, ry)
    m = len(nodes)
    if m == 1:
        return ModelArc((0.0,), np.zeros((1, 1)), ())
    segs = tuple(tree.arc(aid).segments[sidx] for aid, sidx, _ in steps)
    # breakpoint index of each node within the arc of each adjacent step
    left_idx = [sidx + 1 if rev else sidx for aid, sidx, rev in steps]
    right_idx = [sidx if rev else sidx + 1 for aid, sidx, rev in steps]
    # maximal same-arc runs of consecutive steps
    runs = []  # (aid, step_lo, step_hi) covering steps lo..hi inclusive
    for k, (aid, _, _) in enumerate(steps):
        if runs and runs[-1][0] == aid:
            runs[-1][2] = k
        else:
            runs.append([aid, k, k])
    run_of_step = np.empty(len(steps), dtype=int)
    for r, (_, lo, hi) in enumerate(runs):
        run_of_step[lo:hi + 1] = r

    def node_idx_in_run(node_k, r):
        aid, lo, hi = runs[r]
        if node_k <= lo:
            return left_idx[lo]
        return right_idx[min(node_k - 1, hi)]

    thru = [tree.arc(aid).dist[node_idx_in_run(lo, r), node_idx_in_run(hi + 1, r)]
            for r, (aid, lo, hi) in enumerate(runs)]
    dist = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            ri = run_of_step[i]          # run of the step leaving node i
            rj = run_of_step[j - 1]      # run of the step entering node j
            if ri == rj:
                aid = runs[ri][0]
                d = tree.arc(aid).dist[node_idx_in_run(i, ri),
                                       node_idx_in_run(j, ri)]
            else:
                aid_i = runs[ri][0]
                aid_j = runs[rj][0]
                d = tree.arc(aid_i).dist[node_idx_in_run(i, ri),
                                         node_idx_in_run(runs[ri][2] + 1, ri)]
                d += sum(thru[t] for t in range(ri + 1, rj))
                d += tree.arc(aid_j).dist[node_idx_in_run(runs[rj][1], rj),
                                          node_idx_in_run(j, rj)]
            dist[i, j] = d
            dist[j, i] = d
    pos = [0.0]
    for aid, sidx, _ in steps:
        pos.append(pos[-1] + max(tree.arc(aid).segment_diam(sidx), 1e-9))
    return ModelArc(tuple(pos), dist, segs)


def dl_tree(tree: ModelTree, x, y) -> float:
    """Limit collapse distance between two tree nodes via the path arc."""
    arc = path_arc(tree, x, y)
    if len(arc) == 1:
        return 0.0
    return dl_arc(arc, 0, len(arc) - 1)


def first_contact(tree: ModelTree, x, y, z):
    """First node of the branch from z toward x that lies on the x-y path."""
    rx = resolve_tree_node(tree, x)
    ry = resolve_tree_node(tree, y)
    rz = resolve_tree_node(tree, z)
    main, _ = _tree_path(tree, rx, ry)
    on_main = set(main)
    branch, _ = _tree_path(tree, rz, rx)
    for node in branch:
        if node in on_main:
            return node
    raise StructuralError("tree paths must intersect")


def tree_distance(tree: ModelTree, u, v) -> float:
    """Additive path metric between two tree nodes."""
    arc = path_arc(tree, u, v)
    return arc.endpoint_distance()


def load_arc(path) -> ModelArc:
    with open(path) as fh:
        return arc_from_json(json.load(fh))


def load_tree(path) -> ModelTree:
    with open(path) as fh:
        return tree_from_json(json.load(fh))
