"""Separating locally flat function pipeline on a discretized convex hull.

The sample embeds isometrically into max-norm coordinates; midpoint Steiner
nodes discretize the convex hull around it.  A nested family of metric
neighborhoods of the sample is calibrated empirically (random bounded-length
curves must pick up little content inside each shell), every node is priced
by its innermost shell, and the separator is the single-source cheapest-path
value of the priced graph, restricted to the sample.

The empirical shell calibration is a surrogate for a nonconstructive
existence statement: shells are certified only down to the sample's glue
resolution, and a fixture on which no shell can be certified (every bounded
curve keeps full content arbitrarily close to the sample, as on samples of
an interval) is reported as UNCERTIFIED rather than failed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParameterError, ResourceError
from .lip import FlatnessProfile, flatness_modulus, lip_norm
from .metric import FiniteMetricSpace, kuratowski_embed

MAX_NODES = 20000


# ---------------------------------------------------------------------------
# ambient graph
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AmbientGraph:
    """Hull discretization: sample nodes first, then Steiner midpoints."""

    coords: np.ndarray          # (nodes, dim)
    n_sample: int               # leading nodes are the metric sample
    m_mark: np.ndarray          # distance of each node to the sample
    edge_u: np.ndarray
    edge_v: np.ndarray
    edge_len: np.ndarray
    diam: float                 # diameter of the node set
    sample_mesh: float          # max nearest-neighbor gap inside the sample
    pair_mid: np.ndarray        # node index of the midpoint of sample pair (i, j)

    @property
    def n_nodes(self) -> int:
        return self.coords.shape[0]

    def csr(self, costs=None):
        """Symmetric CSR adjacency; costs default to edge lengths."""
        w = self.edge_len if costs is None else costs
        u = np.concatenate([self.edge_u, self.edge_v])
        v = np.concatenate([self.edge_v, self.edge_u])
        ww = np.concatenate([w, w])
        order = np.argsort(u, kind="stable")
        u, v, ww = u[order], v[order], ww[order]
        indptr = np.zeros(self.n_nodes + 1, dtype=np.int64)
        np.add.at(indptr, u + 1, 1)
        indptr = np.cumsum(indptr)
        return indptr, v.astype(np.int64), ww.astype(np.float64)

    def glue_floor(self) -> float:
        """Resolution below which shells stop being distinguishable."""
        return 0.5 * self.sample_mesh


def _mst_edges(dmat: np.ndarray):
    """Prim's algorithm on a dense distance matrix."""
    n = dmat.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = dmat[0].copy()
    best_from = np.zeros(n, dtype=np.int64)
    in_tree[0] = True
    best[0] = np.inf
    edges = []
    for _ in range(n - 1):
        nxt = int(np.argmin(best))
        edges.append((int(best_from[nxt]), nxt))
        in_tree[nxt] = True
        closer = dmat[nxt] < best
        best_from[closer] = nxt
        np.minimum(best, dmat[nxt], out=best)
        best[in_tree] = np.inf
    return edges


def build_ambient(space: FiniteMetricSpace, steiner_depth: int = 1,
                  radius_factor: float = 1.5) -> AmbientGraph:
    """Discretize the convex hull of the embedded sample.

    Nodes: the sample plus midpoints of node pairs, recursively to the
    requested depth (duplicates collapse).  Edges: every pair within a
    radius set from the node mesh, a spanning tree for connectivity, and
    the two half-edges through every sample pair's midpoint (these carry
    the Lipschitz and flatness guarantees of the priced graph).
    """
    if steiner_depth < 0:
        raise ParameterError("steiner depth must be >= 0")
    emb = kuratowski_embed(space)
    sample = np.asarray(emb.coords, dtype=np.float64)
    n = sample.shape[0]
    coords = sample
    seen = {tuple(np.round(c, 12)) for c in coords}
    for _ in range(steiner_depth):
        k = coords.shape[0]
        if k * (k - 1) // 2 + k > MAX_NODES:
            raise ResourceError(
                f"steiner depth would exceed {MAX_NODES} nodes; "
                f"lower the depth or subsample the space")
        iu, ju = np.triu_indices(k, 1)
        mids = 0.5 * (coords[iu] + coords[ju])
        fresh = []
        for c in mids:
            key = tuple(np.round(c, 12))
            if key not in seen:
                seen.add(key)
                fresh.append(c)
        if not fresh:
            break
        coords = np.vstack([coords, np.array(fresh)])
    m = coords.shape[0]
    dmat = _kernels.pairwise_maxnorm(coords)
    m_mark = _kernels.mark_to_set(coords, sample, "max")
    off = dmat + np.diag(np.full(m, np.inf))
    mesh = float(off.min(axis=1).max())
    sample_off = dmat[:n, :n] + np.diag(np.full(n, np.inf))
    sample_mesh = float(sample_off.min(axis=1).max()) if n > 1 else 0.0
    radius = radius_factor * mesh
    iu, ju = np.triu_indices(m, 1)
    keep = dmat[iu, ju] <= radius
    edges = {(int(a), int(b)) for a, b in zip(iu[keep], ju[keep])}
    for a, b in _mst_edges(dmat):
        edges.add((min(a, b), max(a, b)))
    # midpoint half-edges for every sample pair
    pair_mid = np.full((n, n), -1, dtype=np.int64)
    if n > 1:
        si, sj = np.triu_indices(n, 1)
        mids = 0.5 * (coords[si] + coords[sj])
        lookup = {tuple(np.round(c, 12)): idx for idx, c in enumerate(coords)}
        for a, b, c in zip(si, sj, mids):
            idx = lookup.get(tuple(np.round(c, 12)))
            if idx is None:
                continue
            pair_mid[a, b] = pair_mid[b, a] = idx
            edges.add((min(int(a), idx), max(int(a), idx)))
            edges.add((min(int(b), idx), max(int(b), idx)))
    es = sorted(edges)
    eu = np.array([e[0] for e in es], dtype=np.int64)
    ev = np.array([e[1] for e in es], dtype=np.int64)
    elen = dmat[eu, ev]
    return AmbientGraph(coords, n, m_mark, eu, ev, elen,
                        float(dmat.max()), sample_mesh, pair_mid)


# ---------------------------------------------------------------------------
# neighborhood ladder
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShellRecord:
    index: int
    radius: float
    certified: bool
    halvings: int
    worst_content: float
    threshold: float
    curves: int


@dataclass(frozen=True)
class NeighborhoodLadder:
    """Strictly nested shells around the sample, with calibration records."""

    delta: float
    radii: tuple                 # certified shells r_1 > ... > r_N (>= floor)
    records: tuple               # ShellRecord per attempted shell
    floor: float

    @property
    def depth(self) -> int:
        return len(self.radii)

    def shell_index(self, m_mark_value: float) -> int:
        """0 outside the first shell, n when inside shell n and no deeper."""
        idx = 0
        for k, r in enumerate(self.radii, start=1):
            if m_mark_value <= r:
                idx = k
        return idx


def _sample_curves(graph: AmbientGraph, budget_len: float, count: int,
                   rng: np.random.Generator):
    """Seeded perturbed-cheapest paths between node pairs, length-truncated.

    Half the pairs are drawn from the sample nodes (worst case: curves that
    hug the sample), half from all nodes.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import dijkstra as sp_dijkstra

    m = graph.n_nodes
    n = graph.n_sample
    curves = []
    indptr, indices, lengths = graph.csr()
    for k in range(count):
        if k % 2 == 0 and n > 1:
            a, b = rng.choice(n, size=2, replace=False)
        else:
            a, b = rng.choice(m, size=2, replace=False)
        scale = np.exp(rng.uniform(0.0, 0.4, size=lengths.shape))
        mat = csr_matrix((lengths * scale, indices, indptr), shape=(m, m))
        _, pred = sp_dijkstra(mat, directed=False, indices=int(a),
                              return_predecessors=True)
        if pred[b] < 0 and a != b:
            continue
        path = [int(b)]
        while path[-1] != a:
            path.append(int(pred[path[-1]]))
        path.reverse()
        pts = graph.coords[path]
        hop = np.abs(np.diff(pts, axis=0)).max(axis=1) if len(path) > 1 else np.zeros(0)
        cum = np.concatenate([[0.0], np.cumsum(hop)])
        stop = int(np.searchsorted(cum, budget_len, side="right"))
        curves.append(np.array(path[:max(2, stop)]))
    return curves


def _curve_profile(graph: AmbientGraph, path: np.ndarray, step: float):
    """Fine sample along a node path: points and their sample marks."""
    pts = graph.coords[path]
    out = [pts[0]]
    for a, b in zip(pts, pts[1:]):
        hop = float(np.abs(b - a).max())
        k = max(1, int(math.ceil(hop / step)))
        for t in range(1, k + 1):
            out.append(a + (b - a) * (t / k))
    fine = np.array(out)
    marks = _kernels.mark_to_set(fine, graph.coords[:graph.n_sample], "max")
    return fine, marks


def _excursion_content(fine: np.ndarray, marks: np.ndarray, radius: float) -> float:
    """Sum of diameters of maximal in-shell runs along the fine samples."""
    inside = marks <= radius
    total = 0.0
    start = None
    for k in range(len(inside) + 1):
        if k < len(inside) and inside[k]:
            if start is None:
                start = k
        elif start is not None:
            run = fine[start:k]
            if len(run) > 1:
                total += float(
                    (run.max(axis=0) - run.min(axis=0)).max())
            start = None
    return total


def _curve_measure_inside(fine: np.ndarray, marks: np.ndarray, radius: float) -> float:
    """Curve length carried by in-shell fine steps."""
    hop = np.abs(np.diff(fine, axis=0)).max(axis=1)
    inside = (marks[:-1] <= radius) & (marks[1:] <= radius)
    return float(hop[inside].sum())


def build_ladder(graph: AmbientGraph, delta: float, shells: int,
                 mode: str = "checked", seed: int = 0,
                 curves_per_shell: int = 32,
                 max_halvings: int = 40) -> NeighborhoodLadder:
    """Calibrate nested shells so bounded curves pick up little content.

    In ``geometric`` mode the radii are diam/4 * 2^-n, clamped at the glue
    floor.  In ``checked`` mode each radius is halved until every sampled
    curve of length at most n has in-shell content below delta * 2^-n; a
    shell that cannot be certified above the glue floor ends the ladder
    (shallower certified shells are kept, and a ladder with no certified
    shell at all marks the input as indistinguishable from a rectifiable
    sample at this resolution).
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    if shells < 1:
        raise ParameterError("need at least one shell")
    floor = graph.glue_floor()
    rng = np.random.default_rng(seed)
    radii = []
    records = []
    if mode == "geometric":
        for nidx in range(1, shells + 1):
            r = max((graph.diam / 4.0) * 2.0 ** (-nidx), floor)
            if radii and r >= radii[-1]:
                break
            radii.append(r)
            records.append(ShellRecord(nidx, r, True, 0, 0.0, math.inf, 0))
        return NeighborhoodLadder(delta, tuple(radii), tuple(records), floor)
    if mode != "checked":
        raise ParameterError(f"unknown ladder mode {mode!r}")
    step = max(floor / 2.0, 1e-9)
    for nidx in range(1, shells + 1):
        threshold = delta * 2.0 ** (-nidx)
        curves = _sample_curves(graph, float(nidx), curves_per_shell, rng)
        profiles = [_curve_profile(graph, path, step) for path in curves]
        start = (graph.diam / 4.0) * 2.0 ** (-nidx)
        if radii:
            start = min(start, radii[-1] / 2.0)
        r = max(start, floor)
        certified = False
        halvings = 0
        worst = math.inf
        while True:
            worst = max((_excursion_content(fine, marks, r)
                         for fine, marks in profiles), default=0.0)
            if worst < threshold:
                certified = True
                break
            if r <= floor or halvings >= max_halvings:
                break
            r = max(r / 2.0, floor)
            halvings += 1
        records.append(ShellRecord(nidx, r, certified, halvings, worst,
                                   threshold, len(curves)))
        if not certified or (radii and r >= radii[-1]):
            break
        radii.append(r)
    return NeighborhoodLadder(delta, tuple(radii), tuple(records), floor)


# ---------------------------------------------------------------------------
# level weights and the cheapest-path potential
# ---------------------------------------------------------------------------

def level_costs(diam: float, depth: int) -> tuple:
    """c_0 = 1 and c_n = min(1, diam / n), nonincreasing to 0."""
    return tuple(min(1.0, diam / n) if n else 1.0 for n in range(depth + 1))


def assign_weight(graph: AmbientGraph, ladder: NeighborhoodLadder) -> np.ndarray:
    """Price every node by its innermost shell."""
    costs = level_costs(graph.diam, ladder.depth)
    idx = np.zeros(graph.n_nodes, dtype=np.int64)
    for k, r in enumerate(ladder.radii, start=1):
        idx[graph.m_mark <= r] = k
    return np.array([costs[i] for i in idx])


def phi(graph: AmbientGraph, weights: np.ndarray, source: int) -> np.ndarray:
    """Cheapest-path potential with edge cost length * max endpoint weight."""
    if not (0 <= source < graph.n_nodes):
        raise ParameterError("source node outside the graph")
    w = np.asarray(weights, dtype=np.float64)
    costs = graph.edge_len * np.maximum(w[graph.edge_u], w[graph.edge_v])
    indptr, indices, cc = graph.csr(costs)
    return _kernels.dijkstra_csr(indptr, indices, cc, source)


# ---------------------------------------------------------------------------
# the full separator pipeline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SeparatorReport:
    g: dict
    certified: bool
    min_slack: float
    lip: float
    delta: float
    requested_shells: int
    achieved_shells: int
    innermost_radius: float | None
    innermost_cost: float | None
    flatness: FlatnessProfile
    ladder: NeighborhoodLadder
    curve_checks: tuple = field(default=())

    def to_json(self) -> dict:
        return {
            "g": {str(k): v for k, v in self.g.items()},
            "certified": self.certified,
            "min_slack": self.min_slack,
            "lip_norm": self.lip,
            "delta": self.delta,
            "shells": {"requested": self.requested_shells,
                       "achieved": self.achieved_shells,
                       "innermost_radius": self.innermost_radius,
                       "innermost_cost": self.innermost_cost},
            "flatness": [{"radius": r, "omega": w}
                         for r, w in self.flatness.table()],
            "ladder": [{"shell": rec.index, "radius": rec.radius,
                        "certified": rec.certified,
                        "worst_content": rec.worst_content,
                        "threshold": rec.threshold,
                        "curves": rec.curves}
                       for rec in self.ladder.records],
        }


def curve_lower_bound_checks(graph: AmbientGraph, ladder: NeighborhoodLadder,
                             weights: np.ndarray, seed: int = 0,
                             count: int = 16):
    """Per-curve verification of the priced-path lower bound.

    For each sampled curve, find the shallowest shell holding less than
    delta of its length; outside that shell every node costs at least the
    previous level, so the priced length must reach that level times the
    curve length minus 2 delta (plus quadrature slack).
    """
    rng = np.random.default_rng(seed + 1)
    step = max(ladder.floor / 2.0, 1e-9)
    costs = level_costs(graph.diam, ladder.depth)
    out = []
    curves = _sample_curves(graph, max(1.0, graph.diam), count, rng)
    for path in curves:
        fine, marks = _curve_profile(graph, path, step)
        hop = np.abs(np.diff(fine, axis=0)).max(axis=1)
        total_len = float(hop.sum())
        m_found = None
        for nidx, r in enumerate(ladder.radii, start=1):
            if _curve_measure_inside(fine, marks, r) < ladder.delta:
                m_found = nidx
                break
        if m_found is None:
            out.append((total_len, None, None, True))
            continue
        w = weights[path]
        priced = float((np.abs(np.diff(graph.coords[path], axis=0)).max(axis=1)
                        * np.maximum(w[:-1], w[1:])).sum())
        bound = costs[m_found - 1] * total_len - 2.0 * ladder.delta
        out.append((total_len, m_found, priced,
                    priced >= bound - 1e-9 * max(1.0, abs(bound))))
    return tuple(out)


def flat_separator(space: FiniteMetricSpace, p, delta: float,
                   steiner_depth: int = 1, shells: int = 3, seed: int = 0,
                   mode: str = "checked", curves_per_shell: int = 32,
                   radius_factor: float = 1.5) -> SeparatorReport:
    """Build the priced-graph separator based at p and report its contract.

    The report records the separation slack min over x of
    ``g(x) - g(p) - d(p, x) + delta`` (nonnegative means success), the
    Lipschitz norm of g on the sample, and the flatness profile at the
    shell radii.  A ladder that certifies no shell flags the result
    UNCERTIFIED; the separator is still returned.
    """
    if delta <= 0:
        raise ParameterError("delta must be positive")
    ip = space.index(p)
    n = len(space)
    if n == 1:
        prof = FlatnessProfile((1.0,), (0.0,))
        empty = NeighborhoodLadder(delta, (), (), 0.0)
        return SeparatorReport({space.points[0]: 0.0}, True, delta, 0.0,
                               delta, shells, 0, None, None, prof, empty)
    graph = build_ambient(space, steiner_depth, radius_factor)
    ladder = build_ladder(graph, delta / 2.0, shells, mode=mode, seed=seed,
                          curves_per_shell=curves_per_shell)
    certified = ladder.depth >= 1 and all(
        rec.certified for rec in ladder.records[:ladder.depth])
    if ladder.depth == 0:
        weights = np.ones(graph.n_nodes)
    else:
        weights = assign_weight(graph, ladder)
    values = phi(graph, weights, ip)
    g = values[:n]
    g = g - g[ip]
    slack = g - space.dist[ip] + delta
    slack[ip] = delta
    radii = tuple(ladder.radii) if ladder.depth else (space.diameter(),)
    prof = flatness_modulus(space, g, radii)
    costs = level_costs(graph.diam, max(1, ladder.depth))
    checks = curve_lower_bound_checks(graph, ladder, weights, seed=seed) \
        if ladder.depth else ()
    return SeparatorReport(
        {pt: float(v) for pt, v in zip(space.points, g)},
        certified,
        float(slack.min()),
        lip_norm(space, g),
        delta, shells, ladder.depth,
        ladder.radii[-1] if ladder.depth else None,
        costs[ladder.depth] if ladder.depth else None,
        prof, ladder, checks)
