"""Finite pointed metric spaces: validation and basic constructions.

A space is a list of point ids, a symmetric nonnegative distance matrix and
a distinguished base point.  All operations are pure; spaces are never
mutated after construction.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ParameterError, PreconditionError, StructuralError

TRIANGLE_SLACK = 1e-12  # relative to the diameter


@dataclass(frozen=True)
class FiniteMetricSpace:
    """Finite point set with a validated distance matrix and base point."""

    points: tuple
    dist: np.ndarray
    base: object
    coords: np.ndarray | None = field(default=None, compare=False)
    norm: str = field(default="max", compare=False)

    def __post_init__(self):
        d = np.asarray(self.dist, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise StructuralError("distance matrix must be square")
        if d.shape[0] != len(self.points):
            raise StructuralError("matrix size does not match point count")
        if not np.all(np.isfinite(d)):
            raise StructuralError("distance matrix has non-finite entries")
        if len(self.points) == 0:
            raise StructuralError("the empty space is not supported")
        if len(set(self.points)) != len(self.points):
            raise StructuralError("point identifiers must be distinct")
        if self.base not in self.points:
            raise StructuralError(f"base point {self.base!r} not in space")
        object.__setattr__(self, "points", tuple(self.points))
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    def __len__(self):
        return len(self.points)

    def index(self, point):
        try:
            return self.points.index(point)
        except ValueError:
            raise ParameterError(f"point {point!r} not in space") from None

    def d(self, x, y):
        return float(self.dist[self.index(x), self.index(y)])

    def diameter(self):
        return float(self.dist.max()) if len(self) > 1 else 0.0

    def subset_indices(self, members):
        idx = sorted(self.index(p) for p in set(members))
        if not idx:
            raise ParameterError("subset must be nonempty")
        return np.array(idx, dtype=np.intp)


@dataclass(frozen=True)
class NormedEmbedding:
    """Per-point coordinates whose pairwise norm distances realize a space."""

    points: tuple
    coords: np.ndarray
    norm: str = "max"

    def distance_matrix(self):
        c = np.asarray(self.coords, dtype=np.float64)
        if self.norm == "max":
            return _kernels.pairwise_maxnorm(c)
        diff = c[:, None, :] - c[None, :, :]
        return np.sqrt((diff * diff).sum(axis=2))


@dataclass(frozen=True)
class Violation:
    kind: str
    witness: tuple
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self):
        return len(self.violations) == 0

    def summary(self):
        if self.ok:
            return "valid metric"
        return "; ".join(v.detail for v in self.violations)


def validate_metric(space: FiniteMetricSpace) -> ValidationReport:
    """Check all metric axioms, reporting every violated one with a witness.

    The triangle inequality is checked with absolute slack
    ``1e-12 * diam`` to absorb generator roundoff.
    """
    d = space.dist
    pts = space.points
    n = len(pts)
    out = []
    bad_diag = np.nonzero(np.abs(np.diag(d)) > 0.0)[0]
    for i in bad_diag[:8]:
        out.append(Violation("diagonal", (pts[i],),
                             f"d({pts[i]},{pts[i]}) = {d[i, i]} != 0"))
    asym = np.abs(d - d.T)
    if asym.max() > 0.0:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        out.append(Violation("symmetry", (pts[i], pts[j]),
                             f"d({pts[i]},{pts[j]}) = {d[i, j]} != "
                             f"d({pts[j]},{pts[i]}) = {d[j, i]}"))
    off = d + np.eye(n) * (1.0 + abs(d.max()))
    if off.min() <= 0.0:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        out.append(Violation("positivity", (pts[i], pts[j]),
                             f"d({pts[i]},{pts[j]}) = {d[i, j]} <= 0 "
                             f"for distinct points"))
    slack = TRIANGLE_SLACK * (d.max() if n > 1 else 1.0)
    i, j, k, excess = _kernels.worst_triangle(d, slack)
    if i >= 0:
        out.append(Violation("triangle", (pts[i], pts[j], pts[k]),
                             f"d({pts[i]},{pts[k]}) = {d[i, k]} > "
                             f"d({pts[i]},{pts[j]}) + d({pts[j]},{pts[k]}) = "
                             f"{d[i, j] + d[j, k]} (excess {excess:.3e})"))
    return ValidationReport(tuple(out))


def build_space(points, dist, base=None, coords=None, norm="max",
                require_valid=True, allow_pseudometric=False):
    """Construct a space and optionally refuse invalid metrics."""
    points = tuple(points)
    space = FiniteMetricSpace(points, np.asarray(dist, dtype=np.float64),
                              points[0] if base is None else base,
                              None if coords is None else np.asarray(coords, dtype=np.float64),
                              norm)
    if require_valid:
        report = validate_metric(space)
        bad = [v for v in report.violations
               if not (allow_pseudometric and v.kind == "positivity")]
        if bad:
            raise StructuralError("invalid metric: " + "; ".join(v.detail for v in bad))
    return space


def snowflake(space: FiniteMetricSpace, alpha: float) -> FiniteMetricSpace:
    """Raise every distance to the power ``alpha`` in (0, 1]."""
    if not (0.0 < alpha <= 1.0):
        raise ParameterError(f"snowflake exponent must be in (0, 1], got {alpha}")
    return FiniteMetricSpace(space.points, np.power(space.dist, alpha),
                             space.base, space.coords, space.norm)


def neighborhood(space: FiniteMetricSpace, members, r: float) -> frozenset:
    """Closed r-neighborhood of a subset: points within distance r of it."""
    if r < 0:
        raise ParameterError(f"neighborhood radius must be >= 0, got {r}")
    idx = space.subset_indices(members)
    near = space.dist[:, idx].min(axis=1) <= r
    return frozenset(space.points[i] for i in np.nonzero(near)[0])


def hausdorff_distance(space: FiniteMetricSpace, a_members, b_members) -> float:
    """Two-sided covering distance between nonempty subsets."""
    ia = space.subset_indices(a_members)
    ib = space.subset_indices(b_members)
    sub = space.dist[np.ix_(ia, ib)]
    return float(max(sub.min(axis=1).max(), sub.min(axis=0).max()))


def eps_net(space: FiniteMetricSpace, eps: float) -> frozenset:
    """Greedy farthest-point net: covers within eps, pairwise > eps apart.

    Starts from the first point in input order; ties in the farthest-point
    choice break toward the lowest index, so the result is deterministic.
    """
    if eps <= 0:
        raise ParameterError(f"net resolution must be > 0, got {eps}")
    d = space.dist
    chosen = [0]
    to_net = d[0].copy()
    while True:
        far = int(np.argmax(to_net))
        if to_net[far] <= eps:
            break
        chosen.append(far)
        np.minimum(to_net, d[far], out=to_net)
    return frozenset(space.points[i] for i in chosen)


def kuratowski_embed(space: FiniteMetricSpace) -> NormedEmbedding:
    """Isometric embedding x -> (d(x, p_1), ..., d(x, p_n)) under max-norm."""
    return NormedEmbedding(space.points, space.dist.copy(), "max")


# ---------------------------------------------------------------------------
# JSON interface
# ---------------------------------------------------------------------------

def space_to_json(space: FiniteMetricSpace) -> dict:
    doc = {"points": list(space.points), "base": space.base,
           "dist": space.dist.tolist()}
    if space.coords is not None:
        doc["coords"] = space.coords.tolist()
        doc["norm"] = space.norm
    return doc


def space_from_json(doc: dict, allow_pseudometric=False) -> FiniteMetricSpace:
    """Load a space document: either a dist matrix or coords plus a norm."""
    if "points" not in doc:
        raise StructuralError("space document lacks 'points'")
    points = doc["points"]
    base = doc.get("base", points[0] if points else None)
    coords = None
    norm = doc.get("norm", "max")
    if "dist" in doc:
        dist = np.asarray(doc["dist"], dtype=np.float64)
        if "coords" in doc:
            coords = np.asarray(doc["coords"], dtype=np.float64)
    elif "coords" in doc:
        if norm not in ("max", "euclidean"):
            raise StructuralError(f"unknown norm {norm!r}")
        coords = np.asarray(doc["coords"], dtype=np.float64)
        if coords.ndim == 1:
            coords = coords[:, None]
        dist = NormedEmbedding(tuple(points), coords, norm).distance_matrix()
    else:
        raise StructuralError("space document needs 'dist' or 'coords'")
    return build_space(points, dist, base, coords=coords, norm=norm,
                       allow_pseudometric=allow_pseudometric)


def load_space(path, allow_pseudometric=False) -> FiniteMetricSpace:
    with open(path) as fh:
        return space_from_json(json.load(fh), allow_pseudometric)
