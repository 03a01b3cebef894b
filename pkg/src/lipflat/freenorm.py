"""Transport norm of finitely supported point-mass combinations.

The norm of ``sum a_i delta(x_i)`` is the cheapest way to move the positive
mass onto the negative mass, with the base point acting as a free source or
sink for the imbalance.  The exact optimum comes from a transportation LP;
its node potentials yield a grounded 1-Lipschitz certificate attaining the
norm in the duality pairing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .errors import ParameterError
from .lip import as_field
from .metric import FiniteMetricSpace

COEFF_TOL = 1e-14


@dataclass(frozen=True)
class FreeVector:
    """Finitely supported signed combination of evaluation masses."""

    terms: tuple  # ((point, coefficient), ...)

    def __post_init__(self):
        pts = [p for p, _ in self.terms]
        if len(set(pts)) != len(pts):
            raise ParameterError("support points must be distinct")
        object.__setattr__(
            self, "terms",
            tuple((p, float(a)) for p, a in self.terms if abs(float(a)) > 0))

    def coefficient(self, point) -> float:
        for p, a in self.terms:
            if p == point:
                return a
        return 0.0

    def to_json(self) -> dict:
        return {"terms": [[p, a] for p, a in self.terms]}


def vector_from_json(doc: dict) -> FreeVector:
    return FreeVector(tuple((p, a) for p, a in doc.get("terms", ())))


@dataclass(frozen=True)
class TransportPlan:
    flows: tuple  # ((source point, sink point, mass), ...)
    cost: float

    def conserves(self, space: FiniteMetricSpace, mu: FreeVector,
                  tol: float = 1e-9) -> bool:
        """Net outflow at every non-base point must equal its coefficient."""
        net = {p: 0.0 for p in space.points}
        for src, dst, mass in self.flows:
            net[src] += mass
            net[dst] -= mass
        for p in space.points:
            if p == space.base:
                continue
            if abs(net[p] - mu.coefficient(p)) > tol:
                return False
        return True


def molecule(space: FiniteMetricSpace, x, y) -> FreeVector:
    """Normalized two-point difference (delta(x) - delta(y)) / d(x, y)."""
    if x == y:
        raise ParameterError("a molecule needs two distinct points")
    d = space.d(x, y)
    return FreeVector(((x, 1.0 / d), (y, -1.0 / d)))


def pairing(space: FiniteMetricSpace, mu: FreeVector, values) -> float:
    """Bilinear evaluation sum a_i f(x_i)."""
    f = as_field(space, values)
    return float(math.fsum(a * f[space.index(p)] for p, a in mu.terms))


def _sides(space: FiniteMetricSpace, mu: FreeVector):
    """Source and sink masses with the base absorbing the imbalance."""
    sources, sinks = [], []
    for p, a in mu.terms:
        if p == space.base:
            continue  # the base mass never costs anything
        if a > 0:
            sources.append((p, a))
        else:
            sinks.append((p, -a))
    imbalance = math.fsum(a for _, a in sources) - math.fsum(a for _, a in sinks)
    if imbalance > COEFF_TOL:
        sinks.append((space.base, imbalance))
    elif imbalance < -COEFF_TOL:
        sources.append((space.base, -imbalance))
    return sources, sinks


def _solve(space: FiniteMetricSpace, mu: FreeVector):
    """Run the transportation LP once; primal flows and node potentials."""
    sources, sinks = _sides(space, mu)
    if not sources or not sinks:
        return 0.0, (), (), (), np.zeros(0), np.zeros(0)
    si = [space.index(p) for p, _ in sources]
    ti = [space.index(p) for p, _ in sinks]
    cost = space.dist[np.ix_(si, ti)]
    ns, nt = len(si), len(ti)
    a_eq = np.zeros((ns + nt, ns * nt))
    for i in range(ns):
        a_eq[i, i * nt:(i + 1) * nt] = 1.0
    for j in range(nt):
        a_eq[ns + j, j::nt] = 1.0
    b_eq = np.array([m for _, m in sources] + [m for _, m in sinks])
    res = linprog(cost.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None),
                  method="highs")
    if not res.success:  # pragma: no cover - balanced problems are feasible
        raise RuntimeError(f"transport solve failed: {res.message}")
    x = res.x.reshape(ns, nt)
    flows = tuple((sources[i][0], sinks[j][0], float(x[i, j]))
                  for i in range(ns) for j in range(nt) if x[i, j] > 1e-12)
    marg = np.asarray(res.eqlin.marginals)
    return float(res.fun), flows, sources, sinks, marg[:ns], marg[ns:]


def free_norm(space: FiniteMetricSpace, mu: FreeVector):
    """Exact transport optimum and an optimal plan.

    Returns ``(value, plan)``; the value is 0 exactly when the vector is
    supported on the base alone.
    """
    value, flows, _, _, _, _ = _solve(space, mu)
    return value, TransportPlan(flows, value)


def dual_certificate(space: FiniteMetricSpace, mu: FreeVector) -> np.ndarray:
    """Grounded 1-Lipschitz field attaining the norm in the pairing.

    Built as the distance transform of the optimal sink potentials, then
    repaired through one more distance transform (enforcing the Lipschitz
    bound exactly up to roundoff) and grounded at the base.
    """
    n = len(space)
    _, _, _, sinks, _, v = _solve(space, mu)
    if not sinks:
        return np.zeros(n)
    ti = [space.index(p) for p, _ in sinks]
    # c-transform of the sink potentials: 1-Lipschitz and above the source
    # potentials, so the pairing still reaches the optimum
    f = (space.dist[:, ti] - np.asarray(v)[None, :]).min(axis=1)
    # repair pass: infimal convolution with the distance cone
    f = (f[None, :] + space.dist).min(axis=1)
    return f - f[space.index(space.base)]


def duality_gap(space: FiniteMetricSpace, mu: FreeVector) -> float:
    """Nonnegative difference between plan cost and certificate pairing."""
    value, _ = free_norm(space, mu)
    cert = dual_certificate(space, mu)
    return value - pairing(space, mu, cert)
