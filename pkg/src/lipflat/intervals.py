"""Compact subsets of the line as sorted unions of disjoint closed intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ParameterError, StructuralError


@dataclass(frozen=True)
class IntervalUnion:
    """Sorted disjoint closed intervals ``[a_i, b_i]``; degenerate allowed."""

    intervals: tuple

    def __post_init__(self):
        iv = tuple((float(a), float(b)) for a, b in self.intervals)
        for a, b in iv:
            if not (math.isfinite(a) and math.isfinite(b)):
                raise StructuralError("interval endpoints must be finite")
            if b < a:
                raise StructuralError(f"interval [{a}, {b}] is reversed")
        for (_, b0), (a1, _) in zip(iv, iv[1:]):
            if a1 <= b0:
                raise StructuralError("intervals must be sorted and disjoint")
        object.__setattr__(self, "intervals", iv)

    def __len__(self):
        return len(self.intervals)

    @property
    def support_min(self):
        return self.intervals[0][0]

    @property
    def support_max(self):
        return self.intervals[-1][1]

    def total_length(self) -> float:
        return math.fsum(b - a for a, b in self.intervals)

    def contains(self, x: float, tol: float = 0.0) -> bool:
        return any(a - tol <= x <= b + tol for a, b in self.intervals)

    def locate(self, x: float, tol: float = 1e-12):
        for i, (a, b) in enumerate(self.intervals):
            if a - tol <= x <= b + tol:
                return i
        raise ParameterError(f"{x} is not a point of the interval union")

    def gaps(self):
        """Open gaps between consecutive components."""
        return tuple((b0, a1) for (_, b0), (a1, _) in
                     zip(self.intervals, self.intervals[1:]))

    def gap_length_between(self, x: float, y: float) -> float:
        """Total length of complement gaps strictly between two member points."""
        i = self.locate(x)
        j = self.locate(y)
        if i > j:
            i, j = j, i
        gaps = self.gaps()
        return math.fsum(hi - lo for lo, hi in gaps[i:j])

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        """Union of two interval unions, merging overlaps and touching ends."""
        merged = []
        for a, b in sorted(self.intervals + other.intervals):
            if merged and a <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], b)
            else:
                merged.append([a, b])
        return IntervalUnion(tuple((a, b) for a, b in merged))

    def to_json(self) -> dict:
        return {"intervals": [[a, b] for a, b in self.intervals]}


def from_json(doc: dict) -> IntervalUnion:
    if "intervals" not in doc:
        raise StructuralError("interval-union document lacks 'intervals'")
    return IntervalUnion(tuple((a, b) for a, b in doc["intervals"]))


def merge_intervals(pairs) -> IntervalUnion:
    """Build an IntervalUnion from arbitrary (possibly overlapping) pairs."""
    pairs = sorted((float(a), float(b)) for a, b in pairs)
    merged = []
    for a, b in pairs:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return IntervalUnion(tuple((a, b) for a, b in merged))
