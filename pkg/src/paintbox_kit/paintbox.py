"""Kingman and feature paintboxes.

Interval endpoints stay ``Fraction`` when built from rational inputs,
so lengths and intersections of rational paintboxes are exact.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Sequence

import numpy as np

from .allocation import FeatureAllocation, LabelSets
from .probability import TwoFeatureParams, is_rational

MERGE_TOL = 1e-12


@dataclass(frozen=True)
class IntervalSet:
    """Disjoint half-open intervals [s, e) inside [0, 1), sorted by s."""

    intervals: tuple[tuple, ...] = ()

    def __post_init__(self):
        ivs = sorted((s, e) for s, e in self.intervals if e > s)
        merged: list[list] = []
        for s, e in ivs:
            if not 0 <= s < e <= 1:
                raise ValueError(f"interval [{s}, {e}) not inside [0, 1]")
            if merged and s <= merged[-1][1] + self._tol(s):
                if s < merged[-1][1] - self._tol(s):
                    raise ValueError("intervals overlap")
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        object.__setattr__(self, "intervals", tuple((s, e) for s, e in merged))

    @staticmethod
    def _tol(x):
        return 0 if isinstance(x, Fraction) else MERGE_TOL

    @property
    def length(self):
        return sum((e - s for s, e in self.intervals), 0)

    def contains(self, u: float) -> bool:
        starts = [s for s, _ in self.intervals]
        j = bisect.bisect_right(starts, u) - 1
        return j >= 0 and u < self.intervals[j][1]

    def contains_many(self, u: np.ndarray) -> np.ndarray:
        if not self.intervals:
            return np.zeros(np.shape(u), dtype=bool)
        starts = np.array([float(s) for s, _ in self.intervals])
        ends = np.array([float(e) for _, e in self.intervals])
        j = np.searchsorted(starts, u, side="right") - 1
        return (j >= 0) & (u < ends[np.maximum(j, 0)])

    def intersect(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        i = j = 0
        a, b = self.intervals, other.intervals
        while i < len(a) and j < len(b):
            s, e = max(a[i][0], b[j][0]), min(a[i][1], b[j][1])
            if s < e:
                out.append((s, e))
            if a[i][1] < b[j][1]:
                i += 1
            else:
                j += 1
        return IntervalSet(tuple(out))

    def to_json(self):
        return [[float(s), float(e)] for s, e in self.intervals]


def intersection_length(a: IntervalSet, b: IntervalSet):
    """Lebesgue measure of a ∩ b."""
    return a.intersect(b).length


@dataclass(frozen=True)
class FeaturePaintbox:
    """Subsets C_1..C_K of [0, 1); ``residual`` is mass left out by truncation."""

    subsets: tuple[IntervalSet, ...] = ()
    residual: float = 0.0

    @property
    def k(self) -> int:
        return len(self.subsets)

    def to_json(self) -> dict:
        return {"features": [c.to_json() for c in self.subsets], "residual": float(self.residual)}

    def label_set_law(self) -> dict:
        """Law of {k : U in C_k} for U uniform on [0, 1), as label set -> length.

        Built from the common refinement of all subset endpoints.
        """
        points = {0, 1}
        for c in self.subsets:
            for s, e in c.intervals:
                points.update((s, e))
        pts = sorted(points)
        law: dict = {}
        for s, e in zip(pts, pts[1:]):
            if e <= s:
                continue
            mid = (s + e) / 2
            z = frozenset(k + 1 for k, c in enumerate(self.subsets) if c.contains(mid))
            law[z] = law.get(z, 0) + (e - s)
        return law


@dataclass(frozen=True)
class KingmanPaintbox:
    """Ranked atoms with total at most 1; the rest is dust."""

    atoms: tuple[float, ...] = ()

    def __post_init__(self):
        atoms = tuple(self.atoms)
        if any(p <= 0 for p in atoms):
            raise ValueError("Kingman atoms must be positive")
        if any(a < b for a, b in zip(atoms, atoms[1:])):
            raise ValueError("Kingman atoms must be non-increasing")
        if sum(atoms) > 1 + MERGE_TOL:
            raise ValueError("Kingman atoms sum to more than 1")
        object.__setattr__(self, "atoms", atoms)

    @property
    def dust(self):
        return max(1 - sum(self.atoms), 0)

    def intervals(self) -> FeaturePaintbox:
        """The atoms laid end to end from 0, one interval per block."""
        out, left = [], 0
        for p in self.atoms:
            out.append(IntervalSet(((left, left + p),)))
            left = left + p
        return FeaturePaintbox(tuple(out), residual=self.dust)


def kingman_block_sizes(pb: KingmanPaintbox, n: int, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Per-atom block sizes and dust count for n iid draws."""
    cum = np.cumsum([float(p) for p in pb.atoms])
    choice = np.searchsorted(cum, rng.random(n), side="right")
    sizes = np.bincount(choice, minlength=len(cum) + 1)
    return sizes[: len(cum)], int(sizes[len(cum)])


def kingman_sample(pb: KingmanPaintbox, n: int, rng: np.random.Generator) -> FeatureAllocation:
    """Partition of [n]: each index picks atom k w.p. p_k, else becomes a dust singleton."""
    if n < 1:
        raise ValueError("n must be positive")
    cum = np.cumsum([float(p) for p in pb.atoms])
    choice = np.searchsorted(cum, rng.random(n), side="right")
    blocks: dict[int, list[int]] = {}
    feats = []
    for i, c in enumerate(choice.tolist(), start=1):
        if c < len(cum):
            blocks.setdefault(c, []).append(i)
        else:
            feats.append((i,))
    feats.extend(tuple(b) for b in blocks.values())
    return FeatureAllocation._trusted(n, tuple(feats))


def frequency_paintbox_cells(freqs: Sequence) -> dict[tuple[int, ...], tuple]:
    """Cells I_e of the recursive construction, keyed by binary string e.

    I_(e,1) is the left portion of I_e with V_K times its length and
    I_(e,0) the remainder.  Each cell is a single interval [s, e).
    """
    for v in freqs:
        if not 0 <= v <= 1:
            raise ValueError(f"frequency {v} outside [0, 1]")
    if is_rational(*freqs):
        freqs = [Fraction(v) for v in freqs]
        cells = {(): (Fraction(0), Fraction(1))}
    else:
        freqs = [float(v) for v in freqs]
        cells = {(): (0.0, 1.0)}
    for v in freqs:
        nxt = {}
        for e, (s, t) in cells.items():
            cut = s + v * (t - s)
            nxt[e + (1,)] = (s, cut)
            nxt[e + (0,)] = (cut, t)
        cells = nxt
    return cells


def build_frequency_paintbox(freqs: Sequence) -> FeaturePaintbox:
    cells = frequency_paintbox_cells(freqs)
    subsets = []
    for k in range(len(freqs)):
        subsets.append(IntervalSet(tuple(iv for e, iv in cells.items() if e[k] == 1)))
    return FeaturePaintbox(tuple(subsets))


def two_feature_paintbox(params: TwoFeatureParams) -> FeaturePaintbox:
    """C_1 = [0, p10 + p11), C_2 = [p10, p10 + p11 + p01): overlap has length p11."""
    p10, p01, p11, _ = params.as_tuple()
    if is_rational(*params.as_tuple()):
        p10, p01, p11 = Fraction(p10), Fraction(p01), Fraction(p11)
    c1 = IntervalSet(((0 * p10, p10 + p11),))
    c2 = IntervalSet(((p10, p10 + p11 + p01),))
    return FeaturePaintbox((c1, c2))


def paintbox_memberships(pb: FeaturePaintbox, n: int, rng: np.random.Generator, size: int = 1) -> np.ndarray:
    """Membership arrays (size, n, K): index i is in feature k iff U_i lies in C_k."""
    u = rng.random((size, n))
    z = np.zeros((size, n, pb.k), dtype=bool)
    for k, c in enumerate(pb.subsets):
        z[..., k] = c.contains_many(u)
    return z


def paintbox_sample(pb: FeaturePaintbox, n: int, rng: np.random.Generator) -> FeatureAllocation:
    u = rng.random(n)
    sets = [frozenset(k + 1 for k, c in enumerate(pb.subsets) if c.contains(x)) for x in u]
    return LabelSets(tuple(sets)).to_allocation()


def paintbox_cells_product_check(freqs: Sequence) -> bool:
    """Every cell I_e has length prod V_k^e_k (1 - V_k)^(1 - e_k); exact for rationals."""
    cells = frequency_paintbox_cells(freqs)
    vs = [Fraction(v) for v in freqs] if is_rational(*freqs) else list(freqs)
    for e in product((0, 1), repeat=len(vs)):
        s, t = cells[e]
        want = 1
        for v, bit in zip(vs, e):
            want = want * (v if bit else 1 - v)
        if abs((t - s) - want) > (0 if isinstance(want, Fraction) else MERGE_TOL):
            return False
    return True
