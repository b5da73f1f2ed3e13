"""Extended Poisson-binomial laws: Pois(lam) plus independent Bernoulli(p_k).

A law is parameterised by its spike size-location measure: mass ``lam``
at 0 and mass p_k at location p_k.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy import stats


class NotConvergedError(RuntimeError):
    """Raised when a limit is requested from a non-converged diagnostic."""


@dataclass(frozen=True)
class SpikeMeasure:
    """``atoms`` is a finite head; ``tail_mass`` bounds the sum of any omitted atoms."""

    lam: float = 0.0
    atoms: tuple[float, ...] = ()
    tail_mass: float = 0.0

    def __post_init__(self):
        atoms = tuple(float(p) for p in self.atoms)
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if any(not 0 < p <= 1 for p in atoms):
            raise ValueError("atoms must lie in (0, 1]")
        if any(a < b for a, b in zip(atoms, atoms[1:])):
            raise ValueError("atoms must be non-increasing")
        if self.tail_mass < 0:
            raise ValueError("tail_mass must be non-negative")
        object.__setattr__(self, "atoms", atoms)

    @property
    def total_mass(self) -> float:
        return self.lam + math.fsum(self.atoms) + self.tail_mass

    @property
    def mean(self) -> float:
        return self.lam + math.fsum(self.atoms)

    @property
    def variance(self) -> float:
        return self.lam + math.fsum(p * (1 - p) for p in self.atoms)


def _poisson_head(lam: float, tol: float) -> tuple[np.ndarray, float]:
    """Pois(lam) pmf on 0..J with J the first point where the upper tail is below tol."""
    if lam == 0:
        return np.ones(1), 0.0
    j = int(stats.poisson.isf(tol, lam)) + 1
    while stats.poisson.sf(j, lam) >= tol:
        j += 1
    return stats.poisson.pmf(np.arange(j + 1), lam), float(stats.poisson.sf(j, lam))


def epb_pmf_full(mu: SpikeMeasure, trunc_tol: float = 1e-12) -> tuple[np.ndarray, float]:
    """Whole pmf vector and the Poisson mass dropped by truncation.

    Starts from a truncated Pois(lam) pmf and convolves in one
    Bernoulli(p_k) at a time.  The returned vector sums to 1 minus the
    dropped mass, up to rounding.
    """
    if mu.tail_mass > trunc_tol / 2:
        raise ValueError(f"atom tail mass {mu.tail_mass} exceeds half the tolerance {trunc_tol}")
    pmf, dropped = _poisson_head(mu.lam, trunc_tol / 2)
    for p in mu.atoms:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] = pmf * (1 - p)
        nxt[1:] += pmf * p
        pmf = nxt
    return pmf, dropped


def epb_pmf(mu: SpikeMeasure, j_max: int, trunc_tol: float = 1e-12) -> np.ndarray:
    """pmf at 0..j_max, accurate to ``trunc_tol`` in total variation."""
    if j_max < 0:
        raise ValueError("j_max must be non-negative")
    pmf, _ = epb_pmf_full(mu, trunc_tol)
    out = np.zeros(j_max + 1)
    m = min(pmf.size, j_max + 1)
    out[:m] = pmf[:m]
    return out


def epb_sample(mu: SpikeMeasure, rng: np.random.Generator, size=None):
    """Pois(lam) + sum of Bernoulli(p_k) over the atom head.

    Draw order: the Poisson variates, then an array of uniforms of shape
    ``size + (K,)``.  Atoms in ``tail_mass`` are not drawn.
    """
    x0 = rng.poisson(mu.lam, size=size)
    if not mu.atoms:
        return x0
    p = np.asarray(mu.atoms)
    shape = (p.size,) if size is None else tuple(np.atleast_1d(size)) + (p.size,)
    hits = (rng.random(shape) < p).sum(axis=-1)
    return x0 + hits


def epb_log_pgf(mu: SpikeMeasure, s: float) -> float:
    """-log E s^#  =  lam (1 - s) - sum_k log(1 - (1 - s) p_k), for 0 < s <= 1."""
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    return mu.lam * (1 - s) - math.fsum(math.log1p(-(1 - s) * p) for p in mu.atoms)


def spike_moments(mu: SpikeMeasure, j_max: int) -> list[float]:
    """Moments m_0..m_j_max of the spike measure.

    The lam mass sits at location 0, so it only enters m_0; atom p_k has
    mass p_k at location p_k and contributes p_k ** (j + 1) to m_j.
    """
    out = [mu.lam + math.fsum(mu.atoms)]
    for j in range(1, j_max + 1):
        out.append(math.fsum(p ** (j + 1) for p in mu.atoms))
    return out


def epb_log_pgf_series(mu: SpikeMeasure, s: float, tol: float = 1e-12) -> tuple[float, float]:
    """Moment-series form  sum_j (1 - s)^j m_(j-1) / j.

    Returns (value, remainder bound).  For j >= 2, m_(j-1) <= sum_k p_k,
    so the tail after J terms is at most sum_k p_k (1-s)^(J+1) / ((J+1) s).
    """
    if not 0 < s <= 1:
        raise ValueError("s must lie in (0, 1]")
    r = 1 - s
    psum = math.fsum(mu.atoms)
    if r == 0:
        return 0.0, 0.0
    terms = 1
    while psum * r ** (terms + 1) / ((terms + 1) * s) > tol:
        terms += 1
    m = spike_moments(mu, terms - 1)
    value = math.fsum(r ** j * m[j - 1] / j for j in range(1, terms + 1))
    return value, psum * r ** (terms + 1) / ((terms + 1) * s)


# ------------------------------------------------------ triangular arrays

@dataclass(frozen=True)
class TriangularArray:
    """Rows p_{n,1} >= ... >= p_{n,K_n} > 0, produced on demand by ``row(n)``."""

    row_fn: Callable[[int], Sequence[float]]

    def row(self, n: int) -> np.ndarray:
        r = np.asarray(self.row_fn(n), dtype=float)
        if r.size and (np.any(r <= 0) or np.any(r > 1)):
            raise ValueError(f"row {n} has entries outside (0, 1]")
        if np.any(np.diff(r) > 0):
            raise ValueError(f"row {n} is not non-increasing")
        return r


@dataclass(frozen=True)
class SeqBinLimit:
    lam: float
    atoms: tuple[float, ...]
    converged: bool


def _extrapolate(r_lo: np.ndarray, r_hi: np.ndarray, floor: float):
    """First-order Richardson step from rows n/2 and n for every fixed k."""
    k = r_lo.size
    head = np.zeros(k)
    head[: min(k, r_hi.size)] = r_hi[:k]
    est = np.clip(2 * head - r_lo, 0.0, 1.0)
    atoms = est[est > floor]
    total = 2 * r_hi.sum() - r_lo.sum()
    return atoms, max(total - atoms.sum(), 0.0)


def seq_bin_limit(array: TriangularArray, n_probe: int, tol: float = 1e-3) -> SeqBinLimit:
    """Heuristic estimate of the limiting (lam, p_1, p_2, ...) of a Bernoulli array.

    Each fixed-k entry and the row sum are extrapolated from rows n/2 and
    n assuming an O(1/n) error; atoms at or below ``tol`` are treated as
    vanishing and their mass goes to lam.  The estimate is marked
    converged when the same extrapolation from rows n/4 and n/2 agrees to
    within ``tol``.  This is a diagnostic, not a proof of convergence.
    """
    if n_probe < 4:
        raise ValueError("n_probe must be at least 4")
    r4, r2, r1 = array.row(n_probe // 4), array.row(n_probe // 2), array.row(n_probe)
    atoms, lam = _extrapolate(r2, r1, tol)
    atoms_prev, lam_prev = _extrapolate(r4, r2, tol)
    if np.any(np.diff(atoms) > tol):
        raise ValueError("extrapolated atoms are not non-increasing")
    atoms = np.sort(atoms)[::-1]
    converged = (
        abs(lam - lam_prev) < tol
        and atoms.size == atoms_prev.size
        and bool(np.all(np.abs(atoms - np.sort(atoms_prev)[::-1]) < tol))
    )
    return SeqBinLimit(float(lam), tuple(float(p) for p in atoms), converged)


def seq_bin_limit_law(result: SeqBinLimit) -> SpikeMeasure:
    if not result.converged:
        raise NotConvergedError("triangular-array diagnostic did not converge")
    return SpikeMeasure(result.lam, result.atoms)


def total_variation_pmf(p: Sequence[float], q: Sequence[float]) -> float:
    n = max(len(p), len(q))
    a = np.zeros(n)
    b = np.zeros(n)
    a[: len(p)] = p
    b[: len(q)] = q
    return 0.5 * float(np.abs(a - b).sum())
