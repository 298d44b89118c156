"""Distance-based isometry invariants of periodic point sets.

The pointwise distance distribution (PDD) records, for each motif
point, its sorted distances to the k nearest neighbours in the infinite
set, with equal rows collapsed into weighted ones. Subtracting the
density-driven asymptotic curve ``ppc * j**(1/n)`` column-wise gives the
deviation matrix (PDA); its weighted column averages form the ADA
vector. All of these are invariant under isometries and under
re-description of the unit cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import PeriodicSet
from .neighbors import k_nearest_distances


@dataclass(frozen=True)
class PddMatrix:
    """Weighted matrix of sorted neighbour distances.

    Attributes
    ----------
    weights : ndarray, shape (r,)
        Positive row weights summing to 1.
    distances : ndarray, shape (r, k)
        Nondecreasing distance rows.
    k : int
        Number of neighbours per row.
    collapsed : bool
        True if equal (within tolerance) rows were merged; when False
        there is exactly one row of weight 1/m per motif point, in motif
        order when built with ``collapse_tol=None``.
    """

    weights: np.ndarray
    distances: np.ndarray
    k: int
    collapsed: bool

    @property
    def row_count(self) -> int:
        return self.distances.shape[0]


@dataclass(frozen=True)
class PdaMatrix:
    """PDD rows after subtracting the asymptotic curve; entries may be
    negative. ``ppc`` and ``ndim`` are kept so the original distances
    can be reconstructed exactly."""

    weights: np.ndarray
    deviations: np.ndarray
    k: int
    collapsed: bool
    ppc: float
    ndim: int

    @property
    def row_count(self) -> int:
        return self.deviations.shape[0]

    def asymptotic_curve(self) -> np.ndarray:
        """The subtracted per-column values ``ppc * j**(1/n)``, j=1..k."""
        j = np.arange(1, self.k + 1, dtype=float)
        return self.ppc * j ** (1.0 / self.ndim)

    def to_distances(self) -> np.ndarray:
        """Reconstruct the underlying PDD distance rows."""
        return self.deviations + self.asymptotic_curve()


def unit_ball_volume(n: int) -> float:
    """Volume of the unit ball in ``R^n`` (2, pi, 4*pi/3 for n=1,2,3)."""
    return math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)


def ppc(pset: PeriodicSet) -> float:
    """Point packing coefficient ``(vol(cell) / (m * V_n)) ** (1/n)``.

    The scale of the asymptotic neighbour-distance curve; inversely
    proportional to point density and unchanged by any re-description
    of the cell (volume and motif size scale together).
    """
    n = pset.ndim
    vol = pset.lattice.volume()
    return (vol / (pset.motif_size * unit_ball_volume(n))) ** (1.0 / n)


def _collapse_rows(rows: np.ndarray, tol: float):
    """Group rows whose Chebyshev distance is <= tol, transitively.

    Returns (group_rows, counts). Grouping is a union-find closure, so
    chains a~b~c merge even if a and c differ by more than tol.
    """
    m = rows.shape[0]
    parent = list(range(m))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i in range(m):
        for j in range(i + 1, m):
            if np.max(np.abs(rows[i] - rows[j])) <= tol:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri

    groups: dict[int, list[int]] = {}
    for i in range(m):
        groups.setdefault(find(i), []).append(i)

    reps = [members[0] for members in groups.values()]
    counts = np.array([len(groups[find(r)]) for r in reps], dtype=float)
    return rows[reps], counts


def _canonical_order(rows: np.ndarray, weights: np.ndarray):
    # Lexicographic by distance row, then by weight; deterministic output.
    keys = np.vstack([weights[None, :], rows.T[::-1]])
    order = np.lexsort(keys)
    return rows[order], weights[order]


def pdd(
    pset: PeriodicSet, k: int, collapse_tol: Optional[float] = 0.0
) -> PddMatrix:
    """Pointwise distance distribution of the set.

    Parameters
    ----------
    pset : PeriodicSet
    k : int
        Neighbours per point.
    collapse_tol : float or None, default 0.0
        Rows whose Chebyshev distance is at most this merge into one row
        with summed weight (transitive-closure grouping); 0.0 merges
        exact duplicates only. ``None`` disables collapsing entirely and
        keeps one row per motif point **in motif order**, the form the
        block-transport machinery requires.

    Returns
    -------
    PddMatrix
        Rows sorted lexicographically (unless ``collapse_tol is None``),
        weights summing to 1.
    """
    table = k_nearest_distances(pset, k)
    rows = table.distances
    m = pset.motif_size

    if collapse_tol is None:
        weights = np.full(m, 1.0 / m)
        return PddMatrix(weights=weights, distances=rows, k=k, collapsed=False)

    if collapse_tol < 0:
        raise ValueError("collapse_tol must be >= 0 or None")

    grouped, counts = _collapse_rows(rows, collapse_tol)
    weights = counts / m
    grouped, weights = _canonical_order(grouped, weights)
    return PddMatrix(
        weights=weights,
        distances=grouped,
        k=k,
        collapsed=grouped.shape[0] < m,
    )


def pda(
    pset: PeriodicSet, k: int, collapse_tol: Optional[float] = 0.0
) -> PdaMatrix:
    """Pointwise deviation from the asymptotic curve.

    The PDD with ``ppc(pset) * j**(1/n)`` subtracted from column j.
    Collapsing semantics match :func:`pdd`; rows that are equal before
    subtraction stay equal after, so the grouping is identical.
    """
    mat = pdd(pset, k, collapse_tol)
    coeff = ppc(pset)
    n = pset.ndim
    j = np.arange(1, k + 1, dtype=float)
    deviations = mat.distances - coeff * j ** (1.0 / n)
    return PdaMatrix(
        weights=mat.weights,
        deviations=deviations,
        k=k,
        collapsed=mat.collapsed,
        ppc=coeff,
        ndim=n,
    )


def ada(pset: PeriodicSet, k: int) -> np.ndarray:
    """Average deviation from asymptotic: weighted column means of the
    PDA, a fixed-length vector usable as map coordinates for a set."""
    mat = pda(pset, k)
    return mat.weights @ mat.deviations
