"""Lattices, periodic point sets and unit-cell arithmetic.

Conventions used throughout the package:

- The lattice basis is a square matrix whose **rows** are the lattice
  vectors (matching the pymatgen/ASE convention), so Cartesian
  coordinates are obtained as ``cart = frac @ basis``.
- Fractional coordinates are canonically wrapped into ``[0, 1)``.
- All lengths are in the units of the basis vectors (angstroms for
  crystals); nothing below depends on the unit.

The dimension is generic: everything works for periodic sets in any
``R^n``, although crystallographic inputs are three-dimensional.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .errors import (
    CoincidentPointsError,
    DegenerateLatticeError,
    InvalidScaleError,
    NotOrthogonalError,
    NotUnimodularError,
)

#: Determinant magnitude below which a basis counts as degenerate.
DEGENERACY_TOL = 1e-12

#: Fractional coordinates within this distance of 1.0 wrap to 0.0, so
#: boundary points never appear twice.
WRAP_SNAP_TOL = 1e-12

#: Motif points closer than this (in Cartesian length units) are an
#: input error: they would force the perturbation radius r(S) to zero.
COINCIDENCE_TOL = 1e-8

#: Allowed deviation of a rotation matrix from exact orthogonality.
ORTHOGONALITY_TOL = 1e-10


def wrap_fractional(frac: np.ndarray) -> np.ndarray:
    """Wrap fractional coordinates into ``[0, 1)``.

    Uses ``x - floor(x)`` and snaps values within ``WRAP_SNAP_TOL`` of
    1.0 down to 0.0 so that float round-off cannot produce coordinates
    equal to 1.
    """
    wrapped = frac - np.floor(frac)
    wrapped[wrapped > 1.0 - WRAP_SNAP_TOL] = 0.0
    return wrapped


class Lattice:
    """A full-rank point lattice in ``R^n`` given by a basis matrix.

    Parameters
    ----------
    basis : array-like, shape (n, n)
        Basis with lattice vectors as rows.

    Raises
    ------
    DegenerateLatticeError
        If ``|det(basis)|`` is below ``DEGENERACY_TOL``.
    """

    def __init__(self, basis) -> None:
        basis = np.asarray(basis, dtype=float)
        if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
            raise DegenerateLatticeError(
                f"basis must be a square matrix, got shape {basis.shape}"
            )
        det = float(np.linalg.det(basis))
        if abs(det) <= DEGENERACY_TOL:
            raise DegenerateLatticeError(f"basis determinant {det} is (near) zero")
        self._basis = basis
        self._basis.setflags(write=False)
        self._inverse = np.linalg.inv(basis)
        self._inverse.setflags(write=False)

    @property
    def basis(self) -> np.ndarray:
        return self._basis

    @property
    def ndim(self) -> int:
        return self._basis.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        """Inverse basis; ``cart @ inverse`` gives fractional coordinates."""
        return self._inverse

    def volume(self) -> float:
        """Unit-cell volume ``|det(basis)|``."""
        return abs(float(np.linalg.det(self._basis)))

    def to_cartesian(self, frac) -> np.ndarray:
        """Convert fractional coordinates (last axis) to Cartesian."""
        return np.asarray(frac, dtype=float) @ self._basis

    def to_fractional(self, cart) -> np.ndarray:
        """Convert Cartesian coordinates (last axis) to fractional."""
        return np.asarray(cart, dtype=float) @ self._inverse

    def plane_spacings(self) -> np.ndarray:
        """Distance between consecutive lattice planes along each axis.

        Entry ``i`` is the Cartesian distance between the planes
        ``frac_i = c`` and ``frac_i = c + 1``; equivalently the cell
        volume divided by the area of the facet spanned by the other
        basis vectors. Used as the covering certificate in neighbour
        searches.
        """
        return 1.0 / np.linalg.norm(self._inverse, axis=0)

    def __eq__(self, other) -> bool:
        return isinstance(other, Lattice) and np.array_equal(
            self._basis, other._basis
        )

    def __repr__(self) -> str:
        return f"Lattice(basis={self._basis.tolist()!r})"


def cell_volume(lattice: Lattice) -> float:
    """Volume of the unit cell spanned by the lattice basis."""
    return lattice.volume()


class PeriodicSet:
    """A periodic set of labelled points: a lattice plus a finite motif.

    The object models the infinite set ``lattice + motif``; the motif is
    one representative point per translation class, stored in fractional
    coordinates wrapped into ``[0, 1)``.

    Parameters
    ----------
    lattice : Lattice
        The translation lattice.
    frac_coords : array-like, shape (m, n)
        Fractional coordinates of the motif points. Wrapped on input.
    labels : sequence of str, optional
        Categorical label per point (atomic type). Defaults to ``"X"``
        for every point.
    block_ids : sequence of int, optional
        Geometric-block assignment per point. Either every point carries
        one or none does.
    name : str, optional
        Identifier carried through I/O.

    Raises
    ------
    CoincidentPointsError
        If two distinct motif points are closer than ``COINCIDENCE_TOL``
        anywhere in the infinite set (checked under minimum image).
    """

    def __init__(
        self,
        lattice: Lattice,
        frac_coords,
        labels: Optional[Sequence[str]] = None,
        block_ids=None,
        name: Optional[str] = None,
    ) -> None:
        frac = np.atleast_2d(np.asarray(frac_coords, dtype=float))
        if frac.shape[0] == 0:
            raise ValueError("motif must contain at least one point")
        if frac.shape[1] != lattice.ndim:
            raise ValueError(
                f"motif dimension {frac.shape[1]} != lattice dimension {lattice.ndim}"
            )
        self.lattice = lattice
        self.frac_coords = wrap_fractional(frac)
        self.frac_coords.setflags(write=False)

        m = frac.shape[0]
        if labels is None:
            self.labels = ("X",) * m
        else:
            if len(labels) != m:
                raise ValueError("one label per motif point required")
            self.labels = tuple(str(l) for l in labels)

        if block_ids is None:
            self.block_ids = None
        else:
            ids = np.asarray(block_ids)
            if ids.shape != (m,):
                raise ValueError("one block id per motif point required")
            if np.any(ids < 0):
                raise ValueError("block ids must be >= 0")
            self.block_ids = ids.astype(int)
            self.block_ids.setflags(write=False)

        self.name = name
        self._check_separation()

    def _check_separation(self) -> None:
        d = min_image_distances(self)
        if self.motif_size > 1:
            off = d[~np.eye(self.motif_size, dtype=bool)]
            if off.min() < COINCIDENCE_TOL:
                i, j = divmod(int(np.argmin(d + np.eye(self.motif_size) * 1e9)),
                              self.motif_size)
                raise CoincidentPointsError(
                    f"motif points {i} and {j} are {off.min():.3g} apart"
                )

    @property
    def motif_size(self) -> int:
        return self.frac_coords.shape[0]

    @property
    def ndim(self) -> int:
        return self.lattice.ndim

    def cartesian_motif(self) -> np.ndarray:
        """Motif points in Cartesian coordinates, shape (m, n)."""
        return self.lattice.to_cartesian(self.frac_coords)

    def with_block_ids(self, block_ids) -> "PeriodicSet":
        """Copy of this set with the given per-point block assignment."""
        return PeriodicSet(
            self.lattice, self.frac_coords, self.labels, block_ids, self.name
        )

    def __repr__(self) -> str:
        name = f"{self.name}: " if self.name else ""
        return (
            f"PeriodicSet({name}{self.motif_size} points in "
            f"{self.ndim} dimensions)"
        )


def min_image_distances(pset: PeriodicSet) -> np.ndarray:
    """Pairwise minimum-image Cartesian distances between motif points.

    Note the minimum-image convention is only a lower-bound screen for
    very skewed cells; it is exact for the coincidence check because any
    distance it reports is an actual distance in the infinite set.
    """
    frac = pset.frac_coords
    diff = frac[:, None, :] - frac[None, :, :]
    diff -= np.round(diff)
    cart = diff @ pset.lattice.basis
    return np.linalg.norm(cart, axis=-1)


def transform_cell(pset: PeriodicSet, T) -> PeriodicSet:
    """Re-describe the same infinite set in the cell transformed by ``T``.

    ``T`` must be an integer matrix with determinant +/-1; the new basis
    is ``T @ basis`` and fractional coordinates are re-wrapped. Point
    order, labels and block ids are preserved.

    Raises
    ------
    NotUnimodularError
        If ``T`` is not integer or ``|det(T)| != 1``.
    """
    T = np.asarray(T)
    n = pset.ndim
    if T.shape != (n, n):
        raise NotUnimodularError(f"expected a {n}x{n} matrix, got {T.shape}")
    if not np.array_equal(T, np.round(T)):
        raise NotUnimodularError("cell transform must be an integer matrix")
    T = np.round(T).astype(np.int64)
    det = int(round(float(np.linalg.det(T.astype(float)))))
    if abs(det) != 1:
        raise NotUnimodularError(f"cell transform determinant must be +/-1, got {det}")

    new_basis = T.astype(float) @ pset.lattice.basis
    # x = f @ B = f' @ (T B)  =>  f' = f @ inv(T), and inv(T) is integer.
    T_inv = np.round(np.linalg.inv(T.astype(float))).astype(np.int64)
    new_frac = pset.frac_coords @ T_inv.astype(float)
    return PeriodicSet(
        Lattice(new_basis), new_frac, pset.labels, pset.block_ids, pset.name
    )


def scale_cell(pset: PeriodicSet, c: int, axis: Optional[int] = None) -> PeriodicSet:
    """Describe the same infinite set with an integer-scaled cell.

    With ``axis`` given, that basis vector is multiplied by ``c`` and the
    motif is replicated into ``c`` translated copies; with ``axis=None``
    every axis is scaled and the motif is replicated ``c**n`` times.
    Copies keep their labels; block ids are shifted so each copy gets
    fresh, distinct ids.

    Raises
    ------
    InvalidScaleError
        If ``c < 2``.
    """
    if int(c) != c or c < 2:
        raise InvalidScaleError(f"scale factor must be an integer >= 2, got {c}")
    c = int(c)
    n = pset.ndim

    if axis is not None:
        if not 0 <= axis < n:
            raise InvalidScaleError(f"axis {axis} out of range for dimension {n}")
        scale_vec = np.ones(n)
        scale_vec[axis] = c
        offsets = np.zeros((c, n))
        offsets[:, axis] = np.arange(c)
    else:
        scale_vec = np.full(n, float(c))
        grid = np.meshgrid(*[np.arange(c)] * n, indexing="ij")
        offsets = np.stack([g.ravel() for g in grid], axis=-1).astype(float)

    new_basis = pset.lattice.basis * scale_vec[:, None]
    copies = offsets.shape[0]
    new_frac = (pset.frac_coords[None, :, :] + offsets[:, None, :]) / scale_vec
    new_frac = new_frac.reshape(copies * pset.motif_size, n)
    new_labels = list(pset.labels) * copies

    new_blocks = None
    if pset.block_ids is not None:
        stride = int(pset.block_ids.max()) + 1
        new_blocks = np.concatenate(
            [pset.block_ids + j * stride for j in range(copies)]
        )

    return PeriodicSet(Lattice(new_basis), new_frac, new_labels, new_blocks, pset.name)


def apply_rigid_motion(pset: PeriodicSet, rotation, translation) -> PeriodicSet:
    """Apply an isometry ``x -> R x + t`` to the whole infinite set.

    ``rotation`` may be any orthogonal matrix (proper or improper). All
    pairwise distances within the infinite set are preserved; point
    order, labels and block ids carry over.

    Raises
    ------
    NotOrthogonalError
        If ``rotation.T @ rotation`` deviates from the identity by more
        than ``ORTHOGONALITY_TOL``.
    """
    R = np.asarray(rotation, dtype=float)
    t = np.asarray(translation, dtype=float)
    n = pset.ndim
    if R.shape != (n, n):
        raise NotOrthogonalError(f"expected a {n}x{n} matrix, got {R.shape}")
    if not np.allclose(R.T @ R, np.eye(n), atol=ORTHOGONALITY_TOL, rtol=0.0):
        raise NotOrthogonalError("matrix is not orthogonal within tolerance")

    # Row-vector convention: y = x @ R.T + t.
    new_basis = pset.lattice.basis @ R.T
    new_lattice = Lattice(new_basis)
    new_cart = pset.cartesian_motif() @ R.T + t
    new_frac = new_lattice.to_fractional(new_cart)
    return PeriodicSet(new_lattice, new_frac, pset.labels, pset.block_ids, pset.name)


def random_rotation(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-random proper rotation matrix from a QR decomposition."""
    A = rng.normal(size=(n, n))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def random_unimodular(rng: np.random.Generator, n: int, steps: int = 6) -> np.ndarray:
    """Random integer matrix with determinant +/-1.

    Built as a product of elementary shears and signed axis swaps, so
    the result is exactly unimodular. ``steps`` controls how far it
    strays from the identity.
    """
    T = np.eye(n, dtype=np.int64)
    for _ in range(steps):
        i, j = rng.integers(0, n, size=2)
        if i == j:
            E = np.eye(n, dtype=np.int64)
            E[i, i] = -1
            T = T @ E
            continue
        E = np.eye(n, dtype=np.int64)
        E[i, j] = int(rng.integers(-2, 3))
        T = T @ E
    return T
