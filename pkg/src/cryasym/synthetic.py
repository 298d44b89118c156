"""Deterministic synthetic fixtures.

Seeded generators for random periodic sets, blocked fixtures for the
invariance/continuity suites, exactly-symmetric structures (blocks that
are translation copies of each other, so the asymmetry vanishes), a
cell-jump family where a tiny displacement inflates the primitive cell,
and a self-contained demo dataset of CIF files with a metadata table
whose correlated columns have closed-form correlation values.

Everything is a pure function of the supplied seed or generator; the
same seed always reproduces the same fixture byte for byte.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .asymmetry import BlockPartition
from .geometry import Lattice, PeriodicSet, wrap_fractional


def cellpar_to_basis(a, b, c, alpha, beta, gamma) -> np.ndarray:
    """Basis matrix from cell lengths (Å) and angles (degrees).

    Standard crystallographic orthogonalisation: ``a`` along x, ``b`` in
    the xy-plane.
    """
    al, be, ga = (math.radians(x) for x in (alpha, beta, gamma))
    cos_al, cos_be, cos_ga = math.cos(al), math.cos(be), math.cos(ga)
    sin_ga = math.sin(ga)
    cx = c * cos_be
    cy = c * (cos_al - cos_be * cos_ga) / sin_ga
    cz_sq = c * c - cx * cx - cy * cy
    if cz_sq <= 0:
        raise ValueError("cell angles do not define a valid 3D cell")
    return np.array([
        [a, 0.0, 0.0],
        [b * cos_ga, b * sin_ga, 0.0],
        [cx, cy, math.sqrt(cz_sq)],
    ])


def integer_lattice(n: int = 3) -> PeriodicSet:
    """The unit cubic lattice Z^n as a one-point periodic set."""
    return PeriodicSet(Lattice(np.eye(n)), np.zeros((1, n)), labels=["X"])


def random_lattice(
    rng: np.random.Generator,
    n: int = 3,
    length_bounds: tuple[float, float] = (1.5, 3.0),
    angle_bounds: tuple[float, float] = (75.0, 105.0),
) -> Lattice:
    """Random moderately-skewed lattice in 1, 2 or 3 dimensions."""
    lengths = rng.uniform(*length_bounds, size=n)
    if n == 1:
        return Lattice([[lengths[0]]])
    if n == 2:
        gamma = math.radians(rng.uniform(*angle_bounds))
        return Lattice([
            [lengths[0], 0.0],
            [lengths[1] * math.cos(gamma), lengths[1] * math.sin(gamma)],
        ])
    if n == 3:
        angles = rng.uniform(*angle_bounds, size=3)
        return Lattice(cellpar_to_basis(*lengths, *angles))
    raise ValueError(f"random_lattice supports n in (1, 2, 3), got {n}")


def random_periodic_set(
    rng: np.random.Generator,
    n: int = 3,
    m: int = 4,
    min_separation: float = 0.3,
    labels=None,
    length_bounds: tuple[float, float] = (1.5, 3.0),
) -> PeriodicSet:
    """Random periodic set whose points keep a minimum separation.

    Points are rejection-sampled so that no two motif points come closer
    than ``min_separation`` under minimum image, keeping the
    perturbation radius of the set healthy for continuity experiments.
    """
    lattice = random_lattice(rng, n=n, length_bounds=length_bounds)
    basis = lattice.basis
    placed: list[np.ndarray] = []
    attempts = 0
    while len(placed) < m:
        attempts += 1
        if attempts > 2000 * m:
            raise RuntimeError(
                "could not place points at the requested separation; "
                "lower min_separation or enlarge the cell"
            )
        cand = rng.uniform(size=n)
        ok = True
        for p in placed:
            diff = cand - p
            diff -= np.round(diff)
            if np.linalg.norm(diff @ basis) < min_separation:
                ok = False
                break
        if ok:
            placed.append(cand)
    return PeriodicSet(lattice, np.array(placed), labels=labels)


def random_blocked_set(
    rng: np.random.Generator,
    n_blocks: int = 3,
    block_size: int = 2,
    n: int = 3,
    noise: float = 0.15,
    cell_length: float = 8.0,
) -> tuple[PeriodicSet, BlockPartition]:
    """Fixture with ``n_blocks`` noisy copies of one point cluster.

    Each block is the same template cluster placed at a random location
    and perturbed by up to ``noise``, so generic draws are asymmetric
    but all blocks share one label composition (transport stays
    feasible). Blocks are consecutive index ranges.
    """
    lattice = Lattice(np.eye(n) * cell_length)
    template = rng.uniform(-0.6, 0.6, size=(block_size, n))
    template[0] = 0.0
    # Keep template points apart so blocks never collapse internally.
    for i in range(1, block_size):
        while min(
            np.linalg.norm(template[i] - template[j]) for j in range(i)
        ) < 0.9:
            template[i] = rng.uniform(-0.6, 0.6, size=n) * 2.0

    centers = []
    while len(centers) < n_blocks:
        cand = rng.uniform(0.12, 0.88, size=n) * cell_length
        if all(np.linalg.norm(cand - c) > 2.8 for c in centers):
            centers.append(cand)

    coords = []
    for center in centers:
        jitter = rng.uniform(-noise, noise, size=(block_size, n))
        coords.append(center + template + jitter)
    cart = np.concatenate(coords)
    frac = wrap_fractional(cart @ lattice.inverse)

    labels = []
    for _ in range(n_blocks):
        labels.extend(f"E{i}" for i in range(block_size))
    blocks = tuple(
        np.arange(b * block_size, (b + 1) * block_size)
        for b in range(n_blocks)
    )
    pset = PeriodicSet(lattice, frac, labels=labels)
    return pset, BlockPartition(blocks)


def translation_twin_set(
    rng: np.random.Generator,
    copies: int = 2,
    block_size: int = 3,
    n: int = 3,
    cell_length: float = 9.0,
) -> tuple[PeriodicSet, BlockPartition]:
    """Exactly symmetric fixture: ``copies`` translation-equivalent blocks.

    One cluster is repeated at fractional offsets ``j/copies`` along the
    first axis, making the shift a genuine symmetry of the infinite set;
    every asymmetry value of the partition into copies is zero up to
    floating-point noise.
    """
    lattice = Lattice(np.eye(n) * cell_length)
    cluster = rng.uniform(0.0, 1.4, size=(block_size, n))
    cluster[0] = 0.0
    for i in range(1, block_size):
        while min(
            np.linalg.norm(cluster[i] - cluster[j]) for j in range(i)
        ) < 0.9:
            cluster[i] = rng.uniform(0.0, 1.4, size=n)

    base = rng.uniform(0.05, 0.25, size=n)
    frac_cluster = base + cluster @ lattice.inverse
    offsets = np.zeros((copies, n))
    offsets[:, 0] = np.arange(copies) / copies
    frac = wrap_fractional(
        (frac_cluster[None, :, :] + offsets[:, None, :]).reshape(-1, n)
    )
    labels = [f"E{i}" for i in range(block_size)] * copies
    blocks = tuple(
        np.arange(b * block_size, (b + 1) * block_size) for b in range(copies)
    )
    return PeriodicSet(lattice, frac, labels=labels), BlockPartition(blocks)


def cell_jump_family(
    delta: float, copies: int = 3, cell_length: float = 2.2
) -> tuple[PeriodicSet, BlockPartition]:
    """Family whose primitive cell jumps while the geometry barely moves.

    At ``delta = 0`` the set is a lattice described in a cell stretched
    ``copies`` times along x (one point per copy, all translation
    equivalent: primitive cell is the small one). Any ``delta != 0``
    displaces the copies in alternating directions, so the primitive
    cell becomes the full stretched cell, yet every point moved by only
    ``|delta|``. Asymmetry must stay within ``4 * |delta|`` of zero.
    """
    n = 3
    basis = np.eye(n) * cell_length
    basis[0, 0] = cell_length * copies
    lattice = Lattice(basis)
    cart = np.zeros((copies, n))
    cart[:, 0] = np.arange(copies) * cell_length
    signs = np.array([0.0 if j == 0 else (1.0 if j % 2 else -1.0)
                      for j in range(copies)])
    cart[:, 0] += signs * delta
    frac = wrap_fractional(cart @ lattice.inverse)
    pset = PeriodicSet(lattice, frac, labels=["X"] * copies)
    blocks = tuple(np.array([j]) for j in range(copies))
    return pset, BlockPartition(blocks)


# ---------------------------------------------------------------------------
# Demo dataset: 50 CIFs plus metadata with planted exact correlations.


def _chain_cluster(rng: np.random.Generator, size: int, spacing_lo=1.05,
                   spacing_hi=1.25) -> np.ndarray:
    """Cartesian chain of points with consecutive spacing in the given
    band; connected under a 1.6 Å cutoff by construction."""
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    steps = rng.uniform(spacing_lo, spacing_hi, size=size - 1)
    pts = [np.zeros(3)]
    for s in steps:
        wiggle = rng.normal(scale=0.12, size=3)
        step = direction * s + wiggle
        step *= s / np.linalg.norm(step)
        pts.append(pts[-1] + step)
    return np.asarray(pts)


def _place_clusters(rng, n_clusters, cluster_pts, cell_length, min_gap=2.6):
    """Place copies of a cluster in the cell with pairwise clearance,
    across periodic images."""
    span = cluster_pts.max(axis=0) - cluster_pts.min(axis=0)
    radius = float(np.linalg.norm(span)) / 2.0 + min_gap / 2.0
    centers: list[np.ndarray] = []
    attempts = 0
    while len(centers) < n_clusters:
        attempts += 1
        if attempts > 5000:
            raise RuntimeError("could not place clusters with clearance")
        cand = rng.uniform(0.0, cell_length, size=3)
        ok = True
        for c in centers:
            diff = cand - c
            diff -= cell_length * np.round(diff / cell_length)
            if np.linalg.norm(diff) < 2 * radius:
                ok = False
                break
        if ok:
            centers.append(cand)
    return centers


_DEMO_ELEMENTS = ("C", "N", "O")


def demo_structure(
    rng: np.random.Generator, n_blocks: int, block_size: int, symmetric: bool
) -> PeriodicSet:
    """One demo crystal: ``n_blocks`` chain clusters in a cubic P1 cell.

    Symmetric structures repeat one cluster at exact fractional offsets
    ``j/n_blocks`` along x (a true translation symmetry); asymmetric
    ones use independently placed, independently distorted copies.
    """
    cell_length = 9.0 + 1.5 * float(rng.integers(0, 3))
    lattice = Lattice(np.eye(3) * cell_length)
    cluster = _chain_cluster(rng, block_size)
    labels_one = [
        _DEMO_ELEMENTS[i % len(_DEMO_ELEMENTS)] for i in range(block_size)
    ]

    if symmetric:
        base = rng.uniform(0.1, 0.4, size=3) * cell_length
        frac_cluster = (base + cluster) @ lattice.inverse
        offsets = np.zeros((n_blocks, 3))
        offsets[:, 0] = np.arange(n_blocks) / n_blocks
        frac = wrap_fractional(
            (frac_cluster[None, :, :] + offsets[:, None, :]).reshape(-1, 3)
        )
    else:
        centers = _place_clusters(rng, n_blocks, cluster, cell_length)
        coords = []
        for center in centers:
            distortion = rng.uniform(-0.35, 0.35, size=cluster.shape)
            coords.append(center + cluster + distortion)
        frac = wrap_fractional(np.concatenate(coords) @ lattice.inverse)

    labels = labels_one * n_blocks
    block_ids = np.repeat(np.arange(n_blocks), block_size)
    return PeriodicSet(lattice, frac, labels=labels, block_ids=block_ids)


def structure_to_cif(pset: PeriodicSet, name: str) -> str:
    """Minimal P1 CIF for an axis-aligned orthorhombic cell."""
    basis = pset.lattice.basis
    if not np.allclose(basis, np.diag(np.diag(basis))):
        raise ValueError("demo CIF writer only handles orthorhombic cells")
    a, b, c = np.diag(basis)
    lines = [
        f"data_{name}",
        f"_cell_length_a {a:.12g}",
        f"_cell_length_b {b:.12g}",
        f"_cell_length_c {c:.12g}",
        "_cell_angle_alpha 90",
        "_cell_angle_beta 90",
        "_cell_angle_gamma 90",
        "loop_",
        "_symmetry_equiv_pos_as_xyz",
        "'x, y, z'",
        "loop_",
        "_atom_site_label",
        "_atom_site_type_symbol",
        "_atom_site_fract_x",
        "_atom_site_fract_y",
        "_atom_site_fract_z",
    ]
    for i, (frac, label) in enumerate(zip(pset.frac_coords, pset.labels)):
        lines.append(
            f"{label}{i + 1} {label} "
            + " ".join(f"{x:.12g}" for x in frac)
        )
    return "\n".join(lines) + "\n"


def write_demo_dataset(
    out_dir, count: int = 50, seed: int = 0, symmetric_fraction: float = 0.36
) -> dict:
    """Write the bundled demo dataset: CIFs, metadata.csv, manifest.json.

    The metadata plants an exact affine relation
    ``density = 2.5 - 0.004 * energy`` so the energy/density Pearson
    correlation is -1 by construction; energies are spread uniformly.
    The manifest records which structures are symmetric (asymmetry is
    exactly zero for those) for downstream consistency checks.

    Returns the manifest dict.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_symmetric = round(count * symmetric_fraction)

    entries = []
    meta_rows = ["id,energy_kj_mol,density_g_cm3,z_prime"]
    for i in range(count):
        symmetric = i < n_symmetric
        struct_rng = np.random.default_rng([seed, 101, i])
        n_blocks = int(struct_rng.integers(1, 5))
        if symmetric and n_blocks == 1:
            n_blocks = 2  # a single block is trivially symmetric anyway
        block_size = int(struct_rng.integers(2, 4))
        pset = demo_structure(struct_rng, n_blocks, block_size, symmetric)
        name = f"demo{i:03d}"
        (out / f"{name}.cif").write_text(structure_to_cif(pset, name))

        energy = -220.0 + 180.0 * float(struct_rng.uniform())
        density = 2.5 - 0.004 * energy
        z_prime = n_blocks if not symmetric else 1
        meta_rows.append(
            f"{name},{energy!r},{density!r},{z_prime}"
        )
        entries.append({
            "id": name,
            "symmetric": symmetric,
            "n_blocks": n_blocks,
            "block_size": block_size,
        })

    (out / "metadata.csv").write_text("\n".join(meta_rows) + "\n")
    manifest = {
        "seed": seed,
        "count": count,
        "n_symmetric": n_symmetric,
        "connectivity_cutoff": 1.6,
        "entries": entries,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest
