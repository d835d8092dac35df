"""Material geometries and the diagonal inverse-permittivity weights.

Each geometry is a vectorized predicate on Cartesian points: True inside
the high-permittivity material.  The diagonal weight matrix samples
1/epsilon per edge DoF, with an interface rule that harmonically averages
the four neighbouring cell values; since four equal samples reduce to the
plain reciprocal, the averaged form is used everywhere.  Cell samples are
taken at cell centers only (the test structures keep their interfaces
away from cell centers).
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .grid_fields import GridSpec, cell_points, edge_points
from .lattice import LatticeKind, LatticeSpec, make_lattice

__all__ = [
    "DielectricModel",
    "M0Diagonal",
    "geometry_homogeneous",
    "geometry_sc_curved",
    "geometry_bcc_gyroid",
    "geometry_fcc_diamond",
    "geometry_by_name",
    "assemble_M0",
    "material_fraction",
    "GEOMETRY_NAMES",
]


@dataclass
class DielectricModel:
    inside: callable  # (..., 3) Cartesian points -> bool array
    eps_in: float
    eps_out: float

    def __post_init__(self):
        if self.eps_in <= 0 or self.eps_out <= 0:
            raise InvalidParameterError("permittivities must be positive")

    def epsilon(self, pts: np.ndarray) -> np.ndarray:
        return np.where(self.inside(pts), self.eps_in, self.eps_out)


@dataclass
class M0Diagonal:
    """Inverse-permittivity weights per edge DoF, flat length 3 N^3."""

    beta: np.ndarray


def geometry_homogeneous(l: float):
    """No material anywhere; pair with eps_in == eps_out for a uniform
    medium."""

    def inside(pts):
        pts = np.asarray(pts, dtype=float)
        return np.zeros(pts.shape[:-1], dtype=bool)

    return inside


def geometry_sc_curved(l: float):
    """Sphere of radius 0.345 l at the cell center plus three axis
    cylinders of radius 0.11 l through it (simple-cubic periodic)."""
    if l <= 0:
        raise InvalidParameterError("l must be positive")
    rs2 = (0.345 * l) ** 2
    rc2 = (0.11 * l) ** 2

    def inside(pts):
        p = np.mod(np.asarray(pts, dtype=float), l) - 0.5 * l
        x2, y2, z2 = p[..., 0] ** 2, p[..., 1] ** 2, p[..., 2] ** 2
        hit = x2 + y2 + z2 <= rs2
        hit |= y2 + z2 <= rc2
        hit |= x2 + z2 <= rc2
        hit |= x2 + y2 <= rc2
        return hit

    return inside


def geometry_bcc_gyroid(l: float):
    """Single-gyroid superlevel set g > 1.1 with the standard trigonometric
    gyroid surrogate g."""
    if l <= 0:
        raise InvalidParameterError("l must be positive")
    w = 2 * np.pi / l

    def inside(pts):
        p = np.asarray(pts, dtype=float)
        x, y, z = p[..., 0], p[..., 1], p[..., 2]
        g = (np.sin(w * x) * np.cos(w * y)
             + np.sin(w * y) * np.cos(w * z)
             + np.sin(w * z) * np.cos(w * x))
        return g > 1.1

    return inside


def geometry_fcc_diamond(l: float):
    """Diamond network: spheres of radius 0.12 l on the two-point basis
    plus prolate spheroids (minor semi-axis 0.11 l) along the four
    tetrahedral bonds, with foci at the bonded sphere centers."""
    if l <= 0:
        raise InvalidParameterError("l must be positive")
    lat = make_lattice(LatticeKind.FCC, l)
    A, Binv = lat.A, lat.B
    basis_b = np.full(3, 0.25 * l)
    bonds = 0.25 * l * np.array(
        [[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    shifts = np.array([(A @ np.array(m, dtype=float))
                       for m in np.ndindex(3, 3, 3)]) - A @ np.ones(3)
    centers_a = shifts
    centers_b = shifts + basis_b
    sphere_centers = np.concatenate([centers_a, centers_b])
    foci_a = np.repeat(centers_a, len(bonds), axis=0)
    foci_b = foci_a + np.tile(bonds, (len(centers_a), 1))
    r2 = (0.12 * l) ** 2
    bmin = 0.11 * l
    cfoc = 0.5 * np.sqrt(3.0) * 0.25 * l
    two_a = 2.0 * np.hypot(cfoc, bmin)

    def inside(pts):
        p = np.asarray(pts, dtype=float)
        flat = p.reshape(-1, 3)
        frac = (flat @ Binv.T) % 1.0
        q = frac @ A.T
        hit = np.zeros(len(q), dtype=bool)
        chunk = 1 << 16
        for lo in range(0, len(q), chunk):
            qq = q[lo:lo + chunk]
            d2 = ((qq[:, None, :] - sphere_centers[None]) ** 2).sum(-1)
            h = (d2 <= r2).any(axis=1)
            da = np.sqrt(((qq[:, None, :] - foci_a[None]) ** 2).sum(-1))
            db = np.sqrt(((qq[:, None, :] - foci_b[None]) ** 2).sum(-1))
            h |= (da + db <= two_a).any(axis=1)
            hit[lo:lo + chunk] = h
        return hit.reshape(p.shape[:-1])

    return inside


GEOMETRY_NAMES = {
    "homogeneous": geometry_homogeneous,
    "sc_curved": geometry_sc_curved,
    "bcc_single_gyroid": geometry_bcc_gyroid,
    "fcc_diamond": geometry_fcc_diamond,
}


def geometry_by_name(name: str, l: float):
    try:
        factory = GEOMETRY_NAMES[name]
    except KeyError:
        raise InvalidParameterError(
            f"unknown geometry {name!r}; choose from {sorted(GEOMETRY_NAMES)}") from None
    return factory(l)


def assemble_M0(grid: GridSpec, lattice: LatticeSpec, model: DielectricModel,
                interface: str = "harmonic") -> M0Diagonal:
    """Inverse-permittivity weight per edge DoF.

    interface="harmonic" (default): beta = 4 / sum of epsilon over the
    four cells sharing the edge; equal samples reduce to 1/epsilon, so
    only interface edges are actually averaged.  interface="sharp":
    beta = 1/epsilon sampled at the edge midpoint itself.
    """
    N = grid.N
    if interface == "sharp":
        blocks = [
            (1.0 / model.epsilon(edge_points(N, c) @ lattice.A.T)).reshape(-1)
            for c in range(3)
        ]
        return M0Diagonal(beta=np.concatenate(blocks))
    if interface != "harmonic":
        raise InvalidParameterError(
            f"interface must be 'harmonic' or 'sharp', got {interface!r}")
    cart = cell_points(N) @ lattice.A.T
    eps = model.epsilon(cart)  # (z, y, x) layout
    # Transverse numpy axes per edge component (x, y, z components).
    transverse = {0: (0, 1), 1: (0, 2), 2: (1, 2)}
    blocks = []
    for comp in range(3):
        a1, a2 = transverse[comp]
        s = eps + np.roll(eps, 1, axis=a1)
        s = s + np.roll(s, 1, axis=a2)
        blocks.append((4.0 / s).reshape(-1))
    return M0Diagonal(beta=np.concatenate(blocks))


def material_fraction(model: DielectricModel, lattice: LatticeSpec, N: int) -> float:
    """Volume fraction of material cells at resolution N (cell-center
    sampling)."""
    cart = cell_points(N) @ lattice.A.T
    return float(np.mean(model.inside(cart)))
