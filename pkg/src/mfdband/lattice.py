"""Cubic-family Bravais lattices, reference-cell coordinates, and k-paths.

The computational cell is the unit cube in reference coordinates y, with
Cartesian positions x = A @ y.  The columns of A are the translation
vectors (they carry the lattice constant), so periodicity in y is always
y -> y + e_n and B = A^{-1} carries every geometric factor the operators
need.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidParameterError

__all__ = [
    "LatticeKind",
    "LatticeSpec",
    "KPath",
    "make_lattice",
    "symmetry_points",
    "sample_kpath",
]


class LatticeKind(Enum):
    SC = "sc"
    FCC = "fcc"
    BCC = "bcc"


@dataclass(frozen=True)
class LatticeSpec:
    """Lattice kind, constant, translation matrix A and its inverse B."""

    kind: LatticeKind
    l: float
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        resid = np.abs(self.A @ self.B - np.eye(3)).max()
        scale = np.abs(self.A).max() * np.abs(self.B).max()
        if resid > 1e-13 * max(scale, 1.0):
            raise InvalidParameterError(f"A @ B deviates from identity by {resid:.2e}")


@dataclass(frozen=True)
class KPath:
    """Ordered labelled Bloch vectors joined by straight segments."""

    vertices: tuple  # of (label, k 3-vector)
    samples_per_segment: int = 10

    def __post_init__(self):
        if len(self.vertices) < 2:
            raise InvalidParameterError("a k-path needs at least 2 vertices")
        if self.samples_per_segment < 1:
            raise InvalidParameterError("samples_per_segment must be >= 1")


def _translation_vectors(kind: LatticeKind, l: float) -> np.ndarray:
    h = l / 2.0
    if kind is LatticeKind.SC:
        cols = [(l, 0, 0), (0, l, 0), (0, 0, l)]
    elif kind is LatticeKind.FCC:
        cols = [(0, h, h), (h, 0, h), (h, h, 0)]
    else:
        cols = [(-h, h, h), (h, -h, h), (h, h, -h)]
    return np.array(cols, dtype=float).T


def make_lattice(kind: LatticeKind | str, l: float) -> LatticeSpec:
    """Build the lattice spec for a kind and lattice constant l > 0."""
    if isinstance(kind, str):
        kind = LatticeKind(kind.lower())
    if not (np.isfinite(l) and l > 0):
        raise InvalidParameterError(f"lattice constant must be positive, got {l}")
    A = _translation_vectors(kind, l)
    B = np.linalg.inv(A)
    return LatticeSpec(kind=kind, l=l, A=A, B=B)


def symmetry_points(kind: LatticeKind | str, l: float) -> list[tuple[str, np.ndarray]]:
    """Labelled high-symmetry Bloch vectors of the Brillouin zone, in a
    fixed conventional order per lattice kind."""
    if isinstance(kind, str):
        kind = LatticeKind(kind.lower())
    if not (np.isfinite(l) and l > 0):
        raise InvalidParameterError(f"lattice constant must be positive, got {l}")
    p = np.pi / l
    if kind is LatticeKind.SC:
        pts = [
            ("Gamma", (0, 0, 0)),
            ("L", (p, 0, 0)),
            ("M", (p, p, 0)),
            ("N", (p, p, p)),
        ]
    elif kind is LatticeKind.FCC:
        pts = [
            ("X", (0, 2 * p, 0)),
            ("U", (p / 2, 0, p / 2)),
            ("L", (p, p, p)),
            ("Gamma", (0, 0, 0)),
            ("W", (p, 2 * p, 0)),
            ("K", (1.5 * p, 1.5 * p, 0)),
        ]
    else:
        pts = [
            ("H'", (0, 0, 2 * p)),
            ("Gamma", (0, 0, 0)),
            ("P", (p, p, p)),
            ("N", (p, 0, p)),
            ("H", (0, 2 * p, 0)),
        ]
    return [(label, np.array(k, dtype=float)) for label, k in pts]


def sample_kpath(path: KPath) -> tuple[list[np.ndarray], np.ndarray, list[tuple[int, str]]]:
    """Sample a k-path piecewise linearly.

    Returns (kpoints, abscissa, vertex_markers).  Each segment gets
    `samples_per_segment` interior subdivisions; shared vertices appear
    exactly once.  The abscissa is cumulative arc length in k-space, for
    use as a plotting coordinate.  vertex_markers maps sample indices back
    to vertex labels.
    """
    verts = [(label, np.asarray(k, dtype=float)) for label, k in path.vertices]
    ns = path.samples_per_segment
    kpoints = [verts[0][1]]
    markers = [(0, verts[0][0])]
    for (_, ka), (label_b, kb) in zip(verts[:-1], verts[1:]):
        for j in range(1, ns + 1):
            t = j / (ns + 1)
            kpoints.append((1 - t) * ka + t * kb)
        kpoints.append(kb)
        markers.append((len(kpoints) - 1, label_b))
    abscissa = np.zeros(len(kpoints))
    for i in range(1, len(kpoints)):
        abscissa[i] = abscissa[i - 1] + np.linalg.norm(kpoints[i] - kpoints[i - 1])
    return kpoints, abscissa, markers
