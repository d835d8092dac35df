"""Staggered-grid metadata, DoF layouts, projections, and field I/O.

Scalar DoFs live on nodes or cell centers (N^3 values); vector DoFs live
on edge or face centers (3 N^3 values stored as three concatenated
component blocks [u1; u2; u3]).  Component c at grid offset (i, j, k)
sits at linear index c*N^3 + i + N*j + N^2*k with i the fastest (x) index.
All DoF positions are defined in reference coordinates and mapped through
the lattice matrix A only when an analytic field is evaluated.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import InvalidParameterError, ShapeError
from .lattice import LatticeSpec

__all__ = [
    "Space",
    "GridSpec",
    "ScalarField",
    "VectorField",
    "linearize",
    "node_points",
    "cell_points",
    "edge_points",
    "face_points",
    "project_scalar",
    "project_vector",
    "write_field",
    "read_field",
]

_MAGIC = b"MFDF"


class Space(IntEnum):
    NODE = 0
    EDGE = 1
    FACE = 2
    CELL = 3


@dataclass(frozen=True)
class GridSpec:
    """Uniform N x N x N reference grid with half-order order_k (scheme
    order 2*order_k)."""

    N: int
    order_k: int = 1

    def __post_init__(self):
        if self.order_k not in (1, 2, 3, 4):
            raise InvalidParameterError(f"order_k must be in 1..4, got {self.order_k}")
        # N = 2k is the smallest grid on which the head and tail of the
        # stencil generators occupy disjoint slots.
        if self.N < 2 or self.N < 2 * self.order_k:
            raise InvalidParameterError(
                f"N={self.N} too small for order_k={self.order_k}; need N >= 2*order_k"
            )

    @property
    def h(self) -> float:
        return 1.0 / self.N

    @property
    def nscalar(self) -> int:
        return self.N**3

    @property
    def nvector(self) -> int:
        return 3 * self.N**3


@dataclass
class ScalarField:
    values: np.ndarray  # complex, length N^3
    space: Space

    def __post_init__(self):
        if self.space not in (Space.NODE, Space.CELL):
            raise InvalidParameterError("scalar fields live on nodes or cells")


@dataclass
class VectorField:
    values: np.ndarray  # complex, length 3 N^3
    space: Space

    def __post_init__(self):
        if self.space not in (Space.EDGE, Space.FACE):
            raise InvalidParameterError("vector fields live on edges or faces")


def linearize(i: int, j: int, k: int, N: int) -> int:
    """Linear index of grid offset (i, j, k); indices wrap periodically."""
    return (i % N) + N * (j % N) + N * N * (k % N)


def _axes(N: int) -> np.ndarray:
    return np.arange(N) / N


def _mesh(N, x_off=0.0, y_off=0.0, z_off=0.0) -> np.ndarray:
    """Reference-coordinate sample points, shaped (N, N, N, 3) with the
    (z, y, x) array layout that flattens to the linearize() ordering."""
    t = _axes(N)
    z, y, x = np.meshgrid(t + z_off / N, t + y_off / N, t + x_off / N, indexing="ij")
    return np.stack([x, y, z], axis=-1)


def node_points(N: int) -> np.ndarray:
    return _mesh(N)


def cell_points(N: int) -> np.ndarray:
    return _mesh(N, 0.5, 0.5, 0.5)


def edge_points(N: int, component: int) -> np.ndarray:
    """Edge DoF positions for component 0, 1, or 2 (offset half a step
    along the component's own axis)."""
    off = [0.0, 0.0, 0.0]
    off[component] = 0.5
    return _mesh(N, *off)


def face_points(N: int, component: int) -> np.ndarray:
    """Face DoF positions for component 0, 1, or 2 (offset half a step
    along both transverse axes)."""
    off = [0.5, 0.5, 0.5]
    off[component] = 0.0
    return _mesh(N, *off)


def _eval_on(f, ref_pts: np.ndarray, lattice: LatticeSpec) -> np.ndarray:
    cart = ref_pts @ lattice.A.T
    vals = np.asarray(f(cart), dtype=complex)
    if vals.shape != ref_pts.shape[:-1]:
        raise ShapeError(f"field function returned shape {vals.shape}")
    return vals.reshape(-1)


def project_scalar(f, grid: GridSpec, lattice: LatticeSpec, space: Space) -> ScalarField:
    """Sample an analytic scalar f(x) onto node or cell DoFs.

    f receives Cartesian positions as an (..., 3) array and must return
    values of matching leading shape.
    """
    if space is Space.NODE:
        pts = node_points(grid.N)
    elif space is Space.CELL:
        pts = cell_points(grid.N)
    else:
        raise InvalidParameterError("scalar projection targets Node or Cell")
    return ScalarField(_eval_on(f, pts, lattice), space)


def project_vector(u, grid: GridSpec, lattice: LatticeSpec, space: Space) -> VectorField:
    """Sample an analytic vector u(x) -> C^3 onto edge or face DoFs.

    Component c is sampled at its own staggered positions; u receives the
    Cartesian positions and must return an (..., 3) array.
    """
    if space is Space.EDGE:
        pts_of = edge_points
    elif space is Space.FACE:
        pts_of = face_points
    else:
        raise InvalidParameterError("vector projection targets Edge or Face")
    blocks = []
    for c in range(3):
        pts = pts_of(grid.N, c)
        cart = pts @ lattice.A.T
        vals = np.asarray(u(cart), dtype=complex)
        if vals.shape != pts.shape:
            raise ShapeError(f"vector function returned shape {vals.shape}")
        blocks.append(vals[..., c].reshape(-1))
    return VectorField(np.concatenate(blocks), space)


def write_field(path, values: np.ndarray, N: int, space: Space) -> None:
    """Dump a field (or a stack of fields) in the binary exchange format:
    16-byte header (magic 'MFDF', u32 N, u32 space tag, u32 ncomp) followed
    by little-endian interleaved (re, im) float64 pairs."""
    flat = np.ascontiguousarray(np.asarray(values, dtype=np.complex128).reshape(-1))
    if flat.size % (N**3) != 0:
        raise ShapeError(f"field length {flat.size} is not a multiple of N^3")
    ncomp = flat.size // N**3
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", N, int(space), ncomp))
        inter = np.empty(2 * flat.size, dtype="<f8")
        inter[0::2] = flat.real
        inter[1::2] = flat.imag
        fh.write(inter.tobytes())


def read_field(path) -> tuple[np.ndarray, int, Space]:
    """Read a field written by write_field; returns (values, N, space)
    with values shaped (ncomp, N^3)."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ShapeError(f"{path} is not a field dump")
        N, tag, ncomp = struct.unpack("<III", fh.read(12))
        raw = np.frombuffer(fh.read(), dtype="<f8")
    if raw.size != 2 * ncomp * N**3:
        raise ShapeError(f"{path} payload truncated")
    vals = raw[0::2] + 1j * raw[1::2]
    return vals.reshape(ncomp, N**3), N, Space(tag)
