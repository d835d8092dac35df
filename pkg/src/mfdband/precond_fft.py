"""Exact spectral solver for the constant-coefficient preconditioner.

P = curl curl' + gamma * div' div + c has circulant blocks, so the 3D DFT
block-diagonalizes it into independent 3x3 systems, one per frequency
triple: (s(f) + c) I + (gamma - 1) v v* with v the conjugated directional
symbols and s = |v|^2.  Each little system is inverted in closed form by
the rank-one update formula, giving an exact solve in O(N^3 log N).
"""

from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ShapeError, SingularPreconditionerError, SpaceMismatchError
from .grid_fields import Space, VectorField
from .stencil_ops import ShiftedOperators, generator_vectors

__all__ = ["FourierSymbols", "build_symbols", "solve_P", "solve_P_batch"]


@dataclass(frozen=True)
class FourierSymbols:
    """Directional Fourier multipliers delta_i(f) on the N^3 frequency
    grid, and their squared magnitude sum s(f) >= 0."""

    N: int
    delta: np.ndarray  # (3, N, N, N) complex
    s: np.ndarray      # (N, N, N) real


def _axis_symbol(vec: np.ndarray) -> np.ndarray:
    # Multiplier of Circ(vec) on the mode exp(+2 pi i f t / N).
    return np.fft.ifft(vec) * len(vec)


def build_symbols(ops: ShiftedOperators) -> FourierSymbols:
    """Fourier multipliers of the three shifted directional operators.

    For every pure 3D Fourier mode e_f, applying direction i multiplies it
    by delta_i(f); the construction combines the 1D stencil symbols per
    Kronecker slot with the same geometry weights as the sweeps.
    """
    grid = ops.grid
    N = grid.N
    v1, v0 = generator_vectors(ops.coeffs, N)
    xi1 = _axis_symbol(v1) / grid.h
    xi0 = _axis_symbol(v0)
    B = ops.lattice.B
    k = ops.bloch
    # Lattice axis a varies along numpy axis 2-a of the (N, N, N) grid.
    bshape = [(1, 1, N), (1, N, 1), (N, 1, 1)]
    delta = np.zeros((3, N, N, N), dtype=complex)
    for i in range(3):
        for a in range(3):
            if B[a, i] != 0.0:
                delta[i] += B[a, i] * xi1.reshape(bshape[a])
        if k[i] != 0.0:
            delta[i] += 1j * k[i] * xi0.reshape(bshape[i])
    s = np.sum(delta.real**2 + delta.imag**2, axis=0)
    return FourierSymbols(N=N, delta=delta, s=s)


def solve_P_batch(b: np.ndarray, symbols: FourierSymbols, gamma: float, c: float,
                  workers: int | None = None) -> np.ndarray:
    """Solve P x = b for a batch shaped (..., 3, N, N, N)."""
    N = symbols.N
    if b.shape[-4:] != (3, N, N, N):
        raise ShapeError(f"batch shape {b.shape} does not end in (3,{N},{N},{N})")
    if gamma <= 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if c < 0:
        raise ValueError(f"shift must be nonnegative, got {c}")
    s = symbols.s
    d1 = s + c
    d2 = gamma * s + c  # = s + c + (gamma - 1) |v|^2
    if d1.min() <= 0.0 or d2.min() <= 0.0:
        raise SingularPreconditionerError(
            "singular frequency in the preconditioner (s + c = 0); "
            "solve the shifted problem with a positive shift c"
        )
    axes = (-3, -2, -1)
    bh = sfft.fftn(b, axes=axes, workers=workers)
    inner = np.einsum("izyx,...izyx->...zyx", symbols.delta, bh)
    coef = ((gamma - 1.0) / d2) * inner
    xh = bh - coef[..., None, :, :, :] * np.conj(symbols.delta)
    xh /= d1
    return sfft.ifftn(xh, axes=axes, workers=workers)


def solve_P(b: VectorField, symbols: FourierSymbols, gamma: float, c: float) -> VectorField:
    """Solve the preconditioner system for a single eigenfield."""
    if b.space is not Space.FACE:
        raise SpaceMismatchError("the preconditioner acts on the FACE-tagged field")
    N = symbols.N
    vals = np.asarray(b.values, dtype=complex)
    if vals.size != 3 * N**3:
        raise ShapeError(f"expected length {3 * N**3}, got {vals.size}")
    x = solve_P_batch(vals.reshape(3, N, N, N), symbols, gamma, c)
    return VectorField(x.reshape(-1), Space.FACE)
