"""Numba kernels for periodic 1D stencil sweeps over 3D fields.

A sweep applies a short circulant stencil along one axis of a batch of
(N, N, N) complex fields: dst[.., p, ..] (+)= sum_t w[t] * src[.., p+off[t], ..]
with periodic wrap.  Offsets are bounded by the stencil half-width, which
the grid constructor guarantees to be below N/2, so a single wrap
correction suffices.
"""

import numpy as np
from numba import njit

__all__ = ["sweep"]


@njit(cache=True, fastmath=True)
def _sweep_axis0(dst, src, offs, wts, accumulate):
    B, n0, n1, n2 = src.shape
    for b in range(B):
        for t in range(offs.shape[0]):
            w = wts[t]
            off = offs[t]
            write = t == 0 and not accumulate
            for i in range(n0):
                ii = i + off
                if ii >= n0:
                    ii -= n0
                elif ii < 0:
                    ii += n0
                if write:
                    for j in range(n1):
                        for m in range(n2):
                            dst[b, i, j, m] = w * src[b, ii, j, m]
                else:
                    for j in range(n1):
                        for m in range(n2):
                            dst[b, i, j, m] += w * src[b, ii, j, m]


@njit(cache=True, fastmath=True)
def _sweep_axis1(dst, src, offs, wts, accumulate):
    B, n0, n1, n2 = src.shape
    for b in range(B):
        for t in range(offs.shape[0]):
            w = wts[t]
            off = offs[t]
            write = t == 0 and not accumulate
            for i in range(n0):
                for j in range(n1):
                    jj = j + off
                    if jj >= n1:
                        jj -= n1
                    elif jj < 0:
                        jj += n1
                    if write:
                        for m in range(n2):
                            dst[b, i, j, m] = w * src[b, i, jj, m]
                    else:
                        for m in range(n2):
                            dst[b, i, j, m] += w * src[b, i, jj, m]


@njit(cache=True, fastmath=True)
def _sweep_axis2(dst, src, offs, wts, accumulate):
    B, n0, n1, n2 = src.shape
    for b in range(B):
        for i in range(n0):
            for j in range(n1):
                for t in range(offs.shape[0]):
                    w = wts[t]
                    off = offs[t]
                    write = t == 0 and not accumulate
                    lo = -off if off < 0 else 0
                    hi = n2 - off if off > 0 else n2
                    if write:
                        for m in range(lo, hi):
                            dst[b, i, j, m] = w * src[b, i, j, m + off]
                        for m in range(0, lo):
                            dst[b, i, j, m] = w * src[b, i, j, m + off + n2]
                        for m in range(hi, n2):
                            dst[b, i, j, m] = w * src[b, i, j, m + off - n2]
                    else:
                        for m in range(lo, hi):
                            dst[b, i, j, m] += w * src[b, i, j, m + off]
                        for m in range(0, lo):
                            dst[b, i, j, m] += w * src[b, i, j, m + off + n2]
                        for m in range(hi, n2):
                            dst[b, i, j, m] += w * src[b, i, j, m + off - n2]


def sweep(dst: np.ndarray, src: np.ndarray, axis: int, offs: np.ndarray,
          wts: np.ndarray, accumulate: bool) -> None:
    """Apply one circulant stencil along `axis` (0=z, 1=y, 2=x of the
    trailing three dims).  dst and src must be distinct C-contiguous
    complex128 arrays of identical (..., N, N, N) shape."""
    if dst is src:
        raise ValueError("sweep cannot run in place")
    shp = src.shape
    s4 = (-1,) + shp[-3:]
    d4, x4 = dst.reshape(s4), src.reshape(s4)
    if axis == 0:
        _sweep_axis0(d4, x4, offs, wts, accumulate)
    elif axis == 1:
        _sweep_axis1(d4, x4, offs, wts, accumulate)
    elif axis == 2:
        _sweep_axis2(d4, x4, offs, wts, accumulate)
    else:
        raise ValueError(f"axis must be 0, 1 or 2, got {axis}")
