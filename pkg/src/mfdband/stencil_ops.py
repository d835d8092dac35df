"""Discrete shifted differential operators on the staggered periodic grid.

Everything is built from two circulant 1D stencils: a symmetric
midpoint-derivative stencil (weights c) and a midpoint-averaging stencil
(weights d).  Direction i combines axis sweeps weighted by the inverse
translation matrix B with a Bloch multiplier term i*k_i times averaging
along axis i; gradient/curl/divergence and their adjoints stack these
directional actions.  Application is by direct stencil sweeps; the
spectral route is reserved for the preconditioner.
"""

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import _kernels
from .errors import InvalidParameterError, ShapeError, SpaceMismatchError
from .grid_fields import GridSpec, ScalarField, Space, VectorField
from .lattice import LatticeSpec

__all__ = [
    "StencilCoeffs",
    "stencil_coeffs",
    "ShiftedOperators",
    "apply_D",
    "apply_grad_k",
    "apply_grad_k_adj",
    "apply_curl_k",
    "apply_curl_k_adj",
    "apply_div_k",
    "apply_div_k_adj",
    "apply_vector_laplacian",
    "dense_assemble",
]

# Midpoint derivative (c) and averaging (d) weights per half-order k;
# scheme order is 2k.  Exactness constraints: sum_s c_s (2s-1) = 1 and
# 2 sum_s d_s = 1.
_C_TABLE = {
    1: [Fraction(1)],
    2: [Fraction(9, 8), Fraction(-1, 24)],
    3: [Fraction(75, 64), Fraction(-25, 384), Fraction(3, 640)],
    4: [Fraction(1225, 1024), Fraction(-245, 3072), Fraction(49, 5120), Fraction(-5, 7168)],
}
_D_TABLE = {
    1: [Fraction(1, 2)],
    2: [Fraction(9, 16), Fraction(-1, 16)],
    3: [Fraction(75, 128), Fraction(-25, 256), Fraction(3, 256)],
    4: [Fraction(1225, 2048), Fraction(-245, 2048), Fraction(49, 2048), Fraction(-5, 2048)],
}


@dataclass(frozen=True)
class StencilCoeffs:
    order_k: int
    c: tuple
    d: tuple


def stencil_coeffs(order_k: int) -> StencilCoeffs:
    """First-derivative and averaging weights for half-order k in 1..4."""
    if order_k not in _C_TABLE:
        raise InvalidParameterError(f"unsupported half-order {order_k}; use 1..4")
    c = tuple(float(v) for v in _C_TABLE[order_k])
    d = tuple(float(v) for v in _D_TABLE[order_k])
    return StencilCoeffs(order_k=order_k, c=c, d=d)


def _taps(coeffs: StencilCoeffs):
    """Shared offset list and the derivative/averaging weights on it.

    Offsets (0, 1, .., k, -1, .., -(k-1)) cover both stencils: the
    derivative weights are (-c1, c1, c2, .., ck, -c2, .., -ck) and the
    averaging weights (d1, d1, d2, .., dk, d2, .., dk).
    """
    k = coeffs.order_k
    offs = list(range(0, k + 1)) + [-s for s in range(1, k)]
    wd = [-coeffs.c[0]] + [coeffs.c[s - 1] for s in range(1, k + 1)]
    wd += [-coeffs.c[s] for s in range(1, k)]
    wa = [coeffs.d[0]] + [coeffs.d[s - 1] for s in range(1, k + 1)]
    wa += [coeffs.d[s] for s in range(1, k)]
    return (np.array(offs, dtype=np.int64),
            np.array(wd, dtype=float),
            np.array(wa, dtype=float))


def generator_vectors(coeffs: StencilCoeffs, N: int) -> tuple[np.ndarray, np.ndarray]:
    """Length-N circulant generators (v1 for the derivative, v0 for the
    averaging), without the 1/h scaling."""
    offs, wd, wa = _taps(coeffs)
    v1 = np.zeros(N)
    v0 = np.zeros(N)
    v1[offs % N] = wd
    v0[offs % N] = wa
    return v1, v0


class ShiftedOperators:
    """Matrix-free actions of the three shifted directional operators and
    all composites, for one (grid, lattice, Bloch vector) combination.

    Immutable after construction; all apply methods are pure and safe for
    concurrent use on distinct output buffers.
    """

    def __init__(self, grid: GridSpec, lattice: LatticeSpec, bloch):
        self.grid = grid
        self.lattice = lattice
        self.bloch = np.asarray(bloch, dtype=float).reshape(3)
        if not np.all(np.isfinite(self.bloch)):
            raise InvalidParameterError("Bloch vector must be finite")
        self.coeffs = stencil_coeffs(grid.order_k)
        offs, wd, wa = _taps(self.coeffs)
        inv_h = float(grid.N)
        B = lattice.B
        # One sweep plan per direction: list of (numpy_axis, offsets, weights).
        # Lattice axis a (0=x fastest) is numpy trailing axis 2-a.
        self._plans = []
        for i in range(3):
            plan = []
            for a in range(3):
                w = B[a, i] * wd * inv_h
                if a == i:
                    w = w + 1j * self.bloch[i] * wa
                if np.any(w != 0):
                    plan.append((2 - a, offs, np.ascontiguousarray(w, dtype=complex)))
            self._plans.append(plan)
        self._adj_plans = [
            [(ax, np.ascontiguousarray(-o), np.conj(w)) for ax, o, w in plan]
            for plan in self._plans
        ]

    @property
    def dim(self) -> int:
        return self.grid.nvector

    # -- batched raw-array actions ------------------------------------
    # Scalar batches have shape (..., N, N, N); vector batches
    # (..., 3, N, N, N).  Outputs are fresh arrays unless `out` is given.

    def d_batch(self, direction: int, x: np.ndarray, conjugate: bool = False,
                out: np.ndarray | None = None, accumulate: bool = False,
                scale: complex = 1.0) -> np.ndarray:
        """Apply the shifted directional operator (or its adjoint) along
        `direction` in 0..2 to a batch of scalar fields."""
        N = self.grid.N
        if x.shape[-3:] != (N, N, N):
            raise ShapeError(f"field shape {x.shape} does not end in ({N},{N},{N})")
        if x.dtype != np.complex128:
            x = x.astype(np.complex128)
        if out is None:
            out = np.empty_like(x)
        plan = self._adj_plans[direction] if conjugate else self._plans[direction]
        acc = accumulate
        for ax, offs, w in plan:
            ww = w if scale == 1.0 else scale * w
            _kernels.sweep(out, x, ax, offs, ww, acc)
            acc = True
        return out

    def grad_batch(self, phi: np.ndarray) -> np.ndarray:
        out = np.empty(phi.shape[:-3] + (3,) + phi.shape[-3:], dtype=complex)
        for i in range(3):
            self.d_batch(i, phi, out=out[..., i, :, :, :])
        return out

    def grad_adj_batch(self, u: np.ndarray) -> np.ndarray:
        out = self.d_batch(0, u[..., 0, :, :, :], conjugate=True)
        for i in (1, 2):
            self.d_batch(i, u[..., i, :, :, :], conjugate=True, out=out, accumulate=True)
        return out

    def div_batch(self, v: np.ndarray) -> np.ndarray:
        out = self.d_batch(0, v[..., 0, :, :, :])
        for i in (1, 2):
            self.d_batch(i, v[..., i, :, :, :], out=out, accumulate=True)
        return out

    def div_adj_batch(self, psi: np.ndarray, out: np.ndarray | None = None,
                      accumulate: bool = False, scale: complex = 1.0) -> np.ndarray:
        if out is None:
            out = np.empty(psi.shape[:-3] + (3,) + psi.shape[-3:], dtype=complex)
        for i in range(3):
            self.d_batch(i, psi, conjugate=True, out=out[..., i, :, :, :],
                         accumulate=accumulate, scale=scale)
        return out

    def curl_batch(self, u: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(u)
        c = [u[..., i, :, :, :] for i in range(3)]
        o = [out[..., i, :, :, :] for i in range(3)]
        self.d_batch(1, c[2], out=o[0])
        self.d_batch(2, c[1], out=o[0], accumulate=True, scale=-1.0)
        self.d_batch(2, c[0], out=o[1])
        self.d_batch(0, c[2], out=o[1], accumulate=True, scale=-1.0)
        self.d_batch(0, c[1], out=o[2])
        self.d_batch(1, c[0], out=o[2], accumulate=True, scale=-1.0)
        return out

    def curl_adj_batch(self, v: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        if out is None:
            out = np.empty_like(v)
        c = [v[..., i, :, :, :] for i in range(3)]
        o = [out[..., i, :, :, :] for i in range(3)]
        self.d_batch(2, c[1], conjugate=True, out=o[0])
        self.d_batch(1, c[2], conjugate=True, out=o[0], accumulate=True, scale=-1.0)
        self.d_batch(0, c[2], conjugate=True, out=o[1])
        self.d_batch(2, c[0], conjugate=True, out=o[1], accumulate=True, scale=-1.0)
        self.d_batch(1, c[0], conjugate=True, out=o[2])
        self.d_batch(0, c[1], conjugate=True, out=o[2], accumulate=True, scale=-1.0)
        return out

    def scalar_laplacian_batch(self, x: np.ndarray) -> np.ndarray:
        """Action of sum_i D_i D_i^H on a batch of scalar fields."""
        out = None
        for i in range(3):
            t = self.d_batch(i, x, conjugate=True)
            if out is None:
                out = self.d_batch(i, t)
            else:
                self.d_batch(i, t, out=out, accumulate=True)
        return out

    def vector_laplacian_batch(self, u: np.ndarray) -> np.ndarray:
        """Block-diagonal vector Laplacian: the scalar action applied to
        each component block independently."""
        out = np.empty_like(u)
        for cidx in range(3):
            out[..., cidx, :, :, :] = self.scalar_laplacian_batch(u[..., cidx, :, :, :])
        return out

    # -- flat-vector helpers -------------------------------------------

    def to_grid(self, flat: np.ndarray, ncomp: int = 3) -> np.ndarray:
        N = self.grid.N
        want = ncomp * N**3 if ncomp > 1 else N**3
        if flat.shape[-1] != want:
            raise ShapeError(f"expected trailing length {want}, got {flat.shape[-1]}")
        shape = flat.shape[:-1] + ((ncomp, N, N, N) if ncomp > 1 else (N, N, N))
        return np.ascontiguousarray(flat).reshape(shape)


def _check_space(field, expected: Space, what: str):
    if field.space is not expected:
        raise SpaceMismatchError(f"{what} expects a {expected.name} field, got {field.space.name}")


def apply_D(direction: int, block: np.ndarray, ops: ShiftedOperators,
            conjugate: bool = False) -> np.ndarray:
    """Shifted directional derivative (or adjoint) on one flat N^3 block."""
    if direction not in (1, 2, 3):
        raise InvalidParameterError("direction is 1, 2 or 3")
    x = ops.to_grid(np.asarray(block, dtype=complex), ncomp=1)
    return ops.d_batch(direction - 1, x, conjugate=conjugate).reshape(-1)


def apply_grad_k(phi: ScalarField, ops: ShiftedOperators) -> VectorField:
    _check_space(phi, Space.NODE, "gradient")
    x = ops.to_grid(np.asarray(phi.values, dtype=complex), ncomp=1)
    return VectorField(ops.grad_batch(x).reshape(-1), Space.EDGE)


def apply_grad_k_adj(u: VectorField, ops: ShiftedOperators) -> ScalarField:
    _check_space(u, Space.EDGE, "gradient adjoint")
    x = ops.to_grid(np.asarray(u.values, dtype=complex))
    return ScalarField(ops.grad_adj_batch(x).reshape(-1), Space.NODE)


def apply_curl_k(u: VectorField, ops: ShiftedOperators) -> VectorField:
    _check_space(u, Space.EDGE, "curl")
    x = ops.to_grid(np.asarray(u.values, dtype=complex))
    return VectorField(ops.curl_batch(x).reshape(-1), Space.FACE)


def apply_curl_k_adj(v: VectorField, ops: ShiftedOperators) -> VectorField:
    _check_space(v, Space.FACE, "curl adjoint")
    x = ops.to_grid(np.asarray(v.values, dtype=complex))
    return VectorField(ops.curl_adj_batch(x).reshape(-1), Space.EDGE)


def apply_div_k(v: VectorField, ops: ShiftedOperators) -> ScalarField:
    _check_space(v, Space.FACE, "divergence")
    x = ops.to_grid(np.asarray(v.values, dtype=complex))
    return ScalarField(ops.div_batch(x).reshape(-1), Space.CELL)


def apply_div_k_adj(psi: ScalarField, ops: ShiftedOperators) -> VectorField:
    _check_space(psi, Space.CELL, "divergence adjoint")
    x = ops.to_grid(np.asarray(psi.values, dtype=complex), ncomp=1)
    return VectorField(ops.div_adj_batch(x).reshape(-1), Space.FACE)


def apply_vector_laplacian(u: VectorField, ops: ShiftedOperators) -> VectorField:
    if u.space not in (Space.EDGE, Space.FACE):
        raise SpaceMismatchError("vector Laplacian acts on Edge or Face fields")
    x = ops.to_grid(np.asarray(u.values, dtype=complex))
    return VectorField(ops.vector_laplacian_batch(x).reshape(-1), u.space)


_DENSE_N_MAX = 8


def dense_assemble(which: str, ops: ShiftedOperators, gamma: float = 1.0,
                   c: float = 0.0, m0_beta: np.ndarray | None = None) -> np.ndarray:
    """Explicit matrix of a matrix-free operator, for small-N testing.

    which: 'D1'|'D2'|'D3' (and 'D1_adj'..), 'grad', 'curl', 'curl_adj',
    'div', 'div_adj', 'laplacian', 'P', 'S'.  Columns are the operator
    applied to canonical basis vectors.  Refused for N > 8.
    """
    N = ops.grid.N
    if N > _DENSE_N_MAX:
        raise InvalidParameterError(f"dense assembly refused for N={N} > {_DENSE_N_MAX}")
    ns, nv = N**3, 3 * N**3

    def scalar_cols():
        return np.eye(ns, dtype=complex).reshape(ns, N, N, N)

    def vector_cols():
        return np.eye(nv, dtype=complex).reshape(nv, 3, N, N, N)

    if which in ("D1", "D2", "D3", "D1_adj", "D2_adj", "D3_adj"):
        direction = int(which[1]) - 1
        out = ops.d_batch(direction, scalar_cols(), conjugate=which.endswith("adj"))
        return out.reshape(ns, ns).T
    if which == "grad":
        return ops.grad_batch(scalar_cols()).reshape(ns, nv).T
    if which == "grad_adj":
        return ops.grad_adj_batch(vector_cols()).reshape(nv, ns).T
    if which == "curl":
        return ops.curl_batch(vector_cols()).reshape(nv, nv).T
    if which == "curl_adj":
        return ops.curl_adj_batch(vector_cols()).reshape(nv, nv).T
    if which == "div":
        return ops.div_batch(vector_cols()).reshape(nv, ns).T
    if which == "div_adj":
        return ops.div_adj_batch(scalar_cols()).reshape(ns, nv).T
    if which == "laplacian":
        return ops.vector_laplacian_batch(vector_cols()).reshape(nv, nv).T
    if which in ("P", "S"):
        from .compensation import CompensatedOperator  # local import, no cycle

        if which == "P" or m0_beta is None:
            beta = np.ones(nv)
        else:
            beta = m0_beta
        op = CompensatedOperator.from_parts(ops, beta, gamma, c)
        cols = vector_cols()
        return op.apply_batch(cols).reshape(nv, nv).T
    raise InvalidParameterError(f"unknown operator name {which!r}")
