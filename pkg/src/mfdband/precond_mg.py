"""Geometric multigrid solver for the preconditioner system.

The saddle-like preconditioner is right-transformed into a block
lower-triangular system whose diagonal blocks are shifted scalar
Laplacians, so the full solve reduces to independent scalar V-cycles plus
one divergence/adjoint sweep (the distributive transformation).  Each
level re-discretizes the operators at its own resolution, smooths with
ILU(0) in natural ordering using exact sparse triangular solves, and the
coarsest level is solved directly.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from numba import njit

from .errors import FactorizationError, InvalidParameterError, ShapeError
from .grid_fields import GridSpec
from .stencil_ops import ShiftedOperators, generator_vectors, stencil_coeffs

__all__ = [
    "MGHierarchy",
    "build_hierarchy",
    "vcycle",
    "vcycle_solve",
    "distributive_solve",
    "restrict",
    "prolong",
    "CELL_PATTERN",
    "FACE_PATTERNS",
]

# Staggering patterns name, per numpy axis (z, y, x): True = half-offset
# (covering coarsening), False = node-aligned (full weighting).
CELL_PATTERN = (True, True, True)
# Vector component c of the eigenfield is node-aligned along its own axis
# and half-offset transversally; lattice axis c maps to numpy axis 2-c.
FACE_PATTERNS = tuple(
    tuple(ax != 2 - c for ax in range(3)) for c in range(3)
)


# -- grid transfer ----------------------------------------------------


def _restrict_axis(x: np.ndarray, axis: int, half: bool) -> np.ndarray:
    n = x.shape[axis]
    if n % 2:
        raise ShapeError("restriction needs an even axis length")
    x = np.moveaxis(x, axis, 0)
    if half:
        out = 0.5 * (x[0::2] + x[1::2])
    else:
        out = 0.5 * x[0::2] + 0.25 * (np.roll(x, 1, axis=0)[0::2] + x[1::2])
    return np.moveaxis(out, 0, axis)


def _prolong_axis(x: np.ndarray, axis: int, half: bool) -> np.ndarray:
    x = np.moveaxis(x, axis, 0)
    out = np.empty((2 * x.shape[0],) + x.shape[1:], dtype=x.dtype)
    if half:
        out[0::2] = x
        out[1::2] = x
    else:
        out[0::2] = x
        out[1::2] = 0.5 * (x + np.roll(x, -1, axis=0))
    return np.moveaxis(out, 0, axis)


def restrict(x: np.ndarray, pattern=CELL_PATTERN) -> np.ndarray:
    """Full-weighting restriction of an (N, N, N) field to (N/2,)*3,
    adapted to the staggering pattern."""
    for ax in range(3):
        x = _restrict_axis(x, ax, pattern[ax])
    return x


def prolong(x: np.ndarray, pattern=CELL_PATTERN) -> np.ndarray:
    """Adjoint of restrict (scaled to reproduce constants)."""
    for ax in range(3):
        x = _prolong_axis(x, ax, pattern[ax])
    return x


# -- sparse operators per level ---------------------------------------


def _circulant_dense(vec: np.ndarray) -> np.ndarray:
    n = len(vec)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return vec[idx]


def _kron3(az, ay, ax):
    return sp.kron(az, sp.kron(ay, ax, format="csr"), format="csr")


def _sparse_directional(N: int, lattice, bloch, order_k: int, direction: int):
    """Sparse matrix of the shifted directional operator at resolution N."""
    coeffs = stencil_coeffs(order_k)
    v1, v0 = generator_vectors(coeffs, N)
    c1 = sp.csr_matrix(_circulant_dense(v1) * N)
    c0 = sp.csr_matrix(_circulant_dense(v0))
    eye = sp.identity(N, format="csr")
    place = {
        0: lambda m: _kron3(eye, eye, m),
        1: lambda m: _kron3(eye, m, eye),
        2: lambda m: _kron3(m, eye, eye),
    }
    B = lattice.B
    out = None
    for a in range(3):
        if B[a, direction] != 0.0:
            term = B[a, direction] * place[a](c1)
            out = term if out is None else out + term
    if bloch[direction] != 0.0:
        term = (1j * bloch[direction]) * place[direction](c0)
        out = term if out is None else out + term
    if out is None:
        out = sp.csr_matrix((N**3, N**3), dtype=complex)
    return out.astype(complex)


def scalar_laplacian_sparse(N: int, lattice, bloch, order_k: int = 1) -> sp.csr_matrix:
    """sum_i D_i D_i^H at resolution N (Hermitian positive semidefinite)."""
    L = None
    for i in range(3):
        D = _sparse_directional(N, lattice, bloch, order_k, i)
        term = (D @ D.getH()).tocsr()
        L = term if L is None else L + term
    L = 0.5 * (L + L.getH())
    L.sort_indices()
    return L.tocsr()


# -- ILU(0) ------------------------------------------------------------


@njit(cache=True)
def _ilu0_inplace(n, indptr, indices, data, diag_pos):
    for i in range(n):
        for pk in range(indptr[i], diag_pos[i]):
            kcol = indices[pk]
            ukk = data[diag_pos[kcol]]
            if ukk == 0.0 + 0.0j:
                return kcol
            lik = data[pk] / ukk
            data[pk] = lik
            pj = pk + 1
            pu = diag_pos[kcol] + 1
            end_j = indptr[i + 1]
            end_u = indptr[kcol + 1]
            while pj < end_j and pu < end_u:
                cj = indices[pj]
                cu = indices[pu]
                if cj == cu:
                    data[pj] -= lik * data[pu]
                    pj += 1
                    pu += 1
                elif cj < cu:
                    pj += 1
                else:
                    pu += 1
        if data[diag_pos[i]] == 0.0 + 0.0j:
            return i
    return -1


@njit(cache=True)
def _lu_apply(n, indptr, indices, data, diag_pos, b, x):
    for i in range(n):
        s = b[i]
        for p in range(indptr[i], diag_pos[i]):
            s -= data[p] * x[indices[p]]
        x[i] = s
    for i in range(n - 1, -1, -1):
        s = x[i]
        for p in range(diag_pos[i] + 1, indptr[i + 1]):
            s -= data[p] * x[indices[p]]
        x[i] = s / data[diag_pos[i]]


class _ILU0:
    def __init__(self, A: sp.csr_matrix, level: int):
        A = A.tocsr()
        A.sort_indices()
        n = A.shape[0]
        indptr, indices = A.indptr, A.indices
        diag_pos = np.empty(n, dtype=indptr.dtype)
        for i in range(n):
            row = indices[indptr[i]:indptr[i + 1]]
            j = np.searchsorted(row, i)
            if j == len(row) or row[j] != i:
                raise FactorizationError(f"missing diagonal entry at level {level}")
            diag_pos[i] = indptr[i] + j
        data = A.data.astype(complex).copy()
        bad = _ilu0_inplace(n, indptr, indices, data, diag_pos)
        if bad >= 0:
            raise FactorizationError(f"ILU(0) breakdown at level {level} (row {bad})")
        self.n = n
        self.indptr, self.indices, self.data, self.diag_pos = indptr, indices, data, diag_pos

    def solve(self, b: np.ndarray) -> np.ndarray:
        x = np.empty_like(b)
        _lu_apply(self.n, self.indptr, self.indices, self.data, self.diag_pos,
                  np.ascontiguousarray(b), x)
        return x


# -- hierarchy ---------------------------------------------------------


@dataclass
class _Level:
    N: int
    A_y: sp.csr_matrix          # L_k + c
    A_q: sp.csr_matrix          # gamma L_k + c
    ilu_y: object = None
    ilu_q: object = None
    direct_y: object = None
    direct_q: object = None


@dataclass
class MGHierarchy:
    """Re-discretized scalar levels for the two distributive blocks."""

    grid: GridSpec
    ops: ShiftedOperators
    gamma: float
    c: float
    levels: list = field(default_factory=list)  # fine -> coarse
    n1: int = 2
    n2: int = 2

    @property
    def nlevels(self) -> int:
        return len(self.levels)


def build_hierarchy(ops: ShiftedOperators, gamma: float, c: float,
                    depth: int | None = None, n1: int = 2, n2: int = 2) -> MGHierarchy:
    """Assemble the level matrices and their ILU(0) factors.

    Levels halve the resolution; the coarsest must land on N in {4, 8}
    and is solved directly.  Only the 2nd-order discretization is
    supported on the multigrid path.
    """
    grid = ops.grid
    if grid.order_k != 1:
        raise InvalidParameterError("multigrid path supports order_k = 1 only")
    if gamma <= 0 or c < 0:
        raise InvalidParameterError("need gamma > 0 and c >= 0")
    N = grid.N
    if depth is None:
        depth = 1
        while N % 2 == 0 and N // 2 >= 8:
            N //= 2
            depth += 1
        N = grid.N
    sizes = [N // (2**j) for j in range(depth)]
    if any(s1 != 2 * s2 for s1, s2 in zip(sizes[:-1], sizes[1:])):
        raise InvalidParameterError(f"N={N} not divisible for depth {depth}")
    if sizes[-1] not in (4, 8):
        raise InvalidParameterError(
            f"coarsest level N={sizes[-1]} must be 4 or 8 (depth {depth} from N={N})")
    if c == 0.0 and np.all(ops.bloch == 0.0):
        raise InvalidParameterError("k = 0 requires a positive shift c")

    H = MGHierarchy(grid=grid, ops=ops, gamma=gamma, c=c, n1=n1, n2=n2)
    for idx, n_l in enumerate(sizes):
        L = scalar_laplacian_sparse(n_l, ops.lattice, ops.bloch, grid.order_k)
        eye = sp.identity(n_l**3, format="csr", dtype=complex)
        lev = _Level(N=n_l, A_y=(L + c * eye).tocsr(), A_q=(gamma * L + c * eye).tocsr())
        if idx == depth - 1:
            lev.direct_y = spla.splu(lev.A_y.tocsc())
            lev.direct_q = spla.splu(lev.A_q.tocsc())
        else:
            lev.ilu_y = _ILU0(lev.A_y, level=idx)
            lev.ilu_q = _ILU0(lev.A_q, level=idx)
        H.levels.append(lev)
    return H


def _system(level: _Level, which: str):
    if which == "y":
        return level.A_y, level.ilu_y, level.direct_y
    return level.A_q, level.ilu_q, level.direct_q


def vcycle(x0: np.ndarray, b: np.ndarray, H: MGHierarchy, level: int = 0,
           which: str = "y", pattern=CELL_PATTERN) -> np.ndarray:
    """One V-cycle on the scalar system at `level` (0 = finest).

    Smoothing is the ILU-corrected iteration x <- x + (LU)^{-1} (b - A x);
    the coarsest level solves exactly.
    """
    lev = H.levels[level]
    A, ilu, direct = _system(lev, which)
    n = lev.N
    if b.shape != (n, n, n):
        raise ShapeError(f"expected shape {(n, n, n)}, got {b.shape}")
    bf = b.reshape(-1)
    if direct is not None:
        return direct.solve(bf.astype(complex)).reshape(n, n, n)
    x = x0.reshape(-1).astype(complex).copy()
    for _ in range(H.n1):
        x += ilu.solve(bf - A @ x)
    r = (bf - A @ x).reshape(n, n, n)
    rc = restrict(r, pattern)
    ec = vcycle(np.zeros_like(rc), rc, H, level + 1, which, pattern)
    x += prolong(ec, pattern).reshape(-1)
    for _ in range(H.n2):
        x += ilu.solve(bf - A @ x)
    return x.reshape(n, n, n)


def vcycle_solve(b: np.ndarray, H: MGHierarchy, which: str = "y",
                 pattern=CELL_PATTERN, tol: float = 1e-8,
                 max_cycles: int = 50) -> tuple[np.ndarray, int]:
    """Iterate V-cycles to a relative residual; returns (x, cycles)."""
    lev = H.levels[0]
    A, _, _ = _system(lev, which)
    n = lev.N
    bf = b.reshape(-1)
    bnorm = np.linalg.norm(bf)
    if bnorm == 0.0:
        return np.zeros_like(b, dtype=complex), 0
    x = np.zeros((n, n, n), dtype=complex)
    for cyc in range(1, max_cycles + 1):
        x = vcycle(x, b, H, 0, which, pattern)
        res = np.linalg.norm(bf - A @ x.reshape(-1)) / bnorm
        if res <= tol:
            return x, cyc
    return x, max_cycles


def distributive_solve(f: np.ndarray, H: MGHierarchy, tol: float = 1e-10,
                       max_cycles: int = 60) -> np.ndarray:
    """Solve (curl curl' + gamma div' div + c) x = f through the
    distributive transformation.

    The transformed system is block lower-triangular with the shifted
    vector Laplacian and gamma-scaled scalar Laplacian on the diagonal:
    solve (L + c) y = f componentwise, then (gamma L + c) q = -(gamma-1)
    div y, and assemble x = y + div' q.
    """
    ops = H.ops
    N = H.grid.N
    fb = f.reshape(3, N, N, N)
    y = np.empty_like(fb, dtype=complex)
    for comp in range(3):
        y[comp], _ = vcycle_solve(fb[comp], H, which="y",
                                  pattern=FACE_PATTERNS[comp], tol=tol,
                                  max_cycles=max_cycles)
    if H.gamma == 1.0:
        return y.reshape(f.shape)
    rhs_q = -(H.gamma - 1.0) * ops.div_batch(y)
    q, _ = vcycle_solve(rhs_q, H, which="q", pattern=CELL_PATTERN, tol=tol,
                        max_cycles=max_cycles)
    x = y + ops.div_adj_batch(q)
    return x.reshape(f.shape)
