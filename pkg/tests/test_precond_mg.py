import numpy as np
import pytest

from conftest import dense_curl, dense_directional, dense_div, rng_field
from mfdband.errors import InvalidParameterError
from mfdband.grid_fields import GridSpec
from mfdband.lattice import make_lattice
from mfdband.precond_fft import build_symbols, solve_P_batch
from mfdband.precond_mg import (CELL_PATTERN, FACE_PATTERNS, build_hierarchy,
                                distributive_solve, prolong, restrict,
                                scalar_laplacian_sparse, vcycle, vcycle_solve)
from mfdband.stencil_ops import ShiftedOperators


def _ops(N, kind="sc", l=1.0, k=(0.4, -0.3, 0.2)):
    return ShiftedOperators(GridSpec(N, 1), make_lattice(kind, l), np.asarray(k))


def test_hierarchy_levels_and_guards():
    H = build_hierarchy(_ops(32), gamma=1.0, c=1.0, depth=3)
    assert [lv.N for lv in H.levels] == [32, 16, 8]
    H2 = build_hierarchy(_ops(16), gamma=2.0, c=0.5)
    assert [lv.N for lv in H2.levels] == [16, 8]
    with pytest.raises(InvalidParameterError):
        build_hierarchy(_ops(12), gamma=1.0, c=1.0)
    with pytest.raises(InvalidParameterError):
        build_hierarchy(ShiftedOperators(GridSpec(16, 2), make_lattice("sc", 1.0),
                                         np.zeros(3)), gamma=1.0, c=1.0)
    with pytest.raises(InvalidParameterError):
        build_hierarchy(_ops(16, k=(0, 0, 0)), gamma=1.0, c=0.0)


def test_level_matrices_hermitian():
    H = build_hierarchy(_ops(16, kind="bcc"), gamma=2.0, c=0.3)
    for lv in H.levels:
        for A in (lv.A_y, lv.A_q):
            d = (A - A.getH()).tocoo()
            assert np.abs(d.data).max() < 1e-12 if d.nnz else True


def test_sparse_laplacian_matches_dense_oracle(rng):
    N, kind, l = 4, "fcc", 1.1
    k = rng.standard_normal(3)
    Ds = dense_directional(kind, l, N, 1, k)
    want = sum(D @ D.conj().T for D in Ds)
    got = scalar_laplacian_sparse(N, make_lattice(kind, l), k, 1).toarray()
    assert np.abs(got - want).max() < 1e-11


def test_coarsest_solve_exact(rng):
    H = build_hierarchy(_ops(8), gamma=1.0, c=1.0)
    assert len(H.levels) == 1
    b = rng_field(rng, (8, 8, 8))
    x = vcycle(np.zeros_like(b), b, H)
    r = np.linalg.norm(b.reshape(-1) - H.levels[0].A_y @ x.reshape(-1))
    assert r <= 1e-13 * np.linalg.norm(b)


def test_vcycle_zero_rhs():
    H = build_hierarchy(_ops(16), gamma=1.0, c=1.0)
    x = vcycle(np.zeros((16, 16, 16), dtype=complex), np.zeros((16, 16, 16)), H)
    assert np.all(x == 0)


def test_vcycle_contraction_and_convergence(rng):
    H = build_hierarchy(_ops(32), gamma=1.0, c=1.0)
    b = rng_field(rng, (32, 32, 32))
    x1 = vcycle(np.zeros_like(b), b, H)
    r1 = np.linalg.norm(b.reshape(-1) - H.levels[0].A_y @ x1.reshape(-1))
    assert r1 <= 0.2 * np.linalg.norm(b)
    x, cycles = vcycle_solve(b, H, tol=1e-8)
    assert cycles <= 50
    r = np.linalg.norm(b.reshape(-1) - H.levels[0].A_y @ x.reshape(-1))
    assert r <= 1e-8 * np.linalg.norm(b)


def test_vcycle_is_affine_fixed_point_iteration(rng):
    # vcycle(x0, b) - vcycle(0, b) is linear in x0.
    H = build_hierarchy(_ops(16), gamma=1.0, c=1.0)
    b = rng_field(rng, (16, 16, 16))
    z = vcycle(np.zeros_like(b), b, H)
    x1 = rng_field(rng, (16, 16, 16))
    x2 = rng_field(rng, (16, 16, 16))
    e1 = vcycle(x1, b, H) - z
    e2 = vcycle(x2, b, H) - z
    e12 = vcycle(x1 + 0.5 * x2, b, H) - z
    assert np.abs(e12 - (e1 + 0.5 * e2)).max() < 1e-10 * max(1, np.abs(e1).max())


def test_transfer_operators_are_adjoint_pair(rng):
    # prolong equals 8 x restrict^T on the scalar grid, per pattern.
    N = 8
    for pattern in (CELL_PATTERN,) + FACE_PATTERNS:
        R = np.zeros((4**3, N**3))
        for j in range(N**3):
            e = np.zeros(N**3)
            e[j] = 1.0
            R[:, j] = restrict(e.reshape(N, N, N), pattern).reshape(-1).real
        P = np.zeros((N**3, 4**3))
        for j in range(4**3):
            e = np.zeros(4**3)
            e[j] = 1.0
            P[:, j] = prolong(e.reshape(4, 4, 4), pattern).reshape(-1).real
        assert np.abs(P - 8.0 * R.T).max() < 1e-14
        # both reproduce constants
        assert np.allclose(restrict(np.ones((N, N, N)), pattern), 1.0)
        assert np.allclose(prolong(np.ones((4, 4, 4)), pattern), 1.0)


@pytest.mark.parametrize("gamma", [1.0, 10.0])
def test_distributive_matches_fft_solver(gamma, rng):
    N = 16
    ops = _ops(N, kind="sc", l=1.0)
    H = build_hierarchy(ops, gamma=gamma, c=0.0)
    f = rng_field(rng, (3, N, N, N))
    xd = distributive_solve(f, H, tol=1e-11)
    sym = build_symbols(ops)
    xf = solve_P_batch(f, sym, gamma, 0.0)
    assert np.linalg.norm(xd - xf) <= 1e-6 * np.linalg.norm(xf)


def test_distributive_zero_rhs():
    H = build_hierarchy(_ops(16), gamma=4.0, c=0.0)
    x = distributive_solve(np.zeros((3, 16, 16, 16)), H)
    assert np.all(x == 0)


def test_dense_block_algebra_of_transformation(rng):
    # The right-transformed saddle system is block lower-triangular with
    # the shifted vector Laplacian and gamma-scaled scalar Laplacian on the
    # diagonal; the printed off-diagonal shift contribution is absent.
    N, l, kind = 4, 1.0, "sc"
    k = rng.standard_normal(3)
    gamma, c = 3.0, 0.7
    Ds = dense_directional(kind, l, N, 1, k)
    A = dense_curl(Ds)
    B = dense_div(Ds)
    nv, ns = 3 * N**3, N**3
    AA = A @ A.conj().T
    BB = B.conj().T @ B
    Lk = B @ B.conj().T
    Lvec = AA + BB
    Iv, Is = np.eye(nv), np.eye(ns)
    Lmat = np.block([[AA + (gamma + 1) * BB + c * Iv, -B.conj().T],
                     [-B, Is]])
    L0 = np.block([[Iv, B.conj().T],
                   [gamma * B, (gamma + 1) * Lk + c * Is]])
    M = Lmat @ L0
    assert np.abs(M[:nv, :nv] - (Lvec + c * Iv)).max() < 1e-10
    assert np.abs(M[:nv, nv:]).max() < 1e-10
    assert np.abs(M[nv:, :nv] - (gamma - 1) * B).max() < 1e-10
    assert np.abs(M[nv:, nv:] - (gamma * Lk + c * Is)).max() < 1e-10
    # and solving through the triangular form reproduces (P + c)^{-1} f
    f = rng_field(rng, nv)
    y = np.linalg.solve(Lvec + c * Iv, f)
    q = np.linalg.solve(gamma * Lk + c * Is, -(gamma - 1) * (B @ y))
    x = y + B.conj().T @ q
    want = np.linalg.solve(AA + gamma * BB + c * Iv, f)
    assert np.abs(x - want).max() < 1e-9 * np.abs(want).max()


@pytest.mark.slow
def test_grid_independent_cycle_counts(rng):
    counts = {}
    for N in (16, 32, 64):
        H = build_hierarchy(_ops(N), gamma=1.0, c=1.0)
        b = rng_field(rng, (N, N, N))
        _, cyc = vcycle_solve(b, H, tol=1e-8)
        counts[N] = cyc
    assert max(counts.values()) - min(counts.values()) <= 2, counts
