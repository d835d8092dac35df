"""Block preconditioned eigensolver for the smallest eigenpairs of a
Hermitian positive (semi)definite operator.

Locally optimal block CG: each iteration does a Rayleigh-Ritz solve on the
subspace spanned by the current block X, the preconditioned residuals W of
the not-yet-converged columns, and the previous update directions.  The
trial basis is orthonormalized through a Cholesky factorization of its
Gram matrix, with a drop-the-direction-block fallback and a full
re-orthonormalization fallback on breakdown.  Converged columns are
soft-locked: they stay in the subspace but stop contributing residuals.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .compensation import EigResult
from .errors import InvalidParameterError, SolverFailureError

__all__ = ["SolverConfig", "lobpcg_solve"]

_COND_LIMIT = 1e13


@dataclass
class SolverConfig:
    """Eigensolver controls.

    m requested pairs are guarded by block_extra additional columns
    (default max(2, m//5)) so clustered eigenvalues converge together.
    tol is a relative residual: ||S x - lambda x|| <= tol * lambda * ||x||
    in the shifted operator's scale.
    """

    m: int
    block_extra: int | None = None
    tol: float = 1e-5
    maxit: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.m < 1:
            raise InvalidParameterError("m must be >= 1")
        if self.tol <= 0:
            raise InvalidParameterError("tol must be positive")

    @property
    def extra(self) -> int:
        return max(2, self.m // 5) if self.block_extra is None else self.block_extra


def _orthonormalize(V: np.ndarray) -> np.ndarray:
    q, _ = np.linalg.qr(V)
    return np.asfortranarray(q)


def _ritz_from_grams(G: np.ndarray, M: np.ndarray, nwant: int):
    """Ritz pairs from the Gram matrix G and projected operator M via
    Cholesky orthonormalization of the diagonally scaled G.  Raises
    LinAlgError when the basis is numerically dependent (monitored on the
    Cholesky diagonal)."""
    G = 0.5 * (G + G.conj().T)
    M = 0.5 * (M + M.conj().T)
    dg = np.real(np.diag(G))
    if dg.min() <= 0:
        raise np.linalg.LinAlgError("trial basis column collapsed")
    scale = np.sqrt(dg)
    Ls = np.linalg.cholesky(G / np.outer(scale, scale))
    dL = np.abs(np.diag(Ls))
    if dL.min() < 1.0 / np.sqrt(_COND_LIMIT):
        raise np.linalg.LinAlgError("trial basis nearly dependent")
    L = Ls * scale[:, None]
    Y = sla.solve_triangular(L, M, lower=True)
    Mt = sla.solve_triangular(L, Y.conj().T, lower=True).conj().T
    Mt = 0.5 * (Mt + Mt.conj().T)
    theta, Q = np.linalg.eigh(Mt)
    C = sla.solve_triangular(L.conj().T, Q[:, :nwant], lower=False)
    return theta[:nwant], C


def _rayleigh_ritz(T: np.ndarray, HT: np.ndarray, nwant: int):
    """Honest Rayleigh-Ritz on an arbitrary trial block (no trusted
    sub-block structure)."""
    return _ritz_from_grams(T.conj().T @ T, T.conj().T @ HT, nwant)


def _block_grams(lam, blocks, hblocks):
    """Gram and projected-operator matrices over [X, W, P], exploiting
    that X is orthonormal with diagonal projected operator."""
    sizes = [b.shape[1] for b in blocks]
    nt = sum(sizes)
    off = np.cumsum([0] + sizes)
    G = np.empty((nt, nt), dtype=complex)
    M = np.empty((nt, nt), dtype=complex)
    G[:off[1], :off[1]] = np.eye(sizes[0])
    M[:off[1], :off[1]] = np.diag(lam)
    for i in range(len(blocks)):
        for j in range(max(i, 1), len(blocks)):
            si, sj = slice(off[i], off[i + 1]), slice(off[j], off[j + 1])
            Gij = blocks[i].conj().T @ blocks[j]
            Mij = blocks[i].conj().T @ hblocks[j]
            G[si, sj] = Gij
            M[si, sj] = Mij
            if i != j:
                G[sj, si] = Gij.conj().T
                M[sj, si] = Mij.conj().T
    return G, M


def _cholqr(W: np.ndarray) -> np.ndarray | None:
    """Cholesky-QR orthonormalization; None when the block is too ill
    conditioned for the Gram route."""
    G = W.conj().T @ W
    G = 0.5 * (G + G.conj().T)
    dg = np.real(np.diag(G))
    if dg.min() <= 0:
        return None
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None
    dL = np.abs(np.diag(L))
    if dL.min() < 1e-8 * dL.max():
        return None
    return np.asfortranarray(
        sla.solve_triangular(np.conj(L), W.T, lower=True).T)


def _ortho_against(W: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Project W against the orthonormal X and orthonormalize what is
    left, discarding numerically dependent columns."""
    W = W - X @ (X.conj().T @ W)
    nrm = np.linalg.norm(W, axis=0)
    good = nrm > 0
    if not np.all(good):
        W = W[:, good]
        nrm = nrm[good]
    if W.shape[1] == 0:
        return W
    W = W / nrm
    q = _cholqr(W)
    if q is not None:
        return q
    Q, R, _ = sla.qr(W, mode="economic", pivoting=True)
    keep = np.abs(np.diag(R)) > 1e-10 * max(np.abs(R[0, 0]), 1e-300)
    return np.asfortranarray(Q[:, : int(np.sum(keep))])


def lobpcg_solve(apply_S, apply_Pinv, dim: int, cfg: SolverConfig,
                 shift: float = 0.0) -> EigResult:
    """Compute the cfg.m smallest eigenpairs of the Hermitian operator.

    apply_S / apply_Pinv act on (dim, ncols) column blocks.  apply_Pinv
    may be None for an unpreconditioned run.  The reported eigenvalues
    have `shift` subtracted; convergence is judged on the shifted scale.
    """
    m = cfg.m
    bs = m + cfg.extra
    bs = min(bs, dim)
    if dim < m:
        raise InvalidParameterError(f"operator dimension {dim} < requested pairs {m}")

    rng = np.random.default_rng(cfg.seed)
    X = rng.standard_normal((dim, bs)) + 1j * rng.standard_normal((dim, bs))
    X = _orthonormalize(np.asfortranarray(X))
    HX = apply_S(X)
    lam, C = _rayleigh_ritz(X, HX, bs)
    X = np.asfortranarray(X @ C)
    HX = np.asfortranarray(HX @ C)

    P = HP = None
    ritz_history: list[float] = []
    rel = np.full(bs, np.inf)
    iterations = 0
    converged = False
    total_failures = 0

    for it in range(1, cfg.maxit + 1):
        iterations = it
        R = HX - X * lam
        rnorm = np.linalg.norm(R, axis=0)
        denom = np.maximum(np.abs(lam), np.finfo(float).tiny)
        rel = rnorm / denom
        ritz_history.append(float(np.sum(lam[:m])))
        if np.all(rel[:m] <= cfg.tol):
            converged = True
            break

        active = np.flatnonzero(rel > cfg.tol)
        Ra = R[:, active]
        W = apply_Pinv(Ra) if apply_Pinv is not None else Ra.copy()
        W = _ortho_against(W, X)
        if W.shape[1] == 0:
            converged = np.all(rel[:m] <= cfg.tol)
            break
        HW = apply_S(W)

        Pa = HPa = None
        if P is not None:
            Pa, HPa = P[:, active], HP[:, active]

        lam_new = C_new = None
        blocks = hblocks = None
        for attempt in ("full", "no_directions", "reortho"):
            if attempt == "full" and Pa is not None:
                blocks, hblocks = [X, W, Pa], [HX, HW, HPa]
            elif attempt == "reortho":
                W = _ortho_against(W, X)
                if W.shape[1] == 0:
                    break
                HW = apply_S(W)
                blocks, hblocks = [X, W], [HX, HW]
            else:
                blocks, hblocks = [X, W], [HX, HW]
            try:
                if attempt == "reortho":
                    # no trusted structure on the recovery path
                    T = np.concatenate(blocks, axis=1)
                    HT = np.concatenate(hblocks, axis=1)
                    lam_new, C_new = _rayleigh_ritz(T, HT, bs)
                else:
                    G, M = _block_grams(lam, blocks, hblocks)
                    lam_new, C_new = _ritz_from_grams(G, M, bs)
                break
            except np.linalg.LinAlgError:
                continue
        if lam_new is None:
            total_failures += 1
            if total_failures >= 2:
                raise SolverFailureError(
                    f"Rayleigh-Ritz breakdown persisted at iteration {it}")
            P = HP = None
            continue
        total_failures = 0

        lam = lam_new
        off = np.cumsum([0] + [b.shape[1] for b in blocks])
        P = blocks[1] @ C_new[off[1]:off[2]]
        HP = hblocks[1] @ C_new[off[1]:off[2]]
        if len(blocks) == 3:
            P += blocks[2] @ C_new[off[2]:off[3]]
            HP += hblocks[2] @ C_new[off[2]:off[3]]
        P = np.asfortranarray(P)
        HP = np.asfortranarray(HP)
        X = np.asfortranarray(blocks[0] @ C_new[:off[1]]) + P
        HX = np.asfortranarray(hblocks[0] @ C_new[:off[1]]) + HP
        # Unit direction columns keep the next Gram matrix well scaled.
        pn = np.linalg.norm(P, axis=0)
        pn[pn == 0.0] = 1.0
        P /= pn
        HP /= pn

    R = HX - X * lam
    rel = np.linalg.norm(R, axis=0) / np.maximum(np.abs(lam), np.finfo(float).tiny)
    order = np.argsort(lam[:m], kind="stable")
    lam_out = np.real(lam[:m][order])
    X_out = np.asfortranarray(X[:, :m][:, order])
    rel_out = rel[:m][order]
    return EigResult(
        lambdas=lam_out - shift,
        vectors=X_out,
        residuals=rel_out,
        iterations=iterations,
        converged=bool(converged),
        shift=shift,
        history=ritz_history,
    )
