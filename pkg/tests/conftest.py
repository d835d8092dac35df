"""Shared test helpers: independent dense constructions of the discrete
operators, built directly from the circulant/Kronecker definitions rather
than through the sweep kernels they are used to check."""

import numpy as np
import pytest

from mfdband.lattice import make_lattice
from mfdband.stencil_ops import generator_vectors, stencil_coeffs


def circulant(vec: np.ndarray) -> np.ndarray:
    """Circ(vec): first row is vec, each later row shifts right."""
    n = len(vec)
    idx = (np.arange(n)[None, :] - np.arange(n)[:, None]) % n
    return np.asarray(vec)[idx]


def kron_axis(mat: np.ndarray, axis: int, N: int) -> np.ndarray:
    """Place a 1D operator on one lattice axis of the flattened N^3 grid
    (x fastest): axis 0 -> I (x) I (x) mat, axis 2 -> mat (x) I (x) I."""
    eye = np.eye(N)
    mats = [eye, eye, eye]
    mats[2 - axis] = mat
    return np.kron(mats[0], np.kron(mats[1], mats[2]))


def dense_directional(kind: str, l: float, N: int, order_k: int, bloch) -> list:
    """The three dense shifted directional operators, from the definition."""
    lat = make_lattice(kind, l)
    coeffs = stencil_coeffs(order_k)
    v1, v0 = generator_vectors(coeffs, N)
    K = [kron_axis(circulant(v1) * N, a, N) for a in range(3)]
    AV = [kron_axis(circulant(v0), a, N) for a in range(3)]
    k = np.asarray(bloch, dtype=float)
    out = []
    for i in range(3):
        D = sum(lat.B[a, i] * K[a] for a in range(3)).astype(complex)
        D = D + 1j * k[i] * AV[i]
        out.append(D)
    return out


def dense_grad(D):
    return np.vstack(D)


def dense_curl(D):
    Z = np.zeros_like(D[0])
    return np.block([
        [Z, -D[2], D[1]],
        [D[2], Z, -D[0]],
        [-D[1], D[0], Z],
    ])


def dense_div(D):
    return np.hstack(D)


def rng_field(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
