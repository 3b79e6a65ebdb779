"""Small numerical helpers: quadrature, superoperator vectorization, Kraus factors.

Superoperators use the column-stacking convention, vec(A X B) = (B^T (x) A) vec(X).
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import AccuracyError

__all__ = [
    "vec",
    "unvec",
    "hermitize",
    "max_abs",
    "hamiltonian_superop",
    "dissipator_superop",
    "apply_superop",
    "choi_matrix",
    "kraus_from_choi",
    "simpson_doubling",
    "gauss_legendre",
]


def vec(a: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`vec`."""
    return np.asarray(v).reshape((dim, dim), order="F")


def hermitize(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + a.conj().T)


def max_abs(a: np.ndarray) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def hamiltonian_superop(h: np.ndarray) -> np.ndarray:
    """Matrix of rho -> -i[h, rho] in the column-stacking convention."""
    d = h.shape[0]
    eye = np.eye(d)
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def dissipator_superop(channels) -> np.ndarray:
    """Matrix of the Lindblad dissipator for ``channels = [(rate, L), ...]``."""
    rate0, l0 = channels[0]
    d = l0.shape[0]
    eye = np.eye(d)
    out = np.zeros((d * d, d * d), dtype=complex)
    for rate, lop in channels:
        ldl = lop.conj().T @ lop
        out += rate * (
            np.kron(lop.conj(), lop)
            - 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
        )
    return out


def apply_superop(s: np.ndarray, rho: np.ndarray) -> np.ndarray:
    d = rho.shape[0]
    return unvec(s @ vec(rho), d)


def choi_matrix(s: np.ndarray, dim: int) -> np.ndarray:
    """Choi matrix of the map with superoperator matrix ``s``.

    Block (i, j) of the result is the map applied to |i><j|.
    """
    c = np.zeros((dim * dim, dim * dim), dtype=complex)
    for i in range(dim):
        for j in range(dim):
            e_ij = np.zeros((dim, dim), dtype=complex)
            e_ij[i, j] = 1.0
            c[i * dim:(i + 1) * dim, j * dim:(j + 1) * dim] = apply_superop(s, e_ij)
    # reorder so that rows/cols are (i, m): C[(i m), (j n)] = E(|i><j|)[m, n]
    c4 = c.reshape(dim, dim, dim, dim)          # (i, m, j, n)
    return c4.reshape(dim * dim, dim * dim)


def kraus_from_choi(choi: np.ndarray, dim: int, *, psd_tol: float = 1e-10):
    """Kraus factors of a CP map from its (Hermitian) Choi matrix.

    Raises AccuracyError when the Choi matrix has eigenvalues below
    ``-psd_tol * max(1, lam_max)``, i.e. the map is not CP to tolerance.
    """
    evals, evecs = np.linalg.eigh(hermitize(choi))
    scale = max(1.0, float(evals.max(initial=0.0)))
    if evals.min(initial=0.0) < -psd_tol * scale:
        raise AccuracyError(
            f"Choi matrix is not positive semidefinite: min eigenvalue {evals.min():.3e}"
        )
    kraus = []
    for lam, v in zip(evals, evecs.T):
        if lam <= psd_tol * scale * 1e-4:
            continue
        kraus.append(np.sqrt(lam) * v.reshape(dim, dim))
    return kraus


def simpson_doubling(f, a: float, b: float, *, rtol: float = 1e-9,
                     atol: float = 0.0, n0: int = 16, max_n: int = 1 << 22):
    """Composite Simpson integration with interval doubling until converged.

    ``f`` must accept a 1-D array of nodes; it may return scalars per node or
    arrays of any trailing shape (integration runs over the leading axis).
    """
    if b == a:
        probe = np.asarray(f(np.asarray([a])))
        return np.zeros(probe.shape[1:], dtype=probe.dtype) if probe.ndim > 1 else 0.0

    def _simpson(n):
        x = np.linspace(a, b, n + 1)
        y = np.asarray(f(x))
        h = (b - a) / n
        w = np.ones(n + 1)
        w[1:-1:2] = 4.0
        w[2:-1:2] = 2.0
        w = w * (h / 3.0)
        return np.tensordot(w, y, axes=(0, 0))

    n = n0 if n0 % 2 == 0 else n0 + 1
    prev = _simpson(n)
    while n <= max_n:
        n *= 2
        cur = _simpson(n)
        err = max_abs(cur - prev)
        if err <= max(atol, rtol * max(max_abs(cur), 1e-300)):
            return cur
        prev = cur
    raise AccuracyError(f"Simpson rule did not converge on [{a}, {b}] with {max_n} panels")


def gauss_legendre(n: int, a: float, b: float):
    """Gauss-Legendre nodes and weights on [a, b]."""
    x, w = np.polynomial.legendre.leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def expm(a: np.ndarray) -> np.ndarray:
    return scipy.linalg.expm(a)
