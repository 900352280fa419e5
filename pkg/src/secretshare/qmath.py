"""Small dense complex-matrix helpers for one- and two-qubit operators.

Matrices are plain ``numpy`` arrays of shape (2, 2) or (4, 4). Two-qubit
operators use the basis order |00>, |01>, |10>, |11> with the first factor
belonging to Bob's qubit and the second to Charlie's.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

HERM_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)


class HermEig(NamedTuple):
    values: np.ndarray  # ascending, real
    vectors: np.ndarray  # orthonormal columns


def as_cmat(m, dim: int | None = None) -> np.ndarray:
    """Coerce ``m`` to a finite complex square matrix of dimension 2 or 4."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {a.shape}")
    if dim is not None and a.shape[0] != dim:
        raise ValueError(f"expected a {dim}x{dim} matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def tensor(a, b) -> np.ndarray:
    """Kronecker product of two 2x2 operators."""
    return np.kron(as_cmat(a, 2), as_cmat(b, 2))


def is_hermitian(h, tol: float = HERM_TOL) -> bool:
    h = np.asarray(h, dtype=complex)
    return bool(np.max(np.abs(h - dag(h))) <= tol)


def herm_eig(h) -> HermEig:
    """Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.

    Raises ``ValueError`` when ``h`` deviates from Hermitian by more than 1e-9
    in any entry.
    """
    h = as_cmat(h)
    if not is_hermitian(h):
        raise ValueError("matrix is not Hermitian")
    vals, vecs = np.linalg.eigh((h + dag(h)) / 2)
    return HermEig(vals, vecs)


def psd_sqrt(h) -> np.ndarray:
    """Principal square root of a PSD matrix; eigenvalues in [-1e-9, 0) are clipped."""
    vals, vecs = herm_eig(h)
    if vals[0] < -HERM_TOL:
        raise ValueError(f"matrix is not PSD (min eigenvalue {vals[0]:.3g})")
    root = np.sqrt(np.clip(vals, 0.0, None))
    return (vecs * root) @ dag(vecs)


def partial_trace(m, subsystem: int) -> np.ndarray:
    """Trace out qubit ``subsystem`` (1 = Bob's, 2 = Charlie's) of a 4x4 operator."""
    t = as_cmat(m, 4).reshape(2, 2, 2, 2)
    if subsystem == 1:
        return np.einsum("ijik->jk", t)
    if subsystem == 2:
        return np.einsum("ijkj->ik", t)
    raise ValueError("subsystem must be 1 or 2")


def partial_transpose(m, subsystem: int = 2) -> np.ndarray:
    t = as_cmat(m, 4).reshape(2, 2, 2, 2)
    if subsystem == 2:
        return t.transpose(0, 3, 2, 1).reshape(4, 4)
    if subsystem == 1:
        return t.transpose(2, 1, 0, 3).reshape(4, 4)
    raise ValueError("subsystem must be 1 or 2")


def ket(*amps) -> np.ndarray:
    return np.asarray(amps, dtype=complex)


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def equal_up_to_phase(a, b, tol: float = 1e-9) -> bool:
    """True when ``a == exp(i phi) b`` for some phase, entrywise to ``tol``.

    Works for vectors and matrices alike.
    """
    a = np.asarray(a, dtype=complex).ravel()
    b = np.asarray(b, dtype=complex).ravel()
    k = int(np.argmax(np.abs(b)))
    if abs(b[k]) < tol:
        return bool(np.max(np.abs(a)) <= tol)
    phase = a[k] / b[k]
    if abs(abs(phase) - 1) > 1e-6:
        return False
    phase /= abs(phase)
    return bool(np.max(np.abs(a - phase * b)) <= tol)


def bloch_vector(m) -> np.ndarray:
    """Unnormalised (Tr m, Tr m X, Tr m Y, Tr m Z) of a 2x2 operator."""
    m = as_cmat(m, 2)
    return np.array([np.trace(m @ p).real for p in PAULIS])


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
