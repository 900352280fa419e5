"""Pure numpy versions of the hot loops in ``_kernels.pyx``."""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def enumerate_counts(contrib: np.ndarray) -> np.ndarray:
    """Sum per-cell contributions over every decoding table.

    ``contrib[f, c, k, d]`` is the score vector gained when cell ``c`` of
    encoder pair ``f`` is decoded to choice ``k``. Decoding tables are indexed
    in mixed radix with cell 0 as the least significant digit.
    """
    contrib = np.ascontiguousarray(contrib, dtype=np.intc)
    F, C, K, D = contrib.shape
    h = np.arange(K**C)
    out = np.zeros((F, K**C, D), dtype=np.intc)
    for c in range(C):
        digit = (h // K**c) % K
        out += contrib[:, c, digit, :]
    return out


def _elements(kinds: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Jones matrices [N, 2, 2] for one column of elements."""
    n = kinds.shape[0]
    m = np.zeros((n, 2, 2), dtype=complex)
    m[:, 0, 0] = 1
    m[:, 1, 1] = 1
    hw = kinds == 1
    c2, s2 = np.cos(2 * params[hw]), np.sin(2 * params[hw])
    m[hw, 0, 0] = c2
    m[hw, 0, 1] = s2
    m[hw, 1, 0] = s2
    m[hw, 1, 1] = -c2
    ps = kinds == 2
    m[ps, 1, 1] = np.cos(params[ps]) + 1j * np.sin(params[ps])
    return m


def _chain(kinds: np.ndarray, params: np.ndarray) -> np.ndarray:
    w = np.broadcast_to(np.eye(2, dtype=complex), (kinds.shape[0], 2, 2)).copy()
    for j in range(kinds.shape[1]):
        w = _elements(kinds[:, j], params[:, j]) @ w
    return w


def propagate(kinds1, params1, kinds2, params2, source, meas_kind: int) -> np.ndarray:
    """Outcome probabilities of every event's optical pipeline.

    See the compiled kernel for the element and measurement encodings.
    """
    kinds1, kinds2 = np.asarray(kinds1, dtype=np.int8), np.asarray(kinds2, dtype=np.int8)
    params1, params2 = np.asarray(params1, dtype=float), np.asarray(params2, dtype=float)
    w1 = _chain(kinds1, params1)
    w2 = _chain(kinds2, params2)
    src = np.asarray(source, dtype=complex).reshape(2, 2)
    psi = np.einsum("nik,njl,kl->nij", w1, w2, src).reshape(-1, 4)
    if meas_kind == 0:
        return np.abs(psi) ** 2
    probs = np.empty((psi.shape[0], 3))
    probs[:, 0] = 0.5 * np.abs(psi[:, 0] + psi[:, 3]) ** 2
    probs[:, 1] = 0.5 * np.abs(psi[:, 0] - psi[:, 3]) ** 2
    probs[:, 2] = np.abs(psi[:, 1]) ** 2 + np.abs(psi[:, 2]) ** 2
    return probs
