"""Two-qubit states and measurement operators."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .qmath import HERM_TOL, as_cmat, dag, herm_eig, partial_transpose, proj, psd_sqrt

_S = 1 / np.sqrt(2)
BELL_KETS = {
    "phi+": np.array([_S, 0, 0, _S], dtype=complex),
    "phi-": np.array([_S, 0, 0, -_S], dtype=complex),
    "psi+": np.array([0, _S, _S, 0], dtype=complex),
    "psi-": np.array([0, _S, -_S, 0], dtype=complex),
}
BELL_NAMES = tuple(BELL_KETS)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix; ``mat`` is a read-only complex array."""

    mat: np.ndarray

    def __post_init__(self):
        m = as_cmat(self.mat)
        if np.max(np.abs(m - dag(m))) > HERM_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1) > HERM_TOL:
            raise ValueError(f"density matrix trace is {np.trace(m).real:.12g}, not 1")
        if herm_eig(m).values[0] < -HERM_TOL:
            raise ValueError("density matrix is not positive semidefinite")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "mat", m)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def to_json(self) -> dict:
        return {"dim": self.dim, "re": self.mat.real.tolist(), "im": self.mat.imag.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "DensityMatrix":
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros_like(re)), dtype=float)
        if re.shape != im.shape or re.shape[0] != int(obj.get("dim", re.shape[0])):
            raise ValueError("state JSON has inconsistent shapes")
        return cls(re + 1j * im)

    @classmethod
    def load(cls, path) -> "DensityMatrix":
        return cls.from_json(json.loads(Path(path).read_text()))


def _mat(rho) -> np.ndarray:
    return rho.mat if isinstance(rho, DensityMatrix) else as_cmat(rho)


@dataclass(frozen=True)
class Povm:
    elements: tuple
    labels: tuple = field(default=())

    def __post_init__(self):
        els = tuple(as_cmat(e) for e in self.elements)
        if not els:
            raise ValueError("POVM needs at least one element")
        labels = tuple(self.labels) if self.labels else tuple(range(len(els)))
        if len(labels) != len(els):
            raise ValueError("one label per POVM element is required")
        for e in els:
            if np.max(np.abs(e - dag(e))) > HERM_TOL or herm_eig(e).values[0] < -HERM_TOL:
                raise ValueError("POVM element is not positive semidefinite")
        if np.max(np.abs(sum(els) - np.eye(els[0].shape[0]))) > HERM_TOL:
            raise ValueError("POVM elements do not sum to the identity")
        object.__setattr__(self, "elements", els)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.elements)

    def element(self, label) -> np.ndarray:
        return self.elements[self.labels.index(label)]


def bell_state(which: str) -> DensityMatrix:
    """Projector onto one of the Bell vectors ``phi+``, ``phi-``, ``psi+``, ``psi-``."""
    key = which.lower().replace("φ", "phi").replace("ψ", "psi").replace("Φ", "phi").replace("Ψ", "psi")
    if key not in BELL_KETS:
        raise ValueError(f"unknown Bell state {which!r}")
    return DensityMatrix(proj(BELL_KETS[key]))


def isotropic(v: float) -> DensityMatrix:
    if not 0 <= v <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    return DensityMatrix(v * proj(BELL_KETS["phi+"]) + (1 - v) / 4 * np.eye(4))


def partial_ket(theta: float) -> np.ndarray:
    return np.array([np.cos(theta), 0, 0, np.sin(theta)], dtype=complex)


def partial_iso(v: float, theta: float) -> DensityMatrix:
    """Noisy partially entangled state v|phi_theta><phi_theta| + (1-v) I/4."""
    if not 0 <= v <= 1:
        raise ValueError("visibility must lie in [0, 1]")
    if not 0 < theta <= np.pi / 4 + 1e-15:
        raise ValueError("theta must lie in (0, pi/4]")
    return DensityMatrix(v * proj(partial_ket(theta)) + (1 - v) / 4 * np.eye(4))


def negativity(rho) -> float:
    vals = herm_eig(partial_transpose(_mat(rho), 2)).values
    return float(-vals[vals < 0].sum())


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity in the squared convention, (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2."""
    r = psd_sqrt(_mat(rho))
    inner = r @ _mat(sigma) @ r
    inner = (inner + dag(inner)) / 2
    vals = np.clip(herm_eig(inner).values, 0, None)
    return float(np.clip(np.sqrt(vals).sum() ** 2, 0.0, 1.0))


def mixture(states: Sequence, weights: Sequence[float]) -> DensityMatrix:
    return DensityMatrix(sum(w * _mat(s) for w, s in zip(weights, states)))
