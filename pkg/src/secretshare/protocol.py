"""Exact evaluation of the deterministic and stochastic secret-sharing tasks.

Input conventions used throughout the package:

* Bob's input ``x = (x0, x1)`` and Charlie's ``y = (y0, y1)`` are indexed as
  ``2 * x0 + x1`` (so index 2 means ``x0 = 1, x1 = 0``).
* Behaviors are stored as arrays ``p[z, x, y, a]``.
* In the stochastic task the outcome alphabet is ``(0, 1, BOT)`` with the
  abstention outcome at index 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .qmath import SX, SZ, as_cmat, dag, proj
from .states import BELL_KETS, DensityMatrix, Povm, isotropic, partial_iso, _mat

DET = "deterministic"
STOCH = "stochastic"
BOT = 2
TASKS = (DET, STOCH)
FAMILIES = ("isotropic", "partial", "pure")
THETA_STAR = 0.2356

_TASK_ALIASES = {"det": DET, "deterministic": DET, "stoch": STOCH, "stochastic": STOCH}


def task_name(task: str) -> str:
    try:
        return _TASK_ALIASES[task.lower()]
    except KeyError:
        raise ValueError(f"unknown task {task!r}") from None


def n_outcomes(task: str) -> int:
    return 2 if task_name(task) == DET else 3


def bits(i: int) -> tuple[int, int]:
    return i >> 1, i & 1


# --------------------------------------------------------------------------
# encodings and measurements


@dataclass(frozen=True)
class Encoding:
    """Local channel per input, each given by a list of 2x2 Kraus operators."""

    kraus: tuple

    def __post_init__(self):
        chans = []
        for ops in self.kraus:
            ops = tuple(as_cmat(k, 2) for k in ops)
            if np.max(np.abs(sum(dag(k) @ k for k in ops) - np.eye(2))) > 1e-9:
                raise ValueError("Kraus operators are not trace preserving")
            chans.append(ops)
        if len(chans) != 4:
            raise ValueError("an encoding needs one channel for each of the 4 inputs")
        object.__setattr__(self, "kraus", tuple(chans))

    @classmethod
    def unitary(cls, unitaries: Sequence[np.ndarray]) -> "Encoding":
        return cls(tuple((u,) for u in unitaries))


def pauli_encoding_unitary(i: int) -> np.ndarray:
    """sigma_X^{b0} sigma_Z^{b1} for input index ``i``."""
    b0, b1 = bits(i)
    return np.linalg.matrix_power(SX, b0) @ np.linalg.matrix_power(SZ, b1)


def canonical_encodings() -> tuple[Encoding, Encoding]:
    enc = Encoding.unitary([pauli_encoding_unitary(i) for i in range(4)])
    return enc, enc


def _bell(name: str) -> np.ndarray:
    return proj(BELL_KETS[name])


def product_measurements() -> tuple[Povm, Povm]:
    """Parity of sigma_Z x sigma_Z (z=0) and of sigma_X x sigma_X (z=1); outcome 0 = even."""
    m0 = Povm((_bell("phi+") + _bell("phi-"), _bell("psi+") + _bell("psi-")), (0, 1))
    m1 = Povm((_bell("phi+") + _bell("psi+"), _bell("phi-") + _bell("psi-")), (0, 1))
    return m0, m1


def partial_bell_measurements() -> tuple[Povm, Povm]:
    """Three-outcome partial Bell analysers, elements ordered as outcomes (0, 1, BOT).

    z=0 resolves psi+ (a=0) and psi- (a=1) and lumps phi+/phi-; z=1 resolves
    phi- (a=0) and psi- (a=1) and lumps phi+/psi+. The a-labels are the unique
    assignment for which the ideal protocol succeeds with certainty.
    """
    m0 = Povm((_bell("psi+"), _bell("psi-"), _bell("phi+") + _bell("phi-")), (0, 1, BOT))
    m1 = Povm((_bell("phi-"), _bell("psi-"), _bell("phi+") + _bell("psi+")), (0, 1, BOT))
    return m0, m1


def canonical_measurements(task: str) -> tuple[Povm, Povm]:
    return product_measurements() if task_name(task) == DET else partial_bell_measurements()


# --------------------------------------------------------------------------
# behaviors and scores


@dataclass
class Behavior:
    task: str
    p: np.ndarray  # shape (2, 4, 4, n_outcomes), indexed [z, x, y, a]

    def __post_init__(self):
        self.task = task_name(self.task)
        self.p = np.asarray(self.p, dtype=float)
        if self.p.shape != (2, 4, 4, n_outcomes(self.task)):
            raise ValueError(f"behavior table has shape {self.p.shape}")
        if self.p.min() < -1e-12:
            raise ValueError("behavior has negative probabilities")
        if np.max(np.abs(self.p.sum(axis=-1) - 1)) > 1e-9:
            raise ValueError("behavior rows are not normalised")

    def to_json(self) -> dict:
        return {"task": self.task, "p": self.p.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "Behavior":
        return cls(obj["task"], np.asarray(obj["p"], dtype=float))


@dataclass
class Scores:
    task: str
    S: float | None = None
    R_scrt: float | None = None
    R_ctrl: float | None = None
    by_z: dict = field(default_factory=dict)

    @property
    def R(self) -> float | None:
        if self.R_scrt is None:
            return None
        return (self.R_scrt + self.R_ctrl) / 2

    @property
    def value(self) -> float:
        """The task's headline score (S or R)."""
        return self.S if self.task == DET else self.R

    def as_dict(self) -> dict:
        if self.task == DET:
            d = {"S": self.S}
        else:
            d = {"Rscrt": self.R_scrt, "Rctrl": self.R_ctrl, "R": self.R}
        if self.by_z:
            d["by_z"] = self.by_z
        return d


def target_table(task: str) -> np.ndarray:
    """Integer target per round: the correct outcome index of (z, x, y)."""
    task = task_name(task)
    t = np.zeros((2, 4, 4), dtype=np.int64)
    for z in range(2):
        for x in range(4):
            for y in range(4):
                xb, yb = bits(x), bits(y)
                key = xb[z] ^ yb[z]
                if task == DET:
                    t[z, x, y] = key
                else:
                    t[z, x, y] = xb[1 - z] ^ yb[1 - z] if key else BOT
    return t


def secret_rounds() -> np.ndarray:
    """Boolean mask [z, x, y] of rounds that carry a secret (x_z xor y_z = 1)."""
    m = np.zeros((2, 4, 4), dtype=bool)
    for z in range(2):
        for x in range(4):
            for y in range(4):
                m[z, x, y] = bits(x)[z] ^ bits(y)[z]
    return m


def score_weights(task: str) -> np.ndarray:
    """Weights w[z, x, y, a] such that the headline score is sum(w * p)."""
    task = task_name(task)
    w = np.zeros((2, 4, 4, n_outcomes(task)))
    t = target_table(task)
    for idx in np.ndindex(2, 4, 4):
        w[idx + (t[idx],)] = 1 / 32
    return w


def score(b: Behavior) -> Scores:
    t = target_table(b.task)
    hit = np.take_along_axis(b.p, t[..., None], axis=-1)[..., 0]  # [z, x, y]
    if b.task == DET:
        by_z = {f"S_z{z}": float(hit[z].sum() / 32) for z in range(2)}
        return Scores(DET, S=float(hit.sum() / 32), by_z=by_z)
    sec = secret_rounds()
    by_z = {}
    for z in range(2):
        by_z[f"Rctrl_z{z}"] = float(hit[z][~sec[z]].sum() / 8)
        by_z[f"Rscrt_z{z}"] = float(hit[z][sec[z]].sum() / 8)
    return Scores(
        STOCH,
        R_scrt=float(hit[sec].sum() / 16),
        R_ctrl=float(hit[~sec].sum() / 16),
        by_z=by_z,
    )


def _apply_channel(kraus_b, kraus_c, rho: np.ndarray) -> np.ndarray:
    out = np.zeros((4, 4), dtype=complex)
    for kb in kraus_b:
        for kc in kraus_c:
            k = np.kron(kb, kc)
            out += k @ rho @ dag(k)
    return out


def evaluate(rho, enc_b: Encoding, enc_c: Encoding, meas: Sequence[Povm], task: str) -> Behavior:
    """Outcome table Tr[(Lambda_x (x) Lambda_y)(rho) M_{a|z}] for every round."""
    task = task_name(task)
    m = _mat(rho)
    k = n_outcomes(task)
    if len(meas) != 2 or any(len(povm) != k for povm in meas):
        raise ValueError(f"{task} task needs two {k}-outcome measurements")
    elements = np.array([[povm.elements[a] for a in range(k)] for povm in meas])  # [z, a, 4, 4]
    p = np.zeros((2, 4, 4, k))
    for x in range(4):
        for y in range(4):
            sigma = _apply_channel(enc_b.kraus[x], enc_c.kraus[y], m)
            # Tr[sigma M] = sum_ij sigma_ij M_ji
            p[:, x, y, :] = np.einsum("ij,zaji->za", sigma, elements).real
    return Behavior(task, np.clip(p, 0.0, None) if p.min() > -1e-12 else p)


def permute_inputs(b: Behavior, kind: str) -> Behavior:
    """Relabel the inputs by one of the score-preserving symmetries.

    ``flip0``: flip x0 and y0; ``flip1``: flip x1 and y1; ``swap``: swap the
    two bits of x and of y together with z.
    """
    perm = np.arange(4)
    if kind == "flip0":
        perm = perm ^ 2
    elif kind == "flip1":
        perm = perm ^ 1
    elif kind == "swap":
        perm = np.array([0, 2, 1, 3])
    else:
        raise ValueError(f"unknown symmetry {kind!r}")
    p = b.p[:, perm][:, :, perm]
    if kind == "swap":
        p = p[::-1]
    return Behavior(b.task, p)


# --------------------------------------------------------------------------
# families, closed forms and thresholds


def family_state(family: str, v: float = 1.0, theta: float | None = None) -> DensityMatrix:
    if family == "isotropic":
        return isotropic(v)
    if family == "partial":
        return partial_iso(v, THETA_STAR if theta is None else theta)
    if family == "pure":
        return partial_iso(1.0, THETA_STAR if theta is None else theta)
    raise ValueError(f"unknown family {family!r}")


def evaluate_family(family: str, task: str, v: float = 1.0, theta: float | None = None) -> Scores:
    enc_b, enc_c = canonical_encodings()
    rho = family_state(family, v, theta)
    return score(evaluate(rho, enc_b, enc_c, canonical_measurements(task), task))


def closed_form(family: str, task: str, v: float = 1.0, theta: float | None = None) -> Scores:
    """Analytic scores of the canonical protocol on the named state family."""
    task = task_name(task)
    if family == "isotropic":
        s2 = 1.0
    elif family in ("partial", "pure"):
        s2 = math.sin(2 * (THETA_STAR if theta is None else theta))
        if family == "pure":
            v = 1.0
    else:
        raise ValueError(f"unknown family {family!r}")
    if task == DET:
        return Scores(DET, S=(2 + v * (1 + s2)) / 4)
    r_scrt = v * (1 + s2) / 2 + (1 - v) / 4
    r_ctrl = (2 + v + v * s2) / 4
    return Scores(STOCH, R_scrt=r_scrt, R_ctrl=r_ctrl)


CLASSICAL_BOUND = {DET: 0.75, STOCH: 0.625}


def threshold(
    family: str,
    task: str,
    target: float | None = None,
    theta: float | None = None,
    tol: float = 1e-6,
    score_fn: Callable[[float], float] | None = None,
) -> float:
    """Smallest visibility at which the canonical protocol beats ``target``.

    The score is checked to be non-decreasing on a grid before bisecting.
    """
    task = task_name(task)
    target = CLASSICAL_BOUND[task] if target is None else target
    if score_fn is None:
        def score_fn(v):
            return evaluate_family(family, task, v, theta).value

    grid = np.linspace(0, 1, 21)
    vals = np.array([score_fn(v) for v in grid])
    if np.any(np.diff(vals) < -1e-12):
        raise ValueError("score is not monotone in the visibility")
    if vals[0] >= target or vals[-1] <= target:
        raise ValueError("score does not cross the target inside [0, 1]")
    lo, hi = 0.0, 1.0
    while hi - lo > tol / 4:
        mid = (lo + hi) / 2
        if score_fn(mid) > target:
            hi = mid
        else:
            lo = mid
    return (lo + hi) / 2


def sweep(family: str, task: str, vs: Sequence[float], theta: float | None = None) -> list[dict]:
    rows = []
    for v in vs:
        sc = evaluate_family(family, task, float(v), theta)
        th = (THETA_STAR if theta is None else theta) if family != "isotropic" else None
        row = {"family": family, "v": float(v), "theta": th}
        row.update({k: val for k, val in sc.as_dict().items() if k != "by_z"})
        rows.append(row)
    return rows
