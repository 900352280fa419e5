"""Alternating maximisation over qubit strategies without entanglement.

Bob and Charlie each prepare one of four qubit states; Alice measures the
product with a POVM chosen by ``z``. Each step maximises the (linear) task
score over one block of variables with the others held fixed, so the
objective never decreases. The result is a lower bound on the best qubit
value.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .classical import relay_strategy
from .protocol import Behavior, Scores, n_outcomes, score, score_weights, task_name
from .qmath import haar_unitary

MAX_SWEEPS = 500
GAIN_TOL = 1e-10
MONO_TOL = 1e-12


@dataclass
class QubitStrategy:
    task: str
    beta: np.ndarray  # [x, 2, 2] Bob's states
    gamma: np.ndarray  # [y, 2, 2] Charlie's states
    meas: np.ndarray  # [z, a, 4, 4] Alice's POVM elements

    def __post_init__(self):
        self.task = task_name(self.task)
        k = n_outcomes(self.task)
        if self.beta.shape != (4, 2, 2) or self.gamma.shape != (4, 2, 2):
            raise ValueError("need four 2x2 states per sender")
        if self.meas.shape != (2, k, 4, 4):
            raise ValueError(f"need two {k}-outcome POVMs on the joint space")
        for s in np.concatenate([self.beta, self.gamma]):
            if abs(np.trace(s).real - 1) > 1e-9 or np.linalg.eigvalsh(s)[0] < -1e-9:
                raise ValueError("invalid qubit state")
        for z in range(2):
            if np.max(np.abs(self.meas[z].sum(axis=0) - np.eye(4))) > 1e-9:
                raise ValueError("POVM elements do not sum to the identity")
            if min(np.linalg.eigvalsh(m)[0] for m in self.meas[z]) < -1e-9:
                raise ValueError("POVM element is not positive")

    def probabilities(self) -> np.ndarray:
        return _probs(self.beta, self.gamma, self.meas)

    def behavior(self) -> Behavior:
        return Behavior(self.task, np.clip(self.probabilities(), 0.0, None))

    def scores(self) -> Scores:
        return score(self.behavior())

    def to_json(self) -> dict:
        def c(a):
            return {"re": a.real.tolist(), "im": a.imag.tolist()}

        return {"task": self.task, "beta": c(self.beta), "gamma": c(self.gamma), "meas": c(self.meas)}


def _probs(beta, gamma, meas) -> np.ndarray:
    joint = np.einsum("xij,ykl->xyikjl", beta, gamma).reshape(4, 4, 4, 4)
    return np.einsum("xyij,zaji->zxya", joint, meas).real


def objective(strategy: QubitStrategy, w: np.ndarray | None = None) -> float:
    w = score_weights(strategy.task) if w is None else w
    return float(np.sum(w * strategy.probabilities()))


def _top_projectors(ops: np.ndarray) -> np.ndarray:
    _, vecs = np.linalg.eigh((ops + np.conj(np.swapaxes(ops, -1, -2))) / 2)
    v = vecs[..., -1]
    return np.einsum("ni,nj->nij", v, v.conj())


def update_states(s: QubitStrategy, w: np.ndarray | None = None) -> QubitStrategy:
    """Replace every state by the top eigenvector of its effective operator.

    Bob's states are updated first, then Charlie's against the new ones.
    """
    w = score_weights(s.task) if w is None else w
    k = n_outcomes(s.task)
    mt = s.meas.reshape(2, k, 2, 2, 2, 2)  # [z, a, i, j, k, l] for rows (i j), cols (k l)
    # A_x = sum w * Tr_2[(I x gamma_y) M_{a|z}]
    a_ops = np.einsum("zxya,yjm,zaimkj->xik", w, s.gamma, mt)
    beta = _top_projectors(a_ops)
    b_ops = np.einsum("zxya,xim,zamjil->yjl", w, beta, mt)
    gamma = _top_projectors(b_ops)
    return QubitStrategy(s.task, beta, gamma, s.meas)


def _effective(s: QubitStrategy, w: np.ndarray) -> np.ndarray:
    """Q[z, a] = sum_{x,y} w(z,x,y,a) beta_x (x) gamma_y."""
    return np.einsum("zxya,xij,ykl->zaikjl", w, s.beta, s.gamma).reshape(2, -1, 4, 4)


def _herm(m):
    return (m + m.conj().T) / 2


def _nonneg_projector(h: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh(_herm(h))
    v = vecs[:, vals >= 0]
    return v @ v.conj().T


def helstrom(q0: np.ndarray, q1: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Optimal two-outcome POVM maximising Tr[M0 q0] + Tr[M1 q1]."""
    m0 = _nonneg_projector(q0 - q1)
    return m0, np.eye(q0.shape[0]) - m0


def _value(povm, q) -> float:
    return float(sum(np.trace(m @ qa).real for m, qa in zip(povm, q)))


def _resplit(povm, q, a: int, b: int):
    """Best split of M_a + M_b between outcomes a and b, all else fixed."""
    tot = _herm(povm[a] + povm[b])
    vals, vecs = np.linalg.eigh(tot)
    root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.conj().T
    n = _nonneg_projector(root @ (q[a] - q[b]) @ root)
    new = list(povm)
    new[a] = _herm(root @ n @ root)
    new[b] = _herm(tot - new[a])
    return new


def _eigen_candidates(q):
    k = len(q)
    hs = list(q) + [q[a] - q[b] for a in range(k) for b in range(a + 1, k)]
    out = []
    for h in hs:
        _, vecs = np.linalg.eigh(_herm(h))
        povm = [np.zeros((4, 4), dtype=complex) for _ in range(k)]
        for j in range(4):
            v = vecs[:, j]
            best = int(np.argmax([np.vdot(v, qa @ v).real for qa in q]))
            povm[best] = povm[best] + np.outer(v, v.conj())
        out.append(povm)
    return out


def _three_outcome(povm, q, passes: int = 3):
    cur = list(povm)
    cur_val = _value(cur, q)
    for cand in _eigen_candidates(q):
        val = _value(cand, q)
        if val > cur_val:
            cur, cur_val = cand, val
    for _ in range(passes):
        for a, b in ((0, 1), (0, 2), (1, 2)):
            new = _resplit(cur, q, a, b)
            val = _value(new, q)
            if val >= cur_val:
                cur, cur_val = new, val
    return cur


def update_measurements(s: QubitStrategy, w: np.ndarray | None = None) -> QubitStrategy:
    """Improve Alice's POVMs with the states fixed.

    Two outcomes use the Helstrom rule (exact). Three outcomes take the best
    eigen-assignment candidate when it helps, then pairwise optimal re-splits;
    every step is accepted only if it does not lower the objective.
    """
    w = score_weights(s.task) if w is None else w
    q = _effective(s, w)
    meas = np.array(s.meas)
    for z in range(2):
        if q.shape[1] == 2:
            meas[z] = np.array(helstrom(q[z, 0], q[z, 1]))
        else:
            meas[z] = np.array(_three_outcome(list(meas[z]), q[z]))
    return QubitStrategy(s.task, s.beta, s.gamma, meas)


# --------------------------------------------------------------------------
# initialisation and driver


def classical_embedding(task: str) -> QubitStrategy:
    """Basis states and diagonal POVMs of the optimal classical strategy."""
    cs = relay_strategy(task)
    k = n_outcomes(cs.task)
    basis = np.eye(2, dtype=complex)
    beta = np.array([np.outer(basis[b], basis[b]) for b in cs.f])
    gamma = np.array([np.outer(basis[b], basis[b]) for b in cs.g])
    meas = np.zeros((2, k, 4, 4), dtype=complex)
    for z in range(2):
        for mb in range(2):
            for mc in range(2):
                meas[z, cs.decode(mb, mc, z), 2 * mb + mc, 2 * mb + mc] = 1
    return QubitStrategy(cs.task, beta, gamma, meas)


def random_strategy(task: str, rng: np.random.Generator) -> QubitStrategy:
    """Haar-random pure states and randomly rotated projective POVMs."""
    task = task_name(task)
    k = n_outcomes(task)

    def pure():
        v = haar_unitary(2, rng)[:, 0]
        return np.outer(v, v.conj())

    beta = np.array([pure() for _ in range(4)])
    gamma = np.array([pure() for _ in range(4)])
    meas = np.zeros((2, k, 4, 4), dtype=complex)
    for z in range(2):
        u = haar_unitary(4, rng)
        labels = rng.integers(0, k, size=4)
        for j in range(4):
            meas[z, labels[j]] += np.outer(u[:, j], u[:, j].conj())
    return QubitStrategy(task, beta, gamma, meas)


@dataclass
class RestartTrace:
    final: float
    sweeps: int
    history: list = field(repr=False)

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.history) >= -MONO_TOL))


def run_restart(start: QubitStrategy, max_sweeps: int = MAX_SWEEPS, tol: float = GAIN_TOL):
    """Alternate state and measurement updates until the gain drops below ``tol``."""
    w = score_weights(start.task)
    s = start
    hist = [objective(s, w)]
    for _ in range(max_sweeps):
        s = update_measurements(s, w)
        s = update_states(s, w)
        val = objective(s, w)
        if val < hist[-1] - MONO_TOL:
            raise AssertionError(f"seesaw objective decreased: {hist[-1]!r} -> {val!r}")
        hist.append(val)
        if val - hist[-2] < tol:
            break
    return s, RestartTrace(hist[-1], len(hist) - 1, hist)


@dataclass
class SeesawResult:
    task: str
    best: float
    strategy: QubitStrategy
    traces: list

    def to_json(self, include_strategy: bool = True) -> dict:
        d = {
            "task": self.task,
            "best": self.best,
            "best_scores": self.strategy.scores().as_dict(),
            "per_restart": [t.final for t in self.traces],
            "sweeps": [t.sweeps for t in self.traces],
            "monotone": all(t.monotone for t in self.traces),
        }
        if include_strategy:
            d["strategy"] = self.strategy.to_json()
        return d


def seesaw(task: str, restarts: int = 100, seed: int = 0, threads: int | None = None) -> SeesawResult:
    """Best objective over ``restarts`` runs; restart 0 starts from the classical optimum."""
    task = task_name(task)
    if restarts < 1:
        raise ValueError("restarts must be at least 1")
    children = np.random.SeedSequence(seed).spawn(restarts)

    def one(i):
        start = classical_embedding(task) if i == 0 else random_strategy(task, np.random.default_rng(children[i]))
        return run_restart(start)

    if threads is None:
        threads = max(1, int(os.environ.get("SECRETSHARE_THREADS", "1")))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(one, range(restarts)))
    else:
        runs = [one(i) for i in range(restarts)]
    best_i = int(np.argmax([t.final for _, t in runs]))
    return SeesawResult(task, runs[best_i][1].final, runs[best_i][0], [t for _, t in runs])
