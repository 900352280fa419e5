"""Exhaustive enumeration of one-bit classical strategies.

A strategy is a pair of encoders ``f``, ``g`` mapping the four inputs of Bob
and Charlie to one bit, plus Alice's decoding table ``h(m_B, m_C, z)``.
Strategies are indexed by integers: ``f(x) = (f_id >> x) & 1`` and the decoding
table is read in base ``K`` (2 or 3 outcomes) with cell
``c = 4 * m_B + 2 * m_C + z`` as digit ``c``. All scores are kept as integer
counts (out of 32 rounds, or 16 secret and 16 control rounds) so bounds are
checked exactly.
"""

from __future__ import annotations

import csv
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import kernels
from .protocol import DET, STOCH, Behavior, bits, n_outcomes, secret_rounds, target_table, task_name

N_CELLS = 8


def _cell(mb: int, mc: int, z: int) -> int:
    return 4 * mb + 2 * mc + z


@dataclass(frozen=True)
class ClassicalStrategy:
    task: str
    f: tuple  # Bob's bit for x = 0..3
    g: tuple  # Charlie's bit for y = 0..3
    h: tuple  # Alice's outcome per cell 4*mB + 2*mC + z

    def __post_init__(self):
        object.__setattr__(self, "task", task_name(self.task))
        k = n_outcomes(self.task)
        if len(self.f) != 4 or len(self.g) != 4 or len(self.h) != N_CELLS:
            raise ValueError("strategy tables must cover every input")
        if any(b not in (0, 1) for b in self.f + self.g):
            raise ValueError("messages must be single bits")
        if any(a not in range(k) for a in self.h):
            raise ValueError(f"decoding outputs must lie in range({k})")

    @classmethod
    def from_ids(cls, task: str, f_id: int, g_id: int, h_id: int) -> "ClassicalStrategy":
        k = n_outcomes(task)
        if not (0 <= f_id < 16 and 0 <= g_id < 16 and 0 <= h_id < k**N_CELLS):
            raise ValueError("strategy index out of range")
        f = tuple((f_id >> x) & 1 for x in range(4))
        g = tuple((g_id >> y) & 1 for y in range(4))
        h = tuple((h_id // k**c) % k for c in range(N_CELLS))
        return cls(task, f, g, h)

    @property
    def ids(self) -> tuple[int, int, int]:
        k = n_outcomes(self.task)
        f_id = sum(b << x for x, b in enumerate(self.f))
        g_id = sum(b << y for y, b in enumerate(self.g))
        h_id = sum(a * k**c for c, a in enumerate(self.h))
        return f_id, g_id, h_id

    def decode(self, mb: int, mc: int, z: int) -> int:
        return self.h[_cell(mb, mc, z)]


def strategy_to_behavior(s: ClassicalStrategy) -> Behavior:
    """Deterministic 0/1 behavior table of a classical strategy."""
    p = np.zeros((2, 4, 4, n_outcomes(s.task)))
    for z in range(2):
        for x in range(4):
            for y in range(4):
                p[z, x, y, s.decode(s.f[x], s.g[y], z)] = 1.0
    return Behavior(s.task, p)


def relay_strategy(task: str) -> ClassicalStrategy:
    """Relay the first bits; decode their parity (z=1) or abstain on even parity (z=0).

    In the deterministic task the z=1 rounds are answered with a fixed 0.
    """
    task = task_name(task)
    f = tuple(bits(x)[0] for x in range(4))
    h = [0] * N_CELLS
    for mb in range(2):
        for mc in range(2):
            par = mb ^ mc
            if task == DET:
                h[_cell(mb, mc, 0)] = par
                h[_cell(mb, mc, 1)] = 0
            else:
                h[_cell(mb, mc, 1)] = par
                h[_cell(mb, mc, 0)] = 2 if par == 0 else 0
    return ClassicalStrategy(task, f, f, tuple(h))


# --------------------------------------------------------------------------
# enumeration


def _contributions(task: str) -> np.ndarray:
    """contrib[fg, cell, choice, d]: rounds won when a cell is decoded to ``choice``.

    ``d`` is a single column (deterministic) or (secret, control) counts.
    """
    k = n_outcomes(task)
    t = target_table(task)
    sec = secret_rounds()
    d = 1 if task == DET else 2
    contrib = np.zeros((256, N_CELLS, k, d), dtype=np.intc)
    for f_id in range(16):
        for g_id in range(16):
            fg = 16 * f_id + g_id
            for z in range(2):
                for x in range(4):
                    for y in range(4):
                        c = _cell((f_id >> x) & 1, (g_id >> y) & 1, z)
                        col = 0 if task == DET or sec[z, x, y] else 1
                        contrib[fg, c, t[z, x, y], col] += 1
    return contrib


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("SECRETSHARE_THREADS", "1")))
    except ValueError:
        return 1


def enumerate_counts(task: str, threads: int | None = None) -> np.ndarray:
    """Integer score counts for every strategy, shape (16, 16, K**8, D)."""
    task = task_name(task)
    contrib = _contributions(task)
    threads = _threads() if threads is None else threads
    if threads == 1:
        out = kernels.enumerate_counts(contrib)
    else:
        blocks = np.array_split(np.arange(256), threads)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: kernels.enumerate_counts(contrib[b[0] : b[-1] + 1]), blocks))
        out = np.concatenate(parts, axis=0)
    return out.reshape(16, 16, out.shape[1], out.shape[2])


@dataclass
class EnumerationResult:
    task: str
    max_count: int
    denominator: int
    argmax: list  # (f_id, g_id, h_id) triples achieving the max
    n_strategies: int

    @property
    def max_value(self) -> Fraction:
        return Fraction(self.max_count, self.denominator)

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "max": float(self.max_value),
            "max_exact": str(self.max_value),
            "n_strategies": self.n_strategies,
            "n_argmax": len(self.argmax),
            "argmax_first": list(self.argmax[0]),
        }


def enumerate_deterministic(task: str, counts: np.ndarray | None = None) -> EnumerationResult:
    """Exact maximum of the task score over all deterministic classical strategies.

    Shared randomness cannot beat this maximum because the score is linear in
    the behavior.
    """
    task = task_name(task)
    counts = enumerate_counts(task) if counts is None else counts
    total = counts.sum(axis=-1)  # out of 32 in both tasks
    best = int(total.max())
    idx = np.argwhere(total == best)
    return EnumerationResult(task, best, 32, [tuple(int(i) for i in row) for row in idx], int(total.size))


def oracle_points(task: str, seed: int = 0) -> dict:
    """Independent pass over decoding tables in shuffled order.

    Scores every (f, g) pair directly from the round definitions, without the
    per-cell decomposition used by the kernel. Returns ``max_count`` (out of
    32) and the set of achievable integer score tuples.
    """
    task = task_name(task)
    k = n_outcomes(task)
    t = target_table(task)
    sec = secret_rounds()
    fx = (np.arange(16)[:, None] >> np.arange(4)[None, :]) & 1  # [f, x]
    order = np.random.default_rng(seed).permutation(k**N_CELLS)
    best = -1
    points = set()
    mb = fx[:, None, None, :, None]
    mc = fx[None, :, None, None, :]
    zz = np.arange(2)[None, None, :, None, None]
    for h_id in order:
        h = (int(h_id) // k ** np.arange(N_CELLS)) % k
        a = h[4 * mb + 2 * mc + zz]  # [f, g, z, x, y]
        hit = a == t[None, None]
        if task == DET:
            cnt = hit.sum(axis=(2, 3, 4))
            best = max(best, int(cnt.max()))
            points.update((int(c),) for c in np.unique(cnt))
        else:
            cs = (hit & sec).sum(axis=(2, 3, 4))
            cc = (hit & ~sec).sum(axis=(2, 3, 4))
            best = max(best, int((cs + cc).max()))
            points.update(zip(cs.ravel().tolist(), cc.ravel().tolist()))
    return {"max_count": best, "points": points}


# --------------------------------------------------------------------------
# stochastic trade-off frontier


@dataclass(frozen=True)
class FrontierPoint:
    scrt_count: int  # out of 16
    ctrl_count: int  # out of 16
    f_id: int
    g_id: int
    h_id: int

    @property
    def R_scrt(self) -> Fraction:
        return Fraction(self.scrt_count, 16)

    @property
    def R_ctrl(self) -> Fraction:
        return Fraction(self.ctrl_count, 16)

    @property
    def R(self) -> Fraction:
        return (self.R_scrt + self.R_ctrl) / 2


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def upper_right_hull(points) -> list:
    """Pareto-optimal points on the upper-right convex hull, edge points included.

    Points are integer pairs; the result is sorted by the first coordinate.
    """
    pts = sorted(set(points))
    pareto = []
    for p in sorted(pts, key=lambda q: (-q[0], -q[1])):
        if not pareto or p[1] > pareto[-1][1]:
            pareto.append(p)
    pareto.reverse()  # increasing first coordinate, decreasing second
    hull: list = []
    for p in pareto:
        # drop the middle point only when it lies strictly inside
        while len(hull) >= 2 and _cross(hull[-2], hull[-1], p) > 0:
            hull.pop()
        hull.append(p)
    return hull


def frontier(task: str = STOCH, counts: np.ndarray | None = None) -> list[FrontierPoint]:
    """(R_scrt, R_ctrl) frontier of deterministic classical strategies.

    Mixing strategies with shared randomness fills in the segments between
    consecutive points.
    """
    if task_name(task) != STOCH:
        raise ValueError("the trade-off frontier is defined for the stochastic task")
    counts = enumerate_counts(STOCH) if counts is None else counts
    flat = counts.reshape(-1, 2)
    key = flat[:, 0].astype(np.int64) * 17 + flat[:, 1]
    uniq, first = np.unique(key, return_index=True)
    rep = {(int(u) // 17, int(u) % 17): int(i) for u, i in zip(uniq, first)}
    out = []
    nh = counts.shape[2]
    for cs, cc in upper_right_hull(rep):
        i = rep[(cs, cc)]
        f_id, rest = divmod(i, 16 * nh)
        g_id, h_id = divmod(rest, nh)
        out.append(FrontierPoint(cs, cc, f_id, g_id, h_id))
    return out


def frontier_csv(points: list[FrontierPoint]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["Rscrt", "Rctrl", "f_id", "g_id", "h_id"])
    for p in points:
        w.writerow([repr(float(p.R_scrt)), repr(float(p.R_ctrl)), p.f_id, p.g_id, p.h_id])
    return buf.getvalue()
