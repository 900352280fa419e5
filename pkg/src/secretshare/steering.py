"""One-sided steering certificates from polyhedral linear programs.

The measuring party performs projective qubit measurements along a finite set
of axes; the other party's conditional states must be reproduced by a local
hidden state (LHS) ensemble with deterministic responses.

* Unsteerability: measurement axes are the vertices of a polytope with
  inradius ``r``. Any projective measurement depolarised by ``r`` is a convex
  mixture of vertex measurements, so an LHS model of the shrunk state
  ``(D_{1/r} x id) rho`` on the vertex axes, with hidden states inside the
  Bloch ball (an inscribed polytope), is an LHS model of ``rho`` for every
  projective measurement.
* Steerability: with hidden states allowed anywhere in a circumscribed
  polytope the LP is a relaxation, so infeasibility proves steering. We solve
  the dual problem and check the resulting linear witness directly.

Directions: ``"B->C"`` means Bob (qubit 1) measures and Charlie's states are
explained; ``"C->B"`` the reverse.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import csc_matrix
from scipy.sparse import kron as skron
from scipy.spatial import ConvexHull

from .qmath import I2, PAULIS, partial_trace
from .states import DensityMatrix, _mat

DIRECTIONS = ("B->C", "C->B")
MAX_ALL_RESPONSES = 13  # axes above this use the cell-restricted response set
DEFAULT_LEVEL = 2
STATE_FREQ = 3  # hidden-state polytope: frequency-3 subdivided icosahedron
RESIDUAL_TOL = 1e-8
WITNESS_TOL = 1e-9

UNSTEERABLE = "CertifiedUnsteerable"
STEERABLE = "CertifiedSteerable"
UNDECIDED = "Undecided"


class SolverError(RuntimeError):
    """The LP solver returned neither a solution nor an infeasibility proof."""


# --------------------------------------------------------------------------
# polytopes


def _unique_rows(pts: np.ndarray, decimals: int = 9) -> np.ndarray:
    key = np.round(pts, decimals) + 0.0  # drop negative zeros
    _, idx = np.unique(key, axis=0, return_index=True)
    return pts[np.sort(idx)]


def icosahedron() -> np.ndarray:
    g = (1 + 5**0.5) / 2
    pts = []
    for a in (-1, 1):
        for b in (-g, g):
            pts += [(0, a, b), (a, b, 0), (b, 0, a)]
    p = np.array(pts, dtype=float)
    return p / np.linalg.norm(p, axis=1)[:, None]


@lru_cache(maxsize=None)
def _subdivided(freq: int) -> np.ndarray:
    v = icosahedron()
    faces = ConvexHull(v).simplices
    pts = []
    for f in faces:
        a, b, c = v[f]
        for i in range(freq + 1):
            for j in range(freq + 1 - i):
                p = (i * a + j * b + (freq - i - j) * c) / freq
                pts.append(p / np.linalg.norm(p))
    return _unique_rows(np.array(pts))


def subdivided_icosahedron(freq: int) -> np.ndarray:
    """Unit vertices of the icosahedron with every face split into ``freq**2`` triangles."""
    if freq < 1:
        raise ValueError("frequency must be at least 1")
    return _subdivided(freq).copy()


@dataclass(frozen=True)
class BlochPolytope:
    """Convex hull of a finite set of Bloch vectors."""

    vertices: np.ndarray
    name: str = ""

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 3 or len(v) < 4:
            raise ValueError("need at least four 3-vectors")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        if self.r_in <= 0:
            raise ValueError("polytope does not contain the origin in its interior")

    @property
    def _hull(self):
        return ConvexHull(self.vertices)

    @property
    def r_in(self) -> float:
        """Distance from the origin to the nearest facet plane."""
        return float(-self._hull.equations[:, 3].max())

    @property
    def r_out(self) -> float:
        return float(np.linalg.norm(self.vertices, axis=1).max())

    @property
    def symmetric(self) -> bool:
        v = self.vertices
        return all(np.min(np.linalg.norm(v + p, axis=1)) < 1e-9 for p in v)

    def axes(self) -> np.ndarray:
        """One representative of each antipodal vertex pair."""
        if not self.symmetric:
            raise ValueError("measurement polytope must be antipodally symmetric")
        out = []
        for p in self.vertices:
            if not any(np.linalg.norm(p + q) < 1e-9 or np.linalg.norm(p - q) < 1e-9 for q in out):
                out.append(p)
        return np.array(out)

    def polar(self) -> "BlochPolytope":
        """Circumscribed polytope {s : w.s <= 1 for every vertex w}."""
        eq = self._hull.equations
        verts = _unique_rows(eq[:, :3] / -eq[:, 3:4])
        return BlochPolytope(verts, f"polar({self.name})")

    def describe(self) -> dict:
        return {"name": self.name, "n_vertices": len(self.vertices), "r_in": self.r_in, "r_out": self.r_out}


def octahedron() -> BlochPolytope:
    return BlochPolytope(np.vstack([np.eye(3), -np.eye(3)]), "octahedron")


def measurement_polytope(level: int) -> BlochPolytope:
    """Level 0: octahedron (3 axes); level L >= 1: frequency-L icosahedron.

    Levels 1, 2, 3 have 6, 21 and 46 axes.
    """
    if level == 0:
        return octahedron()
    if level < 0:
        raise ValueError("level must be non-negative")
    return BlochPolytope(subdivided_icosahedron(level), f"icosahedron-f{level}")


def inner_state_polytope() -> BlochPolytope:
    return BlochPolytope(subdivided_icosahedron(STATE_FREQ), f"icosahedron-f{STATE_FREQ}")


def outer_state_polytope() -> BlochPolytope:
    return inner_state_polytope().polar()


# --------------------------------------------------------------------------
# response functions


def all_responses(n_axes: int) -> np.ndarray:
    """Every deterministic response pattern, shape (2**n, n); 1 means outcome +."""
    if n_axes > MAX_ALL_RESPONSES:
        raise ValueError(f"{n_axes} axes exceed the {MAX_ALL_RESPONSES}-axis limit for full enumeration")
    return np.array(list(itertools.product((0, 1), repeat=n_axes)), dtype=np.int8)


def cell_responses(axes: np.ndarray, seed: int = 0) -> np.ndarray:
    """Sign patterns sign(u . n_k) realised by some direction ``u``.

    These are the cells of the great-circle arrangement of the axes. Every
    cell touches an arrangement vertex ``+-(n_i x n_j)``, so cells are found
    by sampling tiny perturbations around each vertex. Using a subset of the
    responses only shrinks the LHS model class, which keeps unsteerability
    certificates sound.
    """
    axes = np.asarray(axes, dtype=float)
    offs = np.random.default_rng(seed).normal(size=(32, 3)) * 1e-4
    pats = set()
    n = len(axes)
    for i in range(n):
        for j in range(i + 1, n):
            c = np.cross(axes[i], axes[j])
            c /= np.linalg.norm(c)
            for s in (1, -1):
                d = (s * c + offs) @ axes.T
                for row in d[np.min(np.abs(d), axis=1) > 1e-9]:
                    pats.add(tuple((row > 0).astype(np.int8)))
    return np.array(sorted(pats), dtype=np.int8)


def responses_for(axes: np.ndarray) -> tuple[np.ndarray, str]:
    if len(axes) <= MAX_ALL_RESPONSES:
        return all_responses(len(axes)), "all"
    return cell_responses(axes), "cells"


# --------------------------------------------------------------------------
# assemblages and the LP


def _oriented(rho, direction: str) -> np.ndarray:
    m = _mat(rho)
    if direction == "B->C":
        return m
    if direction == "C->B":
        return m.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
    raise ValueError(f"direction must be one of {DIRECTIONS}")


def assemblage(rho, axes: np.ndarray, direction: str = "B->C") -> tuple[np.ndarray, np.ndarray]:
    """Pauli components (Tr, TrX, TrY, TrZ) of the '+' conditional states and the marginal.

    Returns ``(plus[k, 4], marginal[4])`` for the steered party.
    """
    m = _oriented(rho, direction)
    plus = []
    for n in np.asarray(axes, dtype=float):
        e = (I2 + n[0] * PAULIS[1] + n[1] * PAULIS[2] + n[2] * PAULIS[3]) / 2
        s = partial_trace(np.kron(e, I2) @ m, 1)
        plus.append([np.trace(s @ p).real for p in PAULIS])
    marg = partial_trace(m, 1)
    return np.array(plus), np.array([np.trace(marg @ p).real for p in PAULIS])


def _constraint_matrix(responses: np.ndarray, state_vertices: np.ndarray):
    """Columns (lambda, j): hidden state j sent with response lambda.

    Row blocks: the marginal (4 rows), then the '+' state of each axis.
    """
    lam = np.hstack([np.ones((len(responses), 1)), responses]).T  # [1 + N, L]
    vec = np.hstack([np.ones((len(state_vertices), 1)), state_vertices]).T  # [4, M]
    return skron(csc_matrix(lam), csc_matrix(vec)).tocsc()


@dataclass
class LPResult:
    feasible: bool
    status: int
    iterations: int
    residual: float | None = None
    witness_value: float | None = None

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items()}


def lhs_feasible(
    rho,
    meas_dirs,
    state_poly: BlochPolytope,
    direction: str = "B->C",
    responses: np.ndarray | None = None,
) -> LPResult:
    """Does an LHS ensemble over ``state_poly`` reproduce the assemblage?

    ``meas_dirs`` is a symmetric ``BlochPolytope`` or an (N, 3) array of axes.
    Raises ``SolverError`` if the solver fails to decide.
    """
    axes = meas_dirs.axes() if isinstance(meas_dirs, BlochPolytope) else np.asarray(meas_dirs, dtype=float)
    if responses is None:
        responses = all_responses(len(axes))
    a = _constraint_matrix(responses, state_poly.vertices)
    plus, marg = assemblage(rho, axes, direction)
    b = np.concatenate([marg, plus.ravel()])
    res = linprog(np.zeros(a.shape[1]), A_eq=a, b_eq=b, bounds=(0, None), method="highs")
    if res.status == 0:
        resid = float(np.max(np.abs(a @ res.x - b)))
        return LPResult(True, 0, int(res.nit), residual=resid)
    if res.status == 2:
        return LPResult(False, 2, int(res.nit))
    raise SolverError(f"LP solver failed: {res.message}")


def steering_witness(rho, axes: np.ndarray, state_poly: BlochPolytope, direction: str = "B->C") -> LPResult:
    """Search for a linear functional non-negative on every LHS column but negative on the data.

    Solves min b.y subject to A^T y >= 0 and |y_i| <= 1. A verified negative
    value is a steering inequality violated by ``rho`` (for hidden states in
    ``state_poly``); the check is done in plain numpy after solving.
    """
    axes = np.asarray(axes, dtype=float)
    responses = all_responses(len(axes))
    a = _constraint_matrix(responses, state_poly.vertices)
    plus, marg = assemblage(rho, axes, direction)
    b = np.concatenate([marg, plus.ravel()])
    res = linprog(b, A_ub=-a.T, b_ub=np.zeros(a.shape[1]), bounds=(-1, 1), method="highs")
    if res.status != 0:
        raise SolverError(f"witness LP failed: {res.message}")
    y = res.x
    lhs_min = float((a.T @ y).min())
    value = float(b @ y)
    valid = lhs_min >= -1e-12 and value < -WITNESS_TOL
    return LPResult(not valid, res.status, int(res.nit), residual=lhs_min, witness_value=value)


# --------------------------------------------------------------------------
# certification


def depolarize_measuring_side(rho, r: float, direction: str = "B->C") -> np.ndarray:
    """(D_{1/r} x id) rho on the measuring party, with D_{1/r}(X) = (X - (1 - r) Tr[X] I/2) / r.

    The result is returned in the original qubit order.
    """
    m = _oriented(rho, direction)
    marg = partial_trace(m, 1)
    out = (m - (1 - r) * np.kron(I2 / 2, marg)) / r
    return _oriented(out, direction)  # the swap is its own inverse


@dataclass
class SteeringVerdict:
    status: str
    direction: str  # direction that settled the verdict, or "both"
    level: int
    certificate: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"status": self.status, "direction": self.direction, "level": self.level, "certificate": self.certificate}


def _unsteerable_in(rho, direction: str, level: int) -> tuple[bool, dict]:
    meas = measurement_polytope(level)
    r = meas.r_in
    hat = depolarize_measuring_side(rho, r, direction)
    min_eig = float(np.linalg.eigvalsh((hat + hat.conj().T) / 2)[0])
    info = {"shrink": r, "rho_hat_min_eig": min_eig}
    if min_eig < -1e-12:
        info["reason"] = "shrunk state is not positive"
        return False, info
    axes = meas.axes()
    responses, kind = responses_for(axes)
    res = lhs_feasible(hat, axes, inner_state_polytope(), direction, responses)
    info.update(responses=kind, n_responses=len(responses), lp=res.as_dict())
    return bool(res.feasible and res.residual <= RESIDUAL_TOL), info


def certify(
    rho,
    level: int = DEFAULT_LEVEL,
    steer_axes: np.ndarray | None = None,
    directions: tuple = DIRECTIONS,
) -> SteeringVerdict:
    """Certified verdict on the steerability of a two-qubit state.

    Unsteerable requires an LHS certificate in every requested direction
    (both by default) at the given polytope level. Otherwise a witness search
    with the Pauli axes (or ``steer_axes``) and circumscribed hidden states
    may prove steering.
    """
    if not directions or any(d not in DIRECTIONS for d in directions):
        raise ValueError(f"directions must be drawn from {DIRECTIONS}")
    m = _mat(rho)
    meas = measurement_polytope(level)
    state = inner_state_polytope()
    base = {"measurement_polytope": meas.describe(), "inner_state_polytope": state.describe()}
    dirs = {}
    for d in directions:
        ok, info = _unsteerable_in(m, d, level)
        dirs[d] = info
        if not ok:
            break
    else:
        label = "both" if len(directions) == 2 else directions[0]
        return SteeringVerdict(UNSTEERABLE, label, level, {**base, "directions": dirs})
    axes = np.eye(3) if steer_axes is None else np.asarray(steer_axes, dtype=float)
    outer = outer_state_polytope()
    wit = {}
    for d in directions:
        res = steering_witness(m, axes, outer, d)
        wit[d] = res.as_dict()
        if not res.feasible:
            cert = {**base, "outer_state_polytope": outer.describe(), "axes": axes.tolist(), "witness": wit}
            return SteeringVerdict(STEERABLE, d, level, cert)
    label = "both" if len(directions) == 2 else directions[0]
    return SteeringVerdict(UNDECIDED, label, level, {**base, "directions": dirs, "witness": wit})


def is_certified_unsteerable(rho, level: int = DEFAULT_LEVEL) -> bool:
    return all(_unsteerable_in(_mat(rho), d, level)[0] for d in DIRECTIONS)


def is_certified_steerable(rho, axes: np.ndarray | None = None) -> bool:
    """True when a verified witness proves steering in some direction."""
    axes = np.eye(3) if axes is None else axes
    outer = outer_state_polytope()
    return any(not steering_witness(_mat(rho), axes, outer, d).feasible for d in DIRECTIONS)


def certified_visibility(family: str = "isotropic", level: int = DEFAULT_LEVEL, tol: float = 1e-3, theta=None) -> dict:
    """Largest visibility at which the family is certified unsteerable.

    Certification is checked to be monotone on a coarse grid before bisecting.
    """
    from .protocol import family_state

    def ok(v):
        return is_certified_unsteerable(family_state(family, v, theta), level)

    grid = [0.0, 0.2, 1 / 3, 0.6, 0.8]
    flags = [ok(v) for v in grid]
    if any(b and not a for a, b in zip(flags, flags[1:])):
        raise AssertionError("certification is not monotone in the visibility")
    if not flags[0]:
        return {"family": family, "level": level, "v": None}
    lo, hi = 0.0, 1.0
    for v, f in zip(grid, flags):
        if f:
            lo = v
        else:
            hi = v
            break
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return {"family": family, "level": level, "v": lo, "v_upper": hi, "tol": tol}


def lhs_transition(axes: np.ndarray | None = None, lo: float = 0.3, hi: float = 0.9, tol: float = 1e-4) -> float:
    """Isotropic visibility where the (unshrunk) LHS program on ``axes`` turns infeasible."""
    from .states import isotropic

    axes = np.eye(3) if axes is None else axes
    poly = inner_state_polytope()
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if lhs_feasible(isotropic(mid), axes, poly).feasible:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


def perturbation_audit(rho, perturbations, level: int = DEFAULT_LEVEL) -> dict:
    """Certify ``rho + delta`` for every supplied Hermitian perturbation.

    Perturbed matrices that are not valid states are reported and skipped.
    """
    base = _mat(rho)
    rows = []
    for i, delta in enumerate(perturbations):
        m = base + np.asarray(delta, dtype=complex)
        try:
            DensityMatrix(m)
        except ValueError as exc:
            rows.append({"index": i, "status": "invalid", "reason": str(exc)})
            continue
        rows.append({"index": i, "status": certify(m, level).status})
    valid = [r for r in rows if r["status"] != "invalid"]
    return {
        "level": level,
        "rows": rows,
        "all_unsteerable": bool(valid) and all(r["status"] == UNSTEERABLE for r in valid),
    }
