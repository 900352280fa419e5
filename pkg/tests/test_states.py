import json

import numpy as np
import pytest

from secretshare.qmath import proj
from secretshare.states import (
    BELL_KETS, DensityMatrix, Povm, bell_state, fidelity, isotropic, mixture, negativity, partial_iso,
)


def test_density_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.0, 1.0, 0, 0]))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValueError):
        DensityMatrix(np.array([[0.5, 1], [0, 0.5]]))
    rho = isotropic(0.3)
    with pytest.raises(ValueError):
        rho.mat[0, 0] = 1


def test_json_round_trip(tmp_path):
    rho = partial_iso(0.72, 0.2356)
    p = tmp_path / "s.json"
    p.write_text(json.dumps(rho.to_json()))
    assert np.allclose(DensityMatrix.load(p).mat, rho.mat)


def test_bell_states_orthonormal_and_sum_to_identity():
    tot = sum(bell_state(k).mat for k in BELL_KETS)
    assert np.allclose(tot, np.eye(4))
    assert np.allclose(bell_state("Φ+").mat, proj(BELL_KETS["phi+"]))
    with pytest.raises(ValueError):
        bell_state("omega")


def test_isotropic_separability_edge():
    # negativity vanishes exactly at v = 1/3
    assert negativity(isotropic(1 / 3)) == pytest.approx(0, abs=1e-12)
    assert negativity(isotropic(0.5)) == pytest.approx((3 * 0.5 - 1) / 4)
    assert negativity(isotropic(1.0)) == pytest.approx(0.5)


def test_fidelity_conventions():
    assert fidelity(isotropic(0.47), isotropic(0.47)) == pytest.approx(1)
    # squared convention: pure vs pure is |<a|b>|^2
    a, b = bell_state("phi+"), partial_iso(1.0, 0.2356)
    ov = abs(np.vdot(BELL_KETS["phi+"], [np.cos(0.2356), 0, 0, np.sin(0.2356)])) ** 2
    assert fidelity(a, b) == pytest.approx(ov)
    assert fidelity(bell_state("phi+"), bell_state("psi-")) == pytest.approx(0, abs=1e-12)


def test_mixture_matches_isotropic():
    v = 0.47
    w = [v + (1 - v) / 4] + [(1 - v) / 4] * 3
    rho = mixture([bell_state(k) for k in ("phi+", "phi-", "psi+", "psi-")], w)
    assert np.max(np.abs(rho.mat - isotropic(v).mat)) < 1e-12


def test_partial_iso_theta_range():
    with pytest.raises(ValueError):
        partial_iso(0.5, 0.0)
    with pytest.raises(ValueError):
        partial_iso(0.5, 1.0)


def test_povm_validation():
    with pytest.raises(ValueError):
        Povm((np.eye(4) / 2,))
    m = Povm((np.eye(4) / 2, np.eye(4) / 2), ("a", "b"))
    assert np.allclose(m.element("b"), np.eye(4) / 2)
