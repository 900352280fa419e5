import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secretshare.optics import (
    ENCODER_SETTINGS, ExperimentConfig, TomographyData, behavior_from_counts, encoder_unitary, expected_behavior,
    hwp, linear_inversion, phase_shifter, project_to_states, recombined_tomography, run_experiment,
    settings_report_ok, setting_probabilities, simulate_counts, tomography, verify_settings_tables,
)
from secretshare.protocol import (
    DET, STOCH, THETA_STAR, canonical_encodings, canonical_measurements, evaluate, family_state,
    pauli_encoding_unitary, score,
)
from secretshare.qmath import SX, SZ, equal_up_to_phase
from secretshare.states import bell_state, isotropic, mixture, partial_iso

NO_JITTER = {"prep": 0.0, "encoder": 0.0, "alice": 0.0, "phase": 0.0}


def test_jones_elements():
    assert equal_up_to_phase(hwp(0), SZ)
    assert np.allclose(hwp(22.5, degrees=True) @ [1, 0], np.array([1, 1]) / np.sqrt(2))
    assert equal_up_to_phase(phase_shifter(np.pi), SZ)
    assert equal_up_to_phase(hwp(45, degrees=True), SX)


@settings(max_examples=30, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.floats(-10, 10))
def test_pipelines_unitary(a, b, c):
    u = hwp(a) @ phase_shifter(b) @ hwp(c)
    assert np.allclose(u.conj().T @ u, np.eye(2), atol=1e-9)


def test_encoder_settings_give_paulis():
    for i in range(4):
        assert equal_up_to_phase(encoder_unitary(i), pauli_encoding_unitary(i))
    assert len(ENCODER_SETTINGS) == 4


def test_settings_tables():
    rep = verify_settings_tables()
    assert all(settings_report_ok(rep).values())
    t = rep["tables"]
    assert [r["finding"] for r in t["III"]["rows"]] == ["resolved", "resolved", "ambiguous", "ambiguous"]
    assert t["III"]["rows"][2]["resolved_reading_gives"] == ["Z"]
    assert t["III"]["used_settings_match"]
    # three printed entries of the transformation table disagree with sigma_X^a sigma_Z^b
    assert sum(not r["match"] for r in t["II"]) == 3
    assert all(r["match"] for r in t["bell_preparation"])
    # the switched-plate reading matters: absolute plates fail two preparation rows
    assert [r["absolute_plates_match"] for r in t["I"]] == [True, True, False, False]


def test_mixing_weights_reproduce_isotropic():
    cfg = ExperimentConfig(task=STOCH, family="isotropic", v=0.47)
    assert cfg.mixing_weights.sum() == pytest.approx(1)
    rho = mixture([bell_state(k) for k in ("phi+", "phi-", "psi+", "psi-")], cfg.mixing_weights)
    assert np.max(np.abs(rho.mat - isotropic(0.47).mat)) < 1e-12


@pytest.mark.parametrize("task,family,v", [(DET, "partial", 0.72), (DET, "pure", 1.0), (DET, "isotropic", 0.6),
                                           (STOCH, "isotropic", 0.47), (STOCH, "isotropic", 1.0)])
def test_infinite_statistics_matches_evaluate(task, family, v):
    cfg = ExperimentConfig(task=task, family=family, v=v, jitter=NO_JITTER)
    rho = family_state(family, cfg.v, cfg.theta)
    ref = evaluate(rho, *canonical_encodings(), canonical_measurements(task), task)
    assert np.max(np.abs(expected_behavior(cfg).p - ref.p)) < 1e-12


def test_ideal_phi_plus_stochastic_is_perfect_for_every_sample():
    cfg = ExperimentConfig(task=STOCH, family="isotropic", v=1.0, events=20000, jitter=NO_JITTER, seed=3)
    res = run_experiment(cfg)
    assert res.scores.R == 1.0 and res.scores.R_scrt == 1.0


def test_counts_are_chunk_and_thread_independent():
    cfg = ExperimentConfig(events=30000, seed=5, chunk_size=4096)
    a = simulate_counts(cfg, threads=1)
    b = simulate_counts(cfg, threads=4)
    assert np.array_equal(a, b) and a.sum() == 30000


def test_counts_csv_and_summary():
    res = run_experiment(ExperimentConfig(events=2000, seed=1))
    lines = res.counts_csv().splitlines()
    assert lines[0] == "setting,outcome,count" and len(lines) == 1 + 2 * 4 * 4 * 2
    assert res.summary()["events"] == 2000


def test_empty_cells_are_flagged():
    b, empty = behavior_from_counts(DET, np.zeros((2, 4, 4, 2), dtype=int))
    assert empty == 32 and np.allclose(b.p, 0.5)


def test_config_validation_and_files(tmp_path):
    with pytest.raises(ValueError):
        ExperimentConfig(v=1.5)
    with pytest.raises(ValueError):
        ExperimentConfig(task=STOCH, family="partial")
    with pytest.raises(ValueError):
        ExperimentConfig(jitter={"prep": -1})
    p = tmp_path / "c.toml"
    p.write_text('[experiment]\ntask = "stoch"\nfamily = "isotropic"\nv = 0.47\nevents = 1000\n')
    cfg = ExperimentConfig.load(p)
    assert cfg.task == STOCH and cfg.events == 1000 and cfg.theta is None
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"colour": "red"})


def test_tomography_exact_and_projection():
    for rho in (isotropic(0.47), partial_iso(0.72, THETA_STAR), bell_state("psi-")):
        res = tomography(rho, None)
        assert np.max(np.abs(res.rho.mat - rho.mat)) < 1e-12
    m = isotropic(0.5).mat
    assert np.allclose(project_to_states(m), m)
    bad = np.diag([0.6, 0.5, -0.1, 0.0]).astype(complex)
    fixed = project_to_states(bad)
    assert np.linalg.eigvalsh(fixed)[0] >= 0 and np.trace(fixed).real == pytest.approx(1)


def test_linear_inversion_of_counts():
    probs = setting_probabilities(isotropic(0.3))
    assert np.allclose(probs.sum(axis=1), 1)
    assert np.allclose(linear_inversion(probs), isotropic(0.3).mat)
    with pytest.raises(ValueError):
        TomographyData(np.zeros((9, 4), dtype=int))


def test_recombined_tomography_fidelity():
    res = recombined_tomography(0.47, 1400, seed=0)
    assert res.fidelity > 0.99
    assert res.data.counts.sum() == 9 * 4 * 1400
