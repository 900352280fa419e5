import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from secretshare.protocol import (
    BOT, DET, STOCH, THETA_STAR, Behavior, Encoding, canonical_encodings, canonical_measurements, closed_form,
    evaluate, evaluate_family, permute_inputs, score, score_weights, sweep, target_table, threshold,
)
from secretshare.qmath import I2
from secretshare.states import bell_state, isotropic

# frozen from an independent bisection of the closed form (2 + v(1 + sin 2theta))/4 = 3/4
PARTIAL_DET_THRESHOLD = 0.6877788


def test_target_table_examples():
    t = target_table(DET)
    assert t[0, 0b10, 0b00] == 1 and t[1, 0b01, 0b00] == 1 and t[0, 0b01, 0b00] == 0
    s = target_table(STOCH)
    # x0 xor y0 = 1 carries the secret x1 xor y1 at z = 0
    assert s[0, 0b11, 0b00] == 1
    assert s[0, 0b01, 0b00] == BOT


def test_weights_sum():
    assert score_weights(DET).sum() == pytest.approx(1)
    assert score_weights(STOCH).sum() == pytest.approx(1)


def test_ideal_protocols_are_perfect():
    enc = canonical_encodings()
    b = evaluate(bell_state("phi+"), *enc, canonical_measurements(DET), DET)
    assert score(b).S == pytest.approx(1, abs=1e-12)
    b = evaluate(bell_state("phi+"), *enc, canonical_measurements(STOCH), STOCH)
    sc = score(b)
    assert sc.R_scrt == pytest.approx(1, abs=1e-12) and sc.R_ctrl == pytest.approx(1, abs=1e-12)


def test_maximally_mixed_scores():
    assert evaluate_family("isotropic", DET, 0.0).S == pytest.approx(0.5)
    sc = evaluate_family("isotropic", STOCH, 0.0)
    assert sc.R_scrt == pytest.approx(0.25) and sc.R_ctrl == pytest.approx(0.5)


def test_table_values():
    sc = evaluate_family("partial", DET, 0.72, THETA_STAR)
    assert sc.S == pytest.approx(0.7617, abs=5e-5)
    assert sc.by_z["S_z0"] == pytest.approx(0.43)
    assert sc.by_z["S_z1"] == pytest.approx(0.3317, abs=5e-5)
    sc = evaluate_family("isotropic", STOCH, 0.47)
    assert sc.R == pytest.approx(0.66875)
    assert sc.by_z["Rctrl_z0"] == pytest.approx(0.735)
    assert sc.by_z["Rscrt_z1"] == pytest.approx(0.6025)


@pytest.mark.parametrize("family,task", [("isotropic", DET), ("isotropic", STOCH), ("partial", DET), ("partial", STOCH)])
def test_closed_forms_match(family, task):
    for v in np.linspace(0, 1, 11):
        a = evaluate_family(family, task, v, THETA_STAR)
        b = closed_form(family, task, v, THETA_STAR)
        assert a.value == pytest.approx(b.value, abs=1e-12)


def test_thresholds():
    assert threshold("isotropic", DET) == pytest.approx(0.5, abs=1e-6)
    assert threshold("isotropic", STOCH) == pytest.approx(0.4, abs=1e-6)
    assert threshold("partial", DET, theta=THETA_STAR) == pytest.approx(PARTIAL_DET_THRESHOLD, abs=1e-6)


def test_threshold_rejects_non_crossing():
    with pytest.raises(ValueError):
        threshold("isotropic", DET, target=1.5)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from(["flip0", "flip1", "swap"]), st.sampled_from([DET, STOCH]))
def test_symmetries_preserve_scores(seed, kind, task):
    rng = np.random.default_rng(seed)
    k = 2 if task == DET else 3
    p = rng.random((2, 4, 4, k))
    b = Behavior(task, p / p.sum(axis=-1, keepdims=True))
    a, c = score(b), score(permute_inputs(b, kind))
    assert a.value == pytest.approx(c.value, abs=1e-12)


def test_behavior_validation():
    with pytest.raises(ValueError):
        Behavior(DET, np.ones((2, 4, 4, 2)))
    with pytest.raises(ValueError):
        Behavior("chess", np.ones((2, 4, 4, 2)) / 2)


def test_encoding_must_be_trace_preserving():
    with pytest.raises(ValueError):
        Encoding(((I2 * 2,),) * 4)


def test_sweep_rows():
    rows = sweep("isotropic", STOCH, [0.0, 1.0])
    assert rows[1]["R"] == pytest.approx(1.0)
    assert rows[0]["theta"] is None
