import numpy as np
import pytest

from secretshare.protocol import DET, STOCH
from secretshare.seesaw import (
    QubitStrategy, classical_embedding, helstrom, objective, random_strategy, run_restart, seesaw,
    update_measurements, update_states,
)


def test_helstrom_diagonal():
    q0, q1 = np.diag([3.0, 1.0, 0.0, 2.0]), np.diag([1.0, 2.0, 1.0, 2.0])
    m0, m1 = helstrom(q0, q1)
    assert np.allclose(np.diag(m0), [1, 0, 0, 1])
    assert np.allclose(m0 + m1, np.eye(4))


@pytest.mark.parametrize("task,value", [(DET, 0.75), (STOCH, 0.625)])
def test_classical_embedding_is_fixed_point(task, value):
    e = classical_embedding(task)
    assert objective(e) == pytest.approx(value, abs=1e-12)
    assert objective(update_states(e)) == pytest.approx(value, abs=1e-12)
    assert objective(update_measurements(e)) == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("task", [DET, STOCH])
def test_updates_never_decrease(task):
    rng = np.random.default_rng(5)
    s = random_strategy(task, rng)
    last = objective(s)
    for _ in range(500):
        s = update_states(s) if rng.random() < 0.5 else update_measurements(s)
        val = objective(s)
        assert val >= last - 1e-12
        last = val


def test_strategy_validation():
    e = classical_embedding(DET)
    with pytest.raises(ValueError):
        QubitStrategy(DET, e.beta * 2, e.gamma, e.meas)


def test_restart_trace_monotone():
    _, trace = run_restart(random_strategy(STOCH, np.random.default_rng(9)))
    assert trace.monotone and trace.sweeps <= 500


def test_seesaw_deterministic_with_seed():
    a = seesaw(STOCH, 6, seed=11).to_json(include_strategy=False)
    b = seesaw(STOCH, 6, seed=11, threads=3).to_json(include_strategy=False)
    assert a == b
    with pytest.raises(ValueError):
        seesaw(DET, 0)
