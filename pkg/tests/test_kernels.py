import numpy as np
import pytest

from secretshare import kernels

BACKENDS = ["python"]
try:
    kernels.get_backend("compiled")
    BACKENDS.append("compiled")
except ImportError:
    pass


def test_active_backend_name():
    assert kernels.BACKEND in ("compiled", "python")


@pytest.mark.parametrize("name", BACKENDS)
def test_enumerate_counts_brute_force(name):
    mod = kernels.get_backend(name)
    rng = np.random.default_rng(0)
    contrib = rng.integers(0, 4, size=(3, 4, 3, 2)).astype(np.intc)
    out = mod.enumerate_counts(contrib)
    for f in range(3):
        for h in range(3**4):
            digits = [(h // 3**c) % 3 for c in range(4)]
            expect = sum(contrib[f, c, digits[c]] for c in range(4))
            assert np.array_equal(out[f, h], expect)


@pytest.mark.parametrize("name", BACKENDS)
def test_propagate_matches_dense(name):
    from secretshare.optics import hwp, phase_shifter

    mod = kernels.get_backend(name)
    rng = np.random.default_rng(1)
    n = 50
    k1 = rng.integers(0, 3, size=(n, 3)).astype(np.int8)
    k2 = rng.integers(0, 3, size=(n, 2)).astype(np.int8)
    p1, p2 = rng.normal(size=(n, 3)), rng.normal(size=(n, 2))
    src = np.array([np.cos(0.3), 0, 0, np.sin(0.3)], dtype=complex)
    for meas in (0, 1):
        probs = mod.propagate(k1, p1, k2, p2, src, meas)
        for e in range(n):
            def chain(ks, ps):
                w = np.eye(2, dtype=complex)
                for k, p in zip(ks, ps):
                    w = ({0: np.eye(2), 1: hwp(p), 2: phase_shifter(p)}[int(k)]) @ w
                return w
            psi = np.kron(chain(k1[e], p1[e]), chain(k2[e], p2[e])) @ src
            if meas == 0:
                expect = np.abs(psi) ** 2
            else:
                a, b = psi[0] + psi[3], psi[0] - psi[3]
                expect = [abs(a) ** 2 / 2, abs(b) ** 2 / 2, abs(psi[1]) ** 2 + abs(psi[2]) ** 2]
            assert np.allclose(probs[e], expect, atol=1e-12)


@pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")
def test_backends_agree_on_large_inputs():
    py, cc = kernels.get_backend("python"), kernels.get_backend("compiled")
    rng = np.random.default_rng(2)
    contrib = rng.integers(0, 5, size=(4, 8, 3, 2)).astype(np.intc)
    assert np.array_equal(py.enumerate_counts(contrib), cc.enumerate_counts(contrib))
    n = 5000
    args = (rng.integers(0, 3, size=(n, 6)).astype(np.int8), rng.normal(size=(n, 6)),
            rng.integers(0, 3, size=(n, 4)).astype(np.int8), rng.normal(size=(n, 4)),
            np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2))
    for meas in (0, 1):
        assert np.max(np.abs(py.propagate(*args, meas) - cc.propagate(*args, meas))) < 1e-12
