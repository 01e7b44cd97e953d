import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ctxqkd import linalg3 as la
from conftest import random_density, random_hermitian

entries = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
complex3 = st.builds(lambda re, im: re + 1j * im,
                     arrays(float, (3, 3), elements=entries),
                     arrays(float, (3, 3), elements=entries))


@st.composite
def hermitian3(draw):
    a = draw(complex3)
    return (a + a.conj().T) / 2


@given(hermitian3())
def test_eig_reconstructs(h):
    w, v = la.eig_hermitian(h)
    scale = max(1.0, np.abs(h).max())
    assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-9 * scale)
    assert np.allclose(v.conj().T @ v, np.eye(3), atol=1e-10)
    assert np.all(np.diff(w) <= 1e-12)


def test_eig_many_random_matrices(rng):
    for _ in range(1000):
        h = random_hermitian(rng)
        w, v = la.eig_hermitian(h)
        assert np.allclose(v @ np.diag(w) @ v.conj().T, h, atol=1e-9)
        # oracle: eigenvalues sum to the trace and match the real symmetric embedding
        assert w.sum() == pytest.approx(np.trace(h).real, abs=1e-10)
        embed = np.block([[h.real, -h.imag], [h.imag, h.real]])
        doubled = np.sort(np.linalg.eigvalsh(embed))[::-1][::2]
        assert np.allclose(w, doubled, atol=1e-9)


def test_eig_rejects_non_hermitian():
    a = np.array([[0, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex)
    with pytest.raises(la.ValidationError):
        la.eig_hermitian(a)


@given(hermitian3())
def test_positive_projector_captures_positive_part(h):
    p = la.positive_eigenspace_projector(h)
    assert np.allclose(p @ p, p, atol=1e-9)
    w = np.linalg.eigvalsh(h)
    # tr(hP) is the sum of positive eigenvalues, which is the max of tr(hM) over 0 <= M <= 1
    assert np.trace(h @ p).real == pytest.approx(w[w > 0].sum(), abs=1e-8 * max(1, np.abs(w).max()))


def test_top_eigenprojector_rank_one(rng):
    for _ in range(200):
        h = random_hermitian(rng)
        p = la.top_eigenprojector(h)
        assert np.trace(p).real == pytest.approx(1.0)
        assert np.trace(h @ p).real == pytest.approx(np.linalg.eigvalsh(h)[-1], abs=1e-10)


def test_partial_trace_oracle(rng):
    for _ in range(100):
        a, b = random_density(rng), random_density(rng)
        assert np.allclose(la.partial_trace_second(la.kron(a, b)), a, atol=1e-12)
        assert np.trace(la.kron(a, b)).real == pytest.approx(1.0)


def test_partial_trace_matches_loop(rng):
    w = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
    expected = np.array([[sum(w[3 * i + k, 3 * j + k] for k in range(3)) for j in range(3)] for i in range(3)])
    assert np.allclose(la.partial_trace_second(w), expected)


def test_check_density_and_effect():
    la.check_density(np.eye(3) / 3)
    with pytest.raises(la.ValidationError):
        la.check_density(np.eye(3))
    with pytest.raises(la.ValidationError):
        la.check_density(np.diag([1.5, -0.5, 0.0]))
    la.check_effect(np.diag([1.0, 0.5, 0.0]))
    with pytest.raises(la.ValidationError):
        la.check_effect(np.diag([1.2, 0.5, 0.0]))


def test_projector_of_ket():
    v = la.ket(1, 1j, 0) / np.sqrt(2)
    p = la.projector(v)
    assert np.allclose(p, p.conj().T)
    assert np.trace(p).real == pytest.approx(1.0)
    assert la.is_unitary(np.eye(3))
