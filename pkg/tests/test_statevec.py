import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_state, random_unitary
from mbqed.statevec import (
    H,
    KET_0,
    KET_1,
    KET_PLUS,
    X,
    X_BASIS,
    Y_BASIS,
    Z,
    Z_BASIS,
    DimensionError,
    MeasurementBasis,
    NonUnitaryError,
    QubitIndexError,
    StateVector,
    ZeroProbabilityError,
    apply_cz,
    apply_single,
    apply_swap,
    basis_state,
    embed_single,
    equal_up_to_global_phase,
    fidelity_pure,
    make_state,
    measure,
    outcome_probability,
    phase_rotation,
    product_state,
)


def cz_matrix(n, i, j):
    d = np.ones(2**n, dtype=complex)
    for k in range(2**n):
        if (k >> (n - i)) & 1 and (k >> (n - j)) & 1:
            d[k] = -1
    return np.diag(d)


def test_qubit_one_is_most_significant():
    s = basis_state("100")
    assert s.amplitudes[4] == 1
    flipped = apply_single(basis_state("000"), 1, X)
    assert flipped.amplitudes[0b100] == 1


def test_product_state_matches_kron():
    s = product_state(KET_0, KET_PLUS, KET_1)
    assert np.allclose(s.amplitudes, np.kron(np.kron(KET_0, KET_PLUS), KET_1))


def test_make_state_normalizes_and_rejects_bad_input():
    s = make_state(1, [3, 4])
    assert abs(s.norm() - 1) < 1e-15
    with pytest.raises(DimensionError):
        make_state(2, [1, 0, 0])
    with pytest.raises(ValueError):
        make_state(1, [0, 0])
    with pytest.raises(DimensionError):
        StateVector(np.ones(3))


def test_state_is_immutable():
    s = basis_state("01")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 5), data=st.data())
def test_apply_single_matches_full_matrix(seed, n, data):
    rng = np.random.default_rng(seed)
    q = data.draw(st.integers(1, n))
    psi, u = random_state(rng, n), random_unitary(rng)
    expected = embed_single(u, q, n) @ psi.amplitudes
    assert np.allclose(apply_single(psi, q, u).amplitudes, expected, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 5), data=st.data())
def test_cz_and_swap_match_full_matrices(seed, n, data):
    rng = np.random.default_rng(seed)
    i, j = data.draw(st.lists(st.integers(1, n), min_size=2, max_size=2, unique=True))
    psi = random_state(rng, n)
    assert np.allclose(apply_cz(psi, i, j).amplitudes, cz_matrix(n, i, j) @ psi.amplitudes)
    # SWAP = CNOT_ij CNOT_ji CNOT_ij, here via H-conjugated CZs
    s = psi
    for a, b in ((i, j), (j, i), (i, j)):
        s = apply_single(apply_cz(apply_single(s, b, H), a, b), b, H)
    assert np.allclose(apply_swap(psi, i, j).amplitudes, s.amplitudes, atol=1e-12)


def test_index_and_pair_validation():
    s = basis_state("00")
    for bad in (0, 3, -1, 1.0):
        with pytest.raises(QubitIndexError):
            apply_single(s, bad, X)
    with pytest.raises(ValueError):
        apply_cz(s, 1, 1)
    with pytest.raises(DimensionError):
        apply_single(s, 1, np.eye(3))


def test_non_unitary_strict_and_permissive():
    s = basis_state("0")
    m = np.array([[1, 0], [0, 0.5]])
    with pytest.raises(NonUnitaryError):
        apply_single(s, 1, m)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        out = apply_single(basis_state("1"), 1, np.array([[1, 0], [0, 1.0000001]]), strict=False)
    assert caught and out.amplitudes[1] == pytest.approx(1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4), data=st.data())
def test_measure_matches_projector_oracle(seed, n, data):
    rng = np.random.default_rng(seed)
    q = data.draw(st.integers(1, n))
    basis = data.draw(st.sampled_from([X_BASIS, Y_BASIS, Z_BASIS]))
    psi = random_state(rng, n)
    total = 0.0
    for k in (0, 1):
        m = basis.vector(k)
        proj = embed_single(np.outer(m, m.conj()), q, n)
        p_oracle = float(np.real(psi.amplitudes.conj() @ proj @ psi.amplitudes))
        total += p_oracle
        assert outcome_probability(psi, q, m) == pytest.approx(p_oracle, abs=1e-12)
        if p_oracle < 1e-10:
            continue
        outcome, p, post = measure(psi, q, basis, outcome=k)
        assert outcome == k and p == pytest.approx(p_oracle, abs=1e-12)
        if n == 1:
            assert post is None
            continue
        # re-embed the measured qubit and compare with the projected state
        full = np.moveaxis(np.multiply.outer(m, post.tensor()), 0, q - 1).reshape(-1)
        assert np.allclose(full * np.sqrt(p), proj @ psi.amplitudes, atol=1e-10)
    assert total == pytest.approx(1, abs=1e-12)


def test_measure_forced_zero_probability_raises():
    with pytest.raises(ZeroProbabilityError):
        measure(basis_state("0"), 1, Z_BASIS, outcome=1)
    with pytest.raises(ValueError):
        measure(basis_state("0"), 1, Z_BASIS)


def test_measure_sampling_frequencies(rng):
    psi = make_state(1, [np.sqrt(0.3), np.sqrt(0.7)])
    outcomes = [measure(psi, 1, Z_BASIS, rng=rng)[0] for _ in range(20000)]
    assert abs(np.mean(outcomes) - 0.7) < 4 * np.sqrt(0.21 / 20000)


def test_basis_validation():
    with pytest.raises(ValueError):
        MeasurementBasis(KET_0, KET_PLUS)
    with pytest.raises(ValueError):
        MeasurementBasis(KET_0, 2 * KET_1)
    with pytest.raises(ValueError):
        X_BASIS.vector(2)


def test_phase_rotation_and_fidelity():
    assert np.allclose(phase_rotation(np.pi / 2), -1j * Z)
    a = product_state(KET_PLUS)
    b = StateVector(np.exp(0.7j) * a.amplitudes)
    assert equal_up_to_global_phase(a, b)
    assert fidelity_pure(a, basis_state("0")) == pytest.approx(0.5)
    with pytest.raises(DimensionError):
        fidelity_pure(a, basis_state("00"))
