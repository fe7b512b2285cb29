import math

import numpy as np
import pytest

from oracles import dense_coefficients, dense_pauli, joint_eigenbasis
from pauli_dfe.grouping import PauliGroup, sorted_insertion
from pauli_dfe.measurement import common_eigenbasis, product_basis
from pauli_dfe.pauli_core import DimensionError, PauliString, expectation
from pauli_dfe.states import (
    CoefficientTable,
    NoisyState,
    StateVector,
    fidelity_from_tables,
    make_state,
    noisy_coefficients,
    outcome_probabilities,
    pauli_coefficients,
    true_fidelity,
)

S2 = 1 / math.sqrt(2)
BELL = StateVector(2, np.array([S2, 0, 0, S2]))


def test_ghz_and_w_amplitudes():
    np.testing.assert_allclose(make_state("ghz", 2).amplitudes, [S2, 0, 0, S2])
    np.testing.assert_allclose(make_state("w", 2).amplitudes, [0, S2, S2, 0])
    w3 = make_state("w", 3).amplitudes
    np.testing.assert_allclose(np.flatnonzero(w3), [1, 2, 4])


def test_haar_is_deterministic_and_normalized():
    a = make_state("haar", 3, 42)
    b = make_state("haar", 3, 42)
    assert a.amplitudes.tobytes() == b.amplitudes.tobytes()
    assert np.linalg.norm(a.amplitudes) == pytest.approx(1.0, abs=1e-12)
    assert not np.array_equal(a.amplitudes, make_state("haar", 3, 43).amplitudes)


@pytest.mark.parametrize("n", [0, 13])
def test_make_state_rejects_bad_n(n):
    with pytest.raises(DimensionError):
        make_state("ghz", n)


def test_make_state_rejects_unknown_kind():
    with pytest.raises(ValueError):
        make_state("cluster", 3)


def test_haar_zero_mean_statistics():
    zi = PauliString.from_label("ZI")
    values = np.array([expectation(make_state("haar", 2, s), zi) for s in range(1000)])
    assert abs(values.mean()) < 4 * values.std(ddof=1) / math.sqrt(len(values))


def test_bell_coefficients():
    table = pauli_coefficients(BELL)
    expected = {"II": 0.5, "XX": 0.5, "YY": -0.5, "ZZ": 0.5}
    oracle = dense_coefficients(BELL.amplitudes)
    assert set(table.as_dict()) == set(expected)
    for label, value in oracle.items():
        assert table[label] == pytest.approx(value, abs=1e-12)
        assert value == pytest.approx(expected.get(label, 0.0), abs=1e-12)


def test_ghz3_coefficients():
    table = pauli_coefficients(make_state("ghz", 3))
    b = 1 / math.sqrt(8)
    expected = {"III": b, "XXX": b, "ZZI": b, "ZIZ": b, "IZZ": b,
                "XYY": -b, "YXY": -b, "YYX": -b}
    oracle = dense_coefficients(make_state("ghz", 3).amplitudes)
    assert set(table.as_dict()) == set(expected)
    for label, value in expected.items():
        assert table[label] == pytest.approx(value, abs=1e-12)
        assert oracle[label] == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("n, seed", [(1, 0), (2, 1), (3, 2), (4, 3)])
def test_haar_table_matches_dense_traces(n, seed):
    psi = make_state("haar", n, seed)
    table = pauli_coefficients(psi)
    oracle = dense_coefficients(psi.amplitudes)
    assert len(table) == 4**n
    for label, value in oracle.items():
        assert table[label] == pytest.approx(value, abs=1e-12)


@pytest.mark.parametrize("kind", ["haar", "w", "ghz"])
@pytest.mark.parametrize("n", [1, 3, 6])
def test_table_invariants(kind, n):
    psi = make_state(kind, n, 11)
    table = pauli_coefficients(psi)
    assert table.sum_of_squares() == pytest.approx(1.0, abs=1e-8)
    assert table[PauliString.identity(n)] == 1 / math.sqrt(1 << n)


def test_table_per_string_path_agrees():
    psi = make_state("haar", 5, 9)
    table = pauli_coefficients(psi)
    for pauli, b in list(table.items())[::37]:
        assert b == pytest.approx(expectation(psi, pauli) / math.sqrt(32), abs=1e-12)


def test_threshold_drops_small_entries():
    psi = make_state("haar", 3, 0)
    full = pauli_coefficients(psi)
    cut = pauli_coefficients(psi, threshold=0.05)
    assert len(cut) < len(full)
    assert np.all(np.abs(cut.values) > 0.05)
    with pytest.raises(ValueError):
        pauli_coefficients(psi, threshold=-1)


def test_coefficient_csv_round_trip(tmp_path):
    table = pauli_coefficients(make_state("haar", 2, 4))
    path = tmp_path / "coeffs.csv"
    table.to_csv(path)
    assert path.read_text().splitlines()[0] == "pauli,coefficient"
    back = CoefficientTable.from_csv(path)
    assert back.as_dict() == table.as_dict()


@pytest.mark.parametrize("p, n, expected", [(0.0, 3, 1.0), (0.1, 8, 0.900390625), (0.1, 2, 0.925)])
def test_true_fidelity(p, n, expected):
    # oracle: (1 - p) + p / d
    assert (1 - p) + p / 2**n == pytest.approx(expected, abs=1e-15)
    assert true_fidelity(NoisyState(make_state("ghz", n), p)) == pytest.approx(expected, abs=1e-15)


def test_parseval_against_dense_trace():
    rng = np.random.default_rng(8)
    for _ in range(20):
        n = int(rng.integers(1, 4))
        psi = make_state("haar", n, int(rng.integers(2**31)))
        sigma = NoisyState(psi, float(rng.uniform()))
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        dense = np.trace(rho @ sigma.density_matrix()).real
        assert fidelity_from_tables(sigma, pauli_coefficients(psi)) == pytest.approx(dense, abs=1e-8)


def test_noisy_coefficients_match_dense():
    psi = make_state("haar", 2, 5)
    sigma = NoisyState(psi, 0.3)
    table = pauli_coefficients(psi)
    a = noisy_coefficients(sigma, table)
    for (pauli, _), ak in zip(table.items(), a):
        dense = np.trace(sigma.density_matrix() @ dense_pauli(pauli.label)).real / 2
        assert ak == pytest.approx(dense, abs=1e-12)


def test_outcome_probabilities_pure_computational():
    group = PauliGroup(0, (PauliString.from_label("Z"),), np.array([1.0]))
    basis = product_basis(group)
    probs = outcome_probabilities(NoisyState(StateVector(1, np.array([1, 0])), 0.0), basis)
    np.testing.assert_allclose(probs, [1, 0])


def test_outcome_probabilities_fully_depolarized():
    psi = make_state("haar", 3, 1)
    grouping = sorted_insertion(pauli_coefficients(psi), "fc")
    basis = common_eigenbasis(grouping[1], "fc", 0)
    np.testing.assert_allclose(outcome_probabilities(NoisyState(psi, 1.0), basis), np.full(8, 1 / 8))


def test_outcome_probabilities_bell_basis():
    grouping = sorted_insertion(pauli_coefficients(BELL), "fc", isolate_identity=False)
    basis = common_eigenbasis(grouping[0], "fc", 0)
    probs = outcome_probabilities(NoisyState(BELL, 0.1), basis)
    # oracle: (1-p)|<r|psi>|^2 + p/d over a brute-force Bell basis
    vecs, _ = joint_eigenbasis(["XX", "ZZ"])
    oracle = 0.9 * np.abs(vecs.conj().T @ BELL.amplitudes) ** 2 + 0.1 / 4
    np.testing.assert_allclose(np.sort(oracle), [0.025, 0.025, 0.025, 0.925], atol=1e-12)
    np.testing.assert_allclose(np.sort(probs), np.sort(oracle), atol=1e-12)
    assert probs.sum() == pytest.approx(1.0, abs=1e-10)


def test_outcome_probabilities_dimension_mismatch():
    basis = product_basis(sorted_insertion(pauli_coefficients(BELL), "qwc")[1])
    with pytest.raises(DimensionError):
        outcome_probabilities(NoisyState(make_state("ghz", 3), 0.1), basis)


def test_noisy_state_validation():
    with pytest.raises(ValueError):
        NoisyState(BELL, 1.5)
    with pytest.raises(ValueError):
        StateVector(1, np.array([1.0, 1.0]))
