import math

import numpy as np
import pytest

from oracles import dense_pauli, joint_eigenbasis
from pauli_dfe.grouping import PauliGroup, sorted_insertion
from pauli_dfe.measurement import (
    NonCommutingGroupError,
    common_eigenbasis,
    entangled_basis,
    product_basis,
    sample_outcomes,
)
from pauli_dfe.pauli_core import PauliString
from pauli_dfe.states import NoisyState, StateVector, make_state, outcome_probabilities, pauli_coefficients

S2 = 1 / math.sqrt(2)
BELL = StateVector(2, np.array([S2, 0, 0, S2]))


def _group(*labels, coeffs=None):
    paulis = tuple(PauliString.from_label(s) for s in labels)
    return PauliGroup(0, paulis, np.ones(len(labels)) if coeffs is None else np.array(coeffs))


def test_product_basis_example():
    basis = common_eigenbasis(_group("XI", "IZ"), "qwc")
    assert basis.kind == "product" and basis.letters == ("X", "Z")
    plus, minus = np.array([S2, S2]), np.array([S2, -S2])
    e0, e1 = np.array([1, 0]), np.array([0, 1])
    expected = np.column_stack([np.kron(plus, e0), np.kron(plus, e1), np.kron(minus, e0), np.kron(minus, e1)])
    np.testing.assert_allclose(basis.vectors, expected, atol=1e-15)
    assert basis.eigen_table[0, 0] == 1  # XI on |+0>
    assert basis.eigen_table[1, 3] == -1  # IZ on |-1>


def test_bell_fc_basis():
    grouping = sorted_insertion(pauli_coefficients(BELL), "fc", isolate_identity=False)
    basis = common_eigenbasis(grouping[0], "fc", 0)
    assert basis.kind == "entangled"
    # Phi+ is the outcome overlapping the target
    r = int(np.argmax(np.abs(basis.vectors.conj().T @ BELL.amplitudes)))
    assert abs(basis.vectors[:, r].conj() @ BELL.amplitudes) == pytest.approx(1.0, abs=1e-10)
    got = dict(zip((p.label for p in grouping[0].paulis), basis.eigen_table[:, r]))
    assert got == {"II": 1, "XX": 1, "YY": -1, "ZZ": 1}
    vecs, rows = joint_eigenbasis(["II", "XX", "YY", "ZZ"])
    s = int(np.argmax(np.abs(vecs.conj().T @ BELL.amplitudes)))
    np.testing.assert_array_equal(rows[:, s], [1, 1, -1, 1])
    # every column is one of the four Bell states
    overlaps = np.abs(vecs.conj().T @ basis.vectors)
    np.testing.assert_allclose(np.sort(overlaps.max(axis=0)), np.ones(4), atol=1e-10)


def test_all_z_singleton_is_parity():
    basis = common_eigenbasis(_group("ZZZ"), "qwc")
    np.testing.assert_allclose(basis.vectors, np.eye(8))
    parity = [1 - 2 * (bin(r).count("1") % 2) for r in range(8)]
    np.testing.assert_array_equal(basis.eigen_table[0], parity)


def test_identity_group_defaults_to_z():
    basis = product_basis(_group("II"))
    assert basis.letters == ("Z", "Z")
    np.testing.assert_array_equal(basis.eigen_table, np.ones((1, 4)))


def test_non_commuting_group_rejected():
    with pytest.raises(NonCommutingGroupError):
        common_eigenbasis(_group("XI", "ZI"), "fc")
    with pytest.raises(NonCommutingGroupError):
        common_eigenbasis(_group("XX", "ZZ"), "qwc")
    with pytest.raises(NonCommutingGroupError):
        product_basis(_group("XX", "ZZ"))


def _fc_groups(n, seed):
    table = pauli_coefficients(make_state("haar", n, seed))
    return [g for g in sorted_insertion(table, "fc").groups]


@pytest.mark.parametrize("n, seed", [(2, 0), (3, 1), (4, 2)])
def test_eigenbasis_invariants(n, seed):
    d = 1 << n
    for mode in ("qwc", "fc"):
        table = pauli_coefficients(make_state("haar", n, seed))
        for k, g in enumerate(sorted_insertion(table, mode).groups):
            basis = common_eigenbasis(g, mode, k)
            v = basis.vectors
            np.testing.assert_allclose(v.conj().T @ v, np.eye(d), atol=1e-9)
            for l, p in enumerate(g.paulis):
                mat = dense_pauli(p.label)
                c = basis.eigen_table[l]
                np.testing.assert_allclose(mat @ v, v * c, atol=1e-8)
                np.testing.assert_allclose(np.einsum("ij,ij->j", v.conj(), mat @ v).real, c, atol=1e-8)
                if not p.is_identity:
                    assert c.sum() == 0


@pytest.mark.parametrize("p", [0.0, 0.1, 0.7])
def test_law_of_total_expectation(p):
    psi = make_state("haar", 3, 4)
    sigma = NoisyState(psi, p)
    rho = sigma.density_matrix()
    for mode in ("qwc", "fc"):
        for k, g in enumerate(sorted_insertion(pauli_coefficients(psi), mode).groups):
            basis = common_eigenbasis(g, mode, k)
            probs = outcome_probabilities(sigma, basis)
            for l, q in enumerate(g.paulis):
                exact = np.trace(rho @ dense_pauli(q.label)).real
                assert probs @ basis.eigen_table[l] == pytest.approx(exact, abs=1e-8)


def test_qwc_and_fc_paths_agree_on_qwc_group():
    group = _group("XI", "XZ", "IZ", coeffs=[0.3, -0.2, 0.1])
    sigma = NoisyState(make_state("haar", 2, 6), 0.2)
    prod = product_basis(group)
    ent = entangled_basis(group, np.random.default_rng(0))
    pp, pe = outcome_probabilities(sigma, prod), outcome_probabilities(sigma, ent)
    np.testing.assert_allclose(np.sort(pp), np.sort(pe), atol=1e-10)
    np.testing.assert_allclose(prod.eigen_table @ pp, ent.eigen_table @ pe, atol=1e-10)


def test_fc_basis_deterministic_given_seed():
    g = next(g for g in _fc_groups(3, 0) if not g.is_commuting("qwc"))
    a = common_eigenbasis(g, "fc", 5)
    b = common_eigenbasis(g, "fc", 5)
    np.testing.assert_array_equal(a.vectors, b.vectors)


def test_sample_outcomes_point_mass():
    sample = sample_outcomes([1, 0, 0, 0], 10, 0)
    assert sample.as_dict() == {0: 10}
    assert sample.counts.sum() == sample.total == 10


def test_sample_outcomes_uniform():
    counts = sample_outcomes(np.full(4, 0.25), 4000, 1).counts
    sigma = math.sqrt(4000 * 0.25 * 0.75)
    assert np.all(np.abs(counts - 1000) < 5 * sigma)


def test_sample_outcomes_skewed():
    m = 10**5
    counts = sample_outcomes([0.925, 0.025, 0.025, 0.025], m, 2).counts
    # oracle: binomial standard error sqrt(p(1-p)/m) ~ 8.3e-4, 6 of them < 0.005
    assert abs(counts[0] / m - 0.925) < 0.005


def test_sample_outcomes_deterministic():
    a = sample_outcomes(np.full(8, 1 / 8), 100, 9).counts
    b = sample_outcomes(np.full(8, 1 / 8), 100, 9).counts
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("probs, m", [([1.1, -0.1], 5), ([0.5, 0.6], 5), ([0.5, 0.5], 0)])
def test_sample_outcomes_errors(probs, m):
    with pytest.raises(ValueError):
        sample_outcomes(probs, m, 0)


def test_signed_products_in_eigen_table():
    # XX . YY = -ZZ, so c_ZZ = -c_XX c_YY on every outcome
    basis = entangled_basis(_group("XX", "YY", "ZZ"), np.random.default_rng(1))
    c = basis.eigen_table
    np.testing.assert_array_equal(c[2], -c[0] * c[1])
    vecs = basis.vectors
    for l, label in enumerate(["XX", "YY", "ZZ"]):
        np.testing.assert_allclose(dense_pauli(label) @ vecs, vecs * c[l], atol=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_large_fc_groups_at_six_qubits(seed):
    table = pauli_coefficients(make_state("haar", 6, seed))
    grouping = sorted_insertion(table, "fc")
    for k in (1, 2, len(grouping) - 1):
        g = grouping[k]
        basis = common_eigenbasis(g, "fc", k)
        v = basis.vectors
        for l, p in enumerate(g.paulis):
            np.testing.assert_allclose(p.to_matrix() @ v, v * basis.eigen_table[l], atol=1e-8)
