"""Fast invariant checks behind ``dfe verify``.

Each check returns a short detail string and raises ``AssertionError`` on
failure. The heavier statistical checks live in the test suite.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .dfe import DfeConfig, copies_grouped, copies_original, run_dfe
from .grouping import singleton_grouping, sorted_insertion
from .measurement import common_eigenbasis
from .pauli_core import Commutativity, PauliString, commutes, expectation
from .states import (
    NoisyState,
    StateVector,
    fidelity_from_tables,
    make_state,
    outcome_probabilities,
    pauli_coefficients,
    true_fidelity,
)


def check_commutation_vs_matrices() -> str:
    rng = np.random.default_rng(1)
    for _ in range(200):
        n = int(rng.integers(1, 5))
        p, q = (PauliString(n, int(rng.integers(1 << n)), int(rng.integers(1 << n))) for _ in "pq")
        a, b = p.to_matrix(), q.to_matrix()
        dense = np.allclose(a @ b, b @ a, atol=1e-10)
        assert commutes(p, q, "fc") == dense, (p, q)
        assert not commutes(p, q, "qwc") or dense, (p, q)
    return "200 random pairs agree with dense commutators"


def check_coefficients() -> str:
    for seed in range(3):
        psi = make_state("haar", 3, seed)
        table = pauli_coefficients(psi)
        assert abs(table.sum_of_squares() - 1) < 1e-8
        for pauli, b in table.items():
            assert abs(b - expectation(psi, pauli) / math.sqrt(8)) < 1e-10, pauli
    return "fast coefficient tables match per-string expectations"


def check_parseval() -> str:
    rng = np.random.default_rng(2)
    for _ in range(10):
        n = int(rng.integers(1, 4))
        psi = make_state("haar", n, int(rng.integers(1 << 30)))
        sigma = NoisyState(psi, float(rng.uniform()))
        rho = np.outer(psi.amplitudes, psi.amplitudes.conj())
        dense = np.trace(rho @ sigma.density_matrix()).real
        assert abs(fidelity_from_tables(sigma, pauli_coefficients(psi)) - dense) < 1e-8
        assert abs(true_fidelity(sigma) - dense) < 1e-8
    return "sum a_k b_k equals Tr(rho sigma)"


def check_group_counts() -> str:
    for n in (2, 3, 4):
        table = pauli_coefficients(make_state("haar", n, 0))
        qwc = sorted_insertion(table, "qwc")
        fc = sorted_insertion(table, "fc")
        assert len(qwc) == 3**n + 1, (n, len(qwc))
        assert len(fc) <= len(qwc)
        for grouping in (qwc, fc):
            assert all(g.is_commuting(grouping.mode) for g in grouping.groups)
            assert sum(g.size for g in grouping.groups) == len(table)
            assert abs(grouping.weights.sum() - 1) < 1e-8
    return "QWC counts 3^n+1 for n=2..4, FC <= QWC, partitions valid"


def check_eigenbases() -> str:
    psi = make_state("haar", 3, 5)
    sigma = NoisyState(psi, 0.2)
    table = pauli_coefficients(psi)
    for mode in Commutativity:
        for k, group in enumerate(sorted_insertion(table, mode).groups):
            basis = common_eigenbasis(group, mode, k)
            vecs = basis.vectors
            assert np.allclose(vecs.conj().T @ vecs, np.eye(8), atol=1e-9)
            probs = outcome_probabilities(sigma, basis)
            for l, pauli in enumerate(group.paulis):
                mat = pauli.to_matrix()
                assert np.allclose(mat @ vecs, vecs * basis.eigen_table[l], atol=1e-8)
                expected = np.trace(sigma.density_matrix() @ mat).real
                assert abs(probs @ basis.eigen_table[l] - expected) < 1e-8
    return "eigenvalue tables and outcome statistics consistent"


def check_singleton_copies() -> str:
    psi = make_state("haar", 4, 3)
    config = DfeConfig()
    for group in singleton_grouping(pauli_coefficients(psi)).groups:
        b = float(group.coefficients[0])
        assert copies_grouped(group.norm_l1, group.norm_sq, 16, config) == copies_original(b * b, 16, config)
    return "grouped copy count reduces to the original on singletons"


def check_bell_exact() -> str:
    bell = StateVector(2, np.array([1, 0, 0, 1]) / math.sqrt(2))
    result = run_dfe(DfeConfig(mode="grouped_fc", seed=3), bell, NoisyState(bell, 0.0))
    assert result.estimate == 1.0, result.estimate
    assert result.total_copies == result.config.ell
    return "Bell state, p=0, grouped FC returns exactly 1"


CHECKS: dict[str, Callable[[], str]] = {
    "commutation": check_commutation_vs_matrices,
    "coefficients": check_coefficients,
    "parseval": check_parseval,
    "group_counts": check_group_counts,
    "eigenbases": check_eigenbases,
    "singleton_copies": check_singleton_copies,
    "bell_exact": check_bell_exact,
}


def run_checks() -> dict[str, tuple[bool, str]]:
    results = {}
    for name, check in CHECKS.items():
        try:
            results[name] = (True, check())
        except AssertionError as exc:
            results[name] = (False, f"failed: {exc!r}")
    return results
