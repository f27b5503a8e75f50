"""Statevector engine against brute-force dense linear algebra."""

import numpy as np
import pytest

from conftest import dense_gate, dense_hamiltonian, dense_unitary
from ecba.circuits import Gate, circuit
from ecba.hamiltonians import HamiltonianTerms, chain_terms, sample_couplings
from ecba.statevector import (
    QuantumState,
    ShotTable,
    apply_hamiltonian,
    apply_pauli,
    correlation_matrix,
    energy,
    energy_from_shots,
    pair_correlators,
    parity_mean,
    run,
    sample_shots,
    shot_tables_from_csv,
    shot_tables_to_csv,
    zero_state,
)


def _random_state(n: int, seed: int) -> QuantumState:
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    amps /= np.linalg.norm(amps)
    st = zero_state(n)
    st.amplitudes[:] = amps
    return st


def _random_gates(n: int, count: int, rng) -> tuple[list[Gate], np.ndarray]:
    kinds_1q = ["RX", "RY", "RZ", "H", "X", "Z"]
    kinds_2q = ["CZ", "RXX", "RYY", "RZZ"]
    gates = []
    thetas = []
    for _ in range(count):
        if n < 2 or rng.random() < 0.5:
            kind = kinds_1q[rng.integers(len(kinds_1q))]
            sites = (int(rng.integers(n)),)
        else:
            kind = kinds_2q[rng.integers(len(kinds_2q))]
            a, b = rng.choice(n, size=2, replace=False)
            sites = (int(a), int(b))
        if kind in ("RX", "RY", "RZ", "RXX", "RYY", "RZZ"):
            gates.append(Gate(kind, sites, param_index=len(thetas)))
            thetas.append(rng.uniform(-np.pi, np.pi))
        else:
            gates.append(Gate(kind, sites))
    return gates, np.asarray(thetas)


def test_engine_matches_dense_unitary():
    rng = np.random.default_rng(20)
    for n in (1, 2, 3, 5, 6):
        gates, thetas = _random_gates(n, 40, rng)
        c = circuit(n, gates)
        u = dense_unitary(c, thetas)
        st = run(c, thetas)
        assert np.max(np.abs(st.amplitudes - u[:, 0])) < 1e-12


def test_single_gate_on_random_state():
    # Each gate kind applied at every qubit position, against dense matrices.
    rng = np.random.default_rng(21)
    n = 4
    for kind in ("RX", "RY", "RZ", "H", "X", "Z"):
        for q in range(n):
            st = _random_state(n, seed=100 + q)
            ref = st.amplitudes.copy()
            if kind in ("RX", "RY", "RZ"):
                g = Gate(kind, (q,), param_index=0)
                theta = [rng.uniform(-3, 3)]
            else:
                g = Gate(kind, (q,))
                theta = []
            from ecba.statevector import apply_gate

            apply_gate(st, g, theta)
            expect = dense_gate(g, n, theta) @ ref
            assert np.max(np.abs(st.amplitudes - expect)) < 1e-12
    for kind in ("CZ", "RXX", "RYY", "RZZ"):
        for a, b in ((0, 1), (1, 0), (0, 3), (3, 0), (1, 2), (2, 3)):
            st = _random_state(n, seed=200 + a * 4 + b)
            ref = st.amplitudes.copy()
            if kind == "CZ":
                g = Gate(kind, (a, b))
                theta = []
            else:
                g = Gate(kind, (a, b), param_index=0)
                theta = [rng.uniform(-3, 3)]
            from ecba.statevector import apply_gate

            apply_gate(st, g, theta)
            expect = dense_gate(g, n, theta) @ ref
            assert np.max(np.abs(st.amplitudes - expect)) < 1e-12


def test_apply_pauli_matches_dense():
    from conftest import dense_1q, _PAULI

    for letter in "XYZ":
        for q in range(3):
            st = _random_state(3, seed=17 + q)
            ref = st.amplitudes.copy()
            apply_pauli(st, q, letter)
            expect = dense_1q(_PAULI[letter], q, 3) @ ref
            assert np.max(np.abs(st.amplitudes - expect)) < 1e-13


def test_norm_preserved_over_long_run():
    rng = np.random.default_rng(22)
    n = 12
    gates, thetas = _random_gates(n, 10_000, rng)
    st = run(circuit(n, gates), thetas)
    assert abs(st.norm() - 1.0) < 1e-10


def test_qubit_count_limits():
    with pytest.raises(ValueError):
        zero_state(0)
    with pytest.raises(ValueError):
        zero_state(31)


def test_param_count_mismatch_rejected():
    c = circuit(2, [Gate("RX", (0,), param_index=0)])
    with pytest.raises(ValueError):
        run(c, [0.1, 0.2])
    with pytest.raises(ValueError):
        run(c)


def test_apply_hamiltonian_matches_dense():
    rng = np.random.default_rng(23)
    for n in (2, 4, 6):
        terms = []
        for _ in range(2 * n):
            i, j = rng.choice(n, size=2, replace=False)
            terms.append((int(i), int(j), float(rng.uniform(0.1, 1.0))))
        h = HamiltonianTerms(n=n, terms=tuple(terms))
        st = _random_state(n, seed=50 + n)
        hm = dense_hamiltonian(h)
        expect = hm @ st.amplitudes
        out = apply_hamiltonian(st, h)
        assert np.max(np.abs(out.amplitudes - expect)) < 1e-12
        e_expect = float(np.real(st.amplitudes.conj() @ expect))
        assert energy(st, h) == pytest.approx(e_expect, abs=1e-12)


def test_singlet_energy_and_correlators():
    st = zero_state(2)
    st.amplitudes[:] = 0
    st.amplitudes[0b01] = 1 / np.sqrt(2)
    st.amplitudes[0b10] = -1 / np.sqrt(2)
    h = HamiltonianTerms(n=2, terms=((0, 1, 0.7),))
    assert energy(st, h) == pytest.approx(-0.75 * 0.7, abs=1e-12)
    xx, yy, zz = pair_correlators(st, 0, 1)
    assert (xx, yy, zz) == pytest.approx((-1.0, -1.0, -1.0), abs=1e-12)
    c = correlation_matrix(st)
    assert c[0, 1] == pytest.approx(-3.0, abs=1e-12)
    assert c[0, 0] == c[1, 1] == 3.0


def test_product_state_correlators():
    st = zero_state(4)
    xx, yy, zz = pair_correlators(st, 0, 2)
    assert (xx, yy, zz) == pytest.approx((0.0, 0.0, 1.0), abs=1e-12)
    with pytest.raises(ValueError):
        pair_correlators(st, 1, 1)


def test_correlation_matrix_matches_dense():
    from conftest import dense_1q, _PAULI

    st = _random_state(3, seed=60)
    c = correlation_matrix(st)
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            total = 0.0
            for letter in "XYZ":
                op = dense_1q(_PAULI[letter], i, 3) @ dense_1q(_PAULI[letter], j, 3)
                total += float(np.real(st.amplitudes.conj() @ op @ st.amplitudes))
            assert c[i, j] == pytest.approx(total, abs=1e-12)


def test_sampling_plus_state_x_basis_deterministic():
    # |+>^n measured in the X basis yields only the all-zeros string.
    n = 3
    st = zero_state(n)
    st.amplitudes[:] = 1 / np.sqrt(1 << n)
    tables = sample_shots(st, bases=("X",), shots=500, seed=9)
    assert tables["X"].counts == {"000": 500}


def test_sampling_singlet_zz_parity():
    st = zero_state(2)
    st.amplitudes[:] = 0
    st.amplitudes[0b01] = 1 / np.sqrt(2)
    st.amplitudes[0b10] = -1 / np.sqrt(2)
    shots = 100_000
    tables = sample_shots(st, bases=("Z",), shots=shots, seed=3)
    assert parity_mean(tables["Z"], 0, 1) == -1.0
    # And in X/Y bases the singlet parity is also exactly -1.
    tables = sample_shots(st, bases=("X", "Y"), shots=shots, seed=4)
    assert parity_mean(tables["X"], 0, 1) == -1.0
    assert parity_mean(tables["Y"], 0, 1) == -1.0


def test_sampling_distribution_matches_probabilities():
    st = _random_state(3, seed=70)
    shots = 200_000
    tables = sample_shots(st, bases=("Z",), shots=shots, seed=8)
    probs = np.abs(st.amplitudes) ** 2
    for idx in range(8):
        bits = format(idx, "03b")[::-1]  # char position q = qubit q
        got = tables["Z"].counts.get(bits, 0) / shots
        se = np.sqrt(probs[idx] * (1 - probs[idx]) / shots)
        assert abs(got - probs[idx]) < 6 * se + 1e-9


def test_energy_from_shots_converges():
    rng = np.random.default_rng(24)
    n = 4
    real = sample_couplings(n, 2.0, seed=6)
    h = chain_terms(real)
    st = _random_state(n, seed=80)
    exact = energy(st, h)
    tables = sample_shots(st, bases=("X", "Y", "Z"), shots=1_000_000, seed=12)
    est, se = energy_from_shots(tables, h)
    assert se > 0
    assert abs(est - exact) < 5 * se


def test_energy_from_shots_requires_all_bases():
    st = zero_state(2)
    h = HamiltonianTerms(n=2, terms=((0, 1, 1.0),))
    tables = sample_shots(st, bases=("Z",), shots=10, seed=1)
    with pytest.raises(ValueError):
        energy_from_shots(tables, h)


def test_sampling_determinism():
    st = _random_state(4, seed=90)
    a = sample_shots(st, bases=("X", "Y", "Z"), shots=1000, seed=42)
    b = sample_shots(st, bases=("X", "Y", "Z"), shots=1000, seed=42)
    assert all(a[k].counts == b[k].counts for k in "XYZ")
    c = sample_shots(st, bases=("X", "Y", "Z"), shots=1000, seed=43)
    assert any(a[k].counts != c[k].counts for k in "XYZ")


def test_shot_table_validation():
    with pytest.raises(ValueError):
        ShotTable(basis="Q", n=2, shots=1, counts={"00": 1})
    with pytest.raises(ValueError):
        ShotTable(basis="Z", n=2, shots=5, counts={"00": 1})
    with pytest.raises(ValueError):
        ShotTable(basis="Z", n=2, shots=1, counts={"0": 1})


def test_shot_csv_round_trip():
    st = _random_state(3, seed=95)
    tables = sample_shots(st, bases=("X", "Y", "Z"), shots=777, seed=5)
    text = shot_tables_to_csv(tables)
    back = shot_tables_from_csv(text)
    assert set(back) == set("XYZ")
    for k in "XYZ":
        assert back[k] == tables[k]


def test_ecba_zero_angles_scores_exactly_the_singlet_chain_bonds():
    # With every rotation at zero, the ansatz is its singlet initialization:
    # each paired bond contributes -3J/4 and terms across different pairs
    # vanish because single-site spin expectations inside a singlet are zero.
    from ecba.circuits import build_ecba
    from ecba.rg import make_plan

    for seed in (1, 4, 9):
        real = sample_couplings(12, 8.0, seed)
        plan = make_plan(real)
        circ = build_ecba(plan)
        state = run(circ, np.zeros(circ.num_params))
        expected = sum(
            -0.75 * real.couplings[min(a, b)]
            for a, b in plan.rg_pairs
            if abs(a - b) == 1
        )
        assert energy(state, chain_terms(real)) == pytest.approx(expected, abs=1e-12)
