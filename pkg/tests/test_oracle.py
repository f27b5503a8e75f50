"""Exact-oracle checks against dense diagonalization and closed forms."""

import numpy as np
import pytest

from conftest import dense_hamiltonian
from ecba.hamiltonians import HamiltonianTerms, chain_terms, rainbow_terms, RainbowSpec, sample_couplings
from ecba.oracle import (
    OracleResult,
    SectorHamiltonian,
    exact_correlations,
    ground_state,
    oracle_from_text,
    oracle_to_text,
    sector_states,
)
from ecba.rg import make_plan
from ecba.statevector import witness_pairs


def test_sector_states_basics():
    s2 = sector_states(2)
    assert list(s2) == [0b01, 0b10]
    s4 = sector_states(4)
    assert s4.size == 6
    assert all(bin(int(v)).count("1") == 2 for v in s4)
    with pytest.raises(ValueError):
        sector_states(3)


def test_sector_matvec_matches_dense_restriction():
    rng = np.random.default_rng(31)
    for n in (2, 4, 6):
        terms = []
        for _ in range(2 * n):
            i, j = rng.choice(n, size=2, replace=False)
            terms.append((int(i), int(j), float(rng.uniform(0.1, 1.0))))
        h = HamiltonianTerms(n=n, terms=tuple(terms))
        op = SectorHamiltonian(h)
        full = dense_hamiltonian(h)
        restricted = full[np.ix_(op.states, op.states)].real
        x = rng.normal(size=op.dim)
        assert np.max(np.abs(op.matvec(x) - restricted @ x)) < 1e-12
        assert np.max(np.abs(op.dense() - restricted)) < 1e-12


def test_single_bond_ground_energy():
    for j in (1.0, 0.37, 5.0):
        h = HamiltonianTerms(n=2, terms=((0, 1, j),))
        res = ground_state(h)
        assert res.energy == pytest.approx(-0.75 * j, abs=1e-12)
        assert res.residual < 1e-8


def test_uniform_four_site_chain_vs_dense():
    h = HamiltonianTerms(n=4, terms=((0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)))
    res = ground_state(h)
    full = dense_hamiltonian(h)
    exact = float(np.linalg.eigvalsh(full)[0])
    assert res.energy == pytest.approx(exact, abs=1e-12)


def test_iterative_matches_dense_small_systems():
    # 20 random instances, n up to 10, against full 2^n dense eigensolve.
    count = 0
    for n in (6, 8, 10):
        for seed in range(7):
            if count >= 20:
                break
            real = sample_couplings(n, [1.0, 2.0, 8.0][seed % 3], seed=seed)
            h = chain_terms(real)
            res = ground_state(h, want_state=False)
            exact = float(np.linalg.eigvalsh(dense_hamiltonian(h))[0])
            assert res.energy == pytest.approx(exact, abs=1e-9)
            assert res.residual < 1e-8
            count += 1
    assert count == 20


def test_ground_state_vector_is_eigenvector():
    real = sample_couplings(8, 8.0, seed=5)
    h = chain_terms(real)
    res = ground_state(h)
    full = dense_hamiltonian(h)
    amps = res.state.amplitudes
    assert np.linalg.norm(full @ amps - res.energy * amps) < 1e-8
    # Weight lives entirely in the half-filled sector.
    outside = np.ones(1 << 8, dtype=bool)
    outside[sector_states(8)] = False
    assert np.max(np.abs(amps[outside])) == 0.0


def test_rainbow_ground_energy_perturbative_window():
    # J=100 rungs lock into singlets at -3J/4 each; the alpha=1 rails shift
    # the total by O(n alpha^2 / J).
    spec = RainbowSpec(n=10, alpha=1.0, j=100.0)
    h = rainbow_terms(spec)
    res = ground_state(h, want_state=False)
    assert res.energy < -375.0  # rail coupling only lowers the rung product
    assert abs(res.energy - (-375.0)) < 1.5
    exact = float(np.linalg.eigvalsh(dense_hamiltonian(h))[0])
    assert res.energy == pytest.approx(exact, abs=1e-9)


def test_determinism():
    h = chain_terms(sample_couplings(10, 2.0, seed=3))
    a = ground_state(h)
    b = ground_state(h)
    assert a.energy == b.energy
    assert np.array_equal(a.state.amplitudes, b.state.amplitudes)


def test_correlations_sum_rule_and_witness():
    # S_tot = 0 forces sum_{i!=j} C_ij = -3n; strongest pairs sit on RG bonds.
    for seed in (1, 2, 3):
        real = sample_couplings(12, 8.0, seed=seed)
        h = chain_terms(real)
        res = ground_state(h)
        c = exact_correlations(res)
        n = 12
        off_diag_sum = float(c.sum() - np.trace(c))
        assert off_diag_sum == pytest.approx(-3.0 * n, abs=1e-6)
        plan = make_plan(real)
        flags = witness_pairs(c)
        masked = c.copy()
        np.fill_diagonal(masked, np.inf)
        # Each site's most negative partner is its RG partner at strong disorder.
        partner = {i: j for i, j in plan.rg_pairs} | {j: i for i, j in plan.rg_pairs}
        hits = sum(1 for i in range(n) if int(np.argmin(masked[i])) == partner[i])
        assert hits >= n - 2  # allow rare near-degenerate competition
        assert all(flags[i, partner[i]] for i in range(n)) or hits == n


def test_exact_correlations_requires_state():
    h = HamiltonianTerms(n=2, terms=((0, 1, 1.0),))
    res = ground_state(h, want_state=False)
    with pytest.raises(ValueError):
        exact_correlations(res)


def test_size_cap():
    h = HamiltonianTerms(n=26, terms=((0, 1, 1.0),))
    with pytest.raises(ValueError):
        ground_state(h)


def test_oracle_text_round_trip():
    h = chain_terms(sample_couplings(4, 2.0, seed=9))
    res = ground_state(h)
    text = oracle_to_text(res, include_state=True)
    back = oracle_from_text(text)
    assert back.energy == res.energy
    assert back.residual == res.residual
    assert np.array_equal(back.state.amplitudes, res.state.amplitudes)
    bare = oracle_from_text(oracle_to_text(res))
    assert bare.state is None
    assert bare.energy == res.energy
    with pytest.raises(ValueError):
        oracle_from_text("garbage\n")
