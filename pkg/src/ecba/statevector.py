"""Dense statevector engine: exact runs, expectations, and shot sampling.

Amplitudes are indexed little-endian: qubit q contributes bit (index >> q) & 1,
so qubit 0 is the least significant bit. Serialized bitstrings put qubit q at
character position q. The engine refuses systems beyond n = 30 (16 GiB of
amplitudes); callers needing larger systems are out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate
from .hamiltonians import HamiltonianTerms
from .seeding import stream

MAX_QUBITS = 30

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
# Measuring qubit q of (basis_change @ state) in Z realizes the X or Y basis.
_BASIS_CHANGE = {
    "X": _H,
    "Y": _H @ np.array([[1, 0], [0, -1j]], dtype=np.complex128),  # H after S-dagger
    "Z": None,
}


@dataclass
class QuantumState:
    n: int
    amplitudes: np.ndarray

    def copy(self) -> "QuantumState":
        return QuantumState(self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def zero_state(n: int) -> QuantumState:
    if n < 1 or n > MAX_QUBITS:
        raise ValueError(f"n must be in [1, {MAX_QUBITS}], got {n}")
    amps = np.zeros(1 << n, dtype=np.complex128)
    amps[0] = 1.0
    return QuantumState(n, amps)


def _rotation_matrix(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    if kind == "RX":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if kind == "RY":
        return np.array([[c, -s], [s, c]])
    if kind == "RZ":
        return np.array([[c - 1j * s, 0], [0, c + 1j * s]])
    raise ValueError(kind)


def _apply_1q(amps: np.ndarray, n: int, q: int, mat: np.ndarray) -> None:
    view = amps.reshape(-1, 2, 1 << q)
    a = view[:, 0, :]
    b = view[:, 1, :]
    na = mat[0, 0] * a + mat[0, 1] * b
    nb = mat[1, 0] * a + mat[1, 1] * b
    view[:, 0, :] = na
    view[:, 1, :] = nb


def _pair_view(amps: np.ndarray, a: int, b: int) -> np.ndarray:
    # Axes: (high block, bit of max(a,b), middle, bit of min(a,b), low block).
    hi, lo = max(a, b), min(a, b)
    return amps.reshape(-1, 2, 1 << (hi - lo - 1), 2, 1 << lo)


def _apply_cz(amps: np.ndarray, a: int, b: int) -> None:
    view = _pair_view(amps, a, b)
    view[:, 1, :, 1, :] *= -1.0


def _apply_2q(amps: np.ndarray, sites: tuple[int, int], mat: np.ndarray) -> None:
    """Apply a 4x4 matrix in the basis |b_sites0 b_sites1> (first site = MSB)."""
    a, b = sites
    view = _pair_view(amps, a, b)
    hi = max(a, b)
    # slot(bit_hi, bit_lo) -> matrix basis index 2*bit_a + bit_b
    slots = {}
    for bh in (0, 1):
        for bl in (0, 1):
            ba, bb = (bh, bl) if a == hi else (bl, bh)
            slots[2 * ba + bb] = view[:, bh, :, bl, :]
    olds = [slots[m].copy() for m in range(4)]
    for m in range(4):
        acc = mat[m, 0] * olds[0]
        for k in range(1, 4):
            if mat[m, k] != 0:
                acc = acc + mat[m, k] * olds[k]
        slots[m][...] = acc


def _two_qubit_rotation(kind: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2.0), np.sin(theta / 2.0)
    out = np.zeros((4, 4), dtype=np.complex128)
    if kind == "RXX":
        out[0, 0] = out[1, 1] = out[2, 2] = out[3, 3] = c
        out[0, 3] = out[3, 0] = out[1, 2] = out[2, 1] = -1j * s
    elif kind == "RYY":
        out[0, 0] = out[1, 1] = out[2, 2] = out[3, 3] = c
        out[0, 3] = out[3, 0] = 1j * s
        out[1, 2] = out[2, 1] = -1j * s
    elif kind == "RZZ":
        e = np.exp(-0.5j * theta)
        out[0, 0] = out[3, 3] = e
        out[1, 1] = out[2, 2] = np.conj(e)
    else:
        raise ValueError(kind)
    return out


def apply_gate(state: QuantumState, gate: Gate, params: np.ndarray | None = None) -> None:
    """Apply one gate in place; rotations read their angle or parameter."""
    amps = state.amplitudes
    if gate.kind in ("RX", "RY", "RZ"):
        theta = gate.angle if gate.angle is not None else float(params[gate.param_index])
        _apply_1q(amps, state.n, gate.sites[0], _rotation_matrix(gate.kind, theta))
    elif gate.kind == "H":
        _apply_1q(amps, state.n, gate.sites[0], _H)
    elif gate.kind == "X":
        _apply_1q(amps, state.n, gate.sites[0], _X)
    elif gate.kind == "Z":
        _apply_1q(amps, state.n, gate.sites[0], _Z)
    elif gate.kind == "CZ":
        _apply_cz(amps, *gate.sites)
    else:
        theta = gate.angle if gate.angle is not None else float(params[gate.param_index])
        _apply_2q(amps, gate.sites, _two_qubit_rotation(gate.kind, theta))


def apply_pauli(state: QuantumState, q: int, letter: str) -> None:
    """Apply a single-qubit Pauli in place (used by noise and gradients)."""
    if letter == "X":
        _apply_1q(state.amplitudes, state.n, q, _X)
    elif letter == "Z":
        _apply_1q(state.amplitudes, state.n, q, _Z)
    elif letter == "Y":
        _apply_1q(state.amplitudes, state.n, q, np.array([[0, -1j], [1j, 0]]))
    else:
        raise ValueError(f"bad Pauli letter {letter!r}")


def run(c: Circuit, params: np.ndarray | list[float] | None = None) -> QuantumState:
    """Run the circuit on |0...0>; params length must match num_params."""
    if c.n > MAX_QUBITS:
        raise ValueError(f"statevector engine supports n <= {MAX_QUBITS}, got {c.n}")
    vec = np.asarray(params if params is not None else [], dtype=np.float64)
    if vec.size != c.num_params:
        raise ValueError(f"expected {c.num_params} parameters, got {vec.size}")
    state = zero_state(c.n)
    for g in c.gates:
        apply_gate(state, g, vec)
    return state


def apply_hamiltonian(state: QuantumState, h: HamiltonianTerms) -> QuantumState:
    """Return H|psi> for the Heisenberg term list (weights carry the 1/4)."""
    if h.n != state.n:
        raise ValueError(f"terms for n={h.n} applied to state with n={state.n}")
    out = np.zeros_like(state.amplitudes)
    for i, j, w in h.terms:
        view = _pair_view(state.amplitudes, i, j)
        acc = _pair_view(out, i, j)
        quarter = 0.25 * w
        acc[:, 0, :, 0, :] += quarter * view[:, 0, :, 0, :]
        acc[:, 1, :, 1, :] += quarter * view[:, 1, :, 1, :]
        acc[:, 0, :, 1, :] += quarter * (2.0 * view[:, 1, :, 0, :] - view[:, 0, :, 1, :])
        acc[:, 1, :, 0, :] += quarter * (2.0 * view[:, 0, :, 1, :] - view[:, 1, :, 0, :])
    return QuantumState(state.n, out)


def energy(state: QuantumState, h: HamiltonianTerms) -> float:
    """<psi|H|psi> = (1/4) sum of weight * (<XX> + <YY> + <ZZ>) over terms."""
    hpsi = apply_hamiltonian(state, h)
    return float(np.real(np.vdot(state.amplitudes, hpsi.amplitudes)))


def pair_correlators(state: QuantumState, i: int, j: int) -> tuple[float, float, float]:
    """(<X_iX_j>, <Y_iY_j>, <Z_iZ_j>) for one site pair."""
    if i == j or not (0 <= i < state.n and 0 <= j < state.n):
        raise ValueError(f"bad correlator pair ({i}, {j}) for n={state.n}")
    view = _pair_view(state.amplitudes, i, j)
    aligned = float(np.sum(np.abs(view[:, 0, :, 0, :]) ** 2) + np.sum(np.abs(view[:, 1, :, 1, :]) ** 2))
    anti = float(np.sum(np.abs(view[:, 0, :, 1, :]) ** 2) + np.sum(np.abs(view[:, 1, :, 0, :]) ** 2))
    cross_eq = float(np.real(np.sum(np.conj(view[:, 0, :, 0, :]) * view[:, 1, :, 1, :])))
    cross_ne = float(np.real(np.sum(np.conj(view[:, 0, :, 1, :]) * view[:, 1, :, 0, :])))
    xx = 2.0 * (cross_eq + cross_ne)
    yy = 2.0 * (cross_ne - cross_eq)
    zz = aligned - anti
    return xx, yy, zz


def correlation_matrix(state: QuantumState) -> np.ndarray:
    """C_ij = <XX> + <YY> + <ZZ> with C_ii = 3; witness threshold is C < -1."""
    n = state.n
    c = np.full((n, n), 3.0)
    for i in range(n):
        for j in range(i + 1, n):
            xx, yy, zz = pair_correlators(state, i, j)
            c[i, j] = c[j, i] = xx + yy + zz
    return c


def witness_pairs(c: np.ndarray) -> np.ndarray:
    """Boolean matrix flagging pairs whose correlation certifies entanglement.

    C_ij < -1 is impossible for any separable state of the pair, so a True
    entry witnesses entanglement between sites i and j. Diagonal is False.
    """
    flags = np.asarray(c) < -1.0
    np.fill_diagonal(flags, False)
    return flags


@dataclass(frozen=True)
class ShotTable:
    """Measured bitstring counts for one basis ('X', 'Y', or 'Z')."""

    basis: str
    n: int
    shots: int
    counts: dict[str, int]

    def __post_init__(self) -> None:
        if self.basis not in ("X", "Y", "Z"):
            raise ValueError(f"basis must be X, Y or Z, got {self.basis!r}")
        if sum(self.counts.values()) != self.shots:
            raise ValueError("counts do not sum to shots")
        for bits in self.counts:
            if len(bits) != self.n or set(bits) - {"0", "1"}:
                raise ValueError(f"bad bitstring {bits!r} for n={self.n}")


def _bitstring(index: int, n: int) -> str:
    # Character position q holds the bit of qubit q.
    return "".join("1" if (index >> q) & 1 else "0" for q in range(n))


def sample_indices(state: QuantumState, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Sample basis-state indices from |amplitudes|^2."""
    probs = np.abs(state.amplitudes) ** 2
    probs = probs / probs.sum()
    edges = np.cumsum(probs)
    draws = rng.random(shots)
    return np.searchsorted(edges, draws, side="right").astype(np.int64)


def rotate_to_basis(state: QuantumState, basis: str) -> QuantumState:
    """Copy of the state rotated so a Z measurement realizes the given basis."""
    mat = _BASIS_CHANGE[basis]
    rotated = state.copy()
    if mat is not None:
        for q in range(state.n):
            _apply_1q(rotated.amplitudes, state.n, q, mat)
    return rotated


def sample_shots(
    state: QuantumState, bases: tuple[str, ...], shots: int, seed: int
) -> dict[str, ShotTable]:
    """Measure `shots` bitstrings in each requested basis from a seeded stream."""
    rng = stream(seed)
    tables = {}
    for basis in bases:
        if basis not in _BASIS_CHANGE:
            raise ValueError(f"basis must be X, Y or Z, got {basis!r}")
        rotated = rotate_to_basis(state, basis)
        idx = sample_indices(rotated, shots, rng)
        values, freq = np.unique(idx, return_counts=True)
        counts = {_bitstring(int(v), state.n): int(f) for v, f in zip(values, freq)}
        tables[basis] = ShotTable(basis=basis, n=state.n, shots=shots, counts=counts)
    return tables


def parity_mean(table: ShotTable, i: int, j: int) -> float:
    """Estimate <P_iP_j> in the table's basis as the mean of (-1)^(b_i xor b_j)."""
    total = 0
    for bits, count in table.counts.items():
        total += count if bits[i] == bits[j] else -count
    return total / table.shots


def energy_from_shots(
    tables: dict[str, ShotTable], h: HamiltonianTerms
) -> tuple[float, float]:
    """Parity-based energy estimate and its standard error from shot tables.

    Each basis table contributes (1/4) sum_terms w * parity(i, j); the error
    combines the per-basis shot-resolved variances, treating bases as
    independent (they come from separate circuit executions).
    """
    need = {"X", "Y", "Z"}
    if not need <= set(tables):
        raise ValueError(
            f"need shot tables for bases {sorted(need)}, have {sorted(tables)}"
        )
    value = 0.0
    variance = 0.0
    for basis in sorted(need):
        table = tables[basis]
        samples = []
        weights = []
        for bits, count in table.counts.items():
            e = 0.0
            for i, j, w in h.terms:
                e += 0.25 * w * (1.0 if bits[i] == bits[j] else -1.0)
            samples.append(e)
            weights.append(count)
        samples = np.asarray(samples)
        weights = np.asarray(weights, dtype=np.float64)
        shots = weights.sum()
        mean = float(np.dot(weights, samples) / shots)
        if shots > 1:
            var = float(np.dot(weights, (samples - mean) ** 2) / (shots - 1.0))
            variance += var / shots
        value += mean
    return value, float(np.sqrt(variance))


def shot_tables_to_csv(tables: dict[str, ShotTable]) -> str:
    """CSV with one 'basis,bitstring,count' row per observed bitstring."""
    lines = ["basis,bitstring,count"]
    for basis in sorted(tables):
        t = tables[basis]
        for bits in sorted(t.counts):
            lines.append(f"{t.basis},{bits},{t.counts[bits]}")
    return "\n".join(lines) + "\n"


def shot_tables_from_csv(text: str) -> dict[str, ShotTable]:
    """Parse the CSV produced by shot_tables_to_csv."""
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0] != "basis,bitstring,count":
        raise ValueError("bad shot table CSV header")
    grouped: dict[str, dict[str, int]] = {}
    n = None
    for ln in rows[1:]:
        basis, bits, count = ln.split(",")
        grouped.setdefault(basis, {})[bits] = int(count)
        n = len(bits)
    return {
        b: ShotTable(basis=b, n=n, shots=sum(c.values()), counts=c)
        for b, c in grouped.items()
    }


def state_to_text(state: QuantumState) -> str:
    """Sparse text dump: header `state n <n>`, then `<index> <re> <im>` rows."""
    lines = [f"state n {state.n}"]
    amps = state.amplitudes
    for idx in np.nonzero(amps)[0]:
        a = amps[idx]
        lines.append(f"{int(idx)} {a.real:.17g} {a.imag:.17g}")
    return "\n".join(lines) + "\n"


def state_from_text(text: str) -> QuantumState:
    """Parse the dump produced by state_to_text."""
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows or not rows[0].startswith("state n "):
        raise ValueError("bad state dump header")
    n = int(rows[0].split()[2])
    if n < 1 or n > MAX_QUBITS:
        raise ValueError(f"bad qubit count {n} in state dump")
    amps = np.zeros(1 << n, dtype=np.complex128)
    for ln in rows[1:]:
        idx_s, re_s, im_s = ln.split()
        amps[int(idx_s)] = complex(float(re_s), float(im_s))
    return QuantumState(n, amps)
