"""Shared brute-force reference constructions, independent of the engine.

Everything here builds explicit 2^n x 2^n matrices by index arithmetic or
matrix exponentials, deliberately avoiding the reshape-view kernels used by
the package, so engine-vs-dense comparisons exercise two separate code paths.
"""

import numpy as np
import scipy.linalg

_PAULI = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
    "H": np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2.0),
}


def dense_1q(u: np.ndarray, q: int, n: int) -> np.ndarray:
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        bit = (col >> q) & 1
        rest = col & ~(1 << q)
        for row_bit in (0, 1):
            m[rest | (row_bit << q), col] += u[row_bit, bit]
    return m


def dense_2q(u4: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    # u4 acts in the basis indexed by 2*bit_a + bit_b.
    dim = 1 << n
    m = np.zeros((dim, dim), dtype=np.complex128)
    for col in range(dim):
        cin = 2 * ((col >> a) & 1) + ((col >> b) & 1)
        rest = col & ~(1 << a) & ~(1 << b)
        for ra in (0, 1):
            for rb in (0, 1):
                m[rest | (ra << a) | (rb << b), col] += u4[2 * ra + rb, cin]
    return m


def dense_rotation_1q(kind: str, theta: float) -> np.ndarray:
    axis = {"RX": "X", "RY": "Y", "RZ": "Z"}[kind]
    return scipy.linalg.expm(-0.5j * theta * _PAULI[axis])


def dense_rotation_2q(kind: str, theta: float) -> np.ndarray:
    axis = {"RXX": "X", "RYY": "Y", "RZZ": "Z"}[kind]
    pp = np.kron(_PAULI[axis], _PAULI[axis])
    return scipy.linalg.expm(-0.5j * theta * pp)


def dense_gate(gate, n: int, params) -> np.ndarray:
    theta = None
    if gate.param_index is not None:
        theta = float(params[gate.param_index])
    elif gate.angle is not None:
        theta = gate.angle
    if gate.kind in ("RX", "RY", "RZ"):
        return dense_1q(dense_rotation_1q(gate.kind, theta), gate.sites[0], n)
    if gate.kind in ("H", "X", "Z"):
        return dense_1q(_PAULI[gate.kind], gate.sites[0], n)
    if gate.kind == "CZ":
        u4 = np.diag([1.0, 1.0, 1.0, -1.0]).astype(np.complex128)
        return dense_2q(u4, gate.sites[0], gate.sites[1], n)
    if gate.kind in ("RXX", "RYY", "RZZ"):
        return dense_2q(dense_rotation_2q(gate.kind, theta), gate.sites[0], gate.sites[1], n)
    raise ValueError(gate.kind)


def dense_unitary(circ, params) -> np.ndarray:
    u = np.eye(1 << circ.n, dtype=np.complex128)
    for g in circ.gates:
        u = dense_gate(g, circ.n, params) @ u
    return u


def dense_hamiltonian(h) -> np.ndarray:
    dim = 1 << h.n
    m = np.zeros((dim, dim), dtype=np.complex128)
    for i, j, w in h.terms:
        for axis in ("X", "Y", "Z"):
            pi = dense_1q(_PAULI[axis], i, h.n)
            pj = dense_1q(_PAULI[axis], j, h.n)
            m += 0.25 * w * (pi @ pj)
    return m


def global_phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Min over phases of ||a - e^{i phi} b||; zero iff equal up to phase."""
    overlap = np.vdot(b, a)
    if abs(overlap) < 1e-300:
        return float(np.linalg.norm(a - b))
    phase = overlap / abs(overlap)
    return float(np.linalg.norm(a - phase * b))
