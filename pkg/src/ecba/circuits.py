"""Gate-level circuit IR, ansatz builders, decomposition, and resource counts.

Gate kinds: RX, RY, RZ, H, X, Z (one site) and CZ, RXX, RYY, RZZ (two sites).
A rotation carries either a param_index into the parameter vector (variational)
or a fixed angle (structural, e.g. basis changes inside decompositions); all
other kinds carry neither. Qubit 0 is the least significant bit everywhere.

The entangling block shared by the emergent-coupling and hardware-efficient
ansaetze is RXX(a) RYY(b) RZZ(c) with three independent parameters; decomposed
to the native {CZ + single-qubit rotation} set it costs 6 CZ. Rainbow-chain
ansaetze use a lighter block: RY on both qubits, CZ, RY on both qubits, CZ
(2 CZ, 4 parameters), plus trailing RX and RZ on every qubit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .rg import PairingPlan

ONE_QUBIT_KINDS = ("RX", "RY", "RZ", "H", "X", "Z")
TWO_QUBIT_KINDS = ("CZ", "RXX", "RYY", "RZZ")
ROTATION_KINDS = ("RX", "RY", "RZ", "RXX", "RYY", "RZZ")
ENTANGLING_ROTATIONS = ("RXX", "RYY", "RZZ")


@dataclass(frozen=True)
class Gate:
    kind: str
    sites: tuple[int, ...]
    param_index: int | None = None
    angle: float | None = None

    def __post_init__(self) -> None:
        if self.kind in ONE_QUBIT_KINDS:
            arity = 1
        elif self.kind in TWO_QUBIT_KINDS:
            arity = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.sites) != arity:
            raise ValueError(f"{self.kind} expects {arity} site(s), got {self.sites}")
        if len(set(self.sites)) != len(self.sites):
            raise ValueError(f"gate sites must be distinct, got {self.sites}")
        if any(s < 0 for s in self.sites):
            raise ValueError(f"negative site in {self.sites}")
        is_rotation = self.kind in ROTATION_KINDS
        if is_rotation:
            if (self.param_index is None) == (self.angle is None):
                raise ValueError(
                    f"{self.kind} needs exactly one of param_index or a fixed angle"
                )
        elif self.param_index is not None or self.angle is not None:
            raise ValueError(f"{self.kind} takes no parameter or angle")


@dataclass(frozen=True)
class Circuit:
    n: int
    gates: tuple[Gate, ...]
    num_params: int
    layout_edges: frozenset[tuple[int, int]] = field(default_factory=frozenset)

    def __post_init__(self) -> None:
        indices = []
        for g in self.gates:
            if any(s >= self.n for s in g.sites):
                raise ValueError(f"gate {g.kind} on {g.sites} exceeds n={self.n}")
            if g.param_index is not None:
                indices.append(g.param_index)
        if sorted(indices) != list(range(self.num_params)):
            raise ValueError(
                "parameter indices must cover 0..num_params-1 exactly once each"
            )


@dataclass(frozen=True)
class ResourceReport:
    cz_count: int
    depth: int
    num_params: int


def circuit(n: int, gates: list[Gate] | tuple[Gate, ...]) -> Circuit:
    """Assemble a Circuit, deriving num_params and the two-qubit layout edges."""
    gates = tuple(gates)
    indices = sorted(g.param_index for g in gates if g.param_index is not None)
    num_params = indices[-1] + 1 if indices else 0
    edges = frozenset(
        tuple(sorted(g.sites)) for g in gates if len(g.sites) == 2
    )
    return Circuit(n=n, gates=gates, num_params=num_params, layout_edges=edges)


def singlet_init(pairs: tuple[tuple[int, int], ...], n: int) -> Circuit:
    """Prepare (|01> - |10>)/sqrt(2) on each pair of a non-overlapping set.

    Per pair (i, j): X_i, X_j, H_i, then CNOT(i->j) written as H_j CZ(i,j) H_j.
    Costs one CZ per pair.
    """
    seen: set[int] = set()
    gates: list[Gate] = []
    for i, j in pairs:
        if i in seen or j in seen:
            raise ValueError(f"singlet pairs overlap at ({i}, {j})")
        seen.update((i, j))
        gates += [
            Gate("X", (i,)),
            Gate("X", (j,)),
            Gate("H", (i,)),
            Gate("H", (j,)),
            Gate("CZ", (i, j)),
            Gate("H", (j,)),
        ]
    return circuit(n, gates)


def u_alpha(i: int, j: int, param_base: int) -> list[Gate]:
    """Entangling block RXX RYY RZZ on (i, j) with three fresh parameters."""
    return [
        Gate("RXX", (i, j), param_index=param_base),
        Gate("RYY", (i, j), param_index=param_base + 1),
        Gate("RZZ", (i, j), param_index=param_base + 2),
    ]


def build_ecba(plan: PairingPlan) -> Circuit:
    """Emergent-coupling ansatz: singlets on rg_pairs, blocks on add then rg pairs.

    Identity at zero parameters, 3(n-1) parameters total, 6(n-1) + n/2 CZ
    after decomposition.
    """
    gates = list(singlet_init(plan.rg_pairs, plan.n).gates)
    p = 0
    for i, j in plan.add_pairs:
        gates += u_alpha(i, j, p)
        p += 3
    for i, j in plan.rg_pairs:
        gates += u_alpha(i, j, p)
        p += 3
    return circuit(plan.n, gates)


def build_hea_random(n: int) -> Circuit:
    """Hardware-efficient baseline for the disordered chain.

    Singlets on (0,1),(2,3),... then one brick-wall layer of entangling
    blocks: even sublayer (0,1),(2,3),... followed by odd sublayer
    (1,2),(3,4),...; n-1 blocks, matching the emergent-coupling ansatz's
    parameter and CZ counts exactly.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    init_pairs = tuple((i, i + 1) for i in range(0, n - 1, 2))
    gates = list(singlet_init(init_pairs, n).gates)
    p = 0
    for i in range(0, n - 1, 2):
        gates += u_alpha(i, i + 1, p)
        p += 3
    for i in range(1, n - 1, 2):
        gates += u_alpha(i, i + 1, p)
        p += 3
    return circuit(n, gates)


def _ry_block(i: int, j: int, param_base: int) -> list[Gate]:
    # Rainbow-chain block: RY on both qubits before each of two CZs.
    return [
        Gate("RY", (i,), param_index=param_base),
        Gate("RY", (j,), param_index=param_base + 1),
        Gate("CZ", (i, j)),
        Gate("RY", (i,), param_index=param_base + 2),
        Gate("RY", (j,), param_index=param_base + 3),
        Gate("CZ", (i, j)),
    ]


def _trailing_rotations(n: int, param_base: int) -> tuple[list[Gate], int]:
    gates: list[Gate] = []
    p = param_base
    for q in range(n):
        gates.append(Gate("RX", (q,), param_index=p))
        gates.append(Gate("RZ", (q,), param_index=p + 1))
        p += 2
    return gates, p


def build_rainbow_hea(n: int) -> Circuit:
    """Two brick-wall layers of RY/CZ blocks plus trailing RX, RZ per qubit."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    gates: list[Gate] = []
    p = 0
    for _layer in range(2):
        for i in range(0, n - 1, 2):
            gates += _ry_block(i, i + 1, p)
            p += 4
        for i in range(1, n - 1, 2):
            gates += _ry_block(i, i + 1, p)
            p += 4
    trailing, p = _trailing_rotations(n, p)
    return circuit(n, gates + trailing)


def build_rainbow_cba(n: int) -> Circuit:
    """Coupling-based rainbow ansatz: rung layer, brick-wall layer, rung layer.

    Rung blocks act on the pairs (i, n-1-i) tying the two chain halves; the
    middle layer is one nearest-neighbor brick wall; trailing RX, RZ on every
    qubit close the circuit.
    """
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    rungs = [(i, n - 1 - i) for i in range(n // 2)]
    gates: list[Gate] = []
    p = 0
    for i, j in rungs:
        gates += _ry_block(i, j, p)
        p += 4
    for i in range(0, n - 1, 2):
        gates += _ry_block(i, i + 1, p)
        p += 4
    for i in range(1, n - 1, 2):
        gates += _ry_block(i, i + 1, p)
        p += 4
    for i, j in rungs:
        gates += _ry_block(i, j, p)
        p += 4
    trailing, p = _trailing_rotations(n, p)
    return circuit(n, gates + trailing)


def _lower(g: Gate) -> list[Gate]:
    """Decompose one entangling rotation into 2 CZ plus single-qubit gates."""
    i, j = g.sites
    rot = Gate("RX", (j,), param_index=g.param_index, angle=g.angle)
    core = [Gate("CZ", (i, j)), rot, Gate("CZ", (i, j))]
    if g.kind == "RZZ":
        return [Gate("H", (j,)), *core, Gate("H", (j,))]
    if g.kind == "RXX":
        return [Gate("H", (i,)), *core, Gate("H", (i,))]
    if g.kind == "RYY":
        half = 1.5707963267948966  # pi/2
        return [
            Gate("RX", (i,), angle=half),
            Gate("RZ", (j,), angle=-half),
            *core,
            Gate("RX", (i,), angle=-half),
            Gate("RZ", (j,), angle=half),
        ]
    raise ValueError(f"cannot lower {g.kind}")


def decompose(c: Circuit) -> Circuit:
    """Lower every entangling rotation to the native {CZ + 1q rotation} set."""
    gates: list[Gate] = []
    for g in c.gates:
        if g.kind in ENTANGLING_ROTATIONS:
            gates += _lower(g)
        else:
            gates.append(g)
    return circuit(c.n, gates)


def is_decomposed(c: Circuit) -> bool:
    """True when the circuit contains only CZ and single-qubit gates."""
    return all(g.kind not in ENTANGLING_ROTATIONS for g in c.gates)


def resources(c: Circuit) -> ResourceReport:
    """CZ count and dependency-DAG depth after decomposition.

    Adjacent runs of single-qubit gates on the same qubit merge into one
    depth slot, mirroring single-pulse recompilation on hardware.
    """
    lowered = c if is_decomposed(c) else decompose(c)
    depth = [0] * lowered.n
    mergeable = [False] * lowered.n  # last slot on this qubit is a 1q run
    cz = 0
    for g in lowered.gates:
        if len(g.sites) == 1:
            q = g.sites[0]
            if not mergeable[q]:
                depth[q] += 1
                mergeable[q] = True
        else:
            cz += 1
            a, b = g.sites
            slot = max(depth[a], depth[b]) + 1
            depth[a] = depth[b] = slot
            mergeable[a] = mergeable[b] = False
    return ResourceReport(
        cz_count=cz, depth=max(depth) if lowered.gates else 0, num_params=c.num_params
    )


def ecba_cz_count(n: int) -> int:
    """Closed-form CZ count for the emergent-coupling ansatz: 6(n-1) + n/2."""
    return 6 * (n - 1) + n // 2


def circuit_to_text(c: Circuit) -> str:
    """Serialize: header 'n <sites> params <count>', then one gate per line.

    Gate lines read 'KIND site[,site]' with an optional tail: 'p<index>'
    for variational rotations or 'a<angle>' for fixed-angle rotations.
    """
    lines = [f"n {c.n} params {c.num_params}"]
    for g in c.gates:
        entry = f"{g.kind} {','.join(str(s) for s in g.sites)}"
        if g.param_index is not None:
            entry += f" p{g.param_index}"
        elif g.angle is not None:
            entry += f" a{g.angle:.17g}"
        lines.append(entry)
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    """Parse the serialization produced by circuit_to_text (exact round-trip)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty circuit record")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "n" or head[2] != "params":
        raise ValueError(f"bad circuit header: {lines[0]!r}")
    n, num_params = int(head[1]), int(head[3])
    gates: list[Gate] = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"bad gate line: {ln!r}")
        kind = parts[0]
        sites = tuple(int(s) for s in parts[1].split(","))
        param_index = None
        angle = None
        if len(parts) == 3:
            tail = parts[2]
            if tail.startswith("p"):
                param_index = int(tail[1:])
            elif tail.startswith("a"):
                angle = float(tail[1:])
            else:
                raise ValueError(f"bad gate tail: {tail!r}")
        gates.append(Gate(kind, sites, param_index=param_index, angle=angle))
    built = circuit(n, gates)
    if built.num_params != num_params:
        raise ValueError(
            f"header claims {num_params} params, gates define {built.num_params}"
        )
    return built
