"""Strong-disorder decimation of a random Heisenberg chain into a pairing plan.

The decimation loop repeatedly removes the currently strongest bond, pairing
its two endpoints into a singlet. Decimating an interior bond J_k joins its
neighbors with the renormalized coupling

    J' = J_{k-1} * J_{k+1} / (2 * J_k)

which is always weaker than every coupling involved, so the flow is monotone.
Boundary bonds pair without renormalization. The resulting perfect matching
(rg_pairs) fixes both the singlet initialization and one block layer of the
emergent-coupling ansatz; the second block layer lives on the n/2 - 1
strongest not-yet-paired nearest-neighbor bonds (add_pairs).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .hamiltonians import CouplingRealization, couplings_to_text


class PlanInvariantError(ValueError):
    """A pairing plan violated a structural invariant (matching, degree, triangle)."""


@dataclass(frozen=True)
class RenormalizationStep:
    """One interior decimation: J' = j_left * j_right / (2 * j_center)."""

    j_left: float
    j_center: float
    j_right: float
    j_new: float


@dataclass(frozen=True)
class PairingPlan:
    """Decimation output: rg_pairs in decimation order, add_pairs by strength."""

    n: int
    rg_pairs: tuple[tuple[int, int], ...]
    add_pairs: tuple[tuple[int, int], ...]
    provenance: str

    def __post_init__(self) -> None:
        if len(self.rg_pairs) != self.n // 2:
            raise PlanInvariantError(
                f"expected {self.n // 2} rg pairs for n={self.n}, got {len(self.rg_pairs)}"
            )
        seen: set[int] = set()
        for i, j in self.rg_pairs:
            seen.update((i, j))
        if seen != set(range(self.n)):
            raise PlanInvariantError("rg_pairs is not a perfect matching of the sites")
        if len(self.add_pairs) != self.n // 2 - 1:
            raise PlanInvariantError(
                f"expected {self.n // 2 - 1} add pairs, got {len(self.add_pairs)}"
            )
        rg_set = {frozenset(p) for p in self.rg_pairs}
        add_set = {frozenset(p) for p in self.add_pairs}
        if rg_set & add_set:
            raise PlanInvariantError("add_pairs must be disjoint from rg_pairs")
        if len(add_set) != len(self.add_pairs):
            raise PlanInvariantError("add_pairs contains duplicates")


def _decimate(couplings: tuple[float, ...]) -> tuple[list[tuple[int, int]], list[RenormalizationStep]]:
    """Run the decimation loop; returns pairs in order plus renormalization trace."""
    sites = list(range(len(couplings) + 1))
    j_temp = list(couplings)
    pairs: list[tuple[int, int]] = []
    steps: list[RenormalizationStep] = []
    while sites:
        k = int(np.argmax(j_temp))  # ties resolve to the lowest index
        if len(sites) == 2:
            pairs.append((sites[0], sites[1]))
            del sites[0:2]
            del j_temp[0]
        elif k == 0:
            pairs.append((sites[0], sites[1]))
            del sites[0:2]
            del j_temp[0:2]
        elif k == len(j_temp) - 1:
            # Right boundary: both bonds touching the decimated pair die.
            pairs.append((sites[k], sites[k + 1]))
            del sites[k : k + 2]
            del j_temp[k - 1 : k + 1]
        else:
            j_new = j_temp[k - 1] * j_temp[k + 1] / (2.0 * j_temp[k])
            steps.append(
                RenormalizationStep(
                    j_left=j_temp[k - 1], j_center=j_temp[k], j_right=j_temp[k + 1], j_new=j_new
                )
            )
            j_temp[k - 1] = j_new
            pairs.append((sites[k], sites[k + 1]))
            del sites[k : k + 2]
            del j_temp[k : k + 2]
    return pairs, steps


def rg_pairing(real: CouplingRealization) -> tuple[tuple[int, int], ...]:
    """Perfect matching of the sites in decimation order."""
    pairs, _ = _decimate(real.couplings)
    return tuple(pairs)


def decimation_trace(real: CouplingRealization) -> tuple[tuple[tuple[int, int], ...], tuple[RenormalizationStep, ...]]:
    """Like rg_pairing but also returns every interior renormalization step."""
    pairs, steps = _decimate(real.couplings)
    return tuple(pairs), tuple(steps)


def select_strongest(
    real: CouplingRealization, rg_pairs: tuple[tuple[int, int], ...]
) -> tuple[tuple[int, int], ...]:
    """The n/2 - 1 strongest nearest-neighbor bonds not already rg-paired.

    Works on a copy of the original couplings, zeroing each inspected entry;
    emits pairs in strength-descending selection order.
    """
    rg_set = {frozenset(p) for p in rg_pairs}
    j_temp = list(real.couplings)
    selected: list[tuple[int, int]] = []
    while len(selected) < real.n // 2 - 1:
        k = int(np.argmax(j_temp))
        if j_temp[k] <= 0.0:
            raise PlanInvariantError("ran out of positive bonds before filling add_pairs")
        if frozenset((k, k + 1)) in rg_set:
            j_temp[k] = 0.0
        else:
            selected.append((k, k + 1))
            j_temp[k] = 0.0
    return tuple(selected)


def make_plan(real: CouplingRealization) -> PairingPlan:
    """Full decimation pipeline: rg pairing, strongest-bond selection, provenance."""
    rg = rg_pairing(real)
    add = select_strongest(real, rg)
    digest = hashlib.sha256(couplings_to_text(real).encode()).hexdigest()[:16]
    return PairingPlan(n=real.n, rg_pairs=rg, add_pairs=add, provenance=digest)


def interaction_graph(plan: PairingPlan) -> tuple[tuple[int, int], ...]:
    """Deduplicated union of rg and add pairs, verified degree <= 3, triangle-free."""
    edges = sorted({tuple(sorted(p)) for p in plan.rg_pairs + plan.add_pairs})
    degree = [0] * plan.n
    adjacency: dict[int, set[int]] = {i: set() for i in range(plan.n)}
    for i, j in edges:
        degree[i] += 1
        degree[j] += 1
        adjacency[i].add(j)
        adjacency[j].add(i)
    bad = [q for q in range(plan.n) if degree[q] > 3]
    if bad:
        raise PlanInvariantError(f"interaction graph degree exceeds 3 at sites {bad}")
    for i, j in edges:
        if adjacency[i] & adjacency[j]:
            raise PlanInvariantError(f"interaction graph has a triangle through edge ({i}, {j})")
    return tuple(edges)


def long_range_pairs(plan: PairingPlan) -> tuple[tuple[int, int], ...]:
    """The rg pairs that are not nearest-neighbor chain bonds."""
    return tuple(p for p in plan.rg_pairs if abs(p[0] - p[1]) != 1)


def plan_to_text(plan: PairingPlan) -> str:
    """Serialize as 'RG i j' lines (decimation order) then 'ADD i j' lines."""
    lines = [f"RG {i} {j}" for i, j in plan.rg_pairs]
    lines += [f"ADD {i} {j}" for i, j in plan.add_pairs]
    lines.append(f"PROVENANCE {plan.provenance}")
    return "\n".join(lines) + "\n"


def plan_from_text(text: str) -> PairingPlan:
    """Parse the serialization produced by plan_to_text."""
    rg: list[tuple[int, int]] = []
    add: list[tuple[int, int]] = []
    provenance = ""
    for ln in text.splitlines():
        parts = ln.split()
        if not parts:
            continue
        if parts[0] == "RG":
            rg.append((int(parts[1]), int(parts[2])))
        elif parts[0] == "ADD":
            add.append((int(parts[1]), int(parts[2])))
        elif parts[0] == "PROVENANCE":
            provenance = parts[1]
        else:
            raise ValueError(f"bad pairing plan line: {ln!r}")
    return PairingPlan(n=2 * len(rg), rg_pairs=tuple(rg), add_pairs=tuple(add), provenance=provenance)
