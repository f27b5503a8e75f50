"""Spin-chain models: disorder sampling, Hamiltonian term lists, accuracy metrics.

Conventions used throughout the package: spin operators are S = sigma/2, so a
Heisenberg term weight * (S_i . S_j) expands to (weight/4)(XX + YY + ZZ) on
the pair, and a singlet on an isolated bond of weight J has energy -3J/4.

Couplings of the disordered chain follow the normalized power law
P(J) = (1/delta) * J**(-1 + 1/delta) on (0, 1] with delta >= 1, sampled by
inverse CDF: J = U**delta with U uniform on (0, 1]. The distribution mean is
1/(delta + 1); larger delta means broader disorder.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .seeding import stream


@dataclass(frozen=True)
class CouplingRealization:
    """One draw of the disordered chain: n sites, n-1 positive bond couplings."""

    n: int
    delta: float
    seed: int
    couplings: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 2, got {self.n}")
        if self.delta < 1.0:
            raise ValueError(f"delta must be >= 1, got {self.delta}")
        if len(self.couplings) != self.n - 1:
            raise ValueError(
                f"expected {self.n - 1} couplings for n={self.n}, got {len(self.couplings)}"
            )
        if any(j <= 0.0 for j in self.couplings):
            raise ValueError("all couplings must be positive")


@dataclass(frozen=True)
class RainbowSpec:
    """Rainbow chain: weak nearest-neighbor alpha plus strong rungs (i, n-1-i)."""

    n: int
    alpha: float = 1.0
    j: float = 100.0

    def __post_init__(self) -> None:
        if self.n < 2 or self.n % 2 != 0:
            raise ValueError(f"n must be even and >= 2, got {self.n}")
        if self.alpha <= 0.0 or self.j <= 0.0:
            raise ValueError("alpha and j must be positive")


@dataclass(frozen=True)
class HamiltonianTerms:
    """Weighted Heisenberg pair terms; each (i, j, w) means w * (S_i . S_j)."""

    n: int
    terms: tuple[tuple[int, int, float], ...]

    def __post_init__(self) -> None:
        for i, j, _w in self.terms:
            if i == j:
                raise ValueError(f"term sites must differ, got ({i}, {j})")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"term ({i}, {j}) out of range for n={self.n}")


def sample_couplings(n: int, delta: float, seed: int) -> CouplingRealization:
    """Draw the n-1 chain couplings J = U**delta from the seeded stream."""
    if n < 2 or n % 2 != 0:
        raise ValueError(f"n must be even and >= 2, got {n}")
    if delta < 1.0:
        raise ValueError(f"delta must be >= 1, got {delta}")
    # 1 - random() lies in (0, 1], keeping J strictly positive.
    u = 1.0 - stream(seed).random(n - 1)
    couplings = tuple(float(j) for j in u**delta)
    return CouplingRealization(n=n, delta=float(delta), seed=seed, couplings=couplings)


def chain_terms(real: CouplingRealization) -> HamiltonianTerms:
    """Open-chain Hamiltonian: bond i couples sites (i, i+1) with weight J_i."""
    terms = tuple((i, i + 1, real.couplings[i]) for i in range(real.n - 1))
    return HamiltonianTerms(n=real.n, terms=terms)


def rainbow_terms(spec: RainbowSpec) -> HamiltonianTerms:
    """Rainbow Hamiltonian: n-1 nearest-neighbor bonds plus n/2 rungs (i, n-1-i)."""
    nn = [(i, i + 1, spec.alpha) for i in range(spec.n - 1)]
    rungs = [(i, spec.n - 1 - i, spec.j) for i in range(spec.n // 2)]
    return HamiltonianTerms(n=spec.n, terms=tuple(nn + rungs))


def relative_accuracy(x_exact: float, x: float) -> float:
    """Accuracy epsilon = 1 - |x_exact - x| / |x_exact|; 1 means exact."""
    if x_exact == 0.0:
        raise ValueError("relative accuracy undefined for x_exact == 0")
    return 1.0 - abs(x_exact - x) / abs(x_exact)


def signed_ratio(x_exact: float, x: float) -> float:
    """Companion diagnostic to relative_accuracy: the signed ratio x / x_exact."""
    if x_exact == 0.0:
        raise ValueError("signed ratio undefined for x_exact == 0")
    return x / x_exact


def relative_error(x_exact: float, x: float) -> float:
    """|x_exact - x| / |x_exact|, the complement of relative_accuracy."""
    if x_exact == 0.0:
        raise ValueError("relative error undefined for x_exact == 0")
    return abs(x_exact - x) / abs(x_exact)


def couplings_to_text(real: CouplingRealization) -> str:
    """Serialize as a header line 'n delta seed' plus one coupling per line."""
    lines = [f"{real.n} {real.delta:.17g} {real.seed}"]
    lines.extend(f"{j:.17g}" for j in real.couplings)
    return "\n".join(lines) + "\n"


def couplings_from_text(text: str) -> CouplingRealization:
    """Parse the serialization produced by couplings_to_text (exact round-trip)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty couplings record")
    head = lines[0].split()
    if len(head) != 3:
        raise ValueError(f"bad couplings header: {lines[0]!r}")
    n, delta, seed = int(head[0]), float(head[1]), int(head[2])
    couplings = tuple(float(ln) for ln in lines[1:])
    return CouplingRealization(n=n, delta=delta, seed=seed, couplings=couplings)
