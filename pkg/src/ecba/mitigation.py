"""Stochastic Pauli noise and the mitigation stack built on top of it.

Noise model: after every CZ, a uniformly random non-identity two-qubit Pauli
fires with probability p_cz; after every single-qubit rotation (RX/RY/RZ,
parametrized or fixed-angle), a random non-identity Pauli fires with
probability p_1q; each measured bit flips independently with probability
p_readout. Fixed Clifford gates (H, X, Z) are noise-free, so twirling frames,
TREX masks, and decoupling pulses cost nothing — mirroring hardware, where
they are merged into neighboring operations. An optional coherent ZZ
over-rotation after each CZ exists to demonstrate what twirling buys.

Readout flips are symmetric here, so the TREX mask cancels algebraically in
the recorded bits; it is still applied faithfully, and it is the calibration
division that removes the (1-2p)-per-qubit parity attenuation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuits import Circuit, Gate, circuit, is_decomposed
from .hamiltonians import HamiltonianTerms
from .seeding import child_seed, stream
from .statevector import (
    QuantumState,
    ShotTable,
    _bitstring,
    apply_gate,
    apply_hamiltonian,
    apply_pauli,
    energy_from_shots,
    parity_mean,
    rotate_to_basis,
    sample_indices,
    zero_state,
)

_BASES = ("X", "Y", "Z")
_PAULI_LETTERS = ("I", "X", "Y", "Z")
# Does the Pauli anticommute with Z? Decides the Z byproduct of CZ conjugation.
_FLIPS_Z = {"I": False, "X": True, "Y": True, "Z": False}


class MitigationError(RuntimeError):
    """Signal too attenuated (or a stage precondition failed) to mitigate."""


@dataclass(frozen=True)
class NoiseSpec:
    """Gate/readout error rates plus the noise process seed.

    trajectories: number of independent noise instantiations a shot budget is
    split across. coherent_cz_angle: deterministic ZZ over-rotation after
    every CZ (a test hook for the twirling demonstration; default off).
    """

    p_cz: float = 0.0063
    p_1q: float = 0.0009
    p_readout: float = 0.02
    seed: int = 0
    trajectories: int = 64
    coherent_cz_angle: float = 0.0

    def __post_init__(self) -> None:
        for name in ("p_cz", "p_1q", "p_readout"):
            p = getattr(self, name)
            if not (0.0 <= p < 0.5):
                raise ValueError(f"{name} must lie in [0, 0.5), got {p}")
        if self.trajectories < 1:
            raise ValueError("need at least one trajectory")


@dataclass(frozen=True)
class MitigatedEstimate:
    """Extrapolated estimate with its amplification ladder and fit."""

    value: float
    std_error: float
    ladder: tuple[tuple[int, float], ...]
    fit_params: tuple[float, float]
    fallback_used: bool
    shots_used: int = 0

    def __post_init__(self) -> None:
        lams = [lam for lam, _v in self.ladder]
        if len(lams) < 2:
            raise ValueError("ladder needs at least two points")
        if lams[0] != 1:
            raise ValueError("ladder must start at amplification 1")
        if any(lam < 1 or lam % 2 == 0 for lam in lams):
            raise ValueError(f"amplification factors must be odd positive, got {lams}")
        if sorted(set(lams)) != lams:
            raise ValueError(f"amplification factors must be distinct ascending, got {lams}")


@dataclass(frozen=True)
class TrexCalibration:
    """Per-qubit readout attenuation factors from an empty-circuit run."""

    factors: np.ndarray
    shots: int


def noisy_state(c: Circuit, params, spec: NoiseSpec, rng) -> QuantumState:
    """One noise trajectory: run the circuit with stochastic Pauli insertions.

    `rng` may be a seed or a Generator (so trajectory loops can share one).
    """
    if not is_decomposed(c):
        raise ValueError("noise injection needs a decomposed circuit (CZ + 1q only)")
    if not isinstance(rng, np.random.Generator):
        rng = stream(int(rng))
    vec = np.asarray(params if params is not None else [], dtype=np.float64)
    if vec.size != c.num_params:
        raise ValueError(f"expected {c.num_params} parameters, got {vec.size}")
    state = zero_state(c.n)
    for g in c.gates:
        apply_gate(state, g, vec)
        if g.kind == "CZ":
            if spec.coherent_cz_angle != 0.0:
                apply_gate(state, Gate("RZZ", g.sites, angle=spec.coherent_cz_angle))
            if spec.p_cz > 0.0 and rng.random() < spec.p_cz:
                k = int(rng.integers(1, 16))  # uniform over the 15 non-identity pairs
                for site, letter_idx in zip(g.sites, (k >> 2, k & 3)):
                    if letter_idx:
                        apply_pauli(state, site, _PAULI_LETTERS[letter_idx])
        elif g.kind in ("RX", "RY", "RZ"):
            if spec.p_1q > 0.0 and rng.random() < spec.p_1q:
                apply_pauli(state, g.sites[0], "XYZ"[int(rng.integers(3))])
    return state


def noisy_shots(
    c: Circuit,
    params,
    h: HamiltonianTerms | None,
    spec: NoiseSpec,
    shots: int,
    seed: int,
    bases: tuple[str, ...] = _BASES,
    trex_mask: int | None = None,
) -> dict[str, ShotTable]:
    """Sample measurement tables under the stochastic noise model.

    The budget is split across spec.trajectories noise instantiations (the
    remainder goes to the first ones); each instantiation is measured in every
    requested basis. An optional TREX mask is applied as pre-measurement X
    flips and undone classically on the recorded bits.
    """
    if h is not None and h.n != c.n:
        raise ValueError(f"Hamiltonian for n={h.n} with circuit on n={c.n}")
    if shots < 1:
        raise ValueError("shots must be positive")
    rng = stream(child_seed(seed, f"noisy-{spec.seed}"))
    mask = int(trex_mask or 0)
    base, rem = divmod(shots, spec.trajectories)
    weights = 1 << np.arange(c.n, dtype=np.int64)
    raw_counts: dict[str, dict[int, int]] = {b: {} for b in bases}
    vec = np.asarray(params if params is not None else [], dtype=np.float64)
    for t in range(spec.trajectories):
        shots_t = base + (1 if t < rem else 0)
        if shots_t == 0:
            continue
        state = noisy_state(c, vec, spec, rng)
        for b in bases:
            rotated = rotate_to_basis(state, b)
            idx = sample_indices(rotated, shots_t, rng) ^ mask
            if spec.p_readout > 0.0:
                flips = rng.random((shots_t, c.n)) < spec.p_readout
                idx = idx ^ (flips @ weights)
            idx ^= mask  # classical un-flip of the TREX frame
            values, freq = np.unique(idx, return_counts=True)
            bucket = raw_counts[b]
            for v, f in zip(values, freq):
                bucket[int(v)] = bucket.get(int(v), 0) + int(f)
    return {
        b: ShotTable(
            basis=b,
            n=c.n,
            shots=shots,
            counts={_bitstring(v, c.n): f for v, f in raw_counts[b].items()},
        )
        for b in bases
    }


def _pauli_as_gates(letter: str, q: int) -> list[Gate]:
    # Y is emitted as Z-then-X (X.Z = iY); global phase is irrelevant.
    if letter == "I":
        return []
    if letter == "Y":
        return [Gate("Z", (q,)), Gate("X", (q,))]
    return [Gate(letter, (q,))]


def twirl_frame(p: str, q: str, a: int, b: int) -> tuple[list[Gate], list[Gate]]:
    """Gates before/after one CZ realizing the (P on a, Q on b) twirl.

    The closing frame is CZ (P x Q) CZ = (P Z^{x(Q)}) x (Q Z^{x(P)}) up to a
    global phase, where x(.) flags anticommutation with Z.
    """
    before = _pauli_as_gates(p, a) + _pauli_as_gates(q, b)
    after: list[Gate] = []
    if _FLIPS_Z[q]:
        after.append(Gate("Z", (a,)))
    after += _pauli_as_gates(p, a)
    if _FLIPS_Z[p]:
        after.append(Gate("Z", (b,)))
    after += _pauli_as_gates(q, b)
    return before, after


def pauli_twirl(c: Circuit, seed: int) -> Circuit:
    """Dress every CZ in uniformly random Pauli frames; unitary unchanged."""
    if not is_decomposed(c):
        raise ValueError("twirling needs a decomposed circuit")
    rng = stream(seed)
    out: list[Gate] = []
    for g in c.gates:
        if g.kind != "CZ":
            out.append(g)
            continue
        p = _PAULI_LETTERS[int(rng.integers(4))]
        q = _PAULI_LETTERS[int(rng.integers(4))]
        before, after = twirl_frame(p, q, g.sites[0], g.sites[1])
        out.extend(before)
        out.append(g)
        out.extend(after)
    return replace(c, gates=tuple(out))


def fold_circuit(c: Circuit, lam: int) -> Circuit:
    """Replace every CZ by lam consecutive CZs (odd lam keeps the unitary)."""
    if lam < 1 or lam % 2 == 0:
        raise ValueError(f"amplification factor must be odd positive, got {lam}")
    if lam == 1:
        return c
    out: list[Gate] = []
    for g in c.gates:
        out.append(g)
        if g.kind == "CZ":
            out.extend([g] * (lam - 1))
    return replace(c, gates=tuple(out))


def insert_dynamical_decoupling(c: Circuit) -> Circuit:
    """Insert X.X pairs on the spectator qubits of every CZ.

    Under this noise model the inserted gates are exactly inert: X carries no
    noise and X.X is the identity, so the transform provably changes nothing.
    It exists so decoupling-aware pipelines have a hook.
    """
    out: list[Gate] = []
    for g in c.gates:
        out.append(g)
        if g.kind == "CZ":
            for q in range(c.n):
                if q not in g.sites:
                    out.append(Gate("X", (q,)))
                    out.append(Gate("X", (q,)))
    return replace(c, gates=tuple(out))


def trex_calibrate(
    n: int,
    spec: NoiseSpec,
    shots: int = 10_000,
    seed: int = 0,
    n_instances: int = 16,
) -> TrexCalibration:
    """Per-qubit <Z_q> of the empty circuit under masked, inverted readout.

    The ideal value is +1 on every qubit, so the measured mean is the readout
    attenuation factor 1 - 2 p_readout that later corrections divide out.
    """
    empty = circuit(n, [])
    mask_rng = stream(child_seed(seed, "trex-cal-masks"))
    totals = np.zeros(n)
    total_shots = 0
    for k in range(n_instances):
        mask = int(mask_rng.integers(0, 1 << n))
        tables = noisy_shots(
            empty,
            [],
            None,
            spec,
            shots,
            child_seed(seed, f"trex-cal-{k}"),
            bases=("Z",),
            trex_mask=mask,
        )
        for bits, count in tables["Z"].counts.items():
            ones = np.frombuffer(bits.encode(), dtype=np.uint8) - ord("0")
            totals += count * (1.0 - 2.0 * ones.astype(np.float64))
        total_shots += shots
    return TrexCalibration(factors=totals / total_shots, shots=total_shots)


def corrected_parity(
    tables: dict[str, ShotTable],
    basis: str,
    i: int,
    j: int,
    cal: TrexCalibration,
) -> float:
    """Raw pair parity divided by the calibrated readout attenuation."""
    attenuation = float(cal.factors[i] * cal.factors[j])
    if abs(attenuation) < 0.05:
        raise MitigationError(
            f"readout attenuation {attenuation:.3g} on pair ({i}, {j}) "
            "is below 0.05; the signal cannot be recovered"
        )
    return parity_mean(tables[basis], i, j) / attenuation


def corrected_energy(
    tables: dict[str, ShotTable], h: HamiltonianTerms, cal: TrexCalibration
) -> float:
    """Energy assembled from TREX-corrected parities in all three bases."""
    total = 0.0
    for i, j, w in h.terms:
        for basis in _BASES:
            total += 0.25 * w * corrected_parity(tables, basis, i, j, cal)
    return total


def trex_estimate(
    circuits: list[Circuit],
    params,
    h: HamiltonianTerms,
    spec: NoiseSpec,
    shots: int,
    seed: int,
    n_instances: int = 16,
    calibration: TrexCalibration | None = None,
) -> dict[str, dict[tuple[int, int], float]]:
    """Readout-corrected pair parities pooled over masked instances.

    Cycles through `circuits` (typically twirled variants of one circuit),
    gives each instance a fresh random mask and `shots` shots per basis, and
    divides the pooled parities by calibrated attenuations.
    """
    if n_instances < 2:
        raise ValueError(f"need at least 2 instances, got {n_instances}")
    if not circuits:
        raise ValueError("need at least one circuit")
    cal = calibration or trex_calibrate(
        circuits[0].n, spec, shots, child_seed(seed, "calibration"), n_instances
    )
    mask_rng = stream(child_seed(seed, "trex-masks"))
    pooled: dict[str, dict[str, int]] = {b: {} for b in _BASES}
    n = circuits[0].n
    for k in range(n_instances):
        mask = int(mask_rng.integers(0, 1 << n))
        tables = noisy_shots(
            circuits[k % len(circuits)],
            params,
            h,
            spec,
            shots,
            child_seed(seed, f"trex-{k}"),
            trex_mask=mask,
        )
        for b in _BASES:
            bucket = pooled[b]
            for bits, count in tables[b].counts.items():
                bucket[bits] = bucket.get(bits, 0) + count
    merged = {
        b: ShotTable(basis=b, n=n, shots=n_instances * shots, counts=pooled[b])
        for b in _BASES
    }
    return {
        b: {
            (i, j): corrected_parity(merged, b, i, j, cal)
            for i, j, _w in h.terms
        }
        for b in _BASES
    }


def zne_extrapolate(
    ladder: list[tuple[int, float]],
    std_errors: list[float] | None = None,
) -> MitigatedEstimate:
    """Extrapolate amplification-ladder values to the zero-noise point.

    When every value shares one sign and clears 10x its standard error, a
    least-squares line through (lambda, ln|value|) realizes the exponential
    model and the reported value is sign * exp(intercept). Otherwise a plain
    linear fit in lambda supplies the intercept and fallback_used is set (the
    fit_params then hold the linear intercept/slope).
    """
    if len(ladder) < 2:
        raise ValueError("extrapolation needs at least two ladder points")
    lams = np.asarray([lam for lam, _v in ladder], dtype=np.float64)
    vals = np.asarray([v for _lam, v in ladder], dtype=np.float64)
    ses = np.zeros_like(vals) if std_errors is None else np.asarray(std_errors)
    signs = np.sign(vals)
    exponential_ok = bool(
        signs[0] != 0.0
        and np.all(signs == signs[0])
        and np.all(np.abs(vals) >= 10.0 * ses)
    )
    design = np.column_stack([np.ones_like(lams), lams])
    if exponential_ok:
        (intercept, slope), *_rest = np.linalg.lstsq(design, np.log(np.abs(vals)), rcond=None)
        magnitude = float(np.exp(intercept))
        value = float(signs[0]) * magnitude
        fit = (magnitude, float(slope))
    else:
        (intercept, slope), *_rest = np.linalg.lstsq(design, vals, rcond=None)
        value = float(intercept)
        fit = (float(intercept), float(slope))
    return MitigatedEstimate(
        value=value,
        std_error=0.0,
        ladder=tuple((int(lam), float(v)) for lam, v in ladder),
        fit_params=fit,
        fallback_used=not exponential_ok,
    )


def raw_energy_estimate(
    c: Circuit,
    params,
    h: HamiltonianTerms,
    spec: NoiseSpec,
    shots: int,
    seed: int,
) -> tuple[float, float]:
    """Unmitigated comparator: plain noisy shots, no twirl/TREX/folding."""
    tables = noisy_shots(c, params, h, spec, shots, seed)
    return energy_from_shots(tables, h)


def mitigated_energy(
    c: Circuit,
    params,
    h: HamiltonianTerms,
    spec: NoiseSpec,
    seed: int,
    shots: int = 10_000,
    n_instances: int = 16,
    lambdas: tuple[int, ...] = (1, 3, 5),
    bootstrap: int = 200,
) -> MitigatedEstimate:
    """Full pipeline: twirl x n_instances -> masked noisy shots -> TREX
    correction -> per-amplification energies -> exponential extrapolation.

    Each (instance, amplification) run spends `shots` shots per basis; the
    ladder value at each amplification is the mean of the per-instance
    corrected energies and its standard error their spread. The extrapolated
    value's std_error comes from a parametric bootstrap over the ladder.
    """
    if not is_decomposed(c):
        raise ValueError("mitigation pipeline needs a decomposed circuit")
    cal = trex_calibrate(
        c.n, spec, shots, child_seed(seed, "calibration"), n_instances
    )
    twirled = [
        pauli_twirl(c, child_seed(seed, f"twirl-{k}")) for k in range(n_instances)
    ]
    mask_rng = stream(child_seed(seed, "masks"))
    ladder: list[tuple[int, float]] = []
    ses: list[float] = []
    for lam in lambdas:
        instance_energies = []
        for k, tw in enumerate(twirled):
            folded = fold_circuit(tw, lam)
            mask = int(mask_rng.integers(0, 1 << c.n))
            tables = noisy_shots(
                folded,
                params,
                h,
                spec,
                shots,
                child_seed(seed, f"run-l{lam}-i{k}"),
                trex_mask=mask,
            )
            instance_energies.append(corrected_energy(tables, h, cal))
        arr = np.asarray(instance_energies)
        ladder.append((lam, float(arr.mean())))
        ses.append(float(arr.std(ddof=1) / np.sqrt(arr.size)))
    central = zne_extrapolate(ladder, ses)
    boot_rng = stream(child_seed(seed, "bootstrap"))
    resamples = np.empty(bootstrap)
    for r in range(bootstrap):
        jittered = [
            (lam, v + se * boot_rng.normal())
            for (lam, v), se in zip(ladder, ses)
        ]
        resamples[r] = zne_extrapolate(jittered, ses).value
    shots_used = n_instances * len(_BASES) * len(lambdas) * shots + cal.shots
    return MitigatedEstimate(
        value=central.value,
        std_error=float(resamples.std(ddof=1)),
        ladder=central.ladder,
        fit_params=central.fit_params,
        fallback_used=central.fallback_used,
        shots_used=shots_used,
    )


def mitigated_to_text(est: MitigatedEstimate) -> str:
    """Line-based record: value, error, fit, fallback flag, ladder, shots."""
    lines = [
        f"value {est.value:.17g}",
        f"std_error {est.std_error:.17g}",
        f"fit {est.fit_params[0]:.17g} {est.fit_params[1]:.17g}",
        f"fallback {1 if est.fallback_used else 0}",
        f"shots_used {est.shots_used}",
    ]
    lines.extend(f"ladder {lam} {v:.17g}" for lam, v in est.ladder)
    return "\n".join(lines) + "\n"


def mitigated_from_text(text: str) -> MitigatedEstimate:
    """Parse the record produced by mitigated_to_text."""
    fields: dict[str, str] = {}
    ladder: list[tuple[int, float]] = []
    for ln in text.splitlines():
        if not ln.strip():
            continue
        key, _, rest = ln.partition(" ")
        if key == "ladder":
            lam_s, v_s = rest.split()
            ladder.append((int(lam_s), float(v_s)))
        else:
            fields[key] = rest
    try:
        fit = tuple(float(v) for v in fields["fit"].split())
        return MitigatedEstimate(
            value=float(fields["value"]),
            std_error=float(fields["std_error"]),
            ladder=tuple(ladder),
            fit_params=(fit[0], fit[1]),
            fallback_used=fields["fallback"] == "1",
            shots_used=int(fields["shots_used"]),
        )
    except KeyError as exc:
        raise ValueError(f"missing field in mitigation record: {exc}") from exc
