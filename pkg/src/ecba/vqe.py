"""Variational optimization: adjoint gradients, quasi-Newton descent, and
gradient-variance analysis over random initializations.

The gradient is computed in adjoint mode: one forward sweep builds the final
state, then gates are peeled off a bra/ket pair in reverse so every rotation's
derivative costs O(1) extra state operations instead of a fresh forward pass.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .circuits import Circuit, Gate, ROTATION_KINDS
from .hamiltonians import HamiltonianTerms
from .seeding import stream
from .statevector import (
    QuantumState,
    apply_gate,
    apply_hamiltonian,
    apply_pauli,
    run,
)

_GENERATOR = {
    "RX": ("X",),
    "RY": ("Y",),
    "RZ": ("Z",),
    "RXX": ("X", "X"),
    "RYY": ("Y", "Y"),
    "RZZ": ("Z", "Z"),
}


@dataclass(frozen=True)
class VqeResult:
    best_params: np.ndarray
    best_energy: float
    iterations: int
    converged: bool
    history: tuple[float, ...]


@dataclass(frozen=True)
class GradientVarianceReport:
    n: int
    per_component_variance: np.ndarray
    mean_variance: float
    samples: int
    mode: str


def _unapply(state: QuantumState, g: Gate, params: np.ndarray) -> None:
    if g.kind in ROTATION_KINDS:
        theta = params[g.param_index] if g.param_index is not None else g.angle
        inverse = Gate(g.kind, g.sites, angle=-theta)
        apply_gate(state, inverse)
    else:
        apply_gate(state, g)  # H, X, Z, CZ are involutions


def _generator_applied(state: QuantumState, g: Gate) -> QuantumState:
    out = state.copy()
    for site, letter in zip(g.sites, _GENERATOR[g.kind]):
        apply_pauli(out, site, letter)
    return out


def energy_and_gradient(
    c: Circuit, params: np.ndarray | list[float], h: HamiltonianTerms
) -> tuple[float, np.ndarray]:
    """Exact energy and gradient d<H>/d(theta) in one adjoint sweep."""
    if h.n != c.n:
        raise ValueError(f"Hamiltonian for n={h.n} with circuit on n={c.n}")
    vec = np.asarray(params, dtype=np.float64)
    ket = run(c, vec)
    bra = apply_hamiltonian(ket, h)
    energy_val = float(np.real(np.vdot(ket.amplitudes, bra.amplitudes)))
    grad = np.zeros(c.num_params)
    for g in reversed(c.gates):
        if g.param_index is not None:
            # Rotation exp(-i theta P / 2): dE/dtheta = Im <bra|P|ket>.
            pket = _generator_applied(ket, g)
            grad[g.param_index] += float(
                np.imag(np.vdot(bra.amplitudes, pket.amplitudes))
            )
        _unapply(ket, g, vec)
        _unapply(bra, g, vec)
    return energy_val, grad


def gradient(
    c: Circuit, params: np.ndarray | list[float], h: HamiltonianTerms
) -> np.ndarray:
    """Exact gradient of the energy with respect to every rotation parameter."""
    return energy_and_gradient(c, params, h)[1]


def _energy_only(c: Circuit, params: np.ndarray, h: HamiltonianTerms) -> float:
    state = run(c, params)
    hstate = apply_hamiltonian(state, h)
    return float(np.real(np.vdot(state.amplitudes, hstate.amplitudes)))


def _two_loop_direction(
    grad: np.ndarray, s_hist: deque, y_hist: deque
) -> np.ndarray:
    q = grad.copy()
    alphas = []
    for s, y in zip(reversed(s_hist), reversed(y_hist)):
        rho = 1.0 / float(y @ s)
        a = rho * float(s @ q)
        q -= a * y
        alphas.append((a, rho))
    if s_hist:
        s, y = s_hist[-1], y_hist[-1]
        q *= float(s @ y) / float(y @ y)
    for (a, rho), (s, y) in zip(reversed(alphas), zip(s_hist, y_hist)):
        b = rho * float(y @ q)
        q += (a - b) * s
    return -q


def minimize(
    c: Circuit,
    h: HamiltonianTerms,
    init_seed: int,
    tol: float = 1e-6,
    max_iters: int = 2000,
) -> VqeResult:
    """Limited-memory quasi-Newton descent from a small random start.

    Parameters start uniform in [0, 0.05]. Steps use Armijo backtracking
    (sufficient decrease 1e-4), so accepted iterates never increase the
    energy. Convergence is declared when the energy change between accepted
    iterates drops below `tol`; otherwise the best-seen point is returned
    with converged=False once `max_iters` is exhausted.
    """
    rng = stream(init_seed)
    x = rng.uniform(0.0, 0.05, size=c.num_params)
    energy_val, grad = energy_and_gradient(c, x, h)
    history = [energy_val]
    best_x, best_e = x.copy(), energy_val
    s_hist: deque = deque(maxlen=10)
    y_hist: deque = deque(maxlen=10)
    iterations = 0
    converged = False

    def line_search(direction: np.ndarray, slope: float, step: float):
        for _ in range(60):
            x_new = x + step * direction
            e_new = _energy_only(c, x_new, h)
            if e_new <= energy_val + 1e-4 * step * slope:
                return x_new, e_new
            step *= 0.5
        return None, None

    for it in range(1, max_iters + 1):
        direction = _two_loop_direction(grad, s_hist, y_hist)
        slope = float(grad @ direction)
        if slope >= 0.0:  # stale curvature; fall back to steepest descent
            direction = -grad
            slope = float(grad @ direction)
        if slope == 0.0:
            converged = True
            break
        x_new, e_new = line_search(direction, slope, 1.0)
        if x_new is None and s_hist:
            # The quasi-Newton direction is unusable; drop the stale
            # curvature history and retry from a gradient-scaled step.
            s_hist.clear()
            y_hist.clear()
            gnorm = float(np.linalg.norm(grad))
            x_new, e_new = line_search(-grad, -gnorm * gnorm, min(1.0, 1.0 / gnorm))
        iterations = it
        if x_new is None:
            # No decrease at machine-level steps: stationary to precision.
            converged = True
            break
        e_new, g_new = energy_and_gradient(c, x_new, h)
        s = x_new - x
        y = g_new - grad
        if float(y @ s) > 1e-12 * float(np.linalg.norm(y) * np.linalg.norm(s)):
            s_hist.append(s)
            y_hist.append(y)
        delta = energy_val - e_new
        x, energy_val, grad = x_new, e_new, g_new
        history.append(energy_val)
        if energy_val < best_e:
            best_e, best_x = energy_val, x.copy()
        if abs(delta) < tol:
            converged = True
            break
    return VqeResult(
        best_params=best_x,
        best_energy=best_e,
        iterations=iterations,
        converged=converged,
        history=tuple(history),
    )


def gradient_variance(
    c: Circuit,
    h: HamiltonianTerms,
    num_samples: int,
    seed: int,
    mode: str = "small",
) -> GradientVarianceReport:
    """Per-component gradient variance over random initial parameters.

    mode 'small' draws parameters uniform in [0, 0.05] (the optimizer's own
    initialization window); mode 'full' draws uniform in [0, 2pi).
    """
    if num_samples < 30:
        raise ValueError(f"need at least 30 samples, got {num_samples}")
    if mode not in ("small", "full"):
        raise ValueError(f"mode must be 'small' or 'full', got {mode!r}")
    high = 0.05 if mode == "small" else 2.0 * np.pi
    rng = stream(seed)
    grads = np.empty((num_samples, c.num_params))
    for k in range(num_samples):
        params = rng.uniform(0.0, high, size=c.num_params)
        grads[k] = gradient(c, params, h)
    per_component = grads.var(axis=0, ddof=1)
    return GradientVarianceReport(
        n=c.n,
        per_component_variance=per_component,
        mean_variance=float(per_component.mean()),
        samples=num_samples,
        mode=mode,
    )


def vqe_to_text(result: VqeResult) -> str:
    """Line-based dump carrying the full-precision parameter vector."""
    lines = [
        f"best_energy {result.best_energy:.17g}",
        f"iterations {result.iterations}",
        f"converged {1 if result.converged else 0}",
        "history " + " ".join(f"{e:.17g}" for e in result.history),
    ]
    lines.extend(f"param {p:.17g}" for p in result.best_params)
    return "\n".join(lines) + "\n"


def vqe_from_text(text: str) -> VqeResult:
    """Parse the dump produced by vqe_to_text."""
    fields: dict[str, str] = {}
    params = []
    for ln in text.splitlines():
        if not ln.strip():
            continue
        key, _, rest = ln.partition(" ")
        if key == "param":
            params.append(float(rest))
        else:
            fields[key] = rest
    try:
        return VqeResult(
            best_params=np.asarray(params, dtype=np.float64),
            best_energy=float(fields["best_energy"]),
            iterations=int(fields["iterations"]),
            converged=fields["converged"] == "1",
            history=tuple(float(v) for v in fields["history"].split()),
        )
    except KeyError as exc:
        raise ValueError(f"missing field in optimizer dump: {exc}") from exc
