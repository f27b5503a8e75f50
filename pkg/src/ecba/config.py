"""Flat key=value experiment configuration with include support.

The format is intentionally minimal and diff-friendly: one `key = value` per
line, `#` comment lines, and an `include <path>` directive that splices in
another file (relative to the including file) with later keys winning.
Command-line overrides are applied last.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .mitigation import NoiseSpec
from .seeding import child_seed

_MODELS = ("rainbow", "random-chain")
_ANSAETZE = ("HEA", "CBA", "ECBA")
_MODEL_ANSAETZE = {"rainbow": ("HEA", "CBA"), "random-chain": ("HEA", "ECBA")}

_KNOWN_KEYS = frozenset(
    {
        "model",
        "n",
        "delta",
        "alpha",
        "j",
        "ansatz",
        "seed",
        "noise",
        "noise_p_cz",
        "noise_p_1q",
        "noise_p_readout",
        "noise_trajectories",
        "noise_coherent_cz_angle",
        "mitigation",
        "shots",
        "topology",
        "output_dir",
        "opt_tol",
        "opt_max_iters",
        "scan_sizes",
        "scan_deltas",
        "scan_ansatz",
        "scan_seeds",
        "grad_variance",
        "grad_samples",
        "embed_samples",
        "embed_mode",
        "embed_budget",
        "fail_above_relative_error",
    }
)


class ConfigError(ValueError):
    """Configuration problem, always naming the offending field."""

    def __init__(self, field: str, message: str) -> None:
        self.field = field
        super().__init__(f"config field '{field}': {message}")


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Read one config file, following include directives."""
    return _parse_file(Path(path), visited=set())


def _parse_file(path: Path, visited: set[Path]) -> dict[str, str]:
    resolved = path.resolve()
    if resolved in visited:
        raise ConfigError("include", f"circular include of {path}")
    visited.add(resolved)
    try:
        text = resolved.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError("config", f"missing file {path}") from None
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("include"):
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError("include", f"{path}:{lineno}: include needs a path")
            values.update(_parse_file(resolved.parent / parts[1].strip(), visited))
            continue
        if "=" not in line:
            raise ConfigError(
                "config", f"{path}:{lineno}: expected 'key = value', got {line!r}"
            )
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def apply_overrides(values: dict[str, str], overrides: list[str]) -> dict[str, str]:
    """Apply `key=value` strings from the command line, last one winning."""
    out = dict(values)
    for item in overrides:
        if "=" not in item:
            raise ConfigError("override", f"expected key=value, got {item!r}")
        key, _, value = item.partition("=")
        out[key.strip()] = value.strip()
    return out


def _as_int(raw: dict[str, str], field: str, default: int | None = None) -> int:
    if field not in raw:
        if default is None:
            raise ConfigError(field, "required")
        return default
    try:
        return int(raw[field])
    except ValueError:
        raise ConfigError(field, f"not an integer: {raw[field]!r}") from None


def _as_float(raw: dict[str, str], field: str, default: float | None = None) -> float:
    if field not in raw:
        if default is None:
            raise ConfigError(field, "required")
        return default
    try:
        return float(raw[field])
    except ValueError:
        raise ConfigError(field, f"not a number: {raw[field]!r}") from None


def _as_switch(raw: dict[str, str], field: str, default: bool) -> bool:
    if field not in raw:
        return default
    value = raw[field].lower()
    if value in ("on", "true", "1", "yes"):
        return True
    if value in ("off", "false", "0", "no", "none"):
        return False
    raise ConfigError(field, f"expected on/off, got {raw[field]!r}")


def _as_int_list(raw: dict[str, str], field: str) -> tuple[int, ...] | None:
    """Comma list of integers; a `lo:hi` token expands like range(lo, hi)."""
    if field not in raw:
        return None
    out: list[int] = []
    for token in raw[field].split(","):
        token = token.strip()
        if not token:
            continue
        try:
            if ":" in token:
                lo, hi = token.split(":")
                out.extend(range(int(lo), int(hi)))
            else:
                out.append(int(token))
        except ValueError:
            raise ConfigError(field, f"bad integer token {token!r}") from None
    if not out:
        raise ConfigError(field, "empty list")
    return tuple(out)


def _as_float_list(raw: dict[str, str], field: str) -> tuple[float, ...] | None:
    if field not in raw:
        return None
    try:
        out = tuple(float(t) for t in raw[field].split(",") if t.strip())
    except ValueError:
        raise ConfigError(field, f"bad number in {raw[field]!r}") from None
    if not out:
        raise ConfigError(field, "empty list")
    return out


def _as_str_list(raw: dict[str, str], field: str) -> tuple[str, ...] | None:
    if field not in raw:
        return None
    out = tuple(t.strip() for t in raw[field].split(",") if t.strip())
    if not out:
        raise ConfigError(field, "empty list")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, typed view of one experiment's settings."""

    model: str
    n: int
    delta: float | None
    alpha: float | None
    j: float | None
    ansatz: str
    seed: int
    noise: NoiseSpec | None
    mitigation: bool
    shots: int
    topology: str | None
    output_dir: str
    opt_tol: float
    opt_max_iters: int
    scan_sizes: tuple[int, ...] | None
    scan_deltas: tuple[float, ...] | None
    scan_ansatz: tuple[str, ...] | None
    scan_seeds: tuple[int, ...] | None
    grad_variance: bool
    grad_samples: int
    embed_samples: int
    embed_mode: str
    embed_budget: float
    fail_above_relative_error: float | None


def build_config(raw: dict[str, str]) -> ExperimentConfig:
    """Validate raw key/value pairs into an ExperimentConfig."""
    for key in raw:
        if key not in _KNOWN_KEYS:
            raise ConfigError(key, "unknown configuration key")

    model = raw.get("model", "")
    if model not in _MODELS:
        raise ConfigError("model", f"expected one of {_MODELS}, got {model!r}")

    n = _as_int(raw, "n")
    if n < 2 or n % 2 != 0:
        raise ConfigError("n", f"must be an even integer >= 2, got {n}")
    if n > 30:
        raise ConfigError("n", f"statevector simulation is capped at 30 sites, got {n}")

    delta: float | None = None
    alpha: float | None = None
    j: float | None = None
    if model == "random-chain":
        if "alpha" in raw or "j" in raw:
            field = "alpha" if "alpha" in raw else "j"
            raise ConfigError(field, "only valid for model = rainbow")
        delta = _as_float(raw, "delta")
        if delta < 1.0:
            raise ConfigError("delta", f"must be >= 1, got {delta}")
    else:
        if "delta" in raw:
            raise ConfigError("delta", "only valid for model = random-chain")
        alpha = _as_float(raw, "alpha", default=1.0)
        j = _as_float(raw, "j", default=100.0)
        if alpha <= 0 or j <= 0:
            field = "alpha" if alpha <= 0 else "j"
            raise ConfigError(field, "must be positive")

    ansatz = raw.get("ansatz", "")
    if ansatz not in _ANSAETZE:
        raise ConfigError("ansatz", f"expected one of {_ANSAETZE}, got {ansatz!r}")
    if ansatz not in _MODEL_ANSAETZE[model]:
        raise ConfigError(
            "ansatz",
            f"{ansatz} is not available for model = {model} "
            f"(choose from {_MODEL_ANSAETZE[model]})",
        )

    seed = _as_int(raw, "seed")
    if seed < 0:
        raise ConfigError("seed", f"must be >= 0, got {seed}")

    noise: NoiseSpec | None = None
    noise_raw = raw.get("noise", "none").lower()
    if noise_raw not in ("none", "off", "on"):
        raise ConfigError("noise", f"expected on or none, got {raw.get('noise')!r}")
    if noise_raw == "on":
        try:
            noise = NoiseSpec(
                p_cz=_as_float(raw, "noise_p_cz", default=NoiseSpec().p_cz),
                p_1q=_as_float(raw, "noise_p_1q", default=NoiseSpec().p_1q),
                p_readout=_as_float(
                    raw, "noise_p_readout", default=NoiseSpec().p_readout
                ),
                trajectories=_as_int(
                    raw, "noise_trajectories", default=NoiseSpec().trajectories
                ),
                coherent_cz_angle=_as_float(raw, "noise_coherent_cz_angle", default=0.0),
                seed=child_seed(seed, "noise"),
            )
        except ValueError as exc:
            raise ConfigError("noise", str(exc)) from None
    else:
        for key in raw:
            if key.startswith("noise_"):
                raise ConfigError(key, "set noise = on to configure noise parameters")

    mitigation = _as_switch(raw, "mitigation", default=False)
    shots = _as_int(raw, "shots", default=10_000)
    if shots < 1:
        raise ConfigError("shots", f"must be >= 1, got {shots}")

    if "output_dir" not in raw or not raw["output_dir"]:
        raise ConfigError("output_dir", "required")

    scan_ansatz = _as_str_list(raw, "scan_ansatz")
    if scan_ansatz is not None:
        for a in scan_ansatz:
            if a not in _MODEL_ANSAETZE[model]:
                raise ConfigError(
                    "scan_ansatz", f"{a!r} is not available for model = {model}"
                )
    scan_sizes = _as_int_list(raw, "scan_sizes")
    if scan_sizes is not None:
        for size in scan_sizes:
            if size < 2 or size % 2 != 0 or size > 30:
                raise ConfigError("scan_sizes", f"bad chain size {size}")
    scan_deltas = _as_float_list(raw, "scan_deltas")
    if scan_deltas is not None:
        if model != "random-chain":
            raise ConfigError("scan_deltas", "only valid for model = random-chain")
        for d in scan_deltas:
            if d < 1.0:
                raise ConfigError("scan_deltas", f"must be >= 1, got {d}")

    embed_mode = raw.get("embed_mode", "strict")
    if embed_mode not in ("strict", "ecba"):
        raise ConfigError("embed_mode", f"expected strict or ecba, got {embed_mode!r}")
    embed_samples = _as_int(raw, "embed_samples", default=1)
    if embed_samples < 1:
        raise ConfigError("embed_samples", f"must be >= 1, got {embed_samples}")
    embed_budget = _as_float(raw, "embed_budget", default=1.0)
    if embed_budget <= 0:
        raise ConfigError("embed_budget", f"must be positive, got {embed_budget}")

    opt_tol = _as_float(raw, "opt_tol", default=1e-6)
    if opt_tol <= 0:
        raise ConfigError("opt_tol", f"must be positive, got {opt_tol}")
    opt_max_iters = _as_int(raw, "opt_max_iters", default=2000)
    if opt_max_iters < 1:
        raise ConfigError("opt_max_iters", f"must be >= 1, got {opt_max_iters}")

    grad_samples = _as_int(raw, "grad_samples", default=64)
    if grad_samples < 30:
        raise ConfigError(
            "grad_samples", f"variance needs at least 30 samples, got {grad_samples}"
        )

    fail_above: float | None = None
    if "fail_above_relative_error" in raw:
        fail_above = _as_float(raw, "fail_above_relative_error")
        if fail_above <= 0:
            raise ConfigError(
                "fail_above_relative_error", f"must be positive, got {fail_above}"
            )

    return ExperimentConfig(
        model=model,
        n=n,
        delta=delta,
        alpha=alpha,
        j=j,
        ansatz=ansatz,
        seed=seed,
        noise=noise,
        mitigation=mitigation,
        shots=shots,
        topology=raw.get("topology"),
        output_dir=raw["output_dir"],
        opt_tol=opt_tol,
        opt_max_iters=opt_max_iters,
        scan_sizes=scan_sizes,
        scan_deltas=scan_deltas,
        scan_ansatz=scan_ansatz,
        scan_seeds=_as_int_list(raw, "scan_seeds"),
        grad_variance=_as_switch(raw, "grad_variance", default=False),
        grad_samples=grad_samples,
        embed_samples=embed_samples,
        embed_mode=embed_mode,
        embed_budget=embed_budget,
        fail_above_relative_error=fail_above,
    )


def load_experiment_config(
    path: str | Path, overrides: list[str] | None = None
) -> ExperimentConfig:
    """Parse a config file, apply overrides, and validate."""
    values = parse_config_file(path)
    if overrides:
        values = apply_overrides(values, overrides)
    return build_config(values)
