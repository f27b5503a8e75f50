"""Command-line front end: `ecba <command> --config <file> [--override k=v]...`.

Commands form a pipeline whose stages exchange plain-text artifacts inside
the configured output directory:

    sample    draw chain couplings               -> couplings.txt
    rg        decimation pairing plan            -> plan.txt
    build     ansatz circuit                     -> circuit.txt
    optimize  variational minimization           -> vqe.txt
    run-ideal noiseless energy + oracle check    -> ideal.csv
    run-noisy noisy/mitigated energy estimate    -> noisy.csv [mitigated.txt]
    embed     placement onto a coupler layout    -> embed.csv [embedding.txt]
    scan      sweep (n, delta, ansatz, seed)     -> scan.csv + cells/
    report    correlation matrix + witness pairs -> report.csv, witness.csv,
                                                    summary.csv

Every command updates manifest.json (stage seeds, input/output hashes; no
timestamps, so identical runs produce identical manifests) and appends a
timestamped line to run.log. Exit codes: 0 ok, 1 config error, 2 stage
failure, 3 threshold failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np

from .circuits import (
    build_ecba,
    build_hea_random,
    build_rainbow_cba,
    build_rainbow_hea,
    circuit_from_text,
    circuit_to_text,
    decompose,
)
from .config import ConfigError, ExperimentConfig, load_experiment_config
from .embedding import (
    EmbedResult,
    FeasibilityReport,
    Topology,
    builtin_topology,
    embed,
    embedding_to_text,
    feasibility_study,
    instance_edges,
    report_to_csv,
    topology_from_text,
)
from .hamiltonians import (
    CouplingRealization,
    HamiltonianTerms,
    RainbowSpec,
    chain_terms,
    couplings_from_text,
    couplings_to_text,
    rainbow_terms,
    relative_accuracy,
    relative_error,
    sample_couplings,
)
from .mitigation import (
    MitigationError,
    mitigated_energy,
    mitigated_to_text,
    raw_energy_estimate,
)
from .oracle import MAX_ORACLE_QUBITS, OracleError, ground_state
from .rg import (
    PairingPlan,
    PlanInvariantError,
    interaction_graph,
    long_range_pairs,
    make_plan,
    plan_from_text,
    plan_to_text,
)
from .seeding import child_seed
from .statevector import correlation_matrix, energy, run, witness_pairs
from .vqe import gradient_variance, minimize, vqe_from_text, vqe_to_text

_COMMANDS = (
    "sample",
    "rg",
    "build",
    "optimize",
    "run-ideal",
    "run-noisy",
    "embed",
    "scan",
    "report",
)


class StageError(RuntimeError):
    """A pipeline stage could not run (missing artifact, solver failure)."""


class ThresholdError(RuntimeError):
    """A configured accuracy threshold was violated (CI exit code 3)."""


# ------------------------------------------------------------- artifact I/O


def _out_dir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _read_artifact(path: Path, producer: str) -> str:
    if not path.exists():
        raise StageError(f"missing artifact {path} (run `ecba {producer}` first)")
    return path.read_text(encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _log(out: Path, message: str) -> None:
    stamp = datetime.now().isoformat(timespec="seconds")
    with (out / "run.log").open("a", encoding="utf-8") as fh:
        fh.write(f"{stamp} {message}\n")


def _update_manifest(
    out: Path,
    stage: str,
    seeds: dict[str, int],
    inputs: list[Path],
    outputs: list[Path],
) -> None:
    path = out / "manifest.json"
    manifest: dict = {}
    if path.exists():
        manifest = json.loads(path.read_text(encoding="utf-8"))
    manifest.setdefault("stages", {})[stage] = {
        "seeds": seeds,
        "inputs": {p.name: _sha256(p) for p in inputs},
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path.write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


# -------------------------------------------------------------- stage logic


def _require_chain(cfg: ExperimentConfig, command: str) -> None:
    if cfg.model != "random-chain":
        raise ConfigError("model", f"'{command}' requires model = random-chain")


def _load_couplings(cfg: ExperimentConfig, out: Path) -> CouplingRealization:
    return couplings_from_text(_read_artifact(out / "couplings.txt", "sample"))


def _load_plan(out: Path) -> PairingPlan:
    return plan_from_text(_read_artifact(out / "plan.txt", "rg"))


def _hamiltonian(cfg: ExperimentConfig, out: Path) -> HamiltonianTerms:
    if cfg.model == "random-chain":
        return chain_terms(_load_couplings(cfg, out))
    return rainbow_terms(RainbowSpec(n=cfg.n, alpha=cfg.alpha, j=cfg.j))


def _oracle_energy(h: HamiltonianTerms) -> float | None:
    if h.n > MAX_ORACLE_QUBITS:
        return None
    return ground_state(h, want_state=False).energy


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.17g}"


def cmd_sample(cfg: ExperimentConfig) -> int:
    _require_chain(cfg, "sample")
    out = _out_dir(cfg)
    stage_seed = child_seed(cfg.seed, "sample")
    real = sample_couplings(cfg.n, cfg.delta, stage_seed)
    target = out / "couplings.txt"
    target.write_text(couplings_to_text(real), encoding="utf-8")
    _update_manifest(out, "sample", {"sample": stage_seed}, [], [target])
    _log(out, f"sample n={cfg.n} delta={cfg.delta:g} ok")
    return 0


def cmd_rg(cfg: ExperimentConfig) -> int:
    _require_chain(cfg, "rg")
    out = _out_dir(cfg)
    source = out / "couplings.txt"
    plan = make_plan(_load_couplings(cfg, out))
    target = out / "plan.txt"
    target.write_text(plan_to_text(plan), encoding="utf-8")
    _update_manifest(out, "rg", {}, [source], [target])
    _log(out, "rg ok")
    return 0


def _build_circuit(cfg: ExperimentConfig, out: Path):
    if cfg.model == "rainbow":
        return build_rainbow_cba(cfg.n) if cfg.ansatz == "CBA" else build_rainbow_hea(cfg.n)
    if cfg.ansatz == "ECBA":
        return build_ecba(_load_plan(out))
    return build_hea_random(cfg.n)


def cmd_build(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    circ = _build_circuit(cfg, out)
    target = out / "circuit.txt"
    target.write_text(circuit_to_text(circ), encoding="utf-8")
    inputs = [out / "plan.txt"] if (cfg.model, cfg.ansatz) == ("random-chain", "ECBA") else []
    _update_manifest(out, "build", {}, inputs, [target])
    _log(out, f"build ansatz={cfg.ansatz} ok")
    return 0


def cmd_optimize(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    circ = circuit_from_text(_read_artifact(out / "circuit.txt", "build"))
    h = _hamiltonian(cfg, out)
    init_seed = child_seed(cfg.seed, "optimize")
    result = minimize(circ, h, init_seed, tol=cfg.opt_tol, max_iters=cfg.opt_max_iters)
    target = out / "vqe.txt"
    target.write_text(vqe_to_text(result), encoding="utf-8")
    inputs = [out / "circuit.txt"]
    if cfg.model == "random-chain":
        inputs.append(out / "couplings.txt")
    _update_manifest(out, "optimize", {"optimize": init_seed}, inputs, [target])
    _log(
        out,
        f"optimize iterations={result.iterations} converged={result.converged} ok",
    )
    return 0


def cmd_run_ideal(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    circ = circuit_from_text(_read_artifact(out / "circuit.txt", "build"))
    result = vqe_from_text(_read_artifact(out / "vqe.txt", "optimize"))
    h = _hamiltonian(cfg, out)
    state = run(circ, np.asarray(result.best_params))
    e_vqe = energy(state, h)
    e_exact = _oracle_energy(h)
    rel_err = None if e_exact is None else relative_error(e_exact, e_vqe)
    rel_acc = None if e_exact is None else relative_accuracy(e_exact, e_vqe)
    header = "n,delta,ansatz,seed,energy,e_exact,relative_error,relative_accuracy"
    row = (
        f"{cfg.n},{'' if cfg.delta is None else f'{cfg.delta:g}'},{cfg.ansatz},"
        f"{cfg.seed},{_fmt(e_vqe)},{_fmt(e_exact)},{_fmt(rel_err)},{_fmt(rel_acc)}"
    )
    target = out / "ideal.csv"
    target.write_text(header + "\n" + row + "\n", encoding="utf-8")
    _update_manifest(
        out, "run-ideal", {}, [out / "circuit.txt", out / "vqe.txt"], [target]
    )
    _log(out, f"run-ideal energy={e_vqe:.12g} ok")
    return 0


def cmd_run_noisy(cfg: ExperimentConfig) -> int:
    if cfg.noise is None:
        raise ConfigError("noise", "'run-noisy' requires noise = on")
    out = _out_dir(cfg)
    circ = circuit_from_text(_read_artifact(out / "circuit.txt", "build"))
    result = vqe_from_text(_read_artifact(out / "vqe.txt", "optimize"))
    h = _hamiltonian(cfg, out)
    dec = decompose(circ)
    params = np.asarray(result.best_params)
    estimate_seed = child_seed(cfg.seed, "estimate")
    outputs: list[Path] = []
    if cfg.mitigation:
        est = mitigated_energy(dec, params, h, cfg.noise, estimate_seed, shots=cfg.shots)
        value, std_error, shots_used = est.value, est.std_error, est.shots_used
        kind = "mitigated"
        mit_path = out / "mitigated.txt"
        mit_path.write_text(mitigated_to_text(est), encoding="utf-8")
        outputs.append(mit_path)
    else:
        value, std_error = raw_energy_estimate(
            dec, params, h, cfg.noise, cfg.shots, estimate_seed
        )
        shots_used = 3 * cfg.shots
        kind = "raw"
    e_exact = _oracle_energy(h)
    rel_acc = None if e_exact is None else relative_accuracy(e_exact, value)
    header = "kind,value,std_error,e_exact,relative_accuracy,shots_used"
    row = (
        f"{kind},{_fmt(value)},{_fmt(std_error)},{_fmt(e_exact)},"
        f"{_fmt(rel_acc)},{shots_used}"
    )
    target = out / "noisy.csv"
    target.write_text(header + "\n" + row + "\n", encoding="utf-8")
    _update_manifest(
        out,
        "run-noisy",
        {"estimate": estimate_seed, "noise": cfg.noise.seed},
        [out / "circuit.txt", out / "vqe.txt"],
        [target, *outputs],
    )
    _log(out, f"run-noisy kind={kind} value={value:.12g} ok")
    return 0


def _load_topology(cfg: ExperimentConfig) -> Topology:
    if not cfg.topology:
        raise ConfigError("topology", "required for embed")
    path = Path(cfg.topology)
    if path.exists():
        return topology_from_text(path.read_text(encoding="utf-8"))
    try:
        return builtin_topology(cfg.topology)
    except ValueError:
        raise StageError(f"topology file not found: {cfg.topology}") from None


def _single_instance_edges(cfg: ExperimentConfig, out: Path) -> tuple[tuple[int, int], ...]:
    if cfg.model == "rainbow":
        chain = {(i, i + 1) for i in range(cfg.n - 1)}
        rungs = {(i, cfg.n - 1 - i) for i in range(cfg.n // 2)}
        return tuple(sorted(chain | {(min(a, b), max(a, b)) for a, b in rungs}))
    plan = _load_plan(out)
    if cfg.embed_mode == "ecba":
        return interaction_graph(plan)
    chain = {(i, i + 1) for i in range(cfg.n - 1)}
    return tuple(sorted(chain | set(long_range_pairs(plan))))


def cmd_embed(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    topo = _load_topology(cfg)
    outputs: list[Path] = []
    if cfg.embed_samples == 1:
        edges = _single_instance_edges(cfg, out)
        result: EmbedResult = embed(edges, topo, time_budget=cfg.embed_budget)
        ms = result.elapsed * 1e3
        report = FeasibilityReport(
            n=cfg.n,
            delta=cfg.delta if cfg.delta is not None else 0.0,
            mode=cfg.embed_mode,
            samples=1,
            found=int(result.status == "found"),
            timeout=int(result.status == "timeout"),
            infeasible=int(result.status == "infeasible"),
            p50_ms=ms,
            p90_ms=ms,
            max_ms=ms,
        )
        seeds: dict[str, int] = {}
        if result.map is not None:
            map_path = out / "embedding.txt"
            map_path.write_text(embedding_to_text(result.map), encoding="utf-8")
            outputs.append(map_path)
        _log(out, f"embed status={result.status} ok")
    else:
        _require_chain(cfg, "embed sampling study")
        study_seed = child_seed(cfg.seed, "embed")
        report = feasibility_study(
            cfg.n,
            cfg.delta,
            cfg.embed_samples,
            topo,
            study_seed,
            mode=cfg.embed_mode,
            time_budget=cfg.embed_budget,
        )
        seeds = {"embed": study_seed}
        _log(
            out,
            f"embed study samples={report.samples} found={report.found} "
            f"timeout={report.timeout} infeasible={report.infeasible} ok",
        )
    target = out / "embed.csv"
    target.write_text(report_to_csv(report), encoding="utf-8")
    _update_manifest(out, "embed", seeds, [], [target, *outputs])
    return 0


def _scan_cells(cfg: ExperimentConfig):
    sizes = cfg.scan_sizes or (cfg.n,)
    ansaetze = cfg.scan_ansatz or (cfg.ansatz,)
    seeds = cfg.scan_seeds or (cfg.seed,)
    if cfg.model == "random-chain":
        deltas: tuple[float | None, ...] = cfg.scan_deltas or (cfg.delta,)
    else:
        deltas = (None,)
    for size in sizes:
        for d in deltas:
            for ansatz in ansaetze:
                for seed in seeds:
                    yield size, d, ansatz, seed


def _cell_id(size: int, d: float | None, ansatz: str, seed: int) -> str:
    middle = "rainbow" if d is None else f"d{d:g}"
    return f"n{size}-{middle}-{ansatz}-s{seed}"


def _run_cell(
    cfg: ExperimentConfig, out: Path, size: int, d: float | None, ansatz: str, seed: int
) -> dict:
    cell_dir = out / "cells" / _cell_id(size, d, ansatz, seed)
    cell_dir.mkdir(parents=True, exist_ok=True)
    started = time.monotonic()
    cell_seeds: dict[str, int] = {}
    if cfg.model == "random-chain":
        cell_seeds["sample"] = child_seed(seed, "sample")
        real = sample_couplings(size, d, cell_seeds["sample"])
        (cell_dir / "couplings.txt").write_text(
            couplings_to_text(real), encoding="utf-8"
        )
        h = chain_terms(real)
        if ansatz == "ECBA":
            plan = make_plan(real)
            (cell_dir / "plan.txt").write_text(plan_to_text(plan), encoding="utf-8")
            circ = build_ecba(plan)
        else:
            circ = build_hea_random(size)
    else:
        h = rainbow_terms(RainbowSpec(n=size, alpha=cfg.alpha, j=cfg.j))
        circ = build_rainbow_cba(size) if ansatz == "CBA" else build_rainbow_hea(size)
    (cell_dir / "circuit.txt").write_text(circuit_to_text(circ), encoding="utf-8")
    cell_seeds["optimize"] = child_seed(seed, "optimize")
    result = minimize(
        circ, h, cell_seeds["optimize"], tol=cfg.opt_tol, max_iters=cfg.opt_max_iters
    )
    (cell_dir / "vqe.txt").write_text(vqe_to_text(result), encoding="utf-8")
    e_exact = _oracle_energy(h)
    rel_err = None if e_exact is None else relative_error(e_exact, result.best_energy)
    rel_acc = None if e_exact is None else relative_accuracy(e_exact, result.best_energy)
    row = {
        "n": size,
        "delta": d,
        "ansatz": ansatz,
        "seed": seed,
        "E_vqe": result.best_energy,
        "E_exact": e_exact,
        "relative_error": rel_err,
        "relative_accuracy": rel_acc,
        "seeds": cell_seeds,
    }
    if cfg.grad_variance:
        cell_seeds["gradvar"] = child_seed(seed, "gradvar")
        report = gradient_variance(circ, h, cfg.grad_samples, cell_seeds["gradvar"])
        row["grad_variance"] = report.mean_variance
    row["wall_time"] = time.monotonic() - started
    return row


def cmd_scan(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    columns = ["n", "delta", "ansatz", "seed", "E_vqe", "E_exact",
               "relative_error", "relative_accuracy"]
    if cfg.grad_variance:
        columns.append("grad_variance")
    columns.append("wall_time")
    rows = []
    for size, d, ansatz, seed in _scan_cells(cfg):
        rows.append(_run_cell(cfg, out, size, d, ansatz, seed))
    lines = [",".join(columns)]
    for row in rows:
        cells = [
            str(row["n"]),
            "" if row["delta"] is None else f"{row['delta']:g}",
            row["ansatz"],
            str(row["seed"]),
            _fmt(row["E_vqe"]),
            _fmt(row["E_exact"]),
            _fmt(row["relative_error"]),
            _fmt(row["relative_accuracy"]),
        ]
        if cfg.grad_variance:
            cells.append(_fmt(row["grad_variance"]))
        cells.append(f"{row['wall_time']:.3f}")
        lines.append(",".join(cells))
    target = out / "scan.csv"
    target.write_text("\n".join(lines) + "\n", encoding="utf-8")
    manifest_seeds = {
        f"{_cell_id(r['n'], r['delta'], r['ansatz'], r['seed'])}.{label}": value
        for r in rows
        for label, value in r["seeds"].items()
    }
    _update_manifest(out, "scan", manifest_seeds, [], [target])
    _log(out, f"scan cells={len(rows)} ok")
    if cfg.fail_above_relative_error is not None:
        worst = max(
            (r["relative_error"] for r in rows if r["relative_error"] is not None),
            default=None,
        )
        if worst is not None and worst > cfg.fail_above_relative_error:
            raise ThresholdError(
                f"relative_error {worst:.3g} exceeds "
                f"fail_above_relative_error={cfg.fail_above_relative_error:g}"
            )
    return 0


def cmd_report(cfg: ExperimentConfig) -> int:
    out = _out_dir(cfg)
    circ = circuit_from_text(_read_artifact(out / "circuit.txt", "build"))
    result = vqe_from_text(_read_artifact(out / "vqe.txt", "optimize"))
    h = _hamiltonian(cfg, out)
    state = run(circ, np.asarray(result.best_params))
    matrix = correlation_matrix(state)
    flagged = witness_pairs(matrix)
    heat_lines = ["i,j,c_ij"]
    witness_lines = ["i,j,c_ij"]
    for i in range(cfg.n):
        for j in range(i + 1, cfg.n):
            heat_lines.append(f"{i},{j},{matrix[i, j]:.17g}")
            if flagged[i, j]:
                witness_lines.append(f"{i},{j},{matrix[i, j]:.17g}")
    heat_path = out / "report.csv"
    heat_path.write_text("\n".join(heat_lines) + "\n", encoding="utf-8")
    witness_path = out / "witness.csv"
    witness_path.write_text("\n".join(witness_lines) + "\n", encoding="utf-8")

    e_vqe = energy(state, h)
    e_exact = _oracle_energy(h)
    rel_err = None if e_exact is None else relative_error(e_exact, e_vqe)
    rel_acc = None if e_exact is None else relative_accuracy(e_exact, e_vqe)
    summary_path = out / "summary.csv"
    summary_path.write_text(
        "energy,e_exact,relative_error,relative_accuracy\n"
        f"{_fmt(e_vqe)},{_fmt(e_exact)},{_fmt(rel_err)},{_fmt(rel_acc)}\n",
        encoding="utf-8",
    )
    _update_manifest(
        out,
        "report",
        {},
        [out / "circuit.txt", out / "vqe.txt"],
        [heat_path, witness_path, summary_path],
    )
    _log(out, f"report witnesses={len(witness_lines) - 1} ok")
    if (
        cfg.fail_above_relative_error is not None
        and rel_err is not None
        and rel_err > cfg.fail_above_relative_error
    ):
        raise ThresholdError(
            f"relative_error {rel_err:.3g} exceeds "
            f"fail_above_relative_error={cfg.fail_above_relative_error:g}"
        )
    return 0


_DISPATCH = {
    "sample": cmd_sample,
    "rg": cmd_rg,
    "build": cmd_build,
    "optimize": cmd_optimize,
    "run-ideal": cmd_run_ideal,
    "run-noisy": cmd_run_noisy,
    "embed": cmd_embed,
    "scan": cmd_scan,
    "report": cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="ecba",
        description="Variational ground-state workbench for disordered spin chains.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", required=True, help="path to a key=value config file")
        cmd.add_argument(
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one config key (repeatable)",
        )
    args = parser.parse_args(argv)
    try:
        cfg = load_experiment_config(args.config, args.override)
        return _DISPATCH[args.command](cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ThresholdError as exc:
        print(f"threshold failure: {exc}", file=sys.stderr)
        return 3
    except StageError as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2
    except (OracleError, MitigationError, PlanInvariantError, ValueError, OSError) as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
