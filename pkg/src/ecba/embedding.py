"""Placement of logical interaction graphs onto hardware coupler layouts.

Every two-qubit gate must act on physically adjacent qubits, so a circuit's
interaction graph has to be mapped injectively onto the device's coupler
graph with every logical edge landing on a coupler.  This module provides
the topology/embedding types, a deterministic backtracking search that
distinguishes "proven infeasible" from "ran out of time", and a sampling
study that measures how often randomly drawn chain instances embed.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .hamiltonians import sample_couplings
from .rg import interaction_graph, long_range_pairs, make_plan
from .seeding import child_seed

Edge = tuple[int, int]

FOUND = "found"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"

_TIME_CHECK_STRIDE = 128


def _normalize_edges(edges) -> tuple[Edge, ...]:
    """Canonicalize an edge list: sorted pairs, deduplicated, no self loops."""
    out: set[Edge] = set()
    for e in edges:
        a, b = int(e[0]), int(e[1])
        if a == b:
            raise ValueError(f"self loop on node {a}")
        out.add((min(a, b), max(a, b)))
    return tuple(sorted(out))


@dataclass(frozen=True)
class Topology:
    """Simple undirected coupler graph of a device layout."""

    name: str
    nodes: tuple[int, ...]
    edges: tuple[Edge, ...]

    def __post_init__(self) -> None:
        if not self.name or any(ch.isspace() for ch in self.name):
            raise ValueError("topology name must be non-empty without whitespace")
        if len(set(self.nodes)) != len(self.nodes):
            raise ValueError("duplicate node ids")
        known = set(self.nodes)
        normalized = _normalize_edges(self.edges)
        if normalized != tuple(self.edges):
            raise ValueError("edges must be sorted (min, max) pairs without duplicates")
        for a, b in self.edges:
            if a not in known or b not in known:
                raise ValueError(f"edge ({a}, {b}) references an unknown node")

    def adjacency(self) -> dict[int, frozenset[int]]:
        adj: dict[int, set[int]] = {v: set() for v in self.nodes}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return {v: frozenset(s) for v, s in adj.items()}

    def degree(self) -> dict[int, int]:
        return {v: len(s) for v, s in self.adjacency().items()}


def grid_topology(width: int, height: int, name: str | None = None) -> Topology:
    """Rectangular width x height lattice with row-major node numbering."""
    if width < 1 or height < 1:
        raise ValueError("grid dimensions must be positive")
    nodes = tuple(range(width * height))
    edges: list[Edge] = []
    for r in range(height):
        for c in range(width):
            v = r * width + c
            if c + 1 < width:
                edges.append((v, v + 1))
            if r + 1 < height:
                edges.append((v, v + width))
    label = name if name is not None else f"grid-{width}x{height}"
    return Topology(name=label, nodes=nodes, edges=tuple(sorted(edges)))


def topology_to_text(topo: Topology) -> str:
    """Serialize: a `layout <name>` header, `node <id>` lines, `edge <a> <b>` lines."""
    lines = [f"layout {topo.name}"]
    lines += [f"node {v}" for v in topo.nodes]
    lines += [f"edge {a} {b}" for a, b in topo.edges]
    return "\n".join(lines) + "\n"


def topology_from_text(text: str) -> Topology:
    """Parse the format produced by topology_to_text."""
    name: str | None = None
    nodes: list[int] = []
    edges: list[Edge] = []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "layout" and len(parts) == 2:
            name = parts[1]
        elif parts[0] == "node" and len(parts) == 2:
            nodes.append(int(parts[1]))
        elif parts[0] == "edge" and len(parts) == 3:
            a, b = int(parts[1]), int(parts[2])
            edges.append((min(a, b), max(a, b)))
        else:
            raise ValueError(f"unrecognized topology line: {ln!r}")
    if name is None:
        raise ValueError("topology text missing `layout <name>` header")
    return Topology(name=name, nodes=tuple(nodes), edges=tuple(sorted(set(edges))))


def builtin_topology(name: str) -> Topology:
    """Load one of the packaged device layouts (e.g. 'garnet20', 'emerald54')."""
    ref = resources.files("ecba").joinpath("data", f"{name}.topo")
    try:
        text = ref.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ValueError(f"no packaged topology named {name!r}") from None
    return topology_from_text(text)


@dataclass(frozen=True)
class EmbeddingMap:
    """Assignment of logical sites to physical nodes.

    A correct map is injective; that is checked by `validate` (so broken maps
    can be loaded and diagnosed) and guaranteed for maps returned by `embed`.
    """

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        logical = [p[0] for p in self.pairs]
        if len(set(logical)) != len(logical):
            raise ValueError("a logical site is assigned more than once")
        if tuple(sorted(self.pairs)) != self.pairs:
            raise ValueError("pairs must be sorted by logical site")

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def embedding_to_text(emap: EmbeddingMap) -> str:
    """One `<logical> <physical>` pair per line."""
    return "\n".join(f"{s} {v}" for s, v in emap.pairs) + "\n"


def embedding_from_text(text: str) -> EmbeddingMap:
    pairs: list[tuple[int, int]] = []
    for ln in text.splitlines():
        parts = ln.split()
        if not parts or parts[0].startswith("#"):
            continue
        if len(parts) != 2:
            raise ValueError(f"unrecognized embedding line: {ln!r}")
        pairs.append((int(parts[0]), int(parts[1])))
    return EmbeddingMap(pairs=tuple(sorted(pairs)))


@dataclass(frozen=True)
class EmbedResult:
    """Outcome of one placement search.

    status is 'found' (map is set), 'infeasible' (search space exhausted or a
    degree bound rules the graph out), or 'timeout' (budget hit before either).
    """

    status: str
    map: EmbeddingMap | None
    elapsed: float

    def __post_init__(self) -> None:
        if self.status not in (FOUND, INFEASIBLE, TIMEOUT):
            raise ValueError(f"unknown status {self.status!r}")
        if (self.status == FOUND) != (self.map is not None):
            raise ValueError("map must be present exactly when status is 'found'")


class _Budget(Exception):
    """Internal signal: the search clock ran out."""


def _all_pairs_distances(topo: Topology) -> dict[int, dict[int, int]]:
    """BFS distance between every pair of nodes (disconnected -> missing key)."""
    adj = topo.adjacency()
    dist: dict[int, dict[int, int]] = {}
    for source in topo.nodes:
        d = {source: 0}
        frontier = [source]
        while frontier:
            nxt: list[int] = []
            for v in frontier:
                for w in adj[v]:
                    if w not in d:
                        d[w] = d[v] + 1
                        nxt.append(w)
            frontier = nxt
        dist[source] = d
    return dist


def validate(emap: EmbeddingMap, edges, topo: Topology) -> list[str]:
    """Check a map against a graph and topology; empty list means valid."""
    violations: list[str] = []
    assignment = emap.as_dict()
    known = set(topo.nodes)
    seen: dict[int, int] = {}
    for site, node in emap.pairs:
        if node not in known:
            violations.append(f"site {site} assigned to unknown node {node}")
        if node in seen:
            violations.append(
                f"sites {seen[node]} and {site} both assigned to node {node}"
            )
        else:
            seen[node] = site
    couplers = set(topo.edges)
    for a, b in _normalize_edges(edges):
        if a not in assignment or b not in assignment:
            missing = a if a not in assignment else b
            violations.append(f"edge ({a}, {b}): site {missing} is unassigned")
            continue
        u, v = assignment[a], assignment[b]
        if (min(u, v), max(u, v)) not in couplers:
            violations.append(
                f"edge ({a}, {b}) maps to non-adjacent nodes ({u}, {v})"
            )
    return violations


def embed(edges, topo: Topology, time_budget: float = 1.0) -> EmbedResult:
    """Backtracking search for an injective adjacency-preserving placement.

    Deterministic: site order interleaves the chain order with endpoints of
    long-range edges first among equally constrained sites, and candidate
    nodes are ranked by distance to the images of already-placed neighbors.
    """
    start = time.monotonic()
    deadline = start + float(time_budget)
    graph = _normalize_edges(edges)
    sites = sorted({s for e in graph for s in e})
    if len(sites) > len(topo.nodes):
        raise ValueError(
            f"{len(sites)} logical sites cannot fit on {len(topo.nodes)} nodes"
        )
    if not sites:
        return EmbedResult(status=FOUND, map=EmbeddingMap(pairs=()), elapsed=0.0)

    lneigh: dict[int, set[int]] = {s: set() for s in sites}
    for a, b in graph:
        lneigh[a].add(b)
        lneigh[b].add(a)
    ldeg = {s: len(v) for s, v in lneigh.items()}

    adj = topo.adjacency()
    tdeg = {v: len(adj[v]) for v in topo.nodes}

    # Degree bound: a site needing more neighbors than any node offers can
    # never be placed, so the whole graph is infeasible regardless of budget.
    if max(ldeg.values()) > max(tdeg.values(), default=0):
        return EmbedResult(
            status=INFEASIBLE, map=None, elapsed=time.monotonic() - start
        )

    dist = _all_pairs_distances(topo)
    span = {s: max(abs(s - t) for t in lneigh[s]) for s in sites}
    chain_rank = {s: k for k, s in enumerate(sites)}

    assignment: dict[int, int] = {}
    used: set[int] = set()
    ticks = 0

    def check_clock() -> None:
        nonlocal ticks
        ticks += 1
        if ticks % _TIME_CHECK_STRIDE == 0 and time.monotonic() > deadline:
            raise _Budget

    def pick_site() -> int:
        # Most already-placed neighbors first; among ties prefer endpoints of
        # longer-range edges, then chain order.
        best = None
        best_key = None
        for s in sites:
            if s in assignment:
                continue
            key = (-sum(1 for t in lneigh[s] if t in assignment), -span[s], chain_rank[s])
            if best_key is None or key < best_key:
                best, best_key = s, key
        assert best is not None
        return best

    def candidates(site: int) -> list[int]:
        placed = [assignment[t] for t in lneigh[site] if t in assignment]
        if placed:
            pool = set(adj[placed[0]])
            for img in placed[1:]:
                pool &= adj[img]
            pool -= used
        else:
            pool = set(topo.nodes) - used
        unplaced_needed = ldeg[site] - len(placed)
        ranked: list[tuple[int, int, int]] = []
        for v in pool:
            if tdeg[v] < ldeg[site]:
                continue
            free_around = sum(1 for w in adj[v] if w not in used)
            if free_around < unplaced_needed:
                continue
            if placed:
                score = sum(dist[v].get(img, 10**6) for img in placed)
            elif used:
                score = min(dist[v].get(img, 10**6) for img in used)
            else:
                score = 0
            ranked.append((score, v, free_around))
        ranked.sort(key=lambda t: (t[0], -t[2], t[1]))
        return [v for _, v, _ in ranked]

    def search(depth: int) -> bool:
        if depth == len(sites):
            return True
        check_clock()
        site = pick_site()
        for node in candidates(site):
            assignment[site] = node
            used.add(node)
            if search(depth + 1):
                return True
            del assignment[site]
            used.discard(node)
        return False

    try:
        ok = search(0)
    except _Budget:
        return EmbedResult(status=TIMEOUT, map=None, elapsed=time.monotonic() - start)
    elapsed = time.monotonic() - start
    if not ok:
        return EmbedResult(status=INFEASIBLE, map=None, elapsed=elapsed)
    emap = EmbeddingMap(pairs=tuple(sorted(assignment.items())))
    problems = validate(emap, graph, topo)
    if problems:  # pragma: no cover - guards the search against itself
        raise RuntimeError(f"search produced an invalid map: {problems}")
    return EmbedResult(status=FOUND, map=emap, elapsed=elapsed)


def instance_edges(n: int, delta: float, seed: int, mode: str) -> tuple[Edge, ...]:
    """Interaction edges of one sampled chain instance.

    mode 'ecba' uses exactly the edges the circuit needs (singlet pairs plus
    the strongest residual bonds); mode 'strict' additionally demands every
    nearest-neighbor bond alongside the long-range pairs.
    """
    if mode not in ("ecba", "strict"):
        raise ValueError(f"unknown mode {mode!r}")
    real = sample_couplings(n, delta, seed)
    plan = make_plan(real)
    if mode == "ecba":
        return interaction_graph(plan)
    chain = {(i, i + 1) for i in range(n - 1)}
    return tuple(sorted(chain | set(long_range_pairs(plan))))


@dataclass(frozen=True)
class FeasibilityReport:
    """Tallies and per-instance timing summary of an embedding sampling study."""

    n: int
    delta: float
    mode: str
    samples: int
    found: int
    timeout: int
    infeasible: int
    p50_ms: float
    p90_ms: float
    max_ms: float

    def __post_init__(self) -> None:
        if self.found + self.timeout + self.infeasible != self.samples:
            raise ValueError("tallies do not add up to the sample count")


def feasibility_study(
    n: int,
    delta: float,
    num_samples: int,
    topo: Topology,
    seed: int,
    mode: str = "strict",
    time_budget: float = 1.0,
) -> FeasibilityReport:
    """Sample disorder instances and tally how their interaction graphs embed.

    Each instance draws its couplings from a child stream of `seed`, so the
    report is deterministic and independent of scheduling order.
    """
    if num_samples < 1:
        raise ValueError("num_samples must be at least 1")
    tallies = {FOUND: 0, TIMEOUT: 0, INFEASIBLE: 0}
    timings_ms: list[float] = []
    for k in range(num_samples):
        edges = instance_edges(n, delta, child_seed(seed, f"instance-{k}"), mode)
        result = embed(edges, topo, time_budget=time_budget)
        tallies[result.status] += 1
        timings_ms.append(result.elapsed * 1e3)
    arr = np.asarray(timings_ms)
    return FeasibilityReport(
        n=n,
        delta=delta,
        mode=mode,
        samples=num_samples,
        found=tallies[FOUND],
        timeout=tallies[TIMEOUT],
        infeasible=tallies[INFEASIBLE],
        p50_ms=float(np.percentile(arr, 50)),
        p90_ms=float(np.percentile(arr, 90)),
        max_ms=float(arr.max()),
    )


def report_to_csv(report: FeasibilityReport) -> str:
    """Single-row CSV of the study tallies and timing percentiles."""
    header = "n,delta,mode,samples,found,timeout,infeasible,p50_ms,p90_ms,max_ms"
    row = (
        f"{report.n},{report.delta:g},{report.mode},{report.samples},"
        f"{report.found},{report.timeout},{report.infeasible},"
        f"{report.p50_ms:.3f},{report.p90_ms:.3f},{report.max_ms:.3f}"
    )
    return header + "\n" + row + "\n"
