"""Per-satellite delivery-latency engines for both reference architectures.

Architecture semantics
----------------------
* ``downhaul-greedy``: every satellite that sees at least one ground station
  downlinks to the station at minimum straight-line distance and pays that
  station's fixed surface leg to the terminus.  Satellites without a visible
  station are resolved by relaying over inter-satellite links to the
  fixpoint of ``L_i = min_j (delay(i, j) + penalty + L_j)``.  Station-backed
  labels act as immutable boundary values: relaying never rewrites them.
* ``downhaul-optimal``: true shortest path to the terminus over the
  augmented graph (satellites, stations, terminus), quantifying the cost of
  the greedy station choice.  Stations only forward toward the terminus;
  there are no ground-bounce paths back into the constellation.
* ``onorbit``: multi-source shortest path over inter-satellite links with
  every actuator at distance zero.  A hop is penalty-free when it lands
  directly on an actuator; every other relay hop pays the reroute penalty.

Two solvers cover every mode: a heap-based Dijkstra and an independent
Jacobi/Bellman-Ford sweep (:func:`fixpoint_latencies`).  Both evaluate the
identical candidate expression ``edge_weight + neighbor_label``, so their
labels agree exactly, bit for bit.  Tie-breaking (equal-delay paths) prefers
the lower node index and is applied in a shared deterministic path
extraction that only depends on the converged labels.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .constellation import ConstellationSnapshot, GroundStationNode, TerminusNode
from .geo import propagation_delay_ms, surface_distance_km
from .topology import VisibilityGraph

TERMINUS_NAME = "terminus"


class ArchitectureMode(str, Enum):
    DOWNHAUL_GREEDY = "downhaul-greedy"
    DOWNHAUL_OPTIMAL = "downhaul-optimal"
    ON_ORBIT = "onorbit"

    @classmethod
    def from_string(cls, text: str) -> "ArchitectureMode":
        for mode in cls:
            if mode.value == text:
                return mode
        raise ValueError(
            f"unknown architecture mode {text!r}; expected one of "
            f"{', '.join(m.value for m in cls)}"
        )


@dataclass(frozen=True)
class SatLatency:
    """Delivery latency for one satellite; ``math.inf`` marks unreachable."""

    sat_id: str
    latency_ms: float
    hops: int | None
    next_hop: str | None
    terminal: str | None

    @property
    def reachable(self) -> bool:
        return math.isfinite(self.latency_ms)


@dataclass(frozen=True)
class LatencyReport:
    entries: tuple[SatLatency, ...]

    def __len__(self) -> int:
        return len(self.entries)

    def latencies_ms(self) -> list[float]:
        return [e.latency_ms for e in self.entries]

    def finite_latencies_ms(self) -> list[float]:
        return [e.latency_ms for e in self.entries if e.reachable]

    def unreachable_count(self) -> int:
        return sum(1 for e in self.entries if not e.reachable)

    def entry(self, sat_id: str) -> SatLatency:
        for e in self.entries:
            if e.sat_id == sat_id:
                return e
        raise KeyError(sat_id)


@dataclass(frozen=True)
class RelaySource:
    """A node that delivers directly, with its fixed boundary label and the
    report fields to emit when the label is used as-is."""

    node: int
    label_ms: float
    terminal: str
    next_hop: str | None
    hops: int

    def __post_init__(self) -> None:
        if not self.label_ms >= 0.0:
            raise ValueError(f"source label must be >= 0, got {self.label_ms}")


@dataclass
class _RelayProblem:
    """Directed relaxation problem shared by both solvers.

    Edge (src, dst, weight) means ``label[dst]`` may be improved to
    ``weight + label[src]``.  Penalties are already folded into the weights
    and edges into seed nodes have been dropped (seed labels are immutable).
    """

    node_count: int
    sat_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray
    seeds: list[RelaySource]
    node_names: list[str]
    terminal_override: dict[int, str]


def _build_problem(
    node_count: int,
    sat_count: int,
    src: np.ndarray,
    dst: np.ndarray,
    weight: np.ndarray,
    seeds: list[RelaySource],
    node_names: list[str],
    terminal_override: dict[int, str] | None = None,
) -> _RelayProblem:
    seed_mask = np.zeros(node_count, dtype=bool)
    for s in seeds:
        seed_mask[s.node] = True
    keep = ~seed_mask[dst]
    return _RelayProblem(
        node_count=node_count,
        sat_count=sat_count,
        src=src[keep],
        dst=dst[keep],
        weight=weight[keep],
        seeds=seeds,
        node_names=node_names,
        terminal_override=dict(terminal_override or {}),
    )


def _directed_sat_edges(
    graph: VisibilityGraph,
    penalty_ms: float,
    exempt_sources: set[int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both directions of every inter-satellite edge; the penalty applies
    unless the edge leaves a penalty-exempt source node."""
    e_i = graph.sat_edges[:, 0].astype(np.int64)
    e_j = graph.sat_edges[:, 1].astype(np.int64)
    w = graph.sat_delays_ms
    src = np.concatenate([e_i, e_j])
    dst = np.concatenate([e_j, e_i])
    weight = np.concatenate([w, w])
    if penalty_ms != 0.0:
        exempt = np.zeros(graph.sat_count, dtype=bool)
        for node in exempt_sources:
            exempt[node] = True
        weight = np.where(exempt[src], weight, weight + penalty_ms)
    return src, dst, weight


def _solve(problem: _RelayProblem, solver: str, max_sweeps: int | None = None) -> np.ndarray:
    if solver == "dijkstra":
        if max_sweeps is not None:
            raise ValueError("max_sweeps only applies to the bellman solver")
        return _dijkstra_labels(problem)
    if solver == "bellman":
        return _bellman_labels(problem, max_sweeps)
    raise ValueError(f"unknown solver {solver!r}")


def _dijkstra_labels(problem: _RelayProblem) -> np.ndarray:
    n = problem.node_count
    order = np.lexsort((problem.dst, problem.src))
    src = problem.src[order]
    nbrs = problem.dst[order].tolist()
    wts = problem.weight[order].tolist()
    counts = np.bincount(src, minlength=n)
    indptr = np.concatenate([[0], np.cumsum(counts)]).tolist()

    dist = [math.inf] * n
    for s in problem.seeds:
        if s.label_ms < dist[s.node]:
            dist[s.node] = s.label_ms
    heap = [(dist[node], node) for node in sorted({s.node for s in problem.seeds})]
    heapq.heapify(heap)
    done = bytearray(n)
    pop, push = heapq.heappop, heapq.heappush
    while heap:
        du, u = pop(heap)
        if done[u] or du > dist[u]:
            continue
        done[u] = 1
        for k in range(indptr[u], indptr[u + 1]):
            v = nbrs[k]
            cand = wts[k] + du
            if cand < dist[v]:
                dist[v] = cand
                push(heap, (cand, v))
    return np.array(dist, dtype=np.float64)


def _bellman_labels(problem: _RelayProblem, max_sweeps: int | None = None) -> np.ndarray:
    """Jacobi sweeps of the relay update until no label changes."""
    labels = np.full(problem.node_count, math.inf)
    for s in problem.seeds:
        if s.label_ms < labels[s.node]:
            labels[s.node] = s.label_ms
    limit = problem.node_count + 1 if max_sweeps is None else max_sweeps
    converged = False
    for _ in range(limit):
        cand = problem.weight + labels[problem.src]
        new = labels.copy()
        np.minimum.at(new, problem.dst, cand)
        if np.array_equal(new, labels):
            converged = True
            break
        labels = new
    if max_sweeps is None and not converged:
        raise RuntimeError("relay fixpoint failed to stabilize within node-count sweeps")
    return labels


def _extract_report(problem: _RelayProblem, labels: np.ndarray, snapshot: ConstellationSnapshot) -> LatencyReport:
    """Derive hops / next hop / terminal from the converged labels.

    Parent choice: among in-edges that attain the label exactly, prefer one
    that makes strict progress (smaller parent label), then the lower node
    index.  This depends only on the labels, so both solvers produce
    identical reports.
    """
    n = problem.node_count
    seed_at: dict[int, RelaySource] = {}
    for s in problem.seeds:
        held = seed_at.get(s.node)
        if held is None or s.label_ms < held.label_ms:
            seed_at[s.node] = s

    hops = np.full(n, -1, dtype=np.int64)
    next_hop: list[str | None] = [None] * n
    terminal: list[str | None] = [None] * n

    finite_dst = np.isfinite(labels[problem.dst])
    cand = problem.weight + labels[problem.src]
    attain = finite_dst & (cand == labels[problem.dst])
    strict = labels[problem.src] < labels[problem.dst]
    key = np.where(strict, problem.src, problem.src + n)
    parent_key = np.full(n, 2 * n, dtype=np.int64)
    np.minimum.at(parent_key, problem.dst[attain], key[attain])
    parent = np.where(parent_key < 2 * n, parent_key % n, -1)

    pending: list[int] = []
    for node in np.lexsort((np.arange(n), labels)):
        if not math.isfinite(labels[node]):
            break
        source = seed_at.get(int(node))
        if source is not None and labels[node] == source.label_ms:
            hops[node] = source.hops
            next_hop[node] = source.next_hop
            terminal[node] = source.terminal
            continue
        p = int(parent[node])
        if p < 0:
            raise RuntimeError(f"no attaining relay edge for node {problem.node_names[node]}")
        if hops[p] >= 0:
            _inherit(problem, hops, next_hop, terminal, int(node), p)
        else:
            pending.append(int(node))
    # Equal-label chains (zero-delay edges) may leave stragglers; settle them
    # with repeated passes and fail loudly on a genuine cycle.
    for _ in range(len(pending)):
        if not pending:
            break
        still = [node for node in pending if hops[parent[node]] < 0]
        for node in pending:
            p = int(parent[node])
            if hops[p] >= 0:
                _inherit(problem, hops, next_hop, terminal, node, p)
        if len(still) == len(pending):
            raise RuntimeError("zero-delay relay cycle: cannot orient delivery paths")
        pending = still

    entries = []
    for i, sat in enumerate(snapshot.satellites):
        if math.isfinite(labels[i]):
            entries.append(
                SatLatency(sat.id, float(labels[i]), int(hops[i]), next_hop[i], terminal[i])
            )
        else:
            entries.append(SatLatency(sat.id, math.inf, None, None, None))
    return LatencyReport(tuple(entries))


def _inherit(
    problem: _RelayProblem,
    hops: np.ndarray,
    next_hop: list,
    terminal: list,
    node: int,
    parent: int,
) -> None:
    hops[node] = hops[parent] + 1
    next_hop[node] = problem.node_names[parent]
    terminal[node] = problem.terminal_override.get(parent, terminal[parent])


# --- Source builders ----------------------------------------------------------


def actuator_sources(snapshot: ConstellationSnapshot) -> list[RelaySource]:
    """On-orbit boundary: every actuator delivers to itself at zero cost."""
    return [
        RelaySource(node=i, label_ms=0.0, terminal=snapshot.satellites[i].id, next_hop=None, hops=0)
        for i in snapshot.actuator_indices()
    ]


def ground_delays_ms(
    stations: list[GroundStationNode] | tuple[GroundStationNode, ...],
    terminus: TerminusNode,
) -> list[float]:
    return [
        propagation_delay_ms(surface_distance_km(st.geodetic, terminus.geodetic))
        for st in stations
    ]


def greedy_downhaul_sources(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    stations: list[GroundStationNode] | tuple[GroundStationNode, ...],
    terminus: TerminusNode,
) -> list[RelaySource]:
    """Label every station-visible satellite with its greedy downlink:
    nearest visible station by straight-line distance (ties to the lower
    station index), plus that station's surface leg to the terminus."""
    ground = ground_delays_ms(stations, terminus)
    best_delay = [math.inf] * graph.sat_count
    best_station = [-1] * graph.sat_count
    edges = graph.station_edges
    delays = graph.station_delays_ms
    for k in range(edges.shape[0]):
        i = int(edges[k, 0])
        g = int(edges[k, 1])
        d = float(delays[k])
        if d < best_delay[i]:
            best_delay[i] = d
            best_station[i] = g
    sources = []
    for i in range(graph.sat_count):
        g = best_station[i]
        if g < 0:
            continue
        label = best_delay[i] + ground[g]
        sources.append(
            RelaySource(node=i, label_ms=label, terminal=stations[g].id, next_hop=stations[g].id, hops=2)
        )
    return sources


# --- Engines --------------------------------------------------------------------


def _sat_problem(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    sources: list[RelaySource],
    reroute_penalty_ms: float,
    exempt_sources_from_penalty: bool,
) -> _RelayProblem:
    exempt = {s.node for s in sources} if exempt_sources_from_penalty else set()
    src, dst, weight = _directed_sat_edges(graph, reroute_penalty_ms, exempt)
    return _build_problem(
        node_count=graph.sat_count,
        sat_count=graph.sat_count,
        src=src,
        dst=dst,
        weight=weight,
        seeds=sources,
        node_names=snapshot.ids(),
    )


def onorbit_latencies(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    reroute_penalty_ms: float = 0.0,
    solver: str = "dijkstra",
) -> LatencyReport:
    """Latency to the nearest on-orbit actuator over inter-satellite links.

    Zero actuators is legal and yields an all-unreachable report.
    """
    sources = actuator_sources(snapshot)
    problem = _sat_problem(graph, snapshot, sources, reroute_penalty_ms, True)
    return _extract_report(problem, _solve(problem, solver), snapshot)


def fixpoint_latencies(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    sources: list[RelaySource],
    reroute_penalty_ms: float = 0.0,
    exempt_sources_from_penalty: bool = False,
    max_sweeps: int | None = None,
) -> LatencyReport:
    """Reference oracle: Bellman-Ford sweeps of the relay update from the
    given immutable sources until no label changes.

    Must equal the Dijkstra-based engines exactly on identical inputs.
    ``max_sweeps`` caps the sweeps (for demonstrating that a bounded number
    of passes is insufficient); the default runs to the fixpoint.
    """
    problem = _sat_problem(graph, snapshot, sources, reroute_penalty_ms, exempt_sources_from_penalty)
    return _extract_report(problem, _solve(problem, "bellman", max_sweeps), snapshot)


def downhaul_latencies(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    stations: list[GroundStationNode] | tuple[GroundStationNode, ...],
    terminus: TerminusNode,
    mode: ArchitectureMode = ArchitectureMode.DOWNHAUL_GREEDY,
    reroute_penalty_ms: float = 0.0,
    solver: str = "dijkstra",
) -> LatencyReport:
    """Latency to the ground terminus via the station network."""
    if not stations:
        raise ValueError("downhaul requires at least one ground station")
    if mode is ArchitectureMode.DOWNHAUL_GREEDY:
        sources = greedy_downhaul_sources(graph, snapshot, stations, terminus)
        problem = _sat_problem(graph, snapshot, sources, reroute_penalty_ms, False)
        return _extract_report(problem, _solve(problem, solver), snapshot)
    if mode is ArchitectureMode.DOWNHAUL_OPTIMAL:
        problem = _augmented_problem(graph, snapshot, stations, terminus, reroute_penalty_ms)
        return _extract_report(problem, _solve(problem, solver), snapshot)
    raise ValueError(f"downhaul_latencies cannot run mode {mode.value!r}")


def _augmented_problem(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    stations: list[GroundStationNode] | tuple[GroundStationNode, ...],
    terminus: TerminusNode,
    reroute_penalty_ms: float,
) -> _RelayProblem:
    """Satellites + stations + terminus, directed against the data flow:
    terminus -> station -> satellite -> satellite."""
    n_sat = graph.sat_count
    n_st = len(stations)
    terminus_node = n_sat + n_st
    ground = ground_delays_ms(stations, terminus)

    src_ss, dst_ss, w_ss = _directed_sat_edges(graph, reroute_penalty_ms, set())
    # Station -> satellite downlinks (reverse of the data direction).
    src_gs = graph.station_edges[:, 1].astype(np.int64) + n_sat
    dst_gs = graph.station_edges[:, 0].astype(np.int64)
    w_gs = graph.station_delays_ms
    # Terminus -> station surface legs.
    src_t = np.full(n_st, terminus_node, dtype=np.int64)
    dst_t = np.arange(n_st, dtype=np.int64) + n_sat
    w_t = np.array(ground, dtype=np.float64)

    names = snapshot.ids() + [st.id for st in stations] + [TERMINUS_NAME]
    seeds = [RelaySource(node=terminus_node, label_ms=0.0, terminal=TERMINUS_NAME, next_hop=None, hops=0)]
    return _build_problem(
        node_count=terminus_node + 1,
        sat_count=n_sat,
        src=np.concatenate([src_ss, src_gs, src_t]),
        dst=np.concatenate([dst_ss, dst_gs, dst_t]),
        weight=np.concatenate([w_ss, w_gs, w_t]),
        seeds=seeds,
        node_names=names,
        terminal_override={n_sat + g: stations[g].id for g in range(n_st)},
    )
