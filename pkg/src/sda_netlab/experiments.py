"""Experiment orchestration: scenario configuration, metric summaries,
architecture comparison, actuator-fraction sweeps, and attack scenarios."""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field

from .constellation import (
    ConstellationSnapshot,
    GroundStationNode,
    TerminusNode,
    WalkerSpec,
    SplitMix64,
    generate_walker,
    load_ground_stations_csv,
    load_snapshot_csv,
    merge_snapshots,
    select_actuators,
)
from .geo import GeodeticPosition
from .routing import (
    ArchitectureMode,
    LatencyReport,
    downhaul_latencies,
    onorbit_latencies,
)
from .tle import load_tle_file, snapshot_from_tles
from .topology import AttackOverlay, VisibilityGraph, apply_overlay, build_visibility_graph

DEFAULT_ACTUATOR_FRACTION = 0.15
DEFAULT_SWEEP_FRACTIONS = tuple(i / 20 for i in range(1, 21))


# --- Metric summaries -----------------------------------------------------------


@dataclass(frozen=True)
class MetricsSummary:
    """Statistics over the finite latencies of a report.

    When every satellite is unreachable the latency statistics are absent
    (None), never NaN.
    """

    satellite_count: int
    unreachable_count: int
    reachable_fraction: float
    mean_ms: float | None
    median_ms: float | None
    p5_ms: float | None
    p95_ms: float | None
    max_ms: float | None
    mean_hops: float | None

    def to_dict(self) -> dict:
        return {
            "satellite_count": self.satellite_count,
            "unreachable_count": self.unreachable_count,
            "reachable_fraction": self.reachable_fraction,
            "mean_ms": self.mean_ms,
            "median_ms": self.median_ms,
            "p5_ms": self.p5_ms,
            "p95_ms": self.p95_ms,
            "max_ms": self.max_ms,
            "mean_hops": self.mean_hops,
        }


def nearest_rank_percentile(sorted_values: list[float], percentile: float) -> float:
    """Nearest-rank percentile on an ascending list (no interpolation)."""
    if not sorted_values:
        raise ValueError("percentile of an empty list is undefined")
    rank = math.ceil(percentile / 100.0 * len(sorted_values))
    rank = min(max(rank, 1), len(sorted_values))
    return sorted_values[rank - 1]


def summarize(report: LatencyReport) -> MetricsSummary:
    if len(report) == 0:
        raise ValueError("cannot summarize an empty report")
    finite = sorted(report.finite_latencies_ms())
    unreachable = len(report) - len(finite)
    if not finite:
        return MetricsSummary(
            satellite_count=len(report),
            unreachable_count=unreachable,
            reachable_fraction=0.0,
            mean_ms=None,
            median_ms=None,
            p5_ms=None,
            p95_ms=None,
            max_ms=None,
            mean_hops=None,
        )
    hops = [e.hops for e in report.entries if e.reachable]
    return MetricsSummary(
        satellite_count=len(report),
        unreachable_count=unreachable,
        reachable_fraction=1.0 - unreachable / len(report),
        mean_ms=math.fsum(finite) / len(finite),
        median_ms=nearest_rank_percentile(finite, 50.0),
        p5_ms=nearest_rank_percentile(finite, 5.0),
        p95_ms=nearest_rank_percentile(finite, 95.0),
        max_ms=finite[-1],
        mean_hops=math.fsum(hops) / len(hops),
    )


REPORT_CSV_HEADER = "sat_id,latency_ms,hops,terminal"


def report_to_csv(report: LatencyReport) -> str:
    """Per-satellite rows; unreachable satellites carry the literal `inf`
    and empty hops/terminal fields."""
    lines = [REPORT_CSV_HEADER]
    for e in report.entries:
        hops = "" if e.hops is None else str(e.hops)
        lines.append(f"{e.sat_id},{e.latency_ms!r},{hops},{e.terminal or ''}")
    return "\n".join(lines) + "\n"


# --- Scenario configuration -----------------------------------------------------


@dataclass(frozen=True)
class WalkerShell:
    spec: WalkerSpec
    id_prefix: str = "sat"
    label: str = "walker"


def starlink_like_shell() -> WalkerShell:
    """550 km / 53 deg shell sized to match a 5760-satellite constellation."""
    return WalkerShell(WalkerSpec(550.0, 53.0, 72, 80, phasing_f=1), "sl", "starlink-like")


def oneweb_like_shell() -> WalkerShell:
    """1200 km / 87.9 deg shell sized to match a 630-satellite constellation."""
    return WalkerShell(WalkerSpec(1200.0, 87.9, 18, 35, phasing_f=1), "ow", "oneweb-like")


PRESET_NAMES = ("starlink-like", "oneweb-like", "combined")


def preset_shells(name: str) -> tuple[WalkerShell, ...]:
    if name == "starlink-like":
        return (starlink_like_shell(),)
    if name == "oneweb-like":
        return (oneweb_like_shell(),)
    if name == "combined":
        return (starlink_like_shell(), oneweb_like_shell())
    raise ValueError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")


@dataclass(frozen=True)
class ConstellationSource:
    """Exactly one of: Walker shells, a snapshot CSV, or a TLE file."""

    walker_shells: tuple[WalkerShell, ...] = ()
    snapshot_csv: str | None = None
    tle_file: str | None = None
    tle_at_seconds: float | None = None

    def __post_init__(self) -> None:
        given = sum(
            [bool(self.walker_shells), self.snapshot_csv is not None, self.tle_file is not None]
        )
        if given != 1:
            raise ValueError("exactly one constellation source must be given")
        if self.tle_at_seconds is not None and self.tle_file is None:
            raise ValueError("tle_at_seconds requires tle_file")


@dataclass(frozen=True)
class ScenarioConfig:
    """One full experiment description; see README for the JSON schema."""

    constellation: ConstellationSource
    stations_csv: str | None = None
    terminus: GeodeticPosition | None = None
    mode: ArchitectureMode = ArchitectureMode.ON_ORBIT
    actuator_fraction: float | None = None
    actuator_count: int | None = None
    seed: int = 0
    los_margin_km: float = 0.0
    min_elevation_deg: float | None = None
    reroute_penalty_ms: float = 0.0
    overlay: AttackOverlay | None = None
    overlay_path: str | None = None
    sweep_fractions: tuple[float, ...] = field(default=DEFAULT_SWEEP_FRACTIONS)

    def __post_init__(self) -> None:
        if self.actuator_fraction is None and self.actuator_count is None:
            object.__setattr__(self, "actuator_fraction", DEFAULT_ACTUATOR_FRACTION)
        if self.actuator_fraction is not None and self.actuator_count is not None:
            raise ValueError("actuator_fraction and actuator_count are mutually exclusive")
        if self.actuator_fraction is not None and not 0.0 <= self.actuator_fraction <= 1.0:
            raise ValueError(f"actuator_fraction must be in [0, 1], got {self.actuator_fraction}")
        if self.actuator_count is not None and self.actuator_count < 0:
            raise ValueError(f"actuator_count must be >= 0, got {self.actuator_count}")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.los_margin_km < 0.0:
            raise ValueError("los_margin_km must be >= 0")
        if not math.isfinite(self.reroute_penalty_ms) or self.reroute_penalty_ms < 0.0:
            raise ValueError("reroute_penalty_ms must be finite and >= 0")
        for f in self.sweep_fractions:
            if not 0.0 <= f <= 1.0:
                raise ValueError(f"sweep fraction {f} outside [0, 1]")
        if list(self.sweep_fractions) != sorted(self.sweep_fractions):
            raise ValueError("sweep_fractions must be sorted ascending")


def half_up_count(fraction: float, total: int) -> int:
    """Round half up; keeps fraction 0 -> 0 and fraction 1 -> total exact."""
    return int(math.floor(fraction * total + 0.5))


def resolve_actuator_count(cfg: ScenarioConfig, total: int) -> int:
    if cfg.actuator_count is not None:
        if cfg.actuator_count > total:
            raise ValueError(f"actuator_count {cfg.actuator_count} exceeds {total} satellites")
        return cfg.actuator_count
    return half_up_count(cfg.actuator_fraction, total)


def resolve_snapshot(source: ConstellationSource) -> ConstellationSnapshot:
    if source.walker_shells:
        snaps = [
            generate_walker(shell.spec, label=shell.label, id_prefix=shell.id_prefix)
            for shell in source.walker_shells
        ]
        if len(snaps) == 1:
            return snaps[0]
        return merge_snapshots("+".join(s.label for s in snaps), *snaps)
    if source.snapshot_csv is not None:
        with open(source.snapshot_csv, "r", encoding="utf-8") as fh:
            return load_snapshot_csv(fh.read(), label=os.path.basename(source.snapshot_csv))
    with open(source.tle_file, "r", encoding="utf-8") as fh:
        entries = load_tle_file(fh.read())
    return snapshot_from_tles(entries, source.tle_at_seconds, label=os.path.basename(source.tle_file))


def resolve_stations(cfg: ScenarioConfig) -> list[GroundStationNode]:
    if cfg.stations_csv is None:
        return []
    with open(cfg.stations_csv, "r", encoding="utf-8") as fh:
        return load_ground_stations_csv(fh.read())


def resolve_terminus(cfg: ScenarioConfig, stations: list[GroundStationNode]) -> TerminusNode | None:
    """Configured terminus, else the first station's location."""
    if cfg.terminus is not None:
        return TerminusNode(cfg.terminus)
    if stations:
        return TerminusNode(stations[0].geodetic)
    return None


def route_report(
    graph: VisibilityGraph,
    snapshot: ConstellationSnapshot,
    stations: list[GroundStationNode],
    terminus: TerminusNode | None,
    mode: ArchitectureMode,
    reroute_penalty_ms: float,
) -> LatencyReport:
    if mode is ArchitectureMode.ON_ORBIT:
        return onorbit_latencies(graph, snapshot, reroute_penalty_ms)
    if terminus is None:
        raise ValueError("downhaul modes require ground stations or an explicit terminus")
    return downhaul_latencies(graph, snapshot, stations, terminus, mode, reroute_penalty_ms)


@dataclass(frozen=True)
class ScenarioRun:
    config: ScenarioConfig
    snapshot: ConstellationSnapshot
    stations: tuple[GroundStationNode, ...]
    graph: VisibilityGraph
    report: LatencyReport
    summary: MetricsSummary


def run_scenario(cfg: ScenarioConfig, threads: int | None = None) -> ScenarioRun:
    """Resolve the snapshot, build the graph, apply any overlay, and route."""
    snapshot = resolve_snapshot(cfg.constellation)
    snapshot = select_actuators(snapshot, resolve_actuator_count(cfg, len(snapshot)), cfg.seed)
    stations = resolve_stations(cfg)
    terminus = resolve_terminus(cfg, stations)
    graph = build_visibility_graph(
        snapshot, stations, margin_km=cfg.los_margin_km,
        min_elevation_deg=cfg.min_elevation_deg, threads=threads,
    )
    penalty = cfg.reroute_penalty_ms
    if cfg.overlay is not None:
        graph = apply_overlay(graph, snapshot, stations, cfg.overlay)
        penalty = penalty + cfg.overlay.reroute_penalty_ms
    report = route_report(graph, snapshot, stations, terminus, cfg.mode, penalty)
    return ScenarioRun(cfg, snapshot, tuple(stations), graph, report, summarize(report))


# --- Studies --------------------------------------------------------------------


@dataclass(frozen=True)
class ArchitectureComparison:
    downhaul: MetricsSummary
    onorbit: MetricsSummary
    downhaul_report: LatencyReport
    onorbit_report: LatencyReport


def compare_architectures(
    cfg_downhaul: ScenarioConfig,
    cfg_onorbit: ScenarioConfig,
    threads: int | None = None,
) -> ArchitectureComparison:
    """Run both engines on the identical snapshot and pair the summaries."""
    if cfg_downhaul.constellation != cfg_onorbit.constellation:
        raise ValueError("mismatched snapshot sources between the two configs")
    if cfg_downhaul.mode is ArchitectureMode.ON_ORBIT:
        raise ValueError("cfg_downhaul must use a downhaul mode")
    if cfg_onorbit.mode is not ArchitectureMode.ON_ORBIT:
        raise ValueError("cfg_onorbit must use the onorbit mode")
    if cfg_downhaul.los_margin_km != cfg_onorbit.los_margin_km:
        raise ValueError("both configs must agree on los_margin_km")

    snapshot = resolve_snapshot(cfg_onorbit.constellation)
    snapshot = select_actuators(
        snapshot, resolve_actuator_count(cfg_onorbit, len(snapshot)), cfg_onorbit.seed
    )
    stations = resolve_stations(cfg_downhaul)
    terminus = resolve_terminus(cfg_downhaul, stations)
    graph = build_visibility_graph(
        snapshot, stations, margin_km=cfg_downhaul.los_margin_km,
        min_elevation_deg=cfg_downhaul.min_elevation_deg, threads=threads,
    )
    down = route_report(
        graph, snapshot, stations, terminus, cfg_downhaul.mode, cfg_downhaul.reroute_penalty_ms
    )
    orbit = onorbit_latencies(graph, snapshot, cfg_onorbit.reroute_penalty_ms)
    return ArchitectureComparison(summarize(down), summarize(orbit), down, orbit)


@dataclass(frozen=True)
class SweepPoint:
    fraction: float
    actuator_count: int
    summary: MetricsSummary


def actuator_sweep(
    cfg: ScenarioConfig,
    fractions: tuple[float, ...] | None = None,
    seed: int | None = None,
    independent_draws: bool = False,
    threads: int | None = None,
) -> list[SweepPoint]:
    """Latency as a function of the actuator fraction on one fixed graph.

    By default the actuator sets are nested (prefixes of one seeded
    permutation), which makes the mean over finite latencies exactly
    non-increasing on a connected shell.  ``independent_draws`` redraws the
    selection per point instead.
    """
    fractions = tuple(fractions if fractions is not None else cfg.sweep_fractions)
    if list(fractions) != sorted(fractions):
        raise ValueError("fractions must be sorted ascending")
    seed = cfg.seed if seed is None else seed
    snapshot = resolve_snapshot(cfg.constellation)
    stations = resolve_stations(cfg)
    terminus = resolve_terminus(cfg, stations)
    graph = build_visibility_graph(
        snapshot, stations, margin_km=cfg.los_margin_km,
        min_elevation_deg=cfg.min_elevation_deg, threads=threads,
    )
    penalty = cfg.reroute_penalty_ms
    if cfg.overlay is not None:
        graph = apply_overlay(graph, snapshot, stations, cfg.overlay)
        penalty = penalty + cfg.overlay.reroute_penalty_ms

    rng = SplitMix64(seed)
    points = []
    for fraction in fractions:
        point_seed = rng.next_u64() if independent_draws else seed
        flagged = select_actuators(snapshot, half_up_count(fraction, len(snapshot)), point_seed)
        report = route_report(graph, flagged, stations, terminus, cfg.mode, penalty)
        points.append(SweepPoint(fraction, len(flagged.actuator_indices()), summarize(report)))
    return points


@dataclass(frozen=True)
class AttackOutcome:
    baseline: MetricsSummary
    attacked: MetricsSummary
    delta_mean_ms: float | None
    availability_loss: int


def attack_scenario(
    cfg: ScenarioConfig,
    overlay: AttackOverlay,
    threads: int | None = None,
) -> AttackOutcome:
    """Route before and after the overlay on the same snapshot.

    ``delta_mean_ms`` averages the per-satellite latency increase over
    satellites reachable in both runs (None when that set is empty); the
    overlay's own reroute penalty applies only to the attacked run.
    """
    snapshot = resolve_snapshot(cfg.constellation)
    snapshot = select_actuators(snapshot, resolve_actuator_count(cfg, len(snapshot)), cfg.seed)
    stations = resolve_stations(cfg)
    terminus = resolve_terminus(cfg, stations)
    graph = build_visibility_graph(
        snapshot, stations, margin_km=cfg.los_margin_km,
        min_elevation_deg=cfg.min_elevation_deg, threads=threads,
    )
    baseline = route_report(graph, snapshot, stations, terminus, cfg.mode, cfg.reroute_penalty_ms)
    attacked_graph = apply_overlay(graph, snapshot, stations, overlay)
    attacked = route_report(
        graph=attacked_graph,
        snapshot=snapshot,
        stations=stations,
        terminus=terminus,
        mode=cfg.mode,
        reroute_penalty_ms=cfg.reroute_penalty_ms + overlay.reroute_penalty_ms,
    )
    deltas = [
        a.latency_ms - b.latency_ms
        for a, b in zip(attacked.entries, baseline.entries)
        if a.reachable and b.reachable
    ]
    baseline_summary = summarize(baseline)
    attacked_summary = summarize(attacked)
    return AttackOutcome(
        baseline=baseline_summary,
        attacked=attacked_summary,
        delta_mean_ms=math.fsum(deltas) / len(deltas) if deltas else None,
        availability_loss=attacked_summary.unreachable_count - baseline_summary.unreachable_count,
    )


def config_to_dict(cfg: ScenarioConfig) -> dict:
    """Echo a fully resolved config; re-validating the echo yields an equal
    ScenarioConfig (paths are stored absolute)."""
    source = cfg.constellation
    if source.walker_shells:
        constellation = {
            "walker": [
                {
                    "altitude_km": shell.spec.altitude_km,
                    "inclination_deg": shell.spec.inclination_deg,
                    "planes": shell.spec.planes,
                    "sats_per_plane": shell.spec.sats_per_plane,
                    "phasing_f": shell.spec.phasing_f,
                    "raan_offset_deg": shell.spec.raan_offset_deg,
                    "id_prefix": shell.id_prefix,
                    "label": shell.label,
                }
                for shell in source.walker_shells
            ]
        }
    elif source.snapshot_csv is not None:
        constellation = {"snapshot_csv": source.snapshot_csv}
    else:
        constellation = {"tle_file": source.tle_file}
        if source.tle_at_seconds is not None:
            constellation["tle_at_seconds"] = source.tle_at_seconds

    out: dict = {"constellation": constellation, "mode": cfg.mode.value, "seed": cfg.seed}
    if cfg.stations_csv is not None:
        out["stations_csv"] = cfg.stations_csv
    if cfg.terminus is not None:
        out["terminus"] = {
            "lat_deg": cfg.terminus.latitude_deg,
            "lon_deg": cfg.terminus.longitude_deg,
            "alt_km": cfg.terminus.altitude_km,
        }
    if cfg.actuator_count is not None:
        out["actuator_count"] = cfg.actuator_count
    else:
        out["actuator_fraction"] = cfg.actuator_fraction
    out["los_margin_km"] = cfg.los_margin_km
    if cfg.min_elevation_deg is not None:
        out["min_elevation_deg"] = cfg.min_elevation_deg
    out["reroute_penalty_ms"] = cfg.reroute_penalty_ms
    if cfg.overlay_path is not None:
        out["overlay"] = cfg.overlay_path
    elif cfg.overlay is not None:
        out["overlay"] = cfg.overlay.to_dict()
    out["sweep_fractions"] = list(cfg.sweep_fractions)
    return out
