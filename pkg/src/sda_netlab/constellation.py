"""Constellation snapshots: Walker-delta shells, CSV ingest, ground stations,
and deterministic actuator selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .geo import (
    EcefPosition,
    EllipsoidModel,
    GeodeticPosition,
    WGS84,
    geodetic_to_ecef,
)

_U64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class SatelliteNode:
    id: str
    position: EcefPosition
    is_actuator: bool = False


@dataclass(frozen=True)
class GroundStationNode:
    id: str
    geodetic: GeodeticPosition
    ecef: EcefPosition

    @classmethod
    def from_geodetic(
        cls, station_id: str, geodetic: GeodeticPosition, e: EllipsoidModel = WGS84
    ) -> "GroundStationNode":
        if not -0.5 <= geodetic.altitude_km <= 9.0:
            raise ValueError(
                f"station altitude must be in [-0.5, 9] km, got {geodetic.altitude_km}"
            )
        return cls(station_id, geodetic, geodetic_to_ecef(geodetic, e))


@dataclass(frozen=True)
class TerminusNode:
    """Location of the centralized ground data sink."""

    geodetic: GeodeticPosition


@dataclass(frozen=True)
class ConstellationSnapshot:
    """Instantaneous, immutable set of satellite nodes.

    ``epoch_seconds`` (seconds since J2000) is informational only; routing
    uses the stored positions as-is.
    """

    label: str
    satellites: tuple[SatelliteNode, ...]
    epoch_seconds: float = 0.0

    def __post_init__(self) -> None:
        seen: set[str] = set()
        for sat in self.satellites:
            if sat.id in seen:
                raise ValueError(f"duplicate satellite id {sat.id!r}")
            seen.add(sat.id)
            if sat.position.norm() <= WGS84.semi_major_a:
                raise ValueError(f"satellite {sat.id!r} is not above the surface")

    def __len__(self) -> int:
        return len(self.satellites)

    def ids(self) -> list[str]:
        return [s.id for s in self.satellites]

    def index_of(self, sat_id: str) -> int:
        for i, s in enumerate(self.satellites):
            if s.id == sat_id:
                return i
        raise KeyError(sat_id)

    def actuator_indices(self) -> list[int]:
        return [i for i, s in enumerate(self.satellites) if s.is_actuator]

    def positions(self) -> list[tuple[float, float, float]]:
        return [s.position.as_tuple() for s in self.satellites]


@dataclass(frozen=True)
class WalkerSpec:
    """Walker-delta shell: circular orbits on evenly spaced planes."""

    altitude_km: float
    inclination_deg: float
    planes: int
    sats_per_plane: int
    phasing_f: int = 0
    raan_offset_deg: float = 0.0

    def __post_init__(self) -> None:
        if self.planes < 1 or self.sats_per_plane < 1:
            raise ValueError("planes and sats_per_plane must be >= 1")
        if not 0 <= self.phasing_f <= self.planes - 1:
            raise ValueError(
                f"phasing_f must be in [0, {self.planes - 1}], got {self.phasing_f}"
            )
        if self.altitude_km <= 0.0:
            raise ValueError("altitude_km must be positive")

    @property
    def total(self) -> int:
        return self.planes * self.sats_per_plane


def generate_walker(
    spec: WalkerSpec,
    e: EllipsoidModel = WGS84,
    label: str = "walker",
    id_prefix: str = "sat",
    epoch_seconds: float = 0.0,
) -> ConstellationSnapshot:
    """Build a snapshot of a Walker-delta shell.

    Plane p (0-indexed) has RAAN = raan_offset + 360*p/P; satellite k in
    plane p sits at in-plane angle u = 360*k/spp + 360*F*p/(P*spp).  The
    orbital frame is identified with ECEF at snapshot time: only relative
    geometry matters for latency.
    """
    radius = e.semi_major_a + spec.altitude_km
    inc = math.radians(spec.inclination_deg)
    cos_i, sin_i = math.cos(inc), math.sin(inc)
    sats = []
    for p in range(spec.planes):
        raan = math.radians(spec.raan_offset_deg + 360.0 * p / spec.planes)
        cos_o, sin_o = math.cos(raan), math.sin(raan)
        phase = 360.0 * spec.phasing_f * p / (spec.planes * spec.sats_per_plane)
        for k in range(spec.sats_per_plane):
            u = math.radians(360.0 * k / spec.sats_per_plane + phase)
            x0 = radius * math.cos(u)
            y0 = radius * math.sin(u)
            # Rx(inclination) then Rz(RAAN) applied to the in-plane point.
            y1 = y0 * cos_i
            z1 = y0 * sin_i
            x = x0 * cos_o - y1 * sin_o
            y = x0 * sin_o + y1 * cos_o
            sats.append(
                SatelliteNode(f"{id_prefix}-p{p:03d}-s{k:03d}", EcefPosition(x, y, z1))
            )
    return ConstellationSnapshot(label, tuple(sats), epoch_seconds)


def merge_snapshots(label: str, *snapshots: ConstellationSnapshot) -> ConstellationSnapshot:
    """Union of snapshots, preserving order; ids must stay unique."""
    if not snapshots:
        raise ValueError("need at least one snapshot to merge")
    sats: list[SatelliteNode] = []
    for snap in snapshots:
        sats.extend(snap.satellites)
    return ConstellationSnapshot(label, tuple(sats), snapshots[0].epoch_seconds)


# --- CSV interchange ----------------------------------------------------------

SNAPSHOT_CSV_HEADER = "id,x_km,y_km,z_km"
STATIONS_CSV_HEADER = "id,lat_deg,lon_deg,alt_km"


def snapshot_to_csv(snapshot: ConstellationSnapshot) -> str:
    """Serialize with repr precision so a read-back is bit-exact."""
    lines = [SNAPSHOT_CSV_HEADER]
    for s in snapshot.satellites:
        p = s.position
        lines.append(f"{s.id},{p.x!r},{p.y!r},{p.z!r}")
    return "\n".join(lines) + "\n"


def _split_csv_line(line: str, expected: int, line_no: int) -> list[str]:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) != expected:
        raise ValueError(
            f"line {line_no}: expected {expected} comma-separated fields, got {len(fields)}"
        )
    return fields


def _parse_float(text: str, column: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"line {line_no}: column {column!r} is not a number: {text!r}") from None
    if not math.isfinite(value):
        raise ValueError(f"line {line_no}: column {column!r} must be finite, got {text!r}")
    return value


def load_snapshot_csv(text: str, label: str = "snapshot") -> ConstellationSnapshot:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != SNAPSHOT_CSV_HEADER:
        raise ValueError(f"line 1: expected header {SNAPSHOT_CSV_HEADER!r}")
    sats: list[SatelliteNode] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        sat_id, xs, ys, zs = _split_csv_line(line, 4, line_no)
        if not sat_id:
            raise ValueError(f"line {line_no}: empty satellite id")
        if sat_id in seen:
            raise ValueError(f"line {line_no}: duplicate satellite id {sat_id!r}")
        seen.add(sat_id)
        pos = EcefPosition(
            _parse_float(xs, "x_km", line_no),
            _parse_float(ys, "y_km", line_no),
            _parse_float(zs, "z_km", line_no),
        )
        if pos.norm() <= WGS84.semi_major_a:
            raise ValueError(f"line {line_no}: satellite {sat_id!r} is not above the surface")
        sats.append(SatelliteNode(sat_id, pos))
    return ConstellationSnapshot(label, tuple(sats))


def load_ground_stations_csv(text: str, e: EllipsoidModel = WGS84) -> list[GroundStationNode]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != STATIONS_CSV_HEADER:
        raise ValueError(f"line 1: expected header {STATIONS_CSV_HEADER!r}")
    stations: list[GroundStationNode] = []
    seen: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        station_id, lat, lon, alt = _split_csv_line(line, 4, line_no)
        if not station_id:
            raise ValueError(f"line {line_no}: empty station id")
        if station_id in seen:
            raise ValueError(f"line {line_no}: duplicate station id {station_id!r}")
        seen.add(station_id)
        try:
            geodetic = GeodeticPosition(
                _parse_float(lat, "lat_deg", line_no),
                _parse_float(lon, "lon_deg", line_no),
                _parse_float(alt, "alt_km", line_no),
            )
            station = GroundStationNode.from_geodetic(station_id, geodetic, e)
        except ValueError as exc:
            raise ValueError(f"line {line_no}: {exc}") from None
        stations.append(station)
    return stations


# --- Deterministic actuator selection ------------------------------------------


class SplitMix64:
    """SplitMix64 generator: a documented 64-bit mix so selections are
    bit-reproducible across implementations."""

    def __init__(self, seed: int) -> None:
        self._state = seed & _U64

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & _U64
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _U64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _U64
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        # Modulo reduction; the tiny bias is irrelevant at constellation sizes.
        if bound <= 0:
            raise ValueError("bound must be positive")
        return self.next_u64() % bound


def seeded_permutation(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by SplitMix64."""
    rng = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def select_actuators(
    snapshot: ConstellationSnapshot, count: int, seed: int
) -> ConstellationSnapshot:
    """Flag exactly ``count`` satellites as actuators.

    The selection is the first ``count`` entries of the seed-determined
    permutation, so for a fixed seed the selected sets are nested in
    ``count``.
    """
    n = len(snapshot)
    if not 0 <= count <= n:
        raise ValueError(f"actuator count must be in [0, {n}], got {count}")
    chosen = set(seeded_permutation(n, seed)[:count])
    sats = tuple(
        replace(sat, is_actuator=(i in chosen)) for i, sat in enumerate(snapshot.satellites)
    )
    return ConstellationSnapshot(snapshot.label, sats, snapshot.epoch_seconds)
