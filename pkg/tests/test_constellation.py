import math
import os

import pytest

from sda_netlab.constellation import (
    ConstellationSnapshot,
    SatelliteNode,
    SplitMix64,
    WalkerSpec,
    generate_walker,
    load_ground_stations_csv,
    load_snapshot_csv,
    merge_snapshots,
    seeded_permutation,
    select_actuators,
    snapshot_to_csv,
)
from sda_netlab.geo import EcefPosition, WGS84


def test_walker_equatorial_square():
    snap = generate_walker(WalkerSpec(621.863, 0.0, 1, 4))
    got = sorted(
        (round(p[0], 6), round(p[1], 6)) for p in ((s.position.x, s.position.y) for s in snap.satellites)
    )
    assert got == [(-7000.0, 0.0), (-0.0, -7000.0), (0.0, 7000.0), (7000.0, 0.0)]
    assert all(abs(s.position.z) < 1e-9 for s in snap.satellites)


def test_walker_shell_radii_and_separation():
    spec = WalkerSpec(550.0, 53.0, 6, 8, phasing_f=2)
    snap = generate_walker(spec)
    assert len(snap) == 48
    radius = WGS84.semi_major_a + 550.0
    for s in snap.satellites:
        assert s.position.norm() == pytest.approx(radius, abs=1e-9)
    min_sep = min(
        math.dist(a.position.as_tuple(), b.position.as_tuple())
        for i, a in enumerate(snap.satellites)
        for b in snap.satellites[i + 1:]
    )
    assert min_sep > 0.0


def test_walker_phasing_offsets_second_plane():
    # F=1, P=2, spp=2: plane 1 in-plane angles are offset by 360*1*1/(2*2) = 90 deg.
    spec = WalkerSpec(1000.0, 90.0, 2, 2, phasing_f=1)
    snap = generate_walker(spec)
    r = WGS84.semi_major_a + 1000.0
    inc = math.radians(90.0)
    expected = []
    for p in range(2):
        raan = math.radians(180.0 * p)
        for k in range(2):
            u = math.radians(180.0 * k + 90.0 * p)
            x0, y0 = r * math.cos(u), r * math.sin(u)
            y1, z1 = y0 * math.cos(inc), y0 * math.sin(inc)
            expected.append(
                (
                    x0 * math.cos(raan) - y1 * math.sin(raan),
                    x0 * math.sin(raan) + y1 * math.cos(raan),
                    z1,
                )
            )
    for sat, exp in zip(snap.satellites, expected):
        assert sat.position.x == pytest.approx(exp[0], abs=1e-9)
        assert sat.position.y == pytest.approx(exp[1], abs=1e-9)
        assert sat.position.z == pytest.approx(exp[2], abs=1e-9)


def test_walker_spec_validation():
    with pytest.raises(ValueError):
        WalkerSpec(550.0, 53.0, 0, 8)
    with pytest.raises(ValueError):
        WalkerSpec(550.0, 53.0, 4, 8, phasing_f=4)


def test_snapshot_rejects_duplicate_ids_and_buried_satellites():
    pos = EcefPosition(7000.0, 0.0, 0.0)
    with pytest.raises(ValueError, match="duplicate"):
        ConstellationSnapshot("x", (SatelliteNode("a", pos), SatelliteNode("a", pos)))
    with pytest.raises(ValueError, match="surface"):
        ConstellationSnapshot("x", (SatelliteNode("a", EcefPosition(6000.0, 0.0, 0.0)),))


def test_snapshot_csv_round_trip_is_exact():
    snap = generate_walker(WalkerSpec(550.0, 53.0, 3, 5, phasing_f=1), label="rt")
    back = load_snapshot_csv(snapshot_to_csv(snap), label="rt")
    assert back.ids() == snap.ids()
    for a, b in zip(back.satellites, snap.satellites):
        assert a.position == b.position  # bit-exact through repr


def test_snapshot_csv_errors_name_the_line():
    with pytest.raises(ValueError, match="line 1"):
        load_snapshot_csv("wrong,header\n")
    text = "id,x_km,y_km,z_km\nok,7000,0,0\nbad,6000,0,0\n"
    with pytest.raises(ValueError, match="line 3"):
        load_snapshot_csv(text)
    text = "id,x_km,y_km,z_km\na,7000,0,0\na,7100,0,0\n"
    with pytest.raises(ValueError, match="duplicate"):
        load_snapshot_csv(text)
    with pytest.raises(ValueError, match="line 2"):
        load_snapshot_csv("id,x_km,y_km,z_km\na,seven,0,0\n")


def test_ground_station_csv():
    stations = load_ground_stations_csv("id,lat_deg,lon_deg,alt_km\ngs1,0,0,0\n")
    assert len(stations) == 1
    assert stations[0].ecef.x == pytest.approx(6378.137, abs=1e-9)
    with pytest.raises(ValueError, match="line 2"):
        load_ground_stations_csv("id,lat_deg,lon_deg,alt_km\ngs1,91,0,0\n")
    with pytest.raises(ValueError, match="altitude"):
        load_ground_stations_csv("id,lat_deg,lon_deg,alt_km\ngs1,0,0,20\n")


def test_ground_station_csv_thirteen_rows():
    path = os.path.join(os.path.dirname(__file__), "..", "configs", "stations_13.csv")
    with open(path, "r", encoding="utf-8") as fh:
        stations = load_ground_stations_csv(fh.read())
    assert len(stations) == 13
    assert len({s.id for s in stations}) == 13


def test_merge_snapshots_rejects_id_collisions():
    a = generate_walker(WalkerSpec(550.0, 53.0, 1, 4), id_prefix="a")
    b = generate_walker(WalkerSpec(1200.0, 87.9, 1, 4), id_prefix="b")
    merged = merge_snapshots("u", a, b)
    assert len(merged) == 8
    with pytest.raises(ValueError, match="duplicate"):
        merge_snapshots("u", a, a)


def test_splitmix64_matches_independent_reimplementation():
    mask = (1 << 64) - 1

    def reference_stream(seed, count):
        out, state = [], seed
        for _ in range(count):
            state = (state + 0x9E3779B97F4A7C15) & mask
            z = state
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
            out.append(z ^ (z >> 31))
        return out

    for seed in (0, 1, 0xDEADBEEF, (1 << 64) - 1):
        rng = SplitMix64(seed)
        assert [rng.next_u64() for _ in range(8)] == reference_stream(seed, 8)


def test_seeded_permutation_matches_manual_fisher_yates():
    seed, n = 99, 23
    stream = SplitMix64(seed)
    perm = list(range(n))
    for i in range(n - 1, 0, -1):
        j = stream.next_u64() % (i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    assert seeded_permutation(n, seed) == perm


def test_select_actuators_endpoints_and_errors():
    snap = generate_walker(WalkerSpec(550.0, 53.0, 4, 5))
    assert select_actuators(snap, 0, 5).actuator_indices() == []
    assert len(select_actuators(snap, 20, 5).actuator_indices()) == 20
    with pytest.raises(ValueError):
        select_actuators(snap, 21, 5)
    with pytest.raises(ValueError):
        select_actuators(snap, -1, 5)


def test_select_actuators_nested_and_deterministic():
    snap = generate_walker(WalkerSpec(1200.0, 87.9, 6, 10))
    for seed in (0, 3, 12345):
        small = set(select_actuators(snap, 5, seed).actuator_indices())
        large = set(select_actuators(snap, 10, seed).actuator_indices())
        assert small <= large
        again = set(select_actuators(snap, 5, seed).actuator_indices())
        assert small == again
    a = select_actuators(snap, 10, 1).actuator_indices()
    b = select_actuators(snap, 10, 2).actuator_indices()
    assert a != b
