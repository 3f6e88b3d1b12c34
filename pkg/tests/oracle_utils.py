"""Independent oracles shared by the unit and acceptance tests.

These deliberately re-derive results through different code paths than the
package (sampling instead of minimization, naive sums instead of fsum,
double loops instead of vectorization).
"""

from __future__ import annotations

import math
import random

import numpy as np

from sda_netlab.constellation import ConstellationSnapshot, SatelliteNode
from sda_netlab.geo import EcefPosition, EllipsoidModel, WGS84

_SAMPLE_CACHE: dict[int, np.ndarray] = {}


def segment_blocked_by_sampling(
    p: EcefPosition,
    q: EcefPosition,
    e: EllipsoidModel = WGS84,
    margin_km: float = 0.0,
    samples: int = 100_000,
) -> bool:
    """True iff any of ``samples`` evenly spaced points on the segment lies
    strictly inside the margin-inflated ellipsoid."""
    t = _SAMPLE_CACHE.get(samples)
    if t is None:
        t = np.linspace(0.0, 1.0, samples)
        _SAMPLE_CACHE[samples] = t
    scale = np.array([
        1.0 / (e.semi_major_a + margin_km),
        1.0 / (e.semi_major_a + margin_km),
        1.0 / (e.semi_minor_b + margin_km),
    ])
    a = np.array(p.as_tuple()) * scale
    b = np.array(q.as_tuple()) * scale
    d = b - a
    n2 = (
        (a[0] + t * d[0]) ** 2
        + (a[1] + t * d[1]) ** 2
        + (a[2] + t * d[2]) ** 2
    )
    return bool(np.min(n2) < 1.0)


def random_shell(seed: int, count: int = 50, alt_lo_km: float = 400.0, alt_hi_km: float = 1500.0) -> ConstellationSnapshot:
    """Satellites in uniformly random directions at random shell altitudes."""
    rng = random.Random(seed)
    sats = [
        SatelliteNode(f"s{k:03d}", random_orbital_point(rng, alt_lo_km, alt_hi_km))
        for k in range(count)
    ]
    return ConstellationSnapshot("random", tuple(sats))


def random_orbital_point(rng: random.Random, alt_lo_km: float = 300.0, alt_hi_km: float = 2500.0) -> EcefPosition:
    """Uniform random direction at a random shell altitude."""
    while True:
        gx, gy, gz = rng.gauss(0, 1), rng.gauss(0, 1), rng.gauss(0, 1)
        norm = math.sqrt(gx * gx + gy * gy + gz * gz)
        if norm > 1e-6:
            break
    r = WGS84.semi_major_a + rng.uniform(alt_lo_km, alt_hi_km)
    return EcefPosition(gx / norm * r, gy / norm * r, gz / norm * r)


def grazing_pair(rng: random.Random, radius_km: float) -> tuple[EcefPosition, EcefPosition]:
    """Two same-radius points separated by a central angle near the spherical
    grazing limit, to stress the LOS boundary."""
    theta = 2.0 * math.acos(WGS84.semi_major_a / radius_km) + rng.uniform(-2e-4, 2e-4)
    # Random plane: orthonormal u, v.
    u = random_orbital_point(rng)
    un = u.norm()
    ux, uy, uz = u.x / un, u.y / un, u.z / un
    w = random_orbital_point(rng)
    dot = (w.x * ux + w.y * uy + w.z * uz) / w.norm()
    vx = w.x / w.norm() - dot * ux
    vy = w.y / w.norm() - dot * uy
    vz = w.z / w.norm() - dot * uz
    vn = math.sqrt(vx * vx + vy * vy + vz * vz)
    vx, vy, vz = vx / vn, vy / vn, vz / vn
    p = EcefPosition(radius_km * ux, radius_km * uy, radius_km * uz)
    c, s = math.cos(theta), math.sin(theta)
    q = EcefPosition(
        radius_km * (c * ux + s * vx),
        radius_km * (c * uy + s * vy),
        radius_km * (c * uz + s * vz),
    )
    return p, q
