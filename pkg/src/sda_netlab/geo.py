"""WGS84 ellipsoid geometry: coordinate conversions, line-of-sight tests,
surface distances, and propagation delay.

All functions here are pure and operate on kilometers, degrees, and
milliseconds.  The line-of-sight test is written so that the scalar form and
the vectorized form in :mod:`sda_netlab.topology` evaluate the exact same
floating-point expressions; do not reorder the arithmetic without updating
both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

SPEED_OF_LIGHT_KM_S = 299792.458

# Visibility cut on the squared scaled norm.  Endpoints sitting exactly on the
# ellipsoid surface (norm 1.0) must not block, hence the small slack.
LOS_NORM_TOLERANCE = 1e-9
LOS_THRESHOLD_SQ = (1.0 - LOS_NORM_TOLERANCE) ** 2


class ConvergenceError(ValueError):
    """An iterative solver failed to converge within its iteration budget."""


@dataclass(frozen=True)
class EllipsoidModel:
    """Oblate ellipsoid (default WGS84) plus the mean radius used for
    surface paths."""

    semi_major_a: float = 6378.137
    flattening_f: float = 1.0 / 298.257223563
    surface_mean_radius: float = 6371.0088

    def __post_init__(self) -> None:
        if not 0.0 < self.flattening_f < 1.0:
            raise ValueError(f"flattening must be in (0, 1), got {self.flattening_f}")
        if self.semi_major_a <= 0.0:
            raise ValueError(f"semi-major axis must be positive, got {self.semi_major_a}")

    @property
    def semi_minor_b(self) -> float:
        return self.semi_major_a * (1.0 - self.flattening_f)

    @property
    def eccentricity_sq(self) -> float:
        return self.flattening_f * (2.0 - self.flattening_f)


WGS84 = EllipsoidModel()


@dataclass(frozen=True)
class EcefPosition:
    """Earth-centered, Earth-fixed Cartesian position in kilometers."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "z"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"EcefPosition.{name} must be finite")

    def norm(self) -> float:
        return math.sqrt((self.x * self.x + self.y * self.y) + self.z * self.z)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.z)


@dataclass(frozen=True)
class GeodeticPosition:
    """Geodetic latitude/longitude in degrees, altitude in kilometers.

    Longitude is normalized into (-180, 180]; latitude and altitude are
    validated, not normalized.
    """

    latitude_deg: float
    longitude_deg: float
    altitude_km: float = 0.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.latitude_deg) or not -90.0 <= self.latitude_deg <= 90.0:
            raise ValueError(f"latitude must be in [-90, 90], got {self.latitude_deg}")
        if not math.isfinite(self.longitude_deg):
            raise ValueError("longitude must be finite")
        if not math.isfinite(self.altitude_km) or self.altitude_km < -0.5:
            raise ValueError(f"altitude must be >= -0.5 km, got {self.altitude_km}")
        lon = math.fmod(self.longitude_deg, 360.0)
        if lon <= -180.0:
            lon += 360.0
        elif lon > 180.0:
            lon -= 360.0
        object.__setattr__(self, "longitude_deg", lon)


def geodetic_to_ecef(g: GeodeticPosition, e: EllipsoidModel = WGS84) -> EcefPosition:
    """Convert geodetic coordinates to ECEF via the prime-vertical radius."""
    lat = math.radians(g.latitude_deg)
    lon = math.radians(g.longitude_deg)
    sin_lat = math.sin(lat)
    cos_lat = math.cos(lat)
    e2 = e.eccentricity_sq
    n = e.semi_major_a / math.sqrt(1.0 - e2 * sin_lat * sin_lat)
    x = (n + g.altitude_km) * cos_lat * math.cos(lon)
    y = (n + g.altitude_km) * cos_lat * math.sin(lon)
    z = (n * (1.0 - e2) + g.altitude_km) * sin_lat
    return EcefPosition(x, y, z)


def ecef_to_geodetic(
    p: EcefPosition,
    e: EllipsoidModel = WGS84,
    tolerance_rad: float = 1e-12,
    max_iterations: int = 20,
) -> GeodeticPosition:
    """Convert ECEF to geodetic by fixed-point iteration on latitude.

    Raises:
        ConvergenceError: the latitude iteration did not settle within
            ``max_iterations``; this signals degenerate input near the
            Earth's center.
    """
    if p.norm() == 0.0:
        raise ValueError("cannot convert the Earth-center point to geodetic coordinates")
    e2 = e.eccentricity_sq
    p_xy = math.hypot(p.x, p.y)
    if p_xy < 1e-9:
        # Polar axis: longitude is undefined, normalize it to 0.
        lat = 90.0 if p.z >= 0.0 else -90.0
        return GeodeticPosition(lat, 0.0, abs(p.z) - e.semi_minor_b)

    lon_deg = math.degrees(math.atan2(p.y, p.x))
    if lon_deg <= -180.0:
        lon_deg += 360.0

    lat = math.atan2(p.z, p_xy * (1.0 - e2))
    for _ in range(max_iterations):
        sin_lat = math.sin(lat)
        n = e.semi_major_a / math.sqrt(1.0 - e2 * sin_lat * sin_lat)
        if abs(sin_lat) < 0.7071067811865476:
            alt = p_xy / math.cos(lat) - n
        else:
            alt = p.z / sin_lat - n * (1.0 - e2)
        new_lat = math.atan2(p.z, p_xy * (1.0 - e2 * n / (n + alt)))
        done = abs(new_lat - lat) < tolerance_rad
        lat = new_lat
        if done:
            break
    else:
        raise ConvergenceError(
            f"latitude iteration did not converge for point ({p.x}, {p.y}, {p.z})"
        )

    sin_lat = math.sin(lat)
    n = e.semi_major_a / math.sqrt(1.0 - e2 * sin_lat * sin_lat)
    if abs(sin_lat) < 0.7071067811865476:
        alt = p_xy / math.cos(lat) - n
    else:
        alt = p.z / sin_lat - n * (1.0 - e2)
    return GeodeticPosition(math.degrees(lat), lon_deg, alt)


def euclidean_km(p: EcefPosition, q: EcefPosition) -> float:
    dx = p.x - q.x
    dy = p.y - q.y
    dz = p.z - q.z
    return math.sqrt((dx * dx + dy * dy) + dz * dz)


def min_scaled_norm_sq(
    p: EcefPosition,
    q: EcefPosition,
    e: EllipsoidModel = WGS84,
    margin_km: float = 0.0,
) -> float:
    """Squared minimum norm of the segment p-q after scaling the
    margin-inflated ellipsoid to the unit sphere.

    The endpoints are put in lexicographic (x, y, z) order first so the
    result is exactly symmetric in (p, q), bit for bit.  The vectorized
    graph builder mirrors this expression; keep the two in sync.
    """
    if margin_km < 0.0:
        raise ValueError(f"margin_km must be >= 0, got {margin_km}")
    if p.as_tuple() == q.as_tuple():
        raise ValueError("line-of-sight is undefined for coincident points")
    if q.as_tuple() < p.as_tuple():
        p, q = q, p
    inv_ae = 1.0 / (e.semi_major_a + margin_km)
    inv_be = 1.0 / (e.semi_minor_b + margin_km)
    phx = p.x * inv_ae
    phy = p.y * inv_ae
    phz = p.z * inv_be
    qhx = q.x * inv_ae
    qhy = q.y * inv_ae
    qhz = q.z * inv_be
    dx = qhx - phx
    dy = qhy - phy
    dz = qhz - phz
    dd = (dx * dx + dy * dy) + dz * dz
    pd = (phx * dx + phy * dy) + phz * dz
    t = -pd / dd
    if t < 0.0:
        t = 0.0
    elif t > 1.0:
        t = 1.0
    ex = phx + t * dx
    ey = phy + t * dy
    ez = phz + t * dz
    return (ex * ex + ey * ey) + ez * ez


def min_scaled_norm(
    p: EcefPosition,
    q: EcefPosition,
    e: EllipsoidModel = WGS84,
    margin_km: float = 0.0,
) -> float:
    return math.sqrt(min_scaled_norm_sq(p, q, e, margin_km))


def has_line_of_sight(
    p: EcefPosition,
    q: EcefPosition,
    e: EllipsoidModel = WGS84,
    margin_km: float = 0.0,
) -> bool:
    """True iff the open segment between p and q stays outside the ellipsoid
    inflated by ``margin_km``.  Endpoints on the surface do not block."""
    return min_scaled_norm_sq(p, q, e, margin_km) >= LOS_THRESHOLD_SQ


def surface_distance_km(
    g1: GeodeticPosition,
    g2: GeodeticPosition,
    e: EllipsoidModel = WGS84,
) -> float:
    """Great-circle distance on the mean-radius sphere; altitudes ignored.

    A mean-radius great circle stays within 0.6% of the ellipsoidal geodesic
    globally, which is far inside this simulator's tolerances.
    """
    lat1 = math.radians(g1.latitude_deg)
    lat2 = math.radians(g2.latitude_deg)
    dlat = math.radians(g2.latitude_deg - g1.latitude_deg)
    dlon = math.radians(g2.longitude_deg - g1.longitude_deg)
    h = math.sin(dlat / 2.0) ** 2 + math.cos(lat1) * math.cos(lat2) * math.sin(dlon / 2.0) ** 2
    if h > 1.0:
        h = 1.0
    angle = 2.0 * math.atan2(math.sqrt(h), math.sqrt(1.0 - h))
    return e.surface_mean_radius * angle


def propagation_delay_ms(distance_km: float) -> float:
    """Electromagnetic propagation time for ``distance_km``, in milliseconds."""
    if distance_km < 0.0:
        raise ValueError(f"distance must be >= 0, got {distance_km}")
    return distance_km / SPEED_OF_LIGHT_KM_S * 1000.0


def elevation_angle_deg(station: GeodeticPosition, station_ecef: EcefPosition, target: EcefPosition) -> float:
    """Elevation of ``target`` above the station's geodetic horizon, degrees."""
    lat = math.radians(station.latitude_deg)
    lon = math.radians(station.longitude_deg)
    up = (
        math.cos(lat) * math.cos(lon),
        math.cos(lat) * math.sin(lon),
        math.sin(lat),
    )
    vx = target.x - station_ecef.x
    vy = target.y - station_ecef.y
    vz = target.z - station_ecef.z
    vnorm = math.sqrt(vx * vx + vy * vy + vz * vz)
    if vnorm == 0.0:
        raise ValueError("elevation is undefined for coincident points")
    sin_el = (up[0] * vx + up[1] * vy + up[2] * vz) / vnorm
    if sin_el > 1.0:
        sin_el = 1.0
    elif sin_el < -1.0:
        sin_el = -1.0
    return math.degrees(math.asin(sin_el))
