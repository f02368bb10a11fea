"""Linear-city topology: segments, stacked levels, and functional bands."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum

from .errors import InvalidParameterError


class ZoneFunction(IntEnum):
    PEDESTRIAN_LIGHT = 0
    RESIDENTIAL = 1
    COMMERCIAL_EDUCATIONAL = 2
    HEALTH_RECREATION = 3
    HIGH_SPEED_TRANSIT = 4


# Vertical order of the five functional bands, bottom to top.
BAND_ORDER = (
    ZoneFunction.PEDESTRIAN_LIGHT,
    ZoneFunction.RESIDENTIAL,
    ZoneFunction.COMMERCIAL_EDUCATIONAL,
    ZoneFunction.HEALTH_RECREATION,
    ZoneFunction.HIGH_SPEED_TRANSIT,
)

# Ground-use classes and their fixed per-segment area shares.
USAGE_RESIDENTIAL = "residential"
USAGE_COMMERCIAL = "commercial"
USAGE_TRANSPORT = "transport"
USAGE_PUBLIC = "public"

USAGE_SHARES = {
    USAGE_RESIDENTIAL: 0.40,
    USAGE_COMMERCIAL: 0.30,
    USAGE_TRANSPORT: 0.15,
    USAGE_PUBLIC: 0.15,
}

FUNCTION_USAGE = {
    ZoneFunction.PEDESTRIAN_LIGHT: USAGE_TRANSPORT,
    ZoneFunction.RESIDENTIAL: USAGE_RESIDENTIAL,
    ZoneFunction.COMMERCIAL_EDUCATIONAL: USAGE_COMMERCIAL,
    ZoneFunction.HEALTH_RECREATION: USAGE_PUBLIC,
    ZoneFunction.HIGH_SPEED_TRANSIT: USAGE_TRANSPORT,
}


@dataclass(frozen=True)
class LevelBand:
    level_lo: int
    level_hi: int
    function: ZoneFunction

    def __post_init__(self):
        if self.level_lo > self.level_hi:
            raise InvalidParameterError(
                f"band {self.function.name}: level_lo {self.level_lo} > level_hi {self.level_hi}"
            )


@dataclass(frozen=True)
class CityTopology:
    length_m: float
    width_m: float
    height_m: float
    level_count: int
    segment_length_m: float
    segments: int
    last_segment_length_m: float
    bands: tuple[LevelBand, ...]

    @property
    def level_height_m(self) -> float:
        return self.height_m / self.level_count


@dataclass(frozen=True)
class ZoneCell:
    segment: int
    level: int
    function: ZoneFunction
    area_share: float


def build_topology(
    length_m: float,
    level_count: int,
    segment_length_m: float,
    width_m: float = 200.0,
    height_m: float = 500.0,
) -> CityTopology:
    """Discretize a linear city into segments and functional level bands.

    Bands follow the five-way vertical split, scaled by blocks of
    ceil(level_count / 5) levels; trailing bands that receive no levels
    are dropped so the remaining bands exactly partition 1..level_count.
    A length that is not a multiple of the segment length yields a final
    shorter segment whose true length is recorded.
    """
    for name, val in (
        ("length_m", length_m),
        ("level_count", level_count),
        ("segment_length_m", segment_length_m),
        ("width_m", width_m),
        ("height_m", height_m),
    ):
        if val is None or val <= 0:
            raise InvalidParameterError(f"{name} must be > 0, got {val}")
    level_count = int(level_count)

    segments = max(1, math.ceil(length_m / segment_length_m))
    last_len = length_m - (segments - 1) * segment_length_m

    block = math.ceil(level_count / 5)
    bands = []
    for i, fn in enumerate(BAND_ORDER):
        lo = i * block + 1
        hi = min((i + 1) * block, level_count)
        if lo <= hi:
            bands.append(LevelBand(lo, hi, fn))

    return CityTopology(
        length_m=float(length_m),
        width_m=float(width_m),
        height_m=float(height_m),
        level_count=level_count,
        segment_length_m=float(segment_length_m),
        segments=segments,
        last_segment_length_m=float(last_len),
        bands=tuple(bands),
    )


def level_function(topology: CityTopology, level: int) -> ZoneFunction:
    """Functional band that contains a level (1-based)."""
    if not 1 <= level <= topology.level_count:
        raise InvalidParameterError(
            f"level {level} outside 1..{topology.level_count}"
        )
    for band in topology.bands:
        if band.level_lo <= level <= band.level_hi:
            return band.function
    raise InvalidParameterError(f"level {level} not covered by any band")


def transit_levels(topology: CityTopology) -> tuple[int, ...]:
    """Levels carrying the high-speed transit band (possibly empty)."""
    for band in topology.bands:
        if band.function == ZoneFunction.HIGH_SPEED_TRANSIT:
            return tuple(range(band.level_lo, band.level_hi + 1))
    return ()


def allocate_zone_functions(topology: CityTopology, seed: int = 0) -> list[ZoneCell]:
    """Assign every (segment, level) cell its function and area share.

    The four ground-use classes split each segment 0.40 / 0.30 / 0.15 /
    0.15 (residential / commercial / transport / public); a cell's share
    is its class share divided by how many cells of that class the
    segment stacks. Cities too short to host every band renormalize over
    the classes present. The allocation is a pure function of the
    topology; ``seed`` is accepted for interface stability only.
    """
    del seed
    per_class_counts: dict[str, int] = {}
    for band in topology.bands:
        usage = FUNCTION_USAGE[band.function]
        per_class_counts[usage] = per_class_counts.get(usage, 0) + (
            band.level_hi - band.level_lo + 1
        )
    total_share = sum(USAGE_SHARES[u] for u in per_class_counts)

    share_per_cell = {}
    for usage, count in per_class_counts.items():
        share_per_cell[usage] = (USAGE_SHARES[usage] / total_share) / count

    cells = []
    for segment in range(topology.segments):
        for band in topology.bands:
            for level in range(band.level_lo, band.level_hi + 1):
                cells.append(
                    ZoneCell(
                        segment=segment,
                        level=level,
                        function=band.function,
                        area_share=share_per_cell[FUNCTION_USAGE[band.function]],
                    )
                )
    cells.sort(key=lambda c: (c.segment, c.level))
    return cells


def green_share(cell: ZoneCell) -> float:
    """Public/green fraction a cell contributes to scenic scoring."""
    return cell.area_share if FUNCTION_USAGE[cell.function] == USAGE_PUBLIC else 0.0
