import pytest

from linesim.city import (
    ZoneFunction,
    allocate_zone_functions,
    build_topology,
    level_function,
    transit_levels,
)
from linesim.errors import InvalidParameterError


def test_default_scale_bands():
    topo = build_topology(170_000, 50, 100)
    assert topo.segments == 1700
    spans = [(b.level_lo, b.level_hi, b.function) for b in topo.bands]
    assert spans == [
        (1, 10, ZoneFunction.PEDESTRIAN_LIGHT),
        (11, 20, ZoneFunction.RESIDENTIAL),
        (21, 30, ZoneFunction.COMMERCIAL_EDUCATIONAL),
        (31, 40, ZoneFunction.HEALTH_RECREATION),
        (41, 50, ZoneFunction.HIGH_SPEED_TRANSIT),
    ]


def test_single_cell_city():
    topo = build_topology(100, 1, 100)
    assert topo.segments == 1
    assert len(topo.bands) == 1
    assert topo.bands[0].function == ZoneFunction.PEDESTRIAN_LIGHT


def test_hand_scaled_bands():
    topo = build_topology(10_000, 10, 100)
    assert topo.segments == 100
    spans = [(b.level_lo, b.level_hi) for b in topo.bands]
    assert spans == [(1, 2), (3, 4), (5, 6), (7, 8), (9, 10)]


def test_band_partition_no_gaps():
    for levels in (1, 2, 3, 4, 5, 7, 10, 13, 50):
        topo = build_topology(1000, levels, 100)
        covered = []
        for b in topo.bands:
            covered.extend(range(b.level_lo, b.level_hi + 1))
        assert covered == list(range(1, levels + 1))
        for lvl in range(1, levels + 1):
            level_function(topo, lvl)  # must not raise


def test_last_segment_shorter():
    topo = build_topology(250, 1, 100)
    assert topo.segments == 3
    assert topo.last_segment_length_m == pytest.approx(50.0)


def test_invalid_args():
    with pytest.raises(InvalidParameterError):
        build_topology(0, 50, 100)
    with pytest.raises(InvalidParameterError):
        build_topology(1000, -1, 100)
    with pytest.raises(InvalidParameterError):
        build_topology(1000, 10, 0)


def test_level_function_paper_rows():
    topo = build_topology(170_000, 50, 100)
    assert level_function(topo, 5) == ZoneFunction.PEDESTRIAN_LIGHT
    assert level_function(topo, 45) == ZoneFunction.HIGH_SPEED_TRANSIT
    one = build_topology(100, 1, 100)
    assert level_function(one, 1) == ZoneFunction.PEDESTRIAN_LIGHT
    with pytest.raises(InvalidParameterError):
        level_function(topo, 0)
    with pytest.raises(InvalidParameterError):
        level_function(topo, 51)


def test_transit_levels():
    topo = build_topology(10_000, 10, 100)
    assert transit_levels(topo) == (9, 10)
    assert transit_levels(build_topology(100, 2, 100)) == ()


def test_allocation_shares_sum_to_one():
    topo = build_topology(10_000, 10, 100)
    cells = allocate_zone_functions(topo, seed=7)
    assert len(cells) == topo.segments * topo.level_count
    by_segment: dict[int, float] = {}
    for c in cells:
        by_segment[c.segment] = by_segment.get(c.segment, 0.0) + c.area_share
    for total in by_segment.values():
        assert total == pytest.approx(1.0, abs=1e-9)


def test_allocation_residential_share():
    topo = build_topology(170_000, 50, 100)
    cells = allocate_zone_functions(topo, seed=123)
    res = sum(
        c.area_share for c in cells if c.segment == 0 and c.function == ZoneFunction.RESIDENTIAL
    )
    assert res == pytest.approx(0.40, abs=1e-9)


def test_allocation_deterministic():
    topo = build_topology(5_000, 10, 100)
    a = allocate_zone_functions(topo, seed=1)
    b = allocate_zone_functions(topo, seed=1)
    assert a == b
