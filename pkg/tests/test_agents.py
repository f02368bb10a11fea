import itertools

import numpy as np
import pytest

from linesim.agents import (
    AgentProfile,
    AgentType,
    Decision,
    LocalObservation,
    SpawnContext,
    TimePeriod,
    Trip,
    choose_path,
    evaluate_utility,
    expected_counts,
    path_times,
    reevaluate,
    scenic_penalty,
    spawn_population,
    trip_distance_bounds,
)
from linesim.city import allocate_zone_functions, build_topology
from linesim.errors import InfeasibleScenarioError, InvalidParameterError, NoPathError
from linesim.graph import build_graph


def make_graph(length_m=10_000, levels=10, seg_len=100, spacing=5):
    topo = build_topology(length_m, levels, seg_len)
    return build_graph(topo, allocate_zone_functions(topo), connector_spacing_segments=spacing)


def make_profile(atype=AgentType.PEDESTRIAN, speed=1.0, w=(1.0, 0.5, 0.3)):
    return AgentProfile(
        agent_id=0,
        type=atype,
        speed_mps=speed,
        w_time=w[0],
        w_congestion=w[1],
        w_scenic=w[2],
        m_time=1.0,
        m_energy=0.2,
        m_context=0.5,
        time_budget_s=1800.0,
        energy_budget_kwh=10.0,
    )


def test_flow_table_peak():
    counts = expected_counts(1.0, 3600.0, peak=True)
    assert counts[AgentType.PEDESTRIAN] == 10_000
    assert counts[AgentType.CYCLIST] == 2_500
    assert counts[AgentType.SHUTTLE] == 1_200
    assert counts[AgentType.DRONE] == 600


def test_flow_table_offpeak():
    counts = expected_counts(1.0, 3600.0, peak=False)
    assert counts[AgentType.PEDESTRIAN] == 4_000
    assert counts[AgentType.CYCLIST] == 800
    assert counts[AgentType.SHUTTLE] == 500
    assert counts[AgentType.DRONE] == 300


def test_zero_scale_spawns_nothing():
    g = make_graph(2_000, 4)
    ctx = SpawnContext(graph=g, scale_factor=0.0, duration_s=3600.0)
    assert spawn_population(ctx, TimePeriod.MIDDAY, np.random.default_rng(0)) == []


def test_spawn_counts_and_determinism():
    g = make_graph(10_000, 10)
    ctx = SpawnContext(graph=g, scale_factor=0.01, duration_s=3600.0)
    rng = np.random.default_rng(42)
    pop = spawn_population(ctx, TimePeriod.MORNING_RUSH, rng)
    by_type = {t: 0 for t in AgentType}
    for prof, _state, _trip in pop:
        by_type[prof.type] += 1
    assert by_type[AgentType.PEDESTRIAN] == 100
    assert by_type[AgentType.CYCLIST] == 25
    assert by_type[AgentType.SHUTTLE] == 12
    assert by_type[AgentType.DRONE] == 6

    pop2 = spawn_population(ctx, TimePeriod.MORNING_RUSH, np.random.default_rng(42))
    assert [(p.agent_id, p.speed_mps, t.origin, t.destination) for p, _s, t in pop]\
        == [(p.agent_id, p.speed_mps, t.origin, t.destination) for p, _s, t in pop2]


def test_spawn_speeds_within_bounds():
    g = make_graph(10_000, 10)
    ctx = SpawnContext(graph=g, scale_factor=0.02, duration_s=3600.0)
    pop = spawn_population(ctx, TimePeriod.EVENING_RUSH, np.random.default_rng(7))
    bounds = {
        AgentType.PEDESTRIAN: (0.8, 1.5),
        AgentType.CYCLIST: (3.0, 7.0),
        AgentType.SHUTTLE: (5.0, 15.0),
        AgentType.DRONE: (5.0, 15.0),
    }
    for prof, _state, trip in pop:
        lo, hi = bounds[prof.type]
        assert lo <= prof.speed_mps <= hi
        assert trip.origin != trip.destination
        assert 0.0 <= trip.depart_s < 3600.0


def test_spawn_trip_distances_scaled():
    lo, hi = trip_distance_bounds(10_000)
    assert (lo, hi) == (2000.0, 5000.0)
    lo, hi = trip_distance_bounds(170_000)
    assert (lo, hi) == (2000.0, 5000.0)
    lo, hi = trip_distance_bounds(1_000)
    assert (lo, hi) == (200.0, 500.0)


def test_spawn_infeasible_city():
    g = make_graph(100, 1)  # single node, no edges
    ctx = SpawnContext(graph=g, scale_factor=1.0, duration_s=3600.0)
    with pytest.raises(InfeasibleScenarioError):
        spawn_population(ctx, TimePeriod.MIDDAY, np.random.default_rng(0))


def test_trip_rejects_self_loop():
    with pytest.raises(InvalidParameterError):
        Trip(origin=3, destination=3, straight_line_m=0.0, depart_s=0.0)


def test_utility_time_only_prefers_faster():
    g = make_graph(1_000, 2, spacing=1)
    # Two candidates on level 1: direct two-segment walk vs a detour
    # up and back down through lifts.
    n0, n2 = g.node_id(0, 1), g.node_id(2, 1)
    direct = [
        e for e in range(g.n_edges)
        if g.e_kind[e] == 0 and g.e_from[e] in (n0, g.node_id(1, 1))
        and g.e_to[e] in (g.node_id(1, 1), n2)
        and g.node_level[g.e_from[e]] == 1
        and g.e_to[e] != n0
    ]
    direct = sorted(direct, key=lambda e: g.e_from[e])[:2]
    up = [e for e in range(g.n_edges) if g.e_from[e] == n0 and g.e_vdir[e] == 1][0]
    across = [
        e for e in range(g.n_edges)
        if g.e_from[e] == g.node_id(0, 2) and g.e_to[e] == g.node_id(1, 2)
    ][0]
    across2 = [
        e for e in range(g.n_edges)
        if g.e_from[e] == g.node_id(1, 2) and g.e_to[e] == g.node_id(2, 2)
    ][0]
    down = [e for e in range(g.n_edges) if g.e_from[e] == g.node_id(2, 2) and g.e_vdir[e] == -1][0]
    detour = [up, across, across2, down]

    prof = make_profile(w=(1.0, 0.0, 0.0))
    chosen = choose_path(prof, [direct, detour], g, origin=n0)
    assert chosen == direct


def test_utility_zero_congestion_term():
    g = make_graph(1_000, 1)
    prof = make_profile(w=(0.0, 1.0, 0.0))
    path = [0, 2]
    sigma = np.zeros(g.n_edges)
    # With zero saturation everywhere and only the congestion weight on,
    # every path scores exactly the scenic-free congestion term: zero.
    u = evaluate_utility(prof, path, g, sigma=sigma, origin=g.node_id(0, 1))
    t, c, e = path_times(g, 0, 1.0, path, sigma=sigma)
    assert c == 0.0
    assert u == 0.0


def test_utility_hand_computed_three_paths():
    g = make_graph(300, 2, spacing=1)
    n0 = g.node_id(0, 1)
    n2 = g.node_id(2, 1)
    lvl1 = [e for e in range(g.n_edges)
            if g.e_kind[e] == 0 and g.node_level[g.e_from[e]] == 1 and g.e_to[e] != n0
            and g.e_from[e] < g.e_to[e]]
    lvl1 = sorted(lvl1, key=lambda e: g.e_from[e])
    p_direct = lvl1  # two 100 m corridor hops

    up0 = [e for e in range(g.n_edges) if g.e_from[e] == n0 and g.e_vdir[e] == 1][0]
    a01 = [e for e in range(g.n_edges)
           if g.e_from[e] == g.node_id(0, 2) and g.e_to[e] == g.node_id(1, 2)][0]
    a12 = [e for e in range(g.n_edges)
           if g.e_from[e] == g.node_id(1, 2) and g.e_to[e] == g.node_id(2, 2)][0]
    down2 = [e for e in range(g.n_edges)
             if g.e_from[e] == g.node_id(2, 2) and g.e_vdir[e] == -1][0]
    p_detour = [up0, a01, a12, down2]
    p_mixed = [lvl1[0], *(
        [e for e in range(g.n_edges) if g.e_from[e] == g.node_id(1, 1) and g.e_vdir[e] == 1]
    ), a12, down2]

    sigma = np.zeros(g.n_edges)
    sigma[lvl1[0]] = 0.5
    prof = make_profile(w=(1.0, 1.0, 1.0), speed=1.0)

    # Hand computation, edge by edge:
    # direct: T = 100/(1*0.5) + 100 = 300; C = 0.5*100 = 50;
    # S = 1 - 0 (no green cells on levels 1-2 of a 2-level city: level 1 is
    # transport class, level 2 residential) = 1.0
    u_direct = 1.0 * 300.0 + 1.0 * 50.0 + 1.0 * 1.0
    # detour: T = 35 + 100 + 100 + 35 = 270; C = 0; S = 1.0
    u_detour = 1.0 * 270.0 + 0.0 + 1.0
    # mixed: first edge congested + lift + lane + lift:
    # T = 200 + 35 + 100 + 35 = 370; C = 0.5*100 = 50; S = 1.0
    u_mixed = 1.0 * 370.0 + 50.0 + 1.0

    assert evaluate_utility(prof, p_direct, g, sigma=sigma, origin=n0) == pytest.approx(u_direct)
    assert evaluate_utility(prof, p_detour, g, sigma=sigma, origin=n0) == pytest.approx(u_detour)
    assert evaluate_utility(prof, p_mixed, g, sigma=sigma, origin=n0) == pytest.approx(u_mixed)
    assert choose_path(prof, [p_direct, p_detour, p_mixed], g, sigma=sigma, origin=n0) == p_detour


def test_choose_path_single_and_tie_break():
    g = make_graph(1_000, 1)
    prof = make_profile()
    only = [[4, 6]]
    assert choose_path(prof, only, g) == [4, 6]
    # Two disjoint but symmetric candidates tie; smaller edge ids win.
    p_a = [0, 2]
    p_b = [2, 4]
    sigma = np.zeros(g.n_edges)
    u_a = evaluate_utility(prof, p_a, g, sigma=sigma, origin=g.node_id(0, 1))
    u_b = evaluate_utility(prof, p_b, g, sigma=sigma, origin=g.node_id(1, 1))
    assert u_a == pytest.approx(u_b)
    assert choose_path(prof, [p_b, p_a], g, sigma=sigma) == p_a


def test_choose_path_matches_bruteforce_argmin():
    g = make_graph(5_000, 4, spacing=2)
    rng = np.random.default_rng(3)
    g.e_sat[:] = rng.uniform(0, 1, g.n_edges)
    prof = make_profile(w=(1.0, 0.7, 0.2), speed=1.3)
    pool = []
    n0 = g.node_id(0, 1)
    from linesim.graph import k_shortest_paths

    w = g.routing_weights(0, 1.3)
    pool = [p for p, _c in k_shortest_paths(g, n0, g.node_id(30, 3), w, k=5)]
    assert len(pool) >= 2
    best = choose_path(prof, pool, g, origin=n0)
    scores = [
        (evaluate_utility(prof, p, g, origin=n0), tuple(p)) for p in pool
    ]
    scores.sort(key=lambda s: (s[0], s[1]))
    assert best == list(scores[0][1])


def test_choose_path_empty_raises():
    g = make_graph(1_000, 1)
    with pytest.raises(NoPathError):
        choose_path(make_profile(), [], g)


def test_positive_scaling_invariance():
    g = make_graph(3_000, 4, spacing=3)
    rng = np.random.default_rng(11)
    g.e_sat[:] = rng.uniform(0, 0.9, g.n_edges)
    from linesim.graph import k_shortest_paths

    n0, n1 = g.node_id(0, 1), g.node_id(20, 3)
    pool = [p for p, _c in k_shortest_paths(g, n0, n1, g.routing_weights(0, 1.0), k=4)]
    base = make_profile(w=(1.0, 0.5, 0.3))
    scaled = make_profile(w=(7.0, 3.5, 2.1))
    assert choose_path(base, pool, g, origin=n0) == choose_path(scaled, pool, g, origin=n0)


def test_monotonicity_in_saturation():
    g = make_graph(2_000, 2, spacing=1)
    from linesim.graph import k_shortest_paths

    n0, n1 = g.node_id(0, 1), g.node_id(15, 1)
    pool = [p for p, _c in k_shortest_paths(g, n0, n1, g.routing_weights(0, 1.0), k=3)]
    prof = make_profile(w=(1.0, 0.5, 0.0))
    sigma = np.zeros(g.n_edges)
    chosen = choose_path(prof, pool, g, sigma=sigma, origin=n0)
    others = [p for p in pool if p != chosen]
    for loser in others:
        sigma2 = sigma.copy()
        for e in loser:
            sigma2[e] = min(1.0, sigma2[e] + 0.5)
        # Raising saturation on every edge of a losing path never makes
        # that path newly chosen (shared edges may still shift the winner).
        assert choose_path(prof, pool, g, sigma=sigma2, origin=n0) != loser


def test_reevaluate_keep_on_clear_road():
    g = make_graph(1_000, 1)
    prof = make_profile()
    obs = LocalObservation(
        next_edge_sigma=0.0, queue_wait_s=0.0, current_plan=[0, 2], candidates=[[0, 2]],
        origin=g.node_id(0, 1),
    )
    assert reevaluate(prof, obs, g).kind == "keep"


def test_reevaluate_reroutes_off_jam():
    g = make_graph(1_000, 2, spacing=1)
    n0 = g.node_id(0, 1)
    direct = [e for e in range(g.n_edges)
              if g.e_kind[e] == 0 and g.node_level[g.e_from[e]] == 1
              and g.e_from[e] < g.e_to[e]][:2]
    up = [e for e in range(g.n_edges) if g.e_from[e] == n0 and g.e_vdir[e] == 1][0]
    a01 = [e for e in range(g.n_edges)
           if g.e_from[e] == g.node_id(0, 2) and g.e_to[e] == g.node_id(1, 2)][0]
    a12 = [e for e in range(g.n_edges)
           if g.e_from[e] == g.node_id(1, 2) and g.e_to[e] == g.node_id(2, 2)][0]
    down = [e for e in range(g.n_edges)
            if g.e_from[e] == g.node_id(2, 2) and g.e_vdir[e] == -1][0]
    alt = [up, a01, a12, down]
    sigma = np.zeros(g.n_edges)
    sigma[direct[0]] = 0.95
    prof = make_profile(w=(1.0, 0.5, 0.0))
    obs = LocalObservation(
        next_edge_sigma=0.95, queue_wait_s=0.0, current_plan=direct,
        candidates=[direct, alt], origin=n0,
    )
    d = reevaluate(prof, obs, g, sigma=sigma)
    assert d.kind in ("reroute", "switch_mode")
    assert d.path == alt


def test_reevaluate_waits_when_no_better_option():
    g = make_graph(1_000, 1)
    prof = make_profile()
    sigma = np.ones(g.n_edges)
    obs = LocalObservation(
        next_edge_sigma=1.0, queue_wait_s=500.0, current_plan=[0, 2],
        candidates=[[0, 2]], origin=g.node_id(0, 1),
    )
    assert reevaluate(prof, obs, g, sigma=sigma).kind == "wait"
