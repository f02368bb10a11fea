"""Agent population synthesis and utility-driven path/mode choice."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .city import ZoneFunction
from .errors import InfeasibleScenarioError, InvalidParameterError, NoPathError
from .graph import (
    CHAIN_STEP_S,
    NOMINAL_LIFT_S,
    NOMINAL_SPEEDS,
    SATURATION_FLOOR,
    EdgeKind,
    MobilityGraph,
)


class AgentType(IntEnum):
    PEDESTRIAN = 0
    CYCLIST = 1
    SHUTTLE = 2
    DRONE = 3


class TimePeriod(IntEnum):
    MORNING_RUSH = 0
    MIDDAY = 1
    EVENING_RUSH = 2

    @property
    def is_peak(self) -> bool:
        return self != TimePeriod.MIDDAY


# Hourly flow per type: (peak, off-peak).
FLOW_RATES = {
    AgentType.PEDESTRIAN: (10_000, 4_000),
    AgentType.CYCLIST: (2_500, 800),
    AgentType.SHUTTLE: (1_200, 500),
    AgentType.DRONE: (600, 300),
}

SPEED_RANGES = {
    AgentType.PEDESTRIAN: (0.8, 1.5),
    AgentType.CYCLIST: (3.0, 7.0),
    AgentType.SHUTTLE: (5.0, 15.0),
    AgentType.DRONE: (5.0, 15.0),  # shuttle-range default
}

# Path-choice weights (time, congestion, scenic) per class; each agent
# jitters these +-20% so near-tied options spread across the fleet.
UTILITY_WEIGHTS = {
    AgentType.PEDESTRIAN: (1.0, 0.5, 0.3),
    AgentType.CYCLIST: (1.0, 0.4, 0.1),
    AgentType.SHUTTLE: (1.0, 0.8, 0.0),
    AgentType.DRONE: (1.0, 0.2, 0.0),
}

# Mode-choice weights (time, energy, context).
MODE_WEIGHTS = {
    AgentType.PEDESTRIAN: (1.0, 0.2, 0.5),
    AgentType.CYCLIST: (1.0, 0.2, 0.4),
    AgentType.SHUTTLE: (1.0, 0.4, 0.6),
    AgentType.DRONE: (1.0, 0.6, 0.2),
}

ENERGY_BUDGET_KWH = {
    AgentType.PEDESTRIAN: 10.0,
    AgentType.CYCLIST: 10.0,
    AgentType.SHUTTLE: 20.0,
    AgentType.DRONE: 2.0,
}

# Destination attraction by functional band for each period.
ATTRACTION = {
    TimePeriod.MORNING_RUSH: {
        ZoneFunction.PEDESTRIAN_LIGHT: 0.6,
        ZoneFunction.RESIDENTIAL: 0.6,
        ZoneFunction.COMMERCIAL_EDUCATIONAL: 3.0,
        ZoneFunction.HEALTH_RECREATION: 0.8,
        ZoneFunction.HIGH_SPEED_TRANSIT: 0.5,
    },
    TimePeriod.MIDDAY: {
        ZoneFunction.PEDESTRIAN_LIGHT: 1.0,
        ZoneFunction.RESIDENTIAL: 1.0,
        ZoneFunction.COMMERCIAL_EDUCATIONAL: 1.5,
        ZoneFunction.HEALTH_RECREATION: 1.5,
        ZoneFunction.HIGH_SPEED_TRANSIT: 0.5,
    },
    TimePeriod.EVENING_RUSH: {
        ZoneFunction.PEDESTRIAN_LIGHT: 0.8,
        ZoneFunction.RESIDENTIAL: 3.0,
        ZoneFunction.COMMERCIAL_EDUCATIONAL: 0.6,
        ZoneFunction.HEALTH_RECREATION: 1.2,
        ZoneFunction.HIGH_SPEED_TRANSIT: 0.5,
    },
}

# Origin propensity mirrors attraction with the commute direction flipped.
ORIGIN_WEIGHTS = {
    TimePeriod.MORNING_RUSH: ATTRACTION[TimePeriod.EVENING_RUSH],
    TimePeriod.MIDDAY: ATTRACTION[TimePeriod.MIDDAY],
    TimePeriod.EVENING_RUSH: ATTRACTION[TimePeriod.MORNING_RUSH],
}

REROUTE_THRESHOLD = 0.8
WAIT_THRESHOLD_S = 120.0
FATIGUE_DISTANCE_M = 10_000.0


@dataclass
class AgentProfile:
    agent_id: int
    type: AgentType
    speed_mps: float
    w_time: float
    w_congestion: float
    w_scenic: float
    m_time: float
    m_energy: float
    m_context: float
    time_budget_s: float
    energy_budget_kwh: float


@dataclass
class AgentState:
    current_node: int
    fatigue: float = 0.0
    time_pressure: float = 0.0
    elapsed_s: float = 0.0
    energy_used_kwh: float = 0.0
    planned_path: list[int] = field(default_factory=list)
    completed: bool = False


@dataclass
class Trip:
    origin: int
    destination: int
    straight_line_m: float
    depart_s: float

    def __post_init__(self):
        if self.origin == self.destination:
            raise InvalidParameterError("trip origin equals destination")


@dataclass
class SpawnContext:
    """Everything spawn_population needs about the scenario."""

    graph: MobilityGraph
    scale_factor: float
    duration_s: float
    period_start_s: float = 0.0
    trip_min_m: float | None = None
    trip_max_m: float | None = None
    id_offset: int = 0


def trip_distance_bounds(length_m: float) -> tuple[float, float]:
    """Trip length band, shrunk proportionally for very short cities."""
    return min(2000.0, 0.2 * length_m), min(5000.0, 0.5 * length_m)


def expected_counts(scale_factor: float, duration_s: float, peak: bool) -> dict[AgentType, int]:
    hours = duration_s / 3600.0
    idx = 0 if peak else 1
    return {
        t: int(round(FLOW_RATES[t][idx] * hours * scale_factor)) for t in AgentType
    }


def _eligible_nodes(graph: MobilityGraph, agent_type: AgentType) -> np.ndarray:
    """Street nodes an agent of this type may start or end a trip at."""
    if agent_type in (AgentType.PEDESTRIAN, AgentType.CYCLIST):
        return np.arange(graph.n_nodes)
    on_band = np.isin(graph.node_level, graph.transit_levels)
    at_column = np.isin(graph.node_segment, graph.columns)
    mask = on_band | at_column
    return np.flatnonzero(mask)


def spawn_population(
    ctx: SpawnContext, period: TimePeriod, rng: np.random.Generator
) -> list[tuple[AgentProfile, AgentState, Trip]]:
    """Synthesize one period's agents from the hourly flow table.

    Counts are flow(type, peak/off-peak) x hours x scale_factor. Origins
    and destinations are sampled by functional-band weight; horizontal
    trip distance lands in the city-scaled band. Departures spread
    uniformly over the period. Deterministic given the rng state.
    """
    g = ctx.graph
    counts = expected_counts(ctx.scale_factor, ctx.duration_s, period.is_peak)
    total = sum(counts.values())
    if total == 0:
        return []
    if g.n_edges == 0 or g.n_nodes < 2:
        raise InfeasibleScenarioError(
            f"city with {g.n_nodes} nodes/{g.n_edges} edges cannot carry {total} agents"
        )
    lo, hi = (
        trip_distance_bounds(g.topology.length_m)
        if ctx.trip_min_m is None
        else (ctx.trip_min_m, ctx.trip_max_m)
    )
    seg_len = g.topology.segment_length_m
    lvl_h = g.topology.level_height_m

    attract = ATTRACTION[period]
    origin_w = ORIGIN_WEIGHTS[period]

    out = []
    agent_id = ctx.id_offset
    for atype in AgentType:
        n = counts[atype]
        if n == 0:
            continue
        nodes = _eligible_nodes(g, atype)
        if nodes.size < 2:
            raise InfeasibleScenarioError(f"no eligible cells for {atype.name}")
        ow = np.array([origin_w[ZoneFunction(int(g.node_function[v]))] for v in nodes])
        ow /= ow.sum()
        dw = np.array([attract[ZoneFunction(int(g.node_function[v]))] for v in nodes])

        node_seg = g.node_segment[nodes]
        departs = np.sort(rng.integers(0, max(1, int(ctx.duration_s)), size=n))
        for i in range(n):
            origin = int(nodes[rng.choice(nodes.size, p=ow)])
            o_seg = int(g.node_segment[origin])
            # Sample a horizontal distance, flip a direction, then pick the
            # destination by attraction among cells near the target segment.
            for _attempt in range(20):
                dist = rng.uniform(lo, hi)
                direction = 1 if rng.random() < 0.5 else -1
                t_seg = o_seg + direction * int(round(dist / seg_len))
                if 0 <= t_seg < g.topology.segments:
                    break
                direction = -direction
                t_seg = o_seg + direction * int(round(dist / seg_len))
                if 0 <= t_seg < g.topology.segments:
                    break
            t_seg = min(max(t_seg, 0), g.topology.segments - 1)
            near_mask = np.abs(node_seg - t_seg) <= 1
            cand = nodes[near_mask]
            cw = np.where(cand == origin, 0.0, dw[near_mask])
            if cand.size == 0 or cw.sum() <= 0:
                cand = nodes
                cw = np.where(nodes == origin, 0.0, dw)
            cw = cw / cw.sum()
            dest = int(cand[rng.choice(cand.size, p=cw)])

            d_seg = abs(int(g.node_segment[dest]) - o_seg) * seg_len
            d_lvl = abs(int(g.node_level[dest]) - int(g.node_level[origin])) * lvl_h
            straight = float(np.hypot(d_seg, d_lvl))

            speed = float(rng.uniform(*SPEED_RANGES[atype]))
            w1, w2, w3 = (
                w * float(rng.uniform(0.8, 1.2)) for w in UTILITY_WEIGHTS[atype]
            )
            ma, mb, mc = MODE_WEIGHTS[atype]
            cruise = NOMINAL_SPEEDS[AgentType.SHUTTLE] if atype <= 1 else speed
            budget = max(600.0, 2.5 * (straight / cruise + 300.0))
            profile = AgentProfile(
                agent_id=agent_id,
                type=atype,
                speed_mps=speed,
                w_time=w1,
                w_congestion=w2,
                w_scenic=w3,
                m_time=ma,
                m_energy=mb,
                m_context=mc,
                time_budget_s=budget,
                energy_budget_kwh=ENERGY_BUDGET_KWH[atype],
            )
            state = AgentState(current_node=origin)
            trip = Trip(
                origin=origin,
                destination=dest,
                straight_line_m=straight,
                depart_s=ctx.period_start_s + float(departs[i]),
            )
            out.append((profile, state, trip))
            agent_id += 1
    return out


# -- utility scoring ----------------------------------------------------------


def path_times(
    graph: MobilityGraph,
    agent_type: int,
    speed: float,
    edges: list[int],
    sigma: np.ndarray | None = None,
    lift_seconds: np.ndarray | float = NOMINAL_LIFT_S,
) -> tuple[float, float, float]:
    """(travel time, congestion exposure, energy kWh) of a path.

    Travel time prices lift chains as one transfer; congestion exposure
    is saturation-weighted free-flow time; energy integrates each leg's
    nominal power draw.
    """
    sig = graph.e_sat if sigma is None else sigma
    eff = graph.effective_speed(agent_type, speed)
    t_total = 0.0
    c_total = 0.0
    e_total = 0.0
    i = 0
    n = len(edges)
    while i < n:
        e = edges[i]
        if graph.e_kind[e] == EdgeKind.VERTICAL_CONNECTOR and agent_type != 3:
            col, vd = graph.e_column[e], graph.e_vdir[e]
            j = i
            while (
                j + 1 < n
                and graph.e_kind[edges[j + 1]] == EdgeKind.VERTICAL_CONNECTOR
                and graph.e_column[edges[j + 1]] == col
                and graph.e_vdir[edges[j + 1]] == vd
            ):
                j += 1
            if np.isscalar(lift_seconds):
                lt = float(lift_seconds)
            else:
                lt = float(np.asarray(lift_seconds)[graph.e_queue[e]])
            t = lt + CHAIN_STEP_S * (j - i)
            t_total += t
            c_total += float(sig[e]) * lt
            e_total += graph.e_energy_kw[e] * t / 3600.0
            i = j + 1
        else:
            factor = max(SATURATION_FLOOR, 1.0 - float(sig[e]))
            t = graph.e_len[e] / (eff[e] * factor)
            t_ff = graph.e_len[e] / eff[e]
            t_total += t
            c_total += float(sig[e]) * t_ff
            e_total += graph.e_energy_kw[e] * t / 3600.0
            i += 1
    return t_total, c_total, e_total


def scenic_penalty(graph: MobilityGraph, origin: int, edges: list[int]) -> float:
    """1 minus the mean public/green share along the path's nodes."""
    nodes = [origin] + [int(graph.e_to[e]) for e in edges]
    return 1.0 - float(np.mean(graph.node_green[np.array(nodes)]))


def evaluate_utility(
    profile: AgentProfile,
    edges: list[int],
    graph: MobilityGraph,
    sigma: np.ndarray | None = None,
    lift_seconds: np.ndarray | float = NOMINAL_LIFT_S,
    origin: int | None = None,
    fatigue: float = 0.0,
) -> float:
    """Path utility: w_time*T + w_congestion*C + w_scenic*S (lower wins).

    Fatigue inflates the time weight, so tired walkers prefer quicker
    options even harder.
    """
    t, c, _e = path_times(
        graph, int(profile.type), profile.speed_mps, edges, sigma, lift_seconds
    )
    start = origin if origin is not None else (
        int(graph.e_from[edges[0]]) if edges else 0
    )
    s = scenic_penalty(graph, start, edges)
    w1 = profile.w_time * (1.0 + fatigue)
    return w1 * t + profile.w_congestion * c + profile.w_scenic * s


def choose_path(
    profile: AgentProfile,
    candidates: list[list[int]],
    graph: MobilityGraph,
    sigma: np.ndarray | None = None,
    lift_seconds: np.ndarray | float = NOMINAL_LIFT_S,
    origin: int | None = None,
    fatigue: float = 0.0,
) -> list[int]:
    """Argmin-utility candidate; ties break to the smallest edge-id sequence."""
    if not candidates:
        raise NoPathError("empty candidate set")
    scored = []
    for path in candidates:
        u = evaluate_utility(
            profile, path, graph, sigma, lift_seconds, origin=origin, fatigue=fatigue
        )
        scored.append((u, tuple(path)))
    scored.sort(key=lambda s: (s[0], s[1]))
    return list(scored[0][1])


@dataclass
class LocalObservation:
    """What an agent can see when it reconsiders its plan."""

    next_edge_sigma: float
    queue_wait_s: float
    current_plan: list[int]
    candidates: list[list[int]]
    origin: int


@dataclass
class Decision:
    kind: str  # keep | reroute | switch_mode | wait
    path: list[int] | None = None
    mode_class: str | None = None


def plan_mode_class(graph: MobilityGraph, edges: list[int]) -> str:
    """walk_only if the path uses no lanes or lifts, else multimodal."""
    for e in edges:
        if graph.e_kind[e] in (EdgeKind.SHUTTLE_LANE, EdgeKind.VERTICAL_CONNECTOR):
            return "multimodal"
    return "walk_only"


def reevaluate(
    profile: AgentProfile,
    obs: LocalObservation,
    graph: MobilityGraph,
    sigma: np.ndarray | None = None,
    lift_seconds: np.ndarray | float = NOMINAL_LIFT_S,
    fatigue: float = 0.0,
    reroute_threshold: float = REROUTE_THRESHOLD,
    wait_threshold_s: float = WAIT_THRESHOLD_S,
) -> Decision:
    """Keep/Reroute/SwitchMode/Wait from local congestion stimuli.

    Nothing happens unless the next edge is nearly saturated or the
    agent has queued too long; then the candidate set is re-scored and
    the best plan adopted (Wait when no candidate beats staying put).
    """
    stressed = (
        obs.next_edge_sigma > reroute_threshold or obs.queue_wait_s > wait_threshold_s
    )
    if not stressed:
        return Decision("keep")
    pool = [c for c in obs.candidates if c]
    if obs.current_plan:
        pool = [obs.current_plan] + [c for c in pool if c != obs.current_plan]
    if not pool:
        return Decision("wait")
    best = choose_path(
        profile, pool, graph, sigma, lift_seconds, origin=obs.origin, fatigue=fatigue
    )
    if best == obs.current_plan:
        return Decision("wait" if obs.queue_wait_s > wait_threshold_s else "keep")
    old_class = plan_mode_class(graph, obs.current_plan)
    new_class = plan_mode_class(graph, best)
    if old_class != new_class:
        return Decision("switch_mode", path=best, mode_class=new_class)
    return Decision("reroute", path=best)
