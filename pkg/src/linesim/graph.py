"""Multi-layer mobility graph: construction, saturation, and routing.

One node per (segment, level) cell. Horizontal neighbors are linked by
corridors on ordinary levels and by transit lanes on the high-speed
band; vertical connectors (lift shafts) appear every few segments and
join adjacent levels only.

Routing uses a two-layer expansion so a lift ride spanning several
levels is priced as one transfer (entry cost) plus a small per-level
increment, matching how the engine serves chained rides.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from ._pathing import dijkstra
from .city import CityTopology, ZoneCell, ZoneFunction, green_share, transit_levels
from .errors import InvalidParameterError, ModeNotAllowedError, NoPathError


class EdgeKind(IntEnum):
    CORRIDOR = 0
    VERTICAL_CONNECTOR = 1
    SHUTTLE_LANE = 2
    DRONE_LANE = 3


# Agent-mode bits; index order matches agents.AgentType.
MODE_PEDESTRIAN = 1
MODE_CYCLIST = 2
MODE_SHUTTLE = 4
MODE_DRONE = 8
ALL_MODES = MODE_PEDESTRIAN | MODE_CYCLIST | MODE_SHUTTLE | MODE_DRONE

# Lift users queue at shafts; drones fly through them.
LIFT_MODES = (0, 1, 2)

# Capacity defaults in agents per edge (scaled per scenario).
CAPACITY_DEFAULTS = {
    EdgeKind.CORRIDOR: 500.0,
    EdgeKind.VERTICAL_CONNECTOR: 20.0,
    EdgeKind.SHUTTLE_LANE: 100.0,
    EdgeKind.DRONE_LANE: 50.0,
}

# Nominal per-agent power draw while in motion on an edge kind (kW).
ENERGY_RATE_KW = {
    EdgeKind.CORRIDOR: 0.05,
    EdgeKind.VERTICAL_CONNECTOR: 3.0,
    EdgeKind.SHUTTLE_LANE: 1.5,
    EdgeKind.DRONE_LANE: 1.2,
}

# Planner's prior for an unobserved lift transfer and the extra planning
# cost per additional level ridden in one chained lift; realized shaft
# service times are sampled per column and learned at run time.
from ._engine_common import CHAIN_STEP_S, NOMINAL_LIFT_S  # noqa: E402

# Congestion floor: speeds never drop below this fraction of free flow.
SATURATION_FLOOR = 0.1

NOMINAL_SPEEDS = (1.15, 5.0, 10.0, 10.0)  # walk, cycle, shuttle, drone


@dataclass
class GraphNode:
    id: int
    segment: int
    level: int
    function: ZoneFunction
    density: float
    access_time_s: float


@dataclass
class GraphEdge:
    id: int
    from_node: int
    to_node: int
    kind: EdgeKind
    length_m: float
    capacity: float
    saturation: float
    allowed_modes: int
    energy_rate_kw_per_agent: float
    base_time_s: float
    ride_speed_mps: float
    column: int


# Routing-copy edge categories.
RT_PLAIN = 0
RT_LIFT_ENTRY = 1
RT_LIFT_CHAIN = 2
RT_SHAFT_EXIT = 3
RT_FLY = 4


class MobilityGraph:
    """Array-backed directed multigraph over (segment, level) cells."""

    def __init__(self, topology: CityTopology):
        self.topology = topology
        self.n_segments = topology.segments
        self.n_levels = topology.level_count
        self.n_nodes = self.n_segments * self.n_levels

        self.node_segment = np.repeat(np.arange(self.n_segments), self.n_levels).astype(np.int32)
        self.node_level = np.tile(np.arange(1, self.n_levels + 1), self.n_segments).astype(np.int32)
        self.node_function = np.zeros(self.n_nodes, dtype=np.int8)
        self.node_green = np.zeros(self.n_nodes)
        self.node_density = np.zeros(self.n_nodes)
        self.node_access_s = np.zeros(self.n_nodes)

        # Edge arrays are filled by build_graph.
        self.e_from = np.zeros(0, dtype=np.int32)
        self.e_to = np.zeros(0, dtype=np.int32)
        self.e_len = np.zeros(0)
        self.e_cap = np.zeros(0)
        self.e_kind = np.zeros(0, dtype=np.int8)
        self.e_modes = np.zeros(0, dtype=np.uint8)
        self.e_energy_kw = np.zeros(0)
        self.e_base_time = np.zeros(0)
        self.e_ride_speed = np.zeros(0)
        self.e_sat = np.zeros(0)
        self.e_column = np.zeros(0, dtype=np.int32)
        self.e_vdir = np.zeros(0, dtype=np.int8)
        self.e_queue = np.zeros(0, dtype=np.int32)
        self.columns: list[int] = []
        self.transit_levels: tuple[int, ...] = ()
        self.transit_ride_speed = 0.0

    # -- identity helpers -------------------------------------------------

    def node_id(self, segment: int, level: int) -> int:
        return segment * self.n_levels + (level - 1)

    def node(self, node_id: int) -> GraphNode:
        return GraphNode(
            id=node_id,
            segment=int(self.node_segment[node_id]),
            level=int(self.node_level[node_id]),
            function=ZoneFunction(int(self.node_function[node_id])),
            density=float(self.node_density[node_id]),
            access_time_s=float(self.node_access_s[node_id]),
        )

    @property
    def n_edges(self) -> int:
        return self.e_from.shape[0]

    def edge(self, edge_id: int) -> GraphEdge:
        if not 0 <= edge_id < self.n_edges:
            raise InvalidParameterError(f"unknown edge id {edge_id}")
        return GraphEdge(
            id=edge_id,
            from_node=int(self.e_from[edge_id]),
            to_node=int(self.e_to[edge_id]),
            kind=EdgeKind(int(self.e_kind[edge_id])),
            length_m=float(self.e_len[edge_id]),
            capacity=float(self.e_cap[edge_id]),
            saturation=float(self.e_sat[edge_id]),
            allowed_modes=int(self.e_modes[edge_id]),
            energy_rate_kw_per_agent=float(self.e_energy_kw[edge_id]),
            base_time_s=float(self.e_base_time[edge_id]),
            ride_speed_mps=float(self.e_ride_speed[edge_id]),
            column=int(self.e_column[edge_id]),
        )

    # -- construction ------------------------------------------------------

    def _finalize(self, edges: list[tuple]):
        (self.e_from, self.e_to, self.e_len, self.e_cap, self.e_kind,
         self.e_modes, self.e_energy_kw, self.e_base_time,
         self.e_ride_speed, self.e_column, self.e_vdir) = (
            np.array([r[i] for r in edges], dtype=dt)
            for i, dt in enumerate(
                (np.int32, np.int32, np.float64, np.float64, np.int8,
                 np.uint8, np.float64, np.float64, np.float64, np.int32, np.int8)
            )
        )
        self.e_sat = np.zeros(self.n_edges)
        # Queue index: one lift car per (column, direction).
        self.e_queue = np.full(self.n_edges, -1, dtype=np.int32)
        col_pos = {seg: i for i, seg in enumerate(self.columns)}
        for e in range(self.n_edges):
            if self.e_kind[e] == EdgeKind.VERTICAL_CONNECTOR:
                col = col_pos[int(self.node_segment[self.e_from[e]])]
                self.e_column[e] = col
                d = 0 if self.e_vdir[e] > 0 else 1
                self.e_queue[e] = col * 2 + d
        self.n_queues = 2 * len(self.columns)
        self._build_adjacency()
        self._build_routing()

    def _build_adjacency(self):
        order = np.lexsort((self.e_to, self.e_from))
        self.adj_edges = order.astype(np.int32)
        counts = np.bincount(self.e_from, minlength=self.n_nodes)
        self.adj_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    def _build_routing(self):
        """Two-layer copy: street nodes 0..N-1, shaft nodes N..2N-1."""
        n = self.n_nodes
        rf, rt, ro, rc = [], [], [], []
        shaft_nodes = set()
        for e in range(self.n_edges):
            u, v = int(self.e_from[e]), int(self.e_to[e])
            if self.e_kind[e] == EdgeKind.VERTICAL_CONNECTOR:
                rf += [u, n + u, u]
                rt += [n + v, n + v, v]
                ro += [e, e, e]
                rc += [RT_LIFT_ENTRY, RT_LIFT_CHAIN, RT_FLY]
                shaft_nodes.add(v)
                shaft_nodes.add(u)
            else:
                rf.append(u)
                rt.append(v)
                ro.append(e)
                rc.append(RT_PLAIN)
        for v in sorted(shaft_nodes):
            rf.append(n + v)
            rt.append(v)
            ro.append(-1)
            rc.append(RT_SHAFT_EXIT)
        self.r_from = np.array(rf, dtype=np.int32)
        self.r_to = np.array(rt, dtype=np.int32)
        self.r_orig = np.array(ro, dtype=np.int32)
        self.r_ctype = np.array(rc, dtype=np.int8)
        self.n_rnodes = 2 * n
        order = np.lexsort((self.r_to, self.r_from))
        self.radj_edges = order.astype(np.int32)
        counts = np.bincount(self.r_from, minlength=self.n_rnodes)
        self.radj_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)

    # -- routing weights ----------------------------------------------------

    def effective_speed(self, agent_type: int, speed: float) -> np.ndarray:
        """Per-edge speed for an agent: own speed except transit riders."""
        sp = np.full(self.n_edges, speed)
        if agent_type <= 1:  # pedestrians and cyclists ride the lanes
            lane = self.e_kind == EdgeKind.SHUTTLE_LANE
            sp[lane] = self.e_ride_speed[lane]
        return sp

    def routing_weights(
        self,
        agent_type: int,
        speed: float,
        sigma: np.ndarray | None = None,
        lift_seconds: np.ndarray | float = NOMINAL_LIFT_S,
        time_ratio: np.ndarray | None = None,
    ) -> np.ndarray:
        """Traversal-time weight per routing edge.

        ``sigma`` (per original edge) slows movement by the congestion
        factor; ``lift_seconds`` prices a transfer per queue (scalar or
        per-queue vector); ``time_ratio`` multiplies moving times (used
        by learned predictors). Disallowed edges get +inf.
        """
        o = self.r_orig
        w = np.zeros(o.shape[0])
        exit_mask = self.r_ctype == RT_SHAFT_EXIT
        oe = np.where(exit_mask, 0, o)
        sig = self.e_sat if sigma is None else sigma
        factor = np.maximum(SATURATION_FLOOR, 1.0 - sig[oe])
        sp = self.effective_speed(agent_type, speed)[oe]
        with np.errstate(divide="ignore", invalid="ignore"):
            move_t = self.e_len[oe] / (sp * factor)
        if time_ratio is not None:
            move_t = move_t * time_ratio[oe]
        mode_bit = 1 << agent_type
        allowed = (self.e_modes[oe] & mode_bit) != 0

        if np.isscalar(lift_seconds):
            lift_t = np.full(oe.shape[0], float(lift_seconds))
        else:
            lift_t = np.asarray(lift_seconds)[np.where(exit_mask, 0, self.e_queue[oe])]
            if time_ratio is not None:
                lift_t = lift_t * time_ratio[oe]

        ct = self.r_ctype
        is_lifter = agent_type in LIFT_MODES
        w = np.where(ct == RT_PLAIN, move_t, w)
        w = np.where(ct == RT_LIFT_ENTRY, lift_t if is_lifter else np.inf, w)
        w = np.where(ct == RT_LIFT_CHAIN, CHAIN_STEP_S if is_lifter else np.inf, w)
        w = np.where(ct == RT_FLY, move_t if agent_type == 3 else np.inf, w)
        w = np.where(exit_mask, 0.0, w)
        w = np.where(~allowed & ~exit_mask, np.inf, w)
        return w

    def free_flow_weights(self, agent_type: int, speed: float) -> np.ndarray:
        return self.routing_weights(agent_type, speed, sigma=np.zeros(self.n_edges))


def build_graph(
    topology: CityTopology,
    cells: list[ZoneCell],
    connector_spacing_segments: int = 5,
    capacity_defaults: dict | None = None,
    capacity_scale: float = 1.0,
    transit_ride_speed_mps: float = 20.0,
    drone_lanes: bool = False,
) -> MobilityGraph:
    """Build the city graph from a topology and its zone cells.

    Horizontal neighbors get corridor edges except on transit levels,
    which carry shuttle lanes instead (all modes may ride them).
    Vertical connectors appear at every ``connector_spacing_segments``-th
    segment between adjacent levels. Optional dedicated drone lanes run
    along the top level.
    """
    if connector_spacing_segments < 1:
        raise InvalidParameterError(
            f"connector_spacing_segments must be >= 1, got {connector_spacing_segments}"
        )
    if capacity_scale <= 0:
        raise InvalidParameterError("capacity_scale must be > 0")
    caps = dict(CAPACITY_DEFAULTS)
    if capacity_defaults:
        caps.update(capacity_defaults)

    g = MobilityGraph(topology)
    g.transit_levels = transit_levels(topology)
    g.transit_ride_speed = transit_ride_speed_mps
    cell_map = {(c.segment, c.level): c for c in cells}
    for (seg, lvl), c in cell_map.items():
        nid = g.node_id(seg, lvl)
        g.node_function[nid] = int(c.function)
        g.node_green[nid] = green_share(c)

    g.columns = [s for s in range(topology.segments) if s % connector_spacing_segments == 0]
    col_arr = np.array(g.columns)
    seg_len = topology.segment_length_m
    for nid in range(g.n_nodes):
        d = np.abs(col_arr - g.node_segment[nid]).min() if len(col_arr) else 0
        g.node_access_s[nid] = d * seg_len / NOMINAL_SPEEDS[0]

    def scaled(kind: EdgeKind) -> float:
        return max(1.0, caps[kind] * capacity_scale)

    edges: list[tuple] = []

    def add(u, v, kind, length, modes, ride_speed, vdir=0):
        base = {
            EdgeKind.CORRIDOR: length / NOMINAL_SPEEDS[0],
            EdgeKind.SHUTTLE_LANE: length / transit_ride_speed_mps,
            EdgeKind.DRONE_LANE: length / NOMINAL_SPEEDS[3],
            EdgeKind.VERTICAL_CONNECTOR: NOMINAL_LIFT_S,
        }[kind]
        edges.append(
            (u, v, length, scaled(kind), int(kind), modes,
             ENERGY_RATE_KW[kind], base, ride_speed, -1, vdir)
        )

    lane_levels = set(g.transit_levels)
    for lvl in range(1, topology.level_count + 1):
        if lvl in lane_levels:
            kind, modes, ride = EdgeKind.SHUTTLE_LANE, ALL_MODES, transit_ride_speed_mps
        else:
            kind, modes, ride = EdgeKind.CORRIDOR, MODE_PEDESTRIAN | MODE_CYCLIST, 0.0
        for s in range(topology.segments - 1):
            u, v = g.node_id(s, lvl), g.node_id(s + 1, lvl)
            add(u, v, kind, seg_len, modes, ride)
            add(v, u, kind, seg_len, modes, ride)

    lvl_h = topology.level_height_m
    for s in g.columns:
        for lvl in range(1, topology.level_count):
            u, v = g.node_id(s, lvl), g.node_id(s, lvl + 1)
            add(u, v, EdgeKind.VERTICAL_CONNECTOR, lvl_h, ALL_MODES, 0.0, vdir=1)
            add(v, u, EdgeKind.VERTICAL_CONNECTOR, lvl_h, ALL_MODES, 0.0, vdir=-1)

    if drone_lanes and topology.level_count >= 1:
        top = topology.level_count
        for s in range(topology.segments - 1):
            u, v = g.node_id(s, top), g.node_id(s + 1, top)
            add(u, v, EdgeKind.DRONE_LANE, seg_len, MODE_DRONE, 0.0)
            add(v, u, EdgeKind.DRONE_LANE, seg_len, MODE_DRONE, 0.0)

    g._finalize(edges)
    return g


# -- operations -------------------------------------------------------------


def edge_traversal_time(
    edge: GraphEdge,
    mode_speed_mps: float,
    lift_time_s: float | None = None,
    mode: int | None = None,
) -> float:
    """Congested traversal time of one edge for a given mode speed.

    Vertical connectors are lift-served: callers pass the queue-adjusted
    lift time computed by the engine (drones flying a shaft use the
    ordinary formula by passing ``lift_time_s=None``).
    """
    if mode is not None and not (edge.allowed_modes & (1 << mode)):
        raise ModeNotAllowedError(f"mode {mode} not allowed on edge {edge.id}")
    if mode_speed_mps <= 0:
        raise InvalidParameterError("mode_speed_mps must be > 0")
    if edge.kind == EdgeKind.VERTICAL_CONNECTOR and lift_time_s is not None:
        return float(lift_time_s)
    factor = max(SATURATION_FLOOR, 1.0 - edge.saturation)
    return edge.length_m / (mode_speed_mps * factor)


def update_saturation(graph: MobilityGraph, edge_loads) -> None:
    """Set saturation = min(1, load / capacity) for the given loads.

    ``edge_loads`` is a mapping edge_id -> load or a full per-edge array.
    """
    if isinstance(edge_loads, dict):
        for eid, load in edge_loads.items():
            if not 0 <= eid < graph.n_edges:
                raise InvalidParameterError(f"unknown edge id {eid}")
            if load < 0:
                raise InvalidParameterError(f"negative load on edge {eid}")
            graph.e_sat[eid] = min(1.0, load / graph.e_cap[eid])
    else:
        loads = np.asarray(edge_loads, dtype=np.float64)
        if loads.shape != (graph.n_edges,):
            raise InvalidParameterError("load vector length mismatch")
        if (loads < 0).any():
            raise InvalidParameterError("negative load")
        np.minimum(1.0, loads / graph.e_cap, out=graph.e_sat)


def _reconstruct(graph: MobilityGraph, prev: np.ndarray, src: int, dst: int) -> list[int]:
    """Walk routing predecessors back from dst, emitting original edges."""
    path = []
    v = dst
    while v != src:
        re = prev[v]
        if re < 0:
            raise NoPathError(f"no path to {dst}")
        if graph.r_orig[re] >= 0:
            path.append(int(graph.r_orig[re]))
        v = int(graph.r_from[re])
    path.reverse()
    return path


def shortest_path(
    graph: MobilityGraph,
    origin: int,
    dest: int,
    mode: int,
    speed: float | None = None,
    weights: np.ndarray | None = None,
) -> tuple[list[int], float]:
    """Minimal-time path between street nodes under current saturation.

    Ties break deterministically toward the lowest node id. Returns the
    original-edge sequence and its cost in seconds.
    """
    if not 0 <= origin < graph.n_nodes or not 0 <= dest < graph.n_nodes:
        raise InvalidParameterError("origin/destination out of range")
    if origin == dest:
        return [], 0.0
    if weights is None:
        sp = NOMINAL_SPEEDS[mode] if speed is None else speed
        weights = graph.routing_weights(mode, sp)
    dist, prev = dijkstra(
        graph.radj_indptr, graph.radj_edges, graph.r_to, weights, origin, dest
    )
    if not np.isfinite(dist[dest]):
        raise NoPathError(f"{dest} unreachable from {origin} for mode {mode}")
    return _reconstruct(graph, prev, origin, dest), float(dist[dest])


def travel_times_from(
    graph: MobilityGraph, origin: int, mode: int, speed: float,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Fastest times from one origin to every street node."""
    if weights is None:
        weights = graph.routing_weights(mode, speed)
    dist, _ = dijkstra(
        graph.radj_indptr, graph.radj_edges, graph.r_to, weights, origin, -1
    )
    return dist[: graph.n_nodes]


def path_nodes(graph: MobilityGraph, origin: int, edges: list[int]) -> list[int]:
    nodes = [origin]
    for e in edges:
        nodes.append(int(graph.e_to[e]))
    return nodes


def path_cost(weights_by_orig: np.ndarray, graph: MobilityGraph, edges: list[int]) -> float:
    """Cost of an original-edge path under the chain pricing model."""
    total = 0.0
    i = 0
    while i < len(edges):
        e = edges[i]
        if graph.e_kind[e] == EdgeKind.VERTICAL_CONNECTOR:
            j = i
            col = graph.e_column[e]
            vd = graph.e_vdir[e]
            while (
                j + 1 < len(edges)
                and graph.e_kind[edges[j + 1]] == EdgeKind.VERTICAL_CONNECTOR
                and graph.e_column[edges[j + 1]] == col
                and graph.e_vdir[edges[j + 1]] == vd
            ):
                j += 1
            total += weights_by_orig[e] + CHAIN_STEP_S * (j - i)
            i = j + 1
        else:
            total += weights_by_orig[e]
            i += 1
    return total


def free_flow_cost(graph: MobilityGraph, agent_type: int, speed: float, edges: list[int]) -> float:
    """Free-flow time of a realized edge path (nominal lift transfers)."""
    sp = graph.effective_speed(agent_type, speed)
    w = graph.e_len / sp
    is_lift = (graph.e_kind == EdgeKind.VERTICAL_CONNECTOR) & (agent_type != 3)
    w = np.where(is_lift, NOMINAL_LIFT_S, w)
    return path_cost(w, graph, edges)


def k_shortest_paths(
    graph: MobilityGraph,
    origin: int,
    dest: int,
    weights: np.ndarray,
    k: int = 3,
    spur_stride: int = 1,
) -> list[tuple[list[int], float]]:
    """Loopless k-shortest paths over the routing graph (Yen's method).

    ``spur_stride`` > 1 thins spur candidates for speed on large graphs;
    stride 1 is exact. Paths come back as original-edge sequences with
    their routing cost, best first.
    """
    if origin == dest:
        return [([], 0.0)]

    def rnodes_of(redges):
        seq = [origin]
        for re in redges:
            seq.append(int(graph.r_to[re]))
        return seq

    def redges_of_path(src, dst, w):
        dist, prev = dijkstra(graph.radj_indptr, graph.radj_edges, graph.r_to, w, src, dst)
        if not np.isfinite(dist[dst]):
            return None, np.inf
        seq = []
        v = dst
        while v != src:
            re = int(prev[v])
            seq.append(re)
            v = int(graph.r_from[re])
        seq.reverse()
        return seq, float(dist[dst])

    base_w = weights
    first_r, first_cost = redges_of_path(origin, dest, base_w)
    if first_r is None:
        return []
    accepted = [(first_r, first_cost)]
    candidates: list[tuple[float, tuple, list]] = []
    seen = {tuple(first_r)}

    for _ in range(1, k):
        prev_r, _ = accepted[-1]
        prev_nodes = rnodes_of(prev_r)
        for si in range(0, len(prev_nodes) - 1, spur_stride):
            spur_node = prev_nodes[si]
            root_r = prev_r[:si]
            root_cost = float(sum(base_w[re] for re in root_r))
            w = base_w.copy()
            for acc_r, _c in accepted:
                if acc_r[:si] == root_r and len(acc_r) > si:
                    w[acc_r[si]] = np.inf
            banned_nodes = prev_nodes[:si]
            if banned_nodes:
                w[np.isin(graph.r_from, banned_nodes)] = np.inf
            spur_r, spur_cost = redges_of_path(spur_node, dest, w)
            if spur_r is None:
                continue
            total_r = root_r + spur_r
            key = tuple(total_r)
            if key in seen:
                continue
            seen.add(key)
            candidates.append((root_cost + spur_cost, key, total_r))
        if not candidates:
            break
        candidates.sort(key=lambda c: (c[0], c[1]))
        cost, _key, best_r = candidates.pop(0)
        accepted.append((best_r, cost))

    out = []
    for redges, cost in accepted[:k]:
        orig = [int(graph.r_orig[re]) for re in redges if graph.r_orig[re] >= 0]
        out.append((orig, cost))
    return out


def strongly_connected(graph: MobilityGraph) -> bool:
    """Every node reaches every node over the union of all mode edges."""

    def bfs(indptr, adj, to, src):
        seen = np.zeros(indptr.shape[0] - 1, dtype=bool)
        seen[src] = True
        stack = [src]
        while stack:
            v = stack.pop()
            for kk in range(indptr[v], indptr[v + 1]):
                u = to[adj[kk]]
                if not seen[u]:
                    seen[u] = True
                    stack.append(int(u))
        return seen

    fwd = bfs(graph.adj_indptr, graph.adj_edges, graph.e_to, 0)
    if not fwd[: graph.n_nodes].all():
        return False
    rev_order = np.lexsort((graph.e_from, graph.e_to))
    counts = np.bincount(graph.e_to, minlength=graph.n_nodes)
    rev_indptr = np.concatenate(([0], np.cumsum(counts))).astype(np.int64)
    bwd = bfs(rev_indptr, rev_order.astype(np.int32), graph.e_from, 0)
    return bool(bwd[: graph.n_nodes].all())


def export_edges_csv(graph: MobilityGraph, path: str | None = None) -> str:
    """CSV edge list (edge_id, from, to, kind, length_m, capacity, saturation)."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["edge_id", "from", "to", "kind", "length_m", "capacity", "saturation"])
    for e in range(graph.n_edges):
        wr.writerow([
            e, int(graph.e_from[e]), int(graph.e_to[e]),
            EdgeKind(int(graph.e_kind[e])).name,
            f"{graph.e_len[e]:.6f}", f"{graph.e_cap[e]:.6f}", f"{graph.e_sat[e]:.6f}",
        ])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as f:
            f.write(text)
    return text
