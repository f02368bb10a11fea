"""Discrete-time core simulator: agents advance over the graph with lift
queues, congestion feedback, and pluggable decision layers.

The engine owns flat per-agent arrays and drives one of the two tick
kernels in chunks of ``decision_interval_ticks``; between chunks a
decider hook installs plans, reconsiders stressed agents, and injects
forecasts. Identical (seed, scenario, decider) means identical traces.
"""

from __future__ import annotations

import csv
import gzip
import io
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import _engine_numpy
from ._engine_common import (
    EV_ABORT,
    EV_ARRIVE,
    EV_DEPART,
    EV_LIFT_RIDE,
    EV_LIFT_WAIT,
    EV_MOVE,
    EVENT_NAMES,
    ST_ABORTED,
    ST_ARRIVED,
    ST_DECIDING,
    ST_MOVING,
    ST_QUEUED,
    ST_RIDING,
    ST_UNSPAWNED,
)
from .agents import AgentProfile, AgentState, TimePeriod, Trip
from .backend import USE_NUMBA
from .errors import InvalidParameterError, SimulationError
from .graph import MobilityGraph, NOMINAL_LIFT_S

if USE_NUMBA:
    from . import _engine_numba as _kernel
else:
    _kernel = _engine_numpy


@dataclass
class SimClock:
    tick_s: float = 1.0
    now_s: float = 0.0
    period: TimePeriod = TimePeriod.MORNING_RUSH


@dataclass
class ElevatorQueue:
    """FIFO lift shaft with one car serving batches of fixed size.

    Standalone reference for the kernel's queue semantics; unit tests
    replay recorded joins through it and compare delays.
    """

    connector_edge: int
    service_time_s: float
    capacity: int = 1
    waiting: deque = field(default_factory=deque)  # (agent_id, join_t)
    busy_until: float = 0.0
    cars_in_transit: int = 0
    riding: list = field(default_factory=list)  # (agent_id, ride_until, join_t)

    def push(self, agent_id: int, t: float) -> None:
        self.waiting.append((agent_id, t))


def process_vertical_transfer(queue: ElevatorQueue, t: float) -> list[tuple[int, float]]:
    """Advance one queue to time t; returns (agent, delay) per finished ride.

    A ride's delay is queue wait plus the sampled service time, so it is
    never below the service time.
    """
    done = [(a, ru - jt) for (a, ru, jt) in queue.riding if ru <= t]
    queue.riding = [r for r in queue.riding if r[1] > t]
    queue.cars_in_transit = 1 if queue.riding else 0
    if queue.busy_until <= t and queue.waiting:
        served = 0
        while served < queue.capacity and queue.waiting:
            agent, jt = queue.waiting.popleft()
            queue.riding.append((agent, t + queue.service_time_s, jt))
            served += 1
        queue.busy_until = t + queue.service_time_s
        queue.cars_in_transit = 1
    return done


@dataclass
class EngineParams:
    tick_s: float = 1.0
    decision_interval_ticks: int = 10
    drain_s: float = 1800.0
    abort_factor: float = 3.0
    forecast_interval_s: float = 300.0
    bin_len_s: float = 300.0
    lift_car_capacity: int | None = None
    # Vehicle agents crowd a lane more than one walker does.
    load_weights: tuple = (1.0, 1.0, 4.0, 1.0)


@dataclass
class PeriodWindow:
    period: TimePeriod
    start_s: float
    duration_s: float

    @property
    def end_s(self) -> float:
        return self.start_s + self.duration_s


class EpisodeTrace:
    """Aggregated outcome of one run: events plus per-agent/edge totals."""

    def __init__(self):
        self.events = {}
        self.agent = {}
        self.edge = {}
        self.queue = {}
        self.occupancy = None
        self.bin_len_s = 300.0
        self.onnet_seconds = 0.0
        self.peak_onnet = 0.0
        self.total_time_s = 0.0
        self.windows: list[PeriodWindow] = []
        self.meta = {}

    def events_of(self, kind: int) -> np.ndarray:
        return np.flatnonzero(self.events["kind"] == kind)

    def n_events(self) -> int:
        return self.events["t"].shape[0]


class Engine:
    """Drives the tick kernel and exposes state to the decision layer."""

    def __init__(
        self,
        graph: MobilityGraph,
        population: list[tuple[AgentProfile, AgentState, Trip]],
        windows: list[PeriodWindow],
        params: EngineParams,
        lift_rng: np.random.Generator,
        rl_controlled: np.ndarray | None = None,
    ):
        self.graph = graph
        self.params = params
        self.windows = windows
        self.population = population
        n = len(population)
        self.n_agents = n
        g = graph

        self.a_type = np.array([int(p.type) for p, _s, _t in population], dtype=np.int8)
        self.a_speed = np.array([p.speed_mps for p, _s, _t in population])
        self.a_origin = np.array([t.origin for _p, _s, t in population], dtype=np.int32)
        self.a_dest = np.array([t.destination for _p, _s, t in population], dtype=np.int32)
        self.a_depart = np.array([t.depart_s for _p, _s, t in population])
        self.a_budget = np.array([p.time_budget_s for p, _s, _t in population])
        self.a_is_rl = (
            rl_controlled.astype(np.uint8)
            if rl_controlled is not None
            else np.zeros(n, dtype=np.uint8)
        )

        self.a_status = np.zeros(n, dtype=np.int8)
        self.a_node = self.a_origin.copy()
        self.a_edge = np.full(n, -1, dtype=np.int32)
        self.a_pos = np.zeros(n)
        self.a_enter_t = np.zeros(n)
        self.pmax = g.n_segments + 2 * g.n_levels + 8
        self.path_buf = np.full((n, self.pmax), -1, dtype=np.int32)
        self.a_path_len = np.zeros(n, dtype=np.int32)
        self.a_cursor = np.zeros(n, dtype=np.int32)
        self.a_plan_ready = np.zeros(n, dtype=np.uint8)
        self.a_join_t = np.zeros(n)
        self.a_ride_until = np.zeros(n)
        self.a_ride_exit_node = np.zeros(n, dtype=np.int32)
        self.a_ride_exit_cursor = np.zeros(n, dtype=np.int32)
        self.a_ride_q = np.zeros(n, dtype=np.int32)
        self.a_ride_t0 = np.zeros(n)
        self.a_dist_walk = np.zeros(n)
        self.a_wait_s = np.zeros(n)
        self.a_satexp = np.zeros(n)
        self.a_dur = np.zeros((n, 4))
        self.a_arrive_t = np.full(n, np.nan)
        self.a_ffcost = np.zeros(n)
        self.a_qnext = np.full(n, -1, dtype=np.int32)

        order = np.lexsort((np.arange(n), self.a_depart))
        self.spawn_order = order.astype(np.int32)
        self.sp_cursor = np.zeros(1, dtype=np.int64)

        nq = g.n_queues
        self.q_head = np.full(nq, -1, dtype=np.int32)
        self.q_tail = np.full(nq, -1, dtype=np.int32)
        self.q_busy = np.zeros(nq)
        self.q_service = lift_rng.uniform(10.0, 60.0, size=nq) if nq else np.zeros(0)
        cap = params.lift_car_capacity
        if cap is None:
            conn = g.e_kind == 1
            cap = max(1, int(round(g.e_cap[conn].min()))) if conn.any() else 1
        self.q_cap = np.full(nq, cap, dtype=np.int32)
        self.q_delay_sum = np.zeros(nq)
        self.q_delay_n = np.zeros(nq, dtype=np.int64)

        self.e_load = np.zeros(g.n_edges)
        self.acc_loadsec = np.zeros(g.n_edges)
        self.acc_satsec = np.zeros(g.n_edges)
        self.acc_onnet = np.zeros(1)
        self.acc_peak = np.zeros(1)
        self.edge_ratio_sum = np.zeros(g.n_edges)
        self.edge_ratio_n = np.zeros(g.n_edges, dtype=np.int64)

        total = windows[-1].end_s + params.drain_s if windows else params.drain_s
        self.total_time_s = total
        n_bins = max(1, int(np.ceil(total / params.bin_len_s)))
        self.occ = np.zeros((n_bins, g.n_nodes))

        ev_cap = 4 * n + 1024
        self.ev_t = np.zeros(ev_cap)
        self.ev_agent = np.zeros(ev_cap, dtype=np.int32)
        self.ev_kind = np.zeros(ev_cap, dtype=np.int8)
        self.ev_edge = np.full(ev_cap, -1, dtype=np.int32)
        self.ev_val = np.zeros(ev_cap)
        self.ev_n = np.zeros(1, dtype=np.int64)

        self.type_load_w = np.array(params.load_weights)
        self.now_s = 0.0
        self.forecast_sigma = np.zeros(g.n_edges)
        self.feedback_enabled = True

    # -- helpers used by deciders ----------------------------------------

    def emit(self, t, agent, kind, edge, val):
        k = int(self.ev_n[0])
        if k >= self.ev_t.shape[0]:
            self._grow_events()
        self.ev_t[k] = t
        self.ev_agent[k] = agent
        self.ev_kind[k] = kind
        self.ev_edge[k] = edge
        self.ev_val[k] = val
        self.ev_n[0] = k + 1

    def _grow_events(self):
        for name in ("ev_t", "ev_agent", "ev_kind", "ev_edge", "ev_val"):
            old = getattr(self, name)
            new = np.zeros(old.shape[0] * 2, dtype=old.dtype)
            if name == "ev_edge":
                new[:] = -1
            new[: old.shape[0]] = old
            setattr(self, name, new)

    def install_plan(self, i: int, edges: list[int]) -> None:
        if len(edges) > self.pmax:
            raise SimulationError(f"plan for agent {i} exceeds buffer ({len(edges)})")
        self.path_buf[i, : len(edges)] = edges
        self.a_path_len[i] = len(edges)
        self.a_cursor[i] = 0
        self.a_plan_ready[i] = 1

    def remove_from_queue(self, i: int) -> None:
        """Unlink a queued agent so it can replan; O(queue length)."""
        q = int(self.graph.e_queue[self.a_edge[i]])
        prev = -1
        cur = int(self.q_head[q])
        while cur >= 0:
            if cur == i:
                nxt = int(self.a_qnext[i])
                if prev < 0:
                    self.q_head[q] = nxt
                else:
                    self.a_qnext[prev] = nxt
                if nxt < 0:
                    self.q_tail[q] = prev
                self.a_qnext[i] = -1
                return
            prev, cur = cur, int(self.a_qnext[cur])

    def lift_estimates(self) -> np.ndarray:
        """Observed mean delay per queue (nominal prior where unseen)."""
        out = np.full(self.graph.n_queues, NOMINAL_LIFT_S)
        seen = self.q_delay_n > 0
        out[seen] = self.q_delay_sum[seen] / self.q_delay_n[seen]
        return out

    def period_at(self, t: float) -> TimePeriod:
        for w in self.windows:
            if t < w.end_s + self.params.drain_s:
                return w.period
        return self.windows[-1].period if self.windows else TimePeriod.MORNING_RUSH

    def upcoming_spawn_ids(self, t_from: float, t_to: float) -> np.ndarray:
        """Unspawned agents departing within [t_from, t_to), in spawn order."""
        out = []
        k = int(self.sp_cursor[0])
        while k < self.n_agents:
            i = int(self.spawn_order[k])
            if self.a_depart[i] >= t_to:
                break
            out.append(i)
            k += 1
        return np.array(out, dtype=np.int32)

    def active_mask(self) -> np.ndarray:
        return (self.a_status >= ST_DECIDING) & (self.a_status <= ST_RIDING)

    def conservation_ok(self) -> bool:
        spawned = int(self.sp_cursor[0])
        arrived = int((self.a_status == ST_ARRIVED).sum())
        aborted = int((self.a_status == ST_ABORTED).sum())
        active = int(self.active_mask().sum())
        return spawned == arrived + aborted + active

    def inject_forecast(self, demand_matrix) -> None:
        """Fold a predicted density grid into the planning saturation view.

        Predicted per-cell densities map to a predicted edge saturation
        (endpoint mean over capacity); planners take the max of live and
        predicted saturation. No effect while feedback is disabled.
        """
        if not self.feedback_enabled:
            return
        g = self.graph
        vals = np.asarray(demand_matrix.values, dtype=np.float64)
        if vals.shape != (g.n_segments, g.n_levels):
            raise InvalidParameterError(
                f"forecast grid {vals.shape} != city grid {(g.n_segments, g.n_levels)}"
            )
        node_d = vals[g.node_segment, g.node_level - 1]
        pred = (node_d[g.e_from] + node_d[g.e_to]) / (2.0 * g.e_cap)
        self.forecast_sigma = np.minimum(1.0, np.maximum(0.0, pred))

    # -- stepping ----------------------------------------------------------

    def _kernel_args(self, t0: float, n_ticks: int):
        g = self.graph
        return (
            t0, n_ticks, self.params.tick_s,
            g.e_from, g.e_to, g.e_len, g.e_cap, g.e_kind, g.e_ride_speed,
            g.e_queue, g.e_column, g.e_vdir, g.e_sat, self.e_load,
            self.a_type, self.a_speed, self.a_origin, self.a_dest, self.a_depart,
            self.a_status, self.a_node, self.a_edge, self.a_pos, self.a_enter_t,
            self.path_buf, self.a_path_len, self.a_cursor, self.a_plan_ready,
            self.a_join_t, self.a_ride_until, self.a_ride_exit_node,
            self.a_ride_exit_cursor, self.a_ride_q, self.a_ride_t0,
            self.a_dist_walk, self.a_wait_s, self.a_satexp, self.a_dur,
            self.a_arrive_t, self.a_ffcost,
            self.spawn_order, self.sp_cursor,
            self.q_head, self.q_tail, self.a_qnext, self.q_busy, self.q_service,
            self.q_cap, self.q_delay_sum, self.q_delay_n,
            self.type_load_w,
            self.ev_t, self.ev_agent, self.ev_kind, self.ev_edge, self.ev_val, self.ev_n,
            self.acc_loadsec, self.acc_satsec, self.acc_onnet, self.acc_peak,
            self.occ, self.params.bin_len_s,
            self.edge_ratio_sum, self.edge_ratio_n,
        )

    def step(self, n_ticks: int = 1) -> None:
        """Advance n ticks without decision-layer involvement."""
        margin = self.n_agents * (n_ticks * 3 + 4) + 64
        while int(self.ev_n[0]) + margin > self.ev_t.shape[0]:
            self._grow_events()
        _kernel.run_chunk(*self._kernel_args(self.now_s, int(n_ticks)))
        self.now_s += n_ticks * self.params.tick_s

    def abort_overdue(self, t: float) -> int:
        mask = self.active_mask() & (
            t - self.a_depart > self.params.abort_factor * self.a_budget
        )
        count = 0
        for i in np.flatnonzero(mask):
            i = int(i)
            if self.a_status[i] == ST_QUEUED:
                self.remove_from_queue(i)
            self.a_status[i] = ST_ABORTED
            self.emit(t, i, EV_ABORT, -1, t - self.a_depart[i])
            count += 1
        return count

    def run(self, decider=None) -> EpisodeTrace:
        """Run the full timeline, calling the decider at every boundary."""
        dt = self.params.tick_s
        chunk = self.params.decision_interval_ticks
        total_ticks = int(np.ceil(self.total_time_s / dt))
        done = 0
        while done < total_ticks:
            t = self.now_s
            if decider is not None:
                decider.boundary(self, t)
            self.abort_overdue(t)
            if not self.conservation_ok():
                raise SimulationError(f"conservation violated at t={t}")
            n = min(chunk, total_ticks - done)
            self.step(n)
            done += n
        if decider is not None:
            decider.boundary(self, self.now_s)
        self.abort_overdue(self.now_s)
        return self.build_trace()

    # -- trace -------------------------------------------------------------

    def build_trace(self) -> EpisodeTrace:
        tr = EpisodeTrace()
        k = int(self.ev_n[0])
        tr.events = {
            "t": self.ev_t[:k].copy(),
            "agent": self.ev_agent[:k].copy(),
            "kind": self.ev_kind[:k].copy(),
            "edge": self.ev_edge[:k].copy(),
            "val": self.ev_val[:k].copy(),
        }
        tr.agent = {
            "type": self.a_type.copy(),
            "speed": self.a_speed.copy(),
            "origin": self.a_origin.copy(),
            "dest": self.a_dest.copy(),
            "depart": self.a_depart.copy(),
            "budget": self.a_budget.copy(),
            "status": self.a_status.copy(),
            "arrive_t": self.a_arrive_t.copy(),
            "dur": self.a_dur.copy(),
            "wait_s": self.a_wait_s.copy(),
            "satexp": self.a_satexp.copy(),
            "dist_walk": self.a_dist_walk.copy(),
            "ffcost": self.a_ffcost.copy(),
            "is_rl": self.a_is_rl.copy(),
        }
        g = self.graph
        tr.edge = {
            "loadsec": self.acc_loadsec.copy(),
            "satsec": self.acc_satsec.copy(),
            "ratio_sum": self.edge_ratio_sum.copy(),
            "ratio_n": self.edge_ratio_n.copy(),
            "kind": g.e_kind.copy(),
            "cap": g.e_cap.copy(),
            "len": g.e_len.copy(),
            "queue": g.e_queue.copy(),
        }
        tr.queue = {
            "delay_sum": self.q_delay_sum.copy(),
            "delay_n": self.q_delay_n.copy(),
            "service": self.q_service.copy(),
        }
        tr.occupancy = self.occ.copy()
        tr.bin_len_s = self.params.bin_len_s
        tr.onnet_seconds = float(self.acc_onnet[0])
        tr.peak_onnet = float(self.acc_peak[0])
        tr.total_time_s = self.now_s
        tr.windows = list(self.windows)
        return tr


def export_trace_csv(trace: EpisodeTrace, path: str, compress: bool = False) -> None:
    """One row per event: t_s, agent_id, event, edge_id, value."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["t_s", "agent_id", "event", "edge_id", "value"])
    ev = trace.events
    for j in range(trace.n_events()):
        wr.writerow([
            f"{ev['t'][j]:.3f}", int(ev["agent"][j]), EVENT_NAMES[int(ev["kind"][j])],
            int(ev["edge"][j]), f"{ev['val'][j]:.3f}",
        ])
    data = buf.getvalue()
    if compress or path.endswith(".gz"):
        with gzip.open(path, "wt") as f:
            f.write(data)
    else:
        with open(path, "w") as f:
            f.write(data)
