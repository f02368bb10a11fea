"""Boundary-time decision layer wiring agents, learned models, and
forecasts into the engine.

The ablation switches act only here: with feedback off, planners see a
free-flow world (zero saturation, nominal lift times) and nobody
reconsiders mid-trip; with the route model off, the learned candidate
disappears; with the navigation policy off, shuttles and drones fall
back to the same utility stack as everyone else. The physics never
changes across variants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._engine_common import ST_DECIDING, ST_MOVING, ST_QUEUED
from .agents import REROUTE_THRESHOLD, WAIT_THRESHOLD_S, choose_path
from .engine import Engine
from .errors import NoPathError
from .graph import NOMINAL_LIFT_S, k_shortest_paths, shortest_path


@dataclass
class AblationFlags:
    rl: bool = True
    gnn: bool = True
    feedback: bool = True

    @classmethod
    def for_variant(cls, variant: str) -> "AblationFlags":
        v = variant.lower()
        table = {
            "full": cls(True, True, True),
            "norl": cls(False, True, True),
            "nognn": cls(True, False, True),
            "nofeedback": cls(True, True, False),
        }
        if v not in table:
            raise ValueError(f"unknown variant {variant!r}")
        return table[v]


VARIANTS = ("full", "norl", "nognn", "nofeedback")


class VariantDecider:
    """Plans spawns, runs reconsideration, applies forecasts and policies."""

    def __init__(
        self,
        graph,
        profiles,
        flags: AblationFlags,
        route_model=None,
        policy=None,
        forecaster=None,
        k_candidates: int = 3,
        spur_stride: int = 4,
        forecast_interval_s: float = 300.0,
    ):
        self.graph = graph
        self.profiles = profiles
        self.flags = flags
        self.route_model = route_model if flags.gnn else None
        self.policy = policy if flags.rl else None
        self.forecaster = forecaster if flags.feedback else None
        self.k = k_candidates
        self.spur_stride = spur_stride
        self.forecast_interval_s = forecast_interval_s
        self._next_forecast = 0.0
        self.route_calls = 0
        self.route_time_s = 0.0

    # -- views -------------------------------------------------------------

    def sigma_view(self, engine: Engine) -> np.ndarray:
        if not self.flags.feedback:
            return np.zeros(self.graph.n_edges)
        return np.maximum(engine.graph.e_sat, engine.forecast_sigma)

    def lift_view(self, engine: Engine) -> np.ndarray:
        if not self.flags.feedback:
            return np.full(self.graph.n_queues, NOMINAL_LIFT_S)
        return engine.lift_estimates()

    # -- planning ----------------------------------------------------------

    def candidates(self, engine, profile, origin, dest, sigma, lifts):
        g = self.graph
        atype = int(profile.type)
        speed = profile.speed_mps
        ff = g.free_flow_weights(atype, speed)
        pool = [
            p
            for p, _c in k_shortest_paths(
                g, origin, dest, ff, k=self.k, spur_stride=self.spur_stride
            )
        ]
        live = g.routing_weights(atype, speed, sigma=sigma, lift_seconds=lifts)
        try:
            p_live, _ = shortest_path(g, origin, dest, atype, weights=live)
            if p_live not in pool:
                pool.append(p_live)
        except NoPathError:
            pass
        if self.route_model is not None:
            p_gnn = self.route_model.route_edges(g, origin, dest, atype, speed)
            if p_gnn and p_gnn not in pool:
                pool.append(p_gnn)
        return pool

    def plan_agent(self, engine, i, origin, sigma, lifts):
        prof = self.profiles[i]
        dest = int(engine.a_dest[i])
        if origin == dest:
            return []
        pool = self.candidates(engine, prof, origin, dest, sigma, lifts)
        if not pool:
            return None
        fatigue = min(1.0, engine.a_dist_walk[i] / 10_000.0)
        return choose_path(
            prof, pool, self.graph, sigma=sigma, lift_seconds=lifts,
            origin=origin, fatigue=fatigue,
        )

    # -- boundary hook -------------------------------------------------------

    def boundary(self, engine: Engine, t: float) -> None:
        engine.feedback_enabled = self.flags.feedback
        if self.forecaster is not None and t >= self._next_forecast:
            self._apply_forecast(engine, t)
            self._next_forecast = t + self.forecast_interval_s

        sigma = self.sigma_view(engine)
        lifts = self.lift_view(engine)
        horizon = t + engine.params.decision_interval_ticks * engine.params.tick_s

        # Plans for agents spawning inside the coming chunk.
        for i in engine.upcoming_spawn_ids(t, horizon):
            i = int(i)
            if engine.a_is_rl[i] and self.policy is not None:
                continue  # decides edge by edge after spawning
            path = self.plan_agent(engine, i, int(engine.a_origin[i]), sigma, lifts)
            if path is not None:
                engine.install_plan(i, path)

        # Agents standing at a node without a plan.
        deciding = np.flatnonzero(
            (engine.a_status == ST_DECIDING) & (engine.a_plan_ready == 0)
        )
        for i in deciding:
            i = int(i)
            node = int(engine.a_node[i])
            if engine.a_is_rl[i] and self.policy is not None:
                edge = self.policy.choose_edge(engine, self, i, node, t, sigma)
                if edge is not None:
                    engine.install_plan(i, [edge])
                elif node == int(engine.a_dest[i]):
                    engine.install_plan(i, [])
                continue
            path = self.plan_agent(engine, i, node, sigma, lifts)
            if path is not None:
                engine.install_plan(i, path)

        if self.flags.feedback:
            self._reconsider(engine, t, sigma, lifts)

    # -- reconsideration -----------------------------------------------------

    def _reconsider(self, engine: Engine, t: float, sigma, lifts) -> None:
        g = self.graph
        moving = np.flatnonzero(
            (engine.a_status == ST_MOVING) & (engine.a_is_rl == 0)
        )
        for i in moving:
            i = int(i)
            c = int(engine.a_cursor[i])
            if c + 1 >= int(engine.a_path_len[i]):
                continue
            nxt = int(engine.path_buf[i, c + 1])
            if engine.graph.e_sat[nxt] <= REROUTE_THRESHOLD:
                continue
            cur_edge = int(engine.a_edge[i])
            junction = int(g.e_to[cur_edge])
            remainder = [
                int(e) for e in engine.path_buf[i, c + 1: int(engine.a_path_len[i])]
            ]
            prof = self.profiles[i]
            pool = self.candidates(
                engine, prof, junction, int(engine.a_dest[i]), sigma, lifts
            )
            pool = [remainder] + [p for p in pool if p and p != remainder]
            fatigue = min(1.0, engine.a_dist_walk[i] / 10_000.0)
            best = choose_path(
                prof, pool, g, sigma=sigma, lift_seconds=lifts,
                origin=junction, fatigue=fatigue,
            )
            if best != remainder:
                new_path = [cur_edge] + best
                engine.path_buf[i, : len(new_path)] = new_path
                engine.a_path_len[i] = len(new_path)
                engine.a_cursor[i] = 0

        queued = np.flatnonzero(
            (engine.a_status == ST_QUEUED) & (engine.a_is_rl == 0)
        )
        for i in queued:
            i = int(i)
            wait = t - engine.a_join_t[i]
            if wait <= WAIT_THRESHOLD_S:
                continue
            entry = int(engine.a_edge[i])
            node = int(g.e_from[entry])
            prof = self.profiles[i]
            pool = self.candidates(
                engine, prof, node, int(engine.a_dest[i]), sigma, lifts
            )
            # Re-queueing at the shaft we are already waiting in is not an
            # alternative; pruning it keeps the FIFO list single-entry.
            same_q = int(g.e_queue[entry])
            pool = [
                p for p in pool
                if p and not (
                    g.e_kind[p[0]] == 1 and int(g.e_queue[p[0]]) == same_q
                )
            ]
            if not pool:
                continue
            fatigue = min(1.0, engine.a_dist_walk[i] / 10_000.0)
            best = choose_path(
                prof, pool, g, sigma=sigma, lift_seconds=lifts,
                origin=node, fatigue=fatigue,
            )
            engine.remove_from_queue(i)
            engine.a_status[i] = ST_DECIDING
            engine.install_plan(i, best)

    # -- forecasting -----------------------------------------------------------

    def _apply_forecast(self, engine: Engine, t: float) -> None:
        grid = self.forecaster.predict_grid(engine, t)
        if grid is not None:
            engine.inject_forecast(grid)
