"""Tabular Q-learning navigation for shuttle and drone agents.

States discretize (position, time, local congestion, destination
direction); actions move one graph hop or wait. Training runs on a
lightweight navigation environment built from warm-up statistics, and
the frozen table steers vehicle agents inside the live simulation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DeadEndError, InvalidParameterError
from .graph import CHAIN_STEP_S, EdgeKind, MobilityGraph

A_FORWARD = 0
A_BACKWARD = 1
A_UP = 2
A_DOWN = 3
A_WAIT = 4
N_ACTIONS = 5

SEGMENT_BUCKETS = 20
WAIT_STEP_S = 10.0


class DiscreteState(NamedTuple):
    segment_bucket: int
    level_band: int
    time_bucket: int  # 0 rush, 1 off-peak
    congestion_bucket: int  # 0 low, 1 mid, 2 high
    dest_direction: int  # 0 fwd, 1 back, 2 up, 3 down, 4 here


@dataclass
class RewardWeights:
    w_time: float = 1.0
    w_energy: float = 0.3
    w_congestion: float = 0.5
    r_arrive: float = 100.0
    r_late: float = 50.0


@dataclass
class StepOutcome:
    dt_s: float
    de_kwh: float
    sigma: float
    terminal: bool = False
    on_time: bool = True


def reward(weights: RewardWeights, outcome: StepOutcome) -> float:
    """Step payoff: time, energy and congestion cost plus terminal bonus."""
    r = (
        -weights.w_time * outcome.dt_s
        - weights.w_energy * outcome.de_kwh
        - weights.w_congestion * outcome.sigma
    )
    if outcome.terminal:
        r += weights.r_arrive if outcome.on_time else -weights.r_late
    return r


class QTable:
    """State-action values; unseen entries read as zero."""

    def __init__(self, learning_rate: float = 0.1, gamma: float = 0.95, epsilon: float = 0.05):
        if not 0 < learning_rate <= 1:
            raise InvalidParameterError("learning_rate must be in (0, 1]")
        if not 0 <= gamma < 1:
            raise InvalidParameterError("gamma must be in [0, 1)")
        self.values: dict[tuple, np.ndarray] = {}
        self.learning_rate = learning_rate
        self.gamma = gamma
        self.epsilon = epsilon

    def row(self, state) -> np.ndarray:
        key = tuple(state)
        r = self.values.get(key)
        if r is None:
            r = np.zeros(N_ACTIONS)
            self.values[key] = r
        return r

    def get(self, state, action) -> float:
        key = tuple(state)
        r = self.values.get(key)
        return 0.0 if r is None else float(r[action])

    def to_json(self) -> str:
        payload = {
            "learning_rate": self.learning_rate,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "values": {
                "|".join(map(str, k)): [float(x) for x in v]
                for k, v in sorted(self.values.items())
            },
        }
        return json.dumps(payload, sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "QTable":
        payload = json.loads(text)
        qt = cls(payload["learning_rate"], payload["gamma"], payload["epsilon"])
        for k, v in payload["values"].items():
            qt.values[tuple(int(x) for x in k.split("|"))] = np.array(v)
        return qt


def q_update(qtable: QTable, s, a: int, r: float, s_next, terminal: bool = False) -> None:
    """One-step backup toward r + gamma * max_a' Q(s', a')."""
    row = qtable.row(s)
    target = r
    if not terminal:
        target += qtable.gamma * float(np.max(qtable.row(s_next)))
    row[a] += qtable.learning_rate * (target - row[a])


def select_action(
    qtable: QTable, s, rng: np.random.Generator, legal: list[int], epsilon: float | None = None
) -> int:
    """Epsilon-greedy over legal actions; greedy ties take the lowest index."""
    if not legal:
        raise DeadEndError(f"no legal action in state {s}")
    eps = qtable.epsilon if epsilon is None else epsilon
    if eps > 0 and rng.random() < eps:
        return int(legal[rng.integers(0, len(legal))])
    row = qtable.row(s)
    best, best_q = legal[0], row[legal[0]]
    for a in legal[1:]:
        if row[a] > best_q:
            best, best_q = a, row[a]
    return int(best)


# -- state and action grounding on the mobility graph -------------------------


def segment_bucket(graph: MobilityGraph, segment: int) -> int:
    buckets = min(SEGMENT_BUCKETS, graph.n_segments)
    return min(buckets - 1, int(segment * buckets / graph.n_segments))


def congestion_bucket(sigma_local: float) -> int:
    if sigma_local < 0.33:
        return 0
    if sigma_local <= 0.66:
        return 1
    return 2


def discretize(
    graph: MobilityGraph, node: int, dest: int, peak: bool, sigma: np.ndarray
) -> DiscreteState:
    seg = int(graph.node_segment[node])
    d_seg = int(graph.node_segment[dest])
    lvl = int(graph.node_level[node])
    d_lvl = int(graph.node_level[dest])
    if d_seg > seg:
        direction = 0
    elif d_seg < seg:
        direction = 1
    elif d_lvl > lvl:
        direction = 2
    elif d_lvl < lvl:
        direction = 3
    else:
        direction = 4
    lo, hi = graph.adj_indptr[node], graph.adj_indptr[node + 1]
    local = 0.0
    for k in range(lo, hi):
        e = int(graph.adj_edges[k])
        if sigma[e] > local:
            local = float(sigma[e])
    return DiscreteState(
        segment_bucket=segment_bucket(graph, seg),
        level_band=int(graph.node_function[node]),
        time_bucket=0 if peak else 1,
        congestion_bucket=congestion_bucket(local),
        dest_direction=direction,
    )


def legal_actions(graph: MobilityGraph, node: int, agent_type: int) -> dict[int, int]:
    """Map of action -> edge id available to this agent at this node.

    Wait is always offered and maps to -1. When two edges realize the
    same action (both transit levels), the lower edge id wins.
    """
    seg = int(graph.node_segment[node])
    lvl = int(graph.node_level[node])
    mode_bit = 1 << agent_type
    out: dict[int, int] = {}
    lo, hi = graph.adj_indptr[node], graph.adj_indptr[node + 1]
    for k in range(lo, hi):
        e = int(graph.adj_edges[k])
        if not (graph.e_modes[e] & mode_bit):
            continue
        to = int(graph.e_to[e])
        t_seg, t_lvl = int(graph.node_segment[to]), int(graph.node_level[to])
        if t_seg > seg:
            act = A_FORWARD
        elif t_seg < seg:
            act = A_BACKWARD
        elif t_lvl > lvl:
            act = A_UP
        elif t_lvl < lvl:
            act = A_DOWN
        else:
            continue
        if act not in out:
            out[act] = e
    out[A_WAIT] = -1
    return out


# -- training environment ------------------------------------------------------


class NavEnv:
    """Single-vehicle navigation over a frozen congestion snapshot.

    Transition times come from the background saturation field and the
    observed lift delays; consecutive same-shaft vertical hops after the
    first are priced as chain steps, matching the engine's chained rides.
    """

    def __init__(
        self,
        graph: MobilityGraph,
        agent_type: int,
        speed: float,
        sigma: np.ndarray,
        lift_seconds: np.ndarray,
        weights: RewardWeights,
        eligible_nodes: np.ndarray,
        peak: bool = True,
        budget_s: float = 1800.0,
        max_steps: int = 200,
    ):
        self.graph = graph
        self.agent_type = agent_type
        self.speed = speed
        self.sigma = sigma
        self.lift_seconds = lift_seconds
        self.weights = weights
        self.eligible = eligible_nodes
        self.peak = peak
        self.budget_s = budget_s
        self.max_steps = max_steps
        self.node = -1
        self.dest = -1
        self.elapsed = 0.0
        self.steps = 0
        self._last_vertical: tuple[int, int] | None = None

    def reset(self, rng: np.random.Generator) -> DiscreteState:
        o, d = rng.choice(self.eligible, size=2, replace=False)
        self.node, self.dest = int(o), int(d)
        self.elapsed = 0.0
        self.steps = 0
        self._last_vertical = None
        return self.state()

    def state(self) -> DiscreteState:
        return discretize(self.graph, self.node, self.dest, self.peak, self.sigma)

    def legal(self) -> dict[int, int]:
        return legal_actions(self.graph, self.node, self.agent_type)

    def step(self, action: int) -> tuple[DiscreteState, float, bool]:
        g = self.graph
        self.steps += 1
        if action == A_WAIT:
            out = StepOutcome(dt_s=WAIT_STEP_S, de_kwh=0.0, sigma=0.0)
            self.elapsed += WAIT_STEP_S
            self._last_vertical = None
        else:
            e = self.legal().get(action, -1)
            if e < 0:
                out = StepOutcome(dt_s=WAIT_STEP_S, de_kwh=0.0, sigma=0.0)
                self.elapsed += WAIT_STEP_S
            else:
                sg = float(self.sigma[e])
                if g.e_kind[e] == EdgeKind.VERTICAL_CONNECTOR and self.agent_type != 3:
                    q = int(g.e_queue[e])
                    key = (int(g.e_column[e]), int(g.e_vdir[e]))
                    if self._last_vertical == key:
                        dt = CHAIN_STEP_S
                    else:
                        dt = float(self.lift_seconds[q])
                    self._last_vertical = key
                else:
                    eff = (
                        g.e_ride_speed[e]
                        if (g.e_kind[e] == EdgeKind.SHUTTLE_LANE and self.agent_type <= 1)
                        else self.speed
                    )
                    dt = g.e_len[e] / (eff * max(0.1, 1.0 - sg))
                    self._last_vertical = None
                de = g.e_energy_kw[e] * dt / 3600.0
                out = StepOutcome(dt_s=dt, de_kwh=de, sigma=sg)
                self.elapsed += dt
                self.node = int(g.e_to[e])
        if self.node == self.dest:
            out.terminal = True
            out.on_time = self.elapsed <= self.budget_s
        elif self.steps >= self.max_steps:
            out.terminal = True
            out.on_time = False
        return self.state(), reward(self.weights, out), out.terminal


@dataclass
class TrainingLog:
    episode_rewards: list[float] = field(default_factory=list)
    epoch_mean: list[float] = field(default_factory=list)
    epoch_first_spread: float = 0.0
    convergence_epoch: int | None = None

    def to_csv(self) -> str:
        lines = ["epoch,mean_reward"]
        for e, m in enumerate(self.epoch_mean, start=1):
            lines.append(f"{e},{m:.6f}")
        return "\n".join(lines) + "\n"


def run_episode(
    env: NavEnv,
    qtable: QTable,
    rng: np.random.Generator,
    epsilon: float,
    learn: bool = True,
) -> float:
    s = env.reset(rng)
    total = 0.0
    done = False
    while not done:
        legal = sorted(env.legal().keys())
        a = select_action(qtable, s, rng, legal, epsilon)
        s2, r, done = env.step(a)
        if learn:
            q_update(qtable, s, a, r, s2, terminal=done)
        total += r
        s = s2
    return total


def convergence_epoch(epoch_mean: list[float], first_spread: float) -> int | None:
    """First epoch whose reward change drops under 1% of the running mean.

    Epoch 1 converges immediately when its episodes came out identical
    (zero spread); later epochs compare consecutive epoch means against
    a threshold from the trailing 10-epoch mean magnitude.
    """
    for e in range(1, len(epoch_mean) + 1):
        window = epoch_mean[max(0, e - 10): e]
        eps_conv = 0.01 * max(1e-12, abs(float(np.mean(window))))
        delta = first_spread if e == 1 else abs(epoch_mean[e - 1] - epoch_mean[e - 2])
        if delta < eps_conv:
            return e
    return None


def train(
    env: NavEnv,
    epochs: int,
    episodes_per_epoch: int,
    rng: np.random.Generator,
    learning_rate: float = 0.1,
    gamma: float = 0.95,
    eps_start: float = 1.0,
    eps_end: float = 0.05,
    qtable: QTable | None = None,
) -> tuple[QTable, TrainingLog]:
    """Epsilon-decayed Q-learning; logs epoch means and convergence epoch."""
    qt = qtable or QTable(learning_rate=learning_rate, gamma=gamma, epsilon=eps_end)
    log = TrainingLog()
    if epochs <= 0:
        return qt, log
    for e in range(epochs):
        frac = e / max(1, epochs - 1)
        eps = eps_start + (eps_end - eps_start) * frac
        rewards = [
            run_episode(env, qt, rng, eps, learn=True) for _ in range(episodes_per_epoch)
        ]
        log.episode_rewards.extend(rewards)
        log.epoch_mean.append(float(np.mean(rewards)))
        if e == 0:
            log.epoch_first_spread = float(np.max(rewards) - np.min(rewards))
    log.convergence_epoch = convergence_epoch(log.epoch_mean, log.epoch_first_spread)
    return qt, log


def measure_pas(
    policy: QTable,
    env: NavEnv,
    perturbations: list,
    seed: int = 0,
) -> float:
    """Mean |perturbed - unperturbed| episode reward under the frozen policy.

    Each perturbation temporarily rewrites the env's congestion field or
    lift delays; the paired baseline episode uses the same seed so the
    gap isolates the disturbance.
    """
    if not perturbations:
        return 0.0
    gaps = []
    base_sigma = env.sigma.copy()
    base_lift = env.lift_seconds.copy()
    for k, perturb in enumerate(perturbations):
        r_opt = run_episode(env, policy, np.random.default_rng((seed, k)), 0.0, learn=False)
        perturb(env)
        r_act = run_episode(env, policy, np.random.default_rng((seed, k)), 0.0, learn=False)
        env.sigma = base_sigma.copy()
        env.lift_seconds = base_lift.copy()
        gaps.append(abs(r_act - r_opt))
    return float(np.mean(gaps))


class PolicyAdapter:
    """Bridges a frozen QTable into the engine's boundary decisions."""

    def __init__(self, qtable: QTable, rng: np.random.Generator, epsilon: float = 0.05):
        self.qtable = qtable
        self.rng = rng
        self.epsilon = epsilon

    def choose_edge(self, engine, decider, i, node, t, sigma) -> int | None:
        if node == int(engine.a_dest[i]):
            return None
        g = engine.graph
        acts = legal_actions(g, node, int(engine.a_type[i]))
        state = discretize(
            g, node, int(engine.a_dest[i]),
            engine.period_at(t).is_peak, sigma,
        )
        a = select_action(self.qtable, state, self.rng, sorted(acts.keys()), self.epsilon)
        edge = acts.get(a, -1)
        return None if edge < 0 else edge
