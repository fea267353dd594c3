"""Binary log-linear learning over the UAV potential game.

One slot of the learning loop:

1. pick one UAV ``m`` uniformly at random;
2. with probability ``eps = exp(-beta)`` it explores a uniformly drawn
   non-stay action from its restricted action set, otherwise it holds;
3. an explored action is kept with the Boltzmann probability

       exp(R_new / T) / (exp(R_prev / T) + exp(R_new / T)).

Rewards are evaluated through :class:`~uavswarm.state.LocalView` objects
only.  The selected UAV computes its own ``r_m``; each neighbor ``i``
reports ``r_i`` computed from its own view with ``m`` relocated to the
candidate cell.  No other position information enters the decision.
Global metrics (potential, rank, capacity) are recorded by the harness
and never fed back into the agents.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import ExperimentConfig
from .geometry import LosChannel, build_ura
from .metrics import capacity_from_eigenvalues, db_to_linear, gram_eigenvalues, \
    local_reward, numerical_rank, view_reward
from .state import Action, SwarmState, apply_action, init_state, local_view, \
    restricted_actions

STOP_MAX_ITERATIONS = "max-iterations"
STOP_CONVERGED = "probability-converged"


@dataclass(frozen=True)
class LearningSchedule:
    """Annealing schedule ``beta_t = beta0 + t * beta_step``.

    ``temperature_rule`` maps beta to the Boltzmann temperature:
    ``"inverse-beta"`` uses ``T = 1 / beta`` so that the perturbation index
    ``exp(-1/T)`` equals the exploration rate, ``"fixed"`` holds
    ``T = temperature`` and ``"zero"`` gives the best-reply limit.
    """

    beta0: float = 0.01
    beta_step: float = 0.001
    temperature_rule: str = "inverse-beta"
    temperature: float = 1.0

    def __post_init__(self):
        if not self.beta0 > 0:
            raise ValueError("beta0 must be positive")
        if not self.beta_step >= 0:
            raise ValueError("beta_step must be non-negative")

    @classmethod
    def from_config(cls, config: ExperimentConfig) -> "LearningSchedule":
        return cls(config.beta0, config.beta_step, config.temperature_rule, config.temperature)

    @classmethod
    def frozen(cls, beta: float, **kw) -> "LearningSchedule":
        return cls(beta, 0.0, **kw)

    def beta(self, t: int) -> float:
        return self.beta0 + t * self.beta_step

    def epsilon(self, t: int) -> float:
        return math.exp(-self.beta(t))

    def temperature_at(self, t: int) -> float:
        if self.temperature_rule == "inverse-beta":
            return 1.0 / self.beta(t)
        if self.temperature_rule == "fixed":
            return self.temperature
        return 0.0


@dataclass(frozen=True)
class StepOutcome:
    chosen_uav: int
    explored: bool
    proposed_action: Action
    accepted: bool = False
    acceptance_probability: float = 0.0
    reward_prev: float = math.nan
    reward_explored: float = math.nan
    stay_probability: float = math.nan


def boltzmann_probabilities(r_prev: float, r_new: float, temperature: float):
    """Return ``(p_stay, p_move)`` for the two-action Boltzmann rule.

    The larger exponent is subtracted first so neither term overflows.
    ``temperature == 0`` is the best-reply limit (ties split evenly).
    """
    if temperature == 0:
        if r_new > r_prev:
            return 0.0, 1.0
        if r_new < r_prev:
            return 1.0, 0.0
        return 0.5, 0.5
    a = r_prev / temperature
    b = r_new / temperature
    top = max(a, b)
    ea = math.exp(a - top)
    eb = math.exp(b - top)
    den = ea + eb
    return ea / den, eb / den


def select_uav(state: SwarmState, rng) -> int:
    return int(rng.integers(state.n_uavs))


def _candidates(m, state):
    return [a for a in restricted_actions(m, state) if a is not Action.STAY]


def propose(m: int, state: SwarmState, schedule: LearningSchedule, rng, t=None) -> StepOutcome:
    """Exploration phase: hold with prob. ``1 - eps`` or draw a new action."""
    t = state.iteration if t is None else t
    eps = schedule.epsilon(t)
    cands = _candidates(m, state)
    u = rng.random()
    if not cands or u >= eps:
        return StepOutcome(m, False, Action.STAY)
    a = cands[int(rng.integers(len(cands)))]
    return StepOutcome(m, True, a)


def _hypothetical_position(view, lattice, action):
    return tuple(np.asarray(view.position) + lattice.step * np.asarray(action.value, dtype=float))


def neighborhood_reward_local(m: int, state: SwarmState, channel, action: Action = Action.STAY) -> float:
    """``R_m`` with ``m`` hypothetically moved by ``action``.

    Reads only ``local_view(m)`` and, for each neighbor ``i``, the reward
    that ``i`` reports from its own view.  The state is not modified.
    """
    view = local_view(m, state)
    moved_to = None
    if action is not Action.STAY:
        moved_to = _hypothetical_position(view, state.lattice, action)
        view = view.moved(m, moved_to)
    total = view_reward(view, channel)
    for i in view.neighbor_ids:
        vi = local_view(i, state)
        if moved_to is not None:
            vi = vi.moved(m, moved_to)
        total += view_reward(vi, channel)
    return total


def stay_probability(m: int, state: SwarmState, schedule: LearningSchedule, channel, t=None,
                     r_prev=None, cache=None) -> float:
    """Probability that UAV ``m``, if selected in slot ``t``, keeps its position."""
    t = state.iteration if t is None else t
    cands = _candidates(m, state)
    if not cands:
        return 1.0
    eps = schedule.epsilon(t)
    temp = schedule.temperature_at(t)
    if r_prev is None:
        r_prev = neighborhood_reward_local(m, state, channel)
    keep = 0.0
    for a in cands:
        r_new = cache[a] if cache and a in cache else neighborhood_reward_local(m, state, channel, a)
        keep += boltzmann_probabilities(r_prev, r_new, temp)[0]
    return (1.0 - eps) + eps * keep / len(cands)


def boltzmann_accept(m: int, state: SwarmState, proposed: Action, schedule: LearningSchedule,
                     rng, channel, t=None, dynamic_graph=False):
    """Exploitation phase; returns ``(StepOutcome, new_state)``.

    The new state is ``state`` itself when the proposal is rejected.
    """
    t = state.iteration if t is None else t
    temp = schedule.temperature_at(t)
    r_prev = neighborhood_reward_local(m, state, channel)
    r_new = neighborhood_reward_local(m, state, channel, proposed)
    _, p_move = boltzmann_probabilities(r_prev, r_new, temp)
    accepted = bool(rng.random() < p_move)
    out = StepOutcome(m, True, proposed, accepted, p_move, r_prev, r_new)
    if accepted:
        state = apply_action(state, m, proposed, check=False, dynamic_graph=dynamic_graph)
    return out, state


def learning_step(state: SwarmState, schedule: LearningSchedule, rng, channel, t=None,
                  record_stay=False, dynamic_graph=False):
    """One full slot: select, explore, accept.  Returns ``(outcome, new_state)``."""
    t = state.iteration if t is None else t
    m = select_uav(state, rng)
    prop = propose(m, state, schedule, rng, t)
    if prop.explored:
        out, new = boltzmann_accept(m, state, prop.proposed_action, schedule, rng, channel, t,
                                    dynamic_graph)
    else:
        out, new = prop, state
    if record_stay:
        cache = {out.proposed_action: out.reward_explored} if out.explored else None
        p = stay_probability(m, state, schedule, channel, t,
                             r_prev=out.reward_prev if out.explored else None, cache=cache)
        out = StepOutcome(**{**out.__dict__, "stay_probability": p})
    return out, new


def all_converged(state: SwarmState, schedule: LearningSchedule, channel, t, tol) -> bool:
    """True if every UAV would hold its position with probability >= 1 - tol."""
    return all(stay_probability(m, state, schedule, channel, t) >= 1.0 - tol
               for m in range(state.n_uavs))


# -- recording -------------------------------------------------------------

@dataclass
class RunRecord:
    strategy: str
    seed: object
    config: ExperimentConfig
    initial_state: SwarmState
    final_state: SwarmState = None
    stop_reason: str = STOP_MAX_ITERATIONS
    phi: np.ndarray = None
    rewards: np.ndarray = None
    rank: np.ndarray = None
    capacity: np.ndarray = None
    stay_probability: np.ndarray = None
    uav: np.ndarray = None
    explored: np.ndarray = None
    accepted: np.ndarray = None
    snapshots: dict = field(default_factory=dict)
    label: str = ""

    @property
    def iterations(self) -> int:
        return 0 if self.phi is None else len(self.phi)

    @property
    def mean_reward(self) -> np.ndarray:
        return self.rewards.mean(axis=1)


def make_channel(config: ExperimentConfig) -> LosChannel:
    return LosChannel(build_ura(config.ura_nx, config.ura_ny, config.ura_spacing),
                      config.wavelength)


class Recorder:
    """Collects omniscient per-iteration metrics for a run."""

    def __init__(self, config: ExperimentConfig, channel: LosChannel, state: SwarmState,
                 strategy: str, seed):
        self.config = config
        self.channel = channel
        self.snr = db_to_linear(config.snr_db)
        T, M = config.max_iterations, state.n_uavs
        self.rec = RunRecord(strategy, seed, config, state)
        self.phi = np.empty(T)
        self.rewards = np.empty((T, M))
        self.rank = np.empty(T, dtype=np.int64)
        self.capacity = np.empty((T, len(self.snr)))
        self.stay = np.full(T, np.nan)
        self.uav = np.full(T, -1, dtype=np.int64)
        self.explored = np.zeros(T, dtype=bool)
        self.accepted = np.zeros(T, dtype=bool)
        self.n = 0
        self._r = np.array([local_reward(m, state, channel) for m in range(M)])
        self._spectrum(state)
        self._state = state
        if config.snapshot_every:
            self.rec.snapshots[0] = state.cells.copy()

    def _spectrum(self, state):
        H = self.channel.matrix(state.positions)
        self._rank = numerical_rank(H)
        self._cap = capacity_from_eigenvalues(gram_eigenvalues(H), state.n_uavs, self.snr)

    def record(self, state: SwarmState, outcome: StepOutcome | None = None):
        prev = self._state
        if not state.same_positions(prev) or state.graph is not prev.graph:
            if state.graph is not prev.graph:
                touched = range(state.n_uavs)
            else:
                moved = np.flatnonzero(np.any(state.cells != prev.cells, axis=1))
                touched = set(moved.tolist())
                for m in moved:
                    touched.update(state.graph.neighbors[m])
                touched = sorted(touched)
            for i in touched:
                self._r[i] = local_reward(i, state, self.channel)
            self._spectrum(state)
        self._state = state
        t = self.n
        self.rewards[t] = self._r
        self.phi[t] = self._r.sum()
        self.rank[t] = self._rank
        self.capacity[t] = self._cap
        if outcome is not None:
            self.uav[t] = outcome.chosen_uav
            self.explored[t] = outcome.explored
            self.accepted[t] = outcome.accepted
            self.stay[t] = outcome.stay_probability
        self.n += 1
        every = self.config.snapshot_every
        if every and self.n % every == 0:
            self.rec.snapshots[self.n] = state.cells.copy()

    def finish(self, state: SwarmState, stop_reason: str) -> RunRecord:
        n = self.n
        r = self.rec
        r.final_state = state
        r.stop_reason = stop_reason
        r.phi = self.phi[:n]
        r.rewards = self.rewards[:n]
        r.rank = self.rank[:n]
        r.capacity = self.capacity[:n]
        r.stay_probability = self.stay[:n]
        r.uav = self.uav[:n]
        r.explored = self.explored[:n]
        r.accepted = self.accepted[:n]
        return r


def dynamics_rng(seed) -> np.random.Generator:
    """Random stream for the dynamics, independent of the placement stream."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])


def run(config: ExperimentConfig, seed, channel: LosChannel | None = None) -> RunRecord:
    """Run the decentralized learning algorithm for one seed."""
    channel = channel or make_channel(config)
    schedule = LearningSchedule.from_config(config)
    state = init_state(config, seed)
    rng = dynamics_rng(seed)
    rec = Recorder(config, channel, state, "learning", seed)
    M = state.n_uavs
    stop = STOP_MAX_ITERATIONS
    for t in range(config.max_iterations):
        out, state = learning_step(state, schedule, rng, channel, t,
                                   record_stay=config.record_stay_probability,
                                   dynamic_graph=config.dynamic_graph)
        state = state.with_cells(state.cells, iteration=t + 1)
        rec.record(state, out)
        if (t + 1) % M == 0 and all_converged(state, schedule, channel, t + 1,
                                              config.stop_tolerance):
            stop = STOP_CONVERGED
            break
    return rec.finish(state, stop)
